use std::collections::BTreeMap;
use std::sync::Arc;

use super::{check_rho, AlphaFn, Barrier, BarrierError};
use crate::contract::RegionStitching;
use crate::stl::PredicateRef;
use crate::Scalar;

/// Finite-time convergence settings used when a contract switches into
/// this barrier's safe set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcbfSettings<T> {
    pub rho: T,
    /// Convergence window before the switch; engagement at `t_i - t_conv`.
    pub t_conv: Option<T>,
    /// Fixed rate. `None` picks the rate at engagement from the deadline.
    pub gamma: Option<T>,
}

impl<T: Scalar> Default for FcbfSettings<T> {
    fn default() -> Self {
        Self {
            rho: T::lit(0.9),
            t_conv: None,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegistryEntry<T> {
    pub barrier: Barrier<T>,
    pub alpha: AlphaFn<T>,
    pub fcbf: FcbfSettings<T>,
    /// Present for barriers assembled from per-region pieces.
    pub stitching: Option<Arc<dyn RegionStitching<T>>>,
}

impl<T: Scalar> RegistryEntry<T> {
    pub fn new(barrier: Barrier<T>) -> Self {
        Self {
            barrier,
            alpha: AlphaFn::Identity,
            fcbf: FcbfSettings::default(),
            stitching: None,
        }
    }

    pub fn with_alpha(mut self, alpha: AlphaFn<T>) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_fcbf(mut self, fcbf: FcbfSettings<T>) -> Self {
        self.fcbf = fcbf;
        self
    }

    pub fn with_stitching(mut self, s: Arc<dyn RegionStitching<T>>) -> Self {
        self.stitching = Some(s);
        self
    }
}

/// A predicate resolved against the registry; negation already applied.
#[derive(Debug, Clone)]
pub struct ResolvedPredicate<T> {
    pub barrier: Barrier<T>,
    pub alpha: AlphaFn<T>,
    pub fcbf: FcbfSettings<T>,
}

#[derive(Debug, Clone, Default)]
pub struct BarrierRegistry<T> {
    entries: BTreeMap<String, RegistryEntry<T>>,
}

impl<T: Scalar> BarrierRegistry<T> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, entry: RegistryEntry<T>) -> Result<(), BarrierError> {
        check_rho(entry.fcbf.rho)?;
        let id = entry.barrier.id().to_string();
        if self.entries.contains_key(&id) {
            return Err(BarrierError::Duplicate(id));
        }
        self.entries.insert(id, entry);
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&RegistryEntry<T>> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn resolve(&self, p: &PredicateRef) -> Result<ResolvedPredicate<T>, BarrierError> {
        let e = self
            .entries
            .get(&p.barrier_id)
            .ok_or_else(|| BarrierError::Unknown(p.barrier_id.clone()))?;
        Ok(ResolvedPredicate {
            barrier: if p.negated {
                e.barrier.negated()
            } else {
                e.barrier.clone()
            },
            alpha: e.alpha,
            fcbf: e.fcbf,
        })
    }

    pub fn margin(&self, p: &PredicateRef, t: T, x: &[T]) -> Result<T, BarrierError> {
        let e = self
            .entries
            .get(&p.barrier_id)
            .ok_or_else(|| BarrierError::Unknown(p.barrier_id.clone()))?;
        let h = e.barrier.value(t, x);
        Ok(if p.negated { -h } else { h })
    }
}

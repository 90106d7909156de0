use std::cmp::Ordering;

use super::{StlError, StlSpec, TaskGroup, TimeInterval, TimedPredicate};
use crate::Scalar;

/// Partitions the globally predicates of `spec` into the minimum number of
/// groups with pairwise disjoint intervals.
///
/// Greedy sweep: intervals are visited by ascending start and each goes to
/// the first group whose last interval has already ended. On interval
/// graphs this opens exactly as many groups as the maximum overlap depth.
pub fn group_tasks<T: Scalar>(spec: &StlSpec<T>) -> Result<Vec<TaskGroup<T>>, StlError> {
    Ok(partition(spec.globally_predicates()?))
}

pub(crate) fn partition<T: Scalar>(preds: Vec<TimedPredicate<T>>) -> Vec<TaskGroup<T>> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (&preds[a].interval, &preds[b].interval);
        ia.start()
            .partial_cmp(&ib.start())
            .unwrap_or(Ordering::Equal)
            .then(ia.end().partial_cmp(&ib.end()).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });

    let mut groups: Vec<TaskGroup<T>> = Vec::new();
    for idx in order {
        let p = &preds[idx];
        let slot = groups.iter().position(|g| {
            g.predicates
                .last()
                .is_some_and(|last| last.interval.end() <= p.interval.start())
        });
        match slot {
            Some(k) => groups[k].predicates.push(p.clone()),
            None => groups.push(TaskGroup {
                label: format!("G{}", groups.len() + 1),
                predicates: vec![p.clone()],
            }),
        }
    }
    groups
}

/// Maximum number of half-open intervals covering a common instant.
pub fn max_overlap_depth<T: Scalar>(intervals: &[TimeInterval<T>]) -> usize {
    let mut events: Vec<(T, i32)> = intervals
        .iter()
        .flat_map(|i| [(i.start(), 1), (i.end(), -1)])
        .collect();
    // ends sort before starts at equal times: [a,b) and [b,c) do not overlap
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut depth = 0i32;
    let mut best = 0i32;
    for (_, d) in events {
        depth += d;
        best = best.max(depth);
    }
    best as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_spec;

    fn groups_of(text: &str) -> Vec<Vec<String>> {
        let spec = parse_spec::<f64>(text, |_| true).unwrap();
        group_tasks(&spec)
            .unwrap()
            .into_iter()
            .map(|g| g.predicates.into_iter().map(|p| p.predicate.barrier_id).collect())
            .collect()
    }

    #[test]
    fn headway_and_speed_limits() {
        let g = groups_of("G[0,300) sat(h1)\nG[0,50) sat(v1)\nG[50,100) sat(v2)");
        assert_eq!(g, vec![vec!["v1", "v2"], vec!["h1"]]);
    }

    #[test]
    fn adjacent_intervals_share_a_group() {
        assert_eq!(groups_of("G[0,10) sat(a)\nG[10,20) sat(b)"), vec![vec!["a", "b"]]);
    }

    #[test]
    fn identical_intervals_need_three_groups() {
        let g = groups_of("G[0,5) sat(a)\nG[0,5) sat(b)\nG[0,5) sat(c)");
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn eventually_must_be_converted_first() {
        let spec = parse_spec::<f64>("F[0,5) sat(a) @ts=1", |_| true).unwrap();
        assert!(matches!(group_tasks(&spec), Err(StlError::NotGlobally(_))));
        let converted = spec.eventually_to_globally().unwrap();
        assert_eq!(group_tasks(&converted).unwrap().len(), 1);
    }

    #[test]
    fn depth_oracle_examples() {
        let iv = |a: f64, b: f64| TimeInterval::new(a, b).unwrap();
        assert_eq!(max_overlap_depth(&[iv(0.0, 300.0), iv(0.0, 50.0), iv(50.0, 100.0)]), 2);
        assert_eq!(max_overlap_depth(&[iv(0.0, 5.0), iv(0.0, 5.0), iv(0.0, 5.0)]), 3);
        assert_eq!(max_overlap_depth::<f64>(&[]), 0);
    }
}

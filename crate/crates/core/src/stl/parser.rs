//! Line-oriented mission grammar.
//!
//! ```text
//! horizon 500
//! G[0,500) sat(h1)                # globally
//! F[2,8) sat(reach) @ts=4 eps=0.5 # eventually, with satisfaction window
//! G[0,10) !sat(obstacle) & sat(init)
//! ```
//!
//! Lines are conjoined. `#` starts a comment. Whitespace is insignificant.

use super::{PredicateRef, SatisfactionWindow, StlError, StlFormula, StlSpec, TimeInterval};
use crate::Scalar;

/// Window width used when an eventually predicate omits `eps`.
pub const DEFAULT_EPSILON: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Token>, StlError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if "[](),!&@=".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                col,
            });
            i += 1;
            continue;
        }
        if c == '⊤' {
            out.push(Token {
                tok: Tok::Ident("true".into()),
                col,
            });
            i += 1;
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || ((c == '-' || c == '+' || c == '.')
                && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit() || *n == '.'));
        if starts_number {
            let begin = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[begin..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| StlError::Syntax {
                line: lineno,
                column: col,
                message: format!("malformed number `{text}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(value),
                col,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || "_.-".contains(chars[i])) {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[begin..i].iter().collect()),
                col,
            });
            continue;
        }
        return Err(StlError::Syntax {
            line: lineno,
            column: col,
            message: format!("unexpected character `{c}`"),
        });
    }
    Ok(out)
}

struct LineParser<'a, F> {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    end_col: usize,
    known: &'a F,
}

impl<F: Fn(&str) -> bool> LineParser<'_, F> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn err(&self, message: impl Into<String>) -> StlError {
        StlError::Syntax {
            line: self.line,
            column: self.col(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<(), StlError> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<f64, StlError> {
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected a number")),
        }
    }

    fn at_temporal(&self) -> Option<char> {
        match (self.peek(), self.toks.get(self.pos + 1).map(|t| &t.tok)) {
            (Some(Tok::Ident(s)), Some(Tok::Sym('['))) if s == "G" || s == "F" => {
                s.chars().next()
            }
            _ => None,
        }
    }

    fn conjunction<T: Scalar>(&mut self) -> Result<Vec<StlFormula<T>>, StlError> {
        let mut parts = vec![self.formula()?];
        while let Some(Tok::Sym('&')) = self.peek() {
            self.pos += 1;
            parts.push(self.formula()?);
        }
        if self.pos < self.toks.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(parts)
    }

    fn formula<T: Scalar>(&mut self) -> Result<StlFormula<T>, StlError> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == "true" {
                self.pos += 1;
                return Ok(StlFormula::True);
            }
        }
        if let Some(op) = self.at_temporal() {
            return self.temporal(op);
        }
        Ok(StlFormula::Atom(self.atom()?))
    }

    fn temporal<T: Scalar>(&mut self, op: char) -> Result<StlFormula<T>, StlError> {
        let op_col = self.col();
        self.pos += 1;
        self.expect_sym('[')?;
        let a = self.number()?;
        self.expect_sym(',')?;
        let b = self.number()?;
        self.expect_sym(')')?;
        if self.at_temporal().is_some() {
            return Err(StlError::NestedTemporal {
                line: self.line,
                column: self.col(),
            });
        }
        if let (Some(Tok::Sym('!')), true) = (
            self.peek(),
            self.toks
                .get(self.pos + 1)
                .is_some_and(|t| matches!(&t.tok, Tok::Ident(s) if s == "G" || s == "F")),
        ) {
            return Err(StlError::NestedTemporal {
                line: self.line,
                column: self.col(),
            });
        }
        let interval = TimeInterval::new(T::lit(a), T::lit(b)).map_err(|e| match e {
            StlError::InvalidInterval { reason, .. } => StlError::Syntax {
                line: self.line,
                column: op_col,
                message: format!("interval [{a},{b}): {reason}"),
            },
            other => other,
        })?;
        let predicate = self.atom()?;
        if op == 'G' {
            return Ok(StlFormula::Globally(interval, predicate));
        }
        let satisfaction = self.satisfaction(&interval)?;
        Ok(StlFormula::Eventually {
            interval,
            predicate,
            satisfaction,
        })
    }

    fn satisfaction<T: Scalar>(
        &mut self,
        interval: &TimeInterval<T>,
    ) -> Result<Option<SatisfactionWindow<T>>, StlError> {
        if !matches!(self.peek(), Some(Tok::Sym('@'))) {
            return Ok(None);
        }
        self.pos += 1;
        let mut at = None;
        let mut eps = None;
        while let Some(Tok::Ident(key)) = self.peek().cloned() {
            let key_col = self.col();
            self.pos += 1;
            self.expect_sym('=')?;
            let v = self.number()?;
            match key.as_str() {
                "ts" if at.is_none() => at = Some((v, key_col)),
                "eps" if eps.is_none() => eps = Some(v),
                _ => {
                    return Err(StlError::Syntax {
                        line: self.line,
                        column: key_col,
                        message: format!("unexpected or repeated key `{key}`"),
                    })
                }
            }
        }
        let (at, at_col) = at.ok_or_else(|| self.err("`@` must be followed by `ts=<time>`"))?;
        let epsilon = eps.unwrap_or(DEFAULT_EPSILON);
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(self.err("eps must be positive"));
        }
        let at_t = T::lit(at);
        if !interval.contains(at_t) {
            return Err(StlError::Syntax {
                line: self.line,
                column: at_col,
                message: format!("satisfaction time {at} is outside {interval}"),
            });
        }
        Ok(Some(SatisfactionWindow {
            at: at_t,
            epsilon: T::lit(epsilon),
        }))
    }

    fn atom(&mut self) -> Result<PredicateRef, StlError> {
        let negated = matches!(self.peek(), Some(Tok::Sym('!')));
        if negated {
            self.pos += 1;
        }
        match self.bump() {
            Some(Tok::Ident(s)) if s == "sat" => {}
            _ => {
                self.pos -= 1;
                return Err(self.err("expected `sat(<id>)`"));
            }
        }
        self.expect_sym('(')?;
        let id_col = self.col();
        let id = match self.bump() {
            Some(Tok::Ident(s)) => s,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected a barrier identifier"));
            }
        };
        self.expect_sym(')')?;
        if !(self.known)(&id) {
            return Err(StlError::UnknownBarrier {
                id,
                line: self.line,
                column: id_col,
            });
        }
        Ok(PredicateRef {
            barrier_id: id,
            negated,
        })
    }
}

/// Parses a mission. `known` decides whether a barrier id resolves in the
/// registry. Without a `horizon` header the horizon is the latest interval end.
pub fn parse_spec<T: Scalar>(
    text: &str,
    known: impl Fn(&str) -> bool,
) -> Result<StlSpec<T>, StlError> {
    let mut tasks = Vec::new();
    let mut horizon: Option<(f64, usize)> = None;
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let toks = tokenize(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        if let Tok::Ident(s) = &toks[0].tok {
            if s == "horizon" {
                if horizon.is_some() {
                    return Err(StlError::Syntax {
                        line: lineno,
                        column: toks[0].col,
                        message: "repeated horizon header".into(),
                    });
                }
                match toks.get(1).map(|t| &t.tok) {
                    Some(Tok::Num(v)) if toks.len() == 2 && *v >= 0.0 && v.is_finite() => {
                        horizon = Some((*v, lineno))
                    }
                    _ => {
                        return Err(StlError::Syntax {
                            line: lineno,
                            column: toks.get(1).map_or(raw.len() + 1, |t| t.col),
                            message: "expected `horizon <nonnegative number>`".into(),
                        })
                    }
                }
                continue;
            }
        }
        let mut p = LineParser {
            toks,
            pos: 0,
            line: lineno,
            end_col: raw.chars().count() + 1,
            known: &known,
        };
        tasks.extend(p.conjunction::<T>()?);
    }

    let latest_end = tasks
        .iter()
        .flat_map(|t| t.leaves())
        .filter_map(|l| match l {
            StlFormula::Globally(i, _) | StlFormula::Eventually { interval: i, .. } => Some(*i),
            _ => None,
        })
        .fold(T::zero(), |acc, i| acc.max(i.end()));
    let horizon = match horizon {
        Some((h, line)) => {
            let h = T::lit(h);
            if latest_end > h {
                return Err(StlError::Syntax {
                    line,
                    column: 1,
                    message: format!("horizon {h} is shorter than the latest interval end {latest_end}"),
                });
            }
            h
        }
        None => latest_end,
    };
    Ok(StlSpec { tasks, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn any(_: &str) -> bool {
        true
    }

    #[test]
    fn globally_maps_directly() {
        let s = parse_spec::<f64>("G[0,300) sat(h1)", any).unwrap();
        assert_eq!(
            s.tasks,
            vec![StlFormula::Globally(
                TimeInterval::new(0.0, 300.0).unwrap(),
                PredicateRef::new("h1")
            )]
        );
        assert_eq!(s.horizon, 300.0);
    }

    #[test]
    fn eventually_records_window() {
        let s = parse_spec::<f64>("F[2,8) sat(reach) @ts=4 eps=0.5", any).unwrap();
        match &s.tasks[0] {
            StlFormula::Eventually {
                interval,
                predicate,
                satisfaction,
            } => {
                assert_eq!((interval.start(), interval.end()), (2.0, 8.0));
                assert_eq!(predicate.barrier_id, "reach");
                assert_eq!(
                    *satisfaction,
                    Some(SatisfactionWindow {
                        at: 4.0,
                        epsilon: 0.5
                    })
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn epsilon_defaults() {
        let s = parse_spec::<f64>("F[2,8) sat(reach) @ts=4", any).unwrap();
        let StlFormula::Eventually { satisfaction, .. } = &s.tasks[0] else {
            panic!()
        };
        assert_eq!(satisfaction.unwrap().epsilon, DEFAULT_EPSILON);
    }

    #[test]
    fn empty_interval_rejected() {
        let e = parse_spec::<f64>("G[5,5) sat(h1)", any).unwrap_err();
        assert!(matches!(e, StlError::Syntax { line: 1, column: 1, .. }), "{e}");
        assert!(e.to_string().contains("empty interval"));
    }

    #[test]
    fn unknown_barrier_has_position() {
        let e = parse_spec::<f64>("\n  G[0,1) sat(nope)", |id| id == "h1").unwrap_err();
        assert_eq!(
            e,
            StlError::UnknownBarrier {
                id: "nope".into(),
                line: 2,
                column: 14
            }
        );
    }

    #[test]
    fn nesting_rejected() {
        let e = parse_spec::<f64>("G[0,10) F[0,2) sat(a)", any).unwrap_err();
        assert!(matches!(e, StlError::NestedTemporal { line: 1, column: 9 }));
        let e = parse_spec::<f64>("G[0,10) !G[0,2) sat(a)", any).unwrap_err();
        assert!(matches!(e, StlError::NestedTemporal { .. }));
    }

    #[test]
    fn satisfaction_time_outside_interval_rejected() {
        let e = parse_spec::<f64>("F[2,8) sat(r) @ts=9", any).unwrap_err();
        assert!(e.to_string().contains("outside"), "{e}");
    }

    #[test]
    fn whitespace_comments_negation_and_conjunction() {
        let text = "# mission\nhorizon 20\n G [ 0 , 10 ) ! sat ( a ) & sat(b) # trailing\n\nG[10,20) sat(c)";
        let s = parse_spec::<f64>(text, any).unwrap();
        assert_eq!(s.horizon, 20.0);
        assert_eq!(s.tasks.len(), 3);
        assert_eq!(
            s.tasks[0],
            StlFormula::Globally(TimeInterval::new(0.0, 10.0).unwrap(), PredicateRef::negated("a"))
        );
        assert_eq!(s.tasks[1], StlFormula::Atom(PredicateRef::new("b")));
    }

    #[test]
    fn horizon_shorter_than_interval_rejected() {
        assert!(parse_spec::<f64>("horizon 5\nG[0,10) sat(a)", any).is_err());
    }

    #[test]
    fn syntax_error_column() {
        let e = parse_spec::<f64>("G[0,10 sat(a)", any).unwrap_err();
        assert_eq!(
            e,
            StlError::Syntax {
                line: 1,
                column: 8,
                message: "expected `)`".into()
            }
        );
    }

    #[test]
    fn display_round_trips() {
        let text = "G[0,300) sat(h1)\nF[2,8) !sat(r) @ts=4 eps=0.25\nsat(x)\ntrue";
        let s = parse_spec::<f64>(text, any).unwrap();
        let printed: Vec<String> = s.tasks.iter().map(|t| t.to_string()).collect();
        let again = parse_spec::<f64>(&printed.join("\n"), any).unwrap();
        assert_eq!(s, again);
    }
}

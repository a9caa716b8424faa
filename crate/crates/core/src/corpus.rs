//! Bundled example problems.

use crate::action::{Domain, InitialState, Literal};
use crate::formula::Formula;
use crate::syntax::{self, ProblemFile};

pub const SUITCASE: &str = include_str!("../corpus/suitcase.bp");
pub const TOGGLE: &str = include_str!("../corpus/toggle.bp");
pub const TOGGLE2: &str = include_str!("../corpus/toggle2.bp");
pub const ELEVATOR: &str = include_str!("../corpus/elevator.bp");
pub const BLOCKS: &str = include_str!("../corpus/blocks.bp");
pub const SWITCHES: &str = include_str!("../corpus/switches.bp");

/// Every bundled file by name.
pub const ALL: &[(&str, &str)] = &[
    ("suitcase", SUITCASE),
    ("toggle", TOGGLE),
    ("toggle2", TOGGLE2),
    ("elevator", ELEVATOR),
    ("blocks", BLOCKS),
    ("switches", SWITCHES),
];

pub fn problem(src: &str) -> ProblemFile {
    syntax::parse_problem(src).unwrap_or_else(|e| panic!("bundled problem does not parse: {e}"))
}

fn theory(src: &str) -> (Domain, InitialState) {
    let p = problem(src);
    (p.domain, p.initial)
}

pub fn suitcase() -> (Domain, InitialState) {
    theory(SUITCASE)
}

pub fn toggle() -> (Domain, InitialState) {
    theory(TOGGLE)
}

pub fn toggle2() -> (Domain, InitialState) {
    theory(TOGGLE2)
}

pub fn blocks() -> ProblemFile {
    problem(BLOCKS)
}

pub fn switches() -> ProblemFile {
    problem(SWITCHES)
}

/// Elevator source with floors `0..=top`, the car at `start`, requests on
/// `requests`, and the given horizon.
pub fn elevator_source(top: usize, start: usize, requests: &[usize], horizon: usize) -> String {
    let mut out = String::new();
    for line in ELEVATOR.lines() {
        if line.starts_with("sort floor") {
            out.push_str(&format!("sort floor = 0..{top}.\n"));
        } else if line.starts_with("initially") {
            continue;
        } else if line.starts_with("horizon") {
            out.push_str(&format!("horizon {horizon}.\n"));
            let mut lits = vec!["-opened".to_string()];
            for n in 0..=top {
                lits.push(format!("{}currentFloor({n})", if n == start { "" } else { "-" }));
                lits.push(format!("{}on({n})", if requests.contains(&n) { "" } else { "-" }));
            }
            out.push_str(&format!("initially({}).\n", lits.join(", ")));
        } else {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

pub fn elevator(top: usize, start: usize, requests: &[usize], horizon: usize) -> ProblemFile {
    problem(&elevator_source(top, start, requests, horizon))
}

pub fn parse_literal(s: &str) -> Literal {
    syntax::parse_literal(s).unwrap_or_else(|e| panic!("bad literal {s}: {e}"))
}

pub fn parse_formula(s: &str) -> Formula {
    syntax::parse_formula(s).unwrap_or_else(|e| panic!("bad formula {s}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_files_parse() {
        for (name, src) in ALL {
            syntax::parse_problem(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn blocks_domain_shape() {
        let p = blocks();
        assert_eq!(p.domain.fluent_count(), 12);
        assert_eq!(p.domain.action_count(), 9);
        let s0 = p.domain.initial_state(&p.initial).unwrap();
        assert!(p.domain.is_state(&s0));
    }

    #[test]
    fn elevator_variants() {
        let p = elevator(1, 0, &[0], 4);
        assert_eq!(p.domain.fluent_count(), 5);
        assert_eq!(p.horizon, Some(4));
        assert!(p.domain.initial_state(&p.initial).is_ok());
        let p = elevator(2, 1, &[0, 2], 9);
        assert!(p.domain.initial_state(&p.initial).is_ok());
    }
}

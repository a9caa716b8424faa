//! The memoized trace checker against a direct reading of the trace
//! definitions: plain recursion over the program text, every split point,
//! and for HTN every ordering of the tasks with every segmentation.

mod common;

use std::collections::HashSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use aspplan_core::action::{Domain, State, Trajectory};
use aspplan_core::corpus;
use aspplan_core::formula::Formula;
use aspplan_core::planner::{plan_asp, PlannerConfig, PlanningProblem};
use aspplan_core::program::{
    check_program, ground_complex, is_trace, ConstraintKind, GeneralProgram, Htn, Node, Program, ProgramGraph,
    TraceChecker,
};
use aspplan_core::Knowledge;

use common::*;

struct Reference<'a> {
    d: &'a Domain,
    p: &'a GeneralProgram,
    states: &'a [State],
    actions: &'a [usize],
    active: HashSet<(Program, usize, usize)>,
}

impl Reference<'_> {
    fn holds(&self, f: &Formula, i: usize) -> bool {
        f.ground_quantifiers().unwrap().eval_state(self.d, &self.states[i]).unwrap()
    }

    fn trace(&mut self, prog: &Program, i: usize, j: usize) -> bool {
        let key = (prog.clone(), i, j);
        if !self.active.insert(key.clone()) {
            return false;
        }
        let r = self.trace_inner(prog, i, j);
        self.active.remove(&key);
        r
    }

    fn trace_inner(&mut self, prog: &Program, i: usize, j: usize) -> bool {
        match prog {
            Program::Action(a) => j == i + 1 && Some(self.actions[i]) == self.d.action_id(a),
            Program::Test(f) => i == j && self.holds(f, i),
            Program::Null => i == j,
            Program::Seq(a, b) => (i..=j).any(|k| self.trace(a, i, k) && self.trace(b, k, j)),
            Program::Choice(cs) => cs.iter().any(|c| self.trace(c, i, j)),
            Program::If(f, a, b) => {
                if self.holds(f, i) {
                    self.trace(a, i, j)
                } else {
                    self.trace(b, i, j)
                }
            }
            Program::While(f, a) => {
                if !self.holds(f, i) {
                    i == j
                } else {
                    (i..=j).any(|k| self.trace(a, i, k) && self.trace(prog, k, j))
                }
            }
            Program::Pick(v, cs, body) => cs.iter().any(|c| {
                let inst = ground_complex(body, &|x| (x == &**v).then(|| c.clone())).unwrap();
                self.trace(&inst, i, j)
            }),
            Program::Call(t) => {
                let body = self.p.table.resolve(t).unwrap();
                self.trace(&body, i, j)
            }
            Program::Htn(h) => self.htn(h, i, j),
        }
    }

    fn htn(&mut self, h: &Htn, i: usize, j: usize) -> bool {
        let k = h.tasks.len();
        permutations(k).into_iter().any(|perm| {
            segmentations(i, j, k).into_iter().any(|bounds| self.placement_ok(h, &perm, &bounds))
        })
    }

    /// Task `perm[t]` runs on `[bounds[t], bounds[t + 1]]`.
    fn placement_ok(&mut self, h: &Htn, perm: &[usize], bounds: &[usize]) -> bool {
        let pos = |task: usize| perm.iter().position(|&x| x == task).unwrap();
        let begin = |task: usize| bounds[pos(task)];
        let end = |task: usize| bounds[pos(task) + 1];
        for c in &h.constraints {
            let ok = match &c.kind {
                ConstraintKind::Order(a, b) => pos(*a) < pos(*b),
                ConstraintKind::Pre(f, t) => self.holds(f, begin(*t)),
                ConstraintKind::Post(t, f) => self.holds(f, end(*t)),
                ConstraintKind::Maintain(a, f, b) => {
                    pos(*a) < pos(*b) && (end(*a)..=begin(*b)).all(|s| self.holds(f, s))
                }
            };
            if !ok {
                return false;
            }
        }
        (0..perm.len()).all(|t| self.trace(&h.tasks[perm[t]], bounds[t], bounds[t + 1]))
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, k - 1);
            out.push(q);
        }
    }
    out
}

/// Non-decreasing sequences `i = b0 <= b1 <= .. <= bk = j`.
fn segmentations(i: usize, j: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if i == j { vec![vec![i]] } else { vec![] };
    }
    let mut out = Vec::new();
    for m in i..=j {
        for mut rest in segmentations(m, j, k - 1) {
            rest.insert(0, i);
            out.push(rest);
        }
    }
    out
}

fn reference_is_trace(d: &Domain, p: &GeneralProgram, t: &Trajectory) -> bool {
    let mut r = Reference { d, p, states: &t.states, actions: &t.actions, active: HashSet::new() };
    r.trace(&p.main, 0, t.len())
}

fn compare_on(pf: &aspplan_core::ProblemFile, max_len: usize) -> (usize, usize) {
    let Knowledge::Program(p) = &pf.knowledge else { panic!("no program") };
    let d = &pf.domain;
    let graph = ProgramGraph::build(d, p).unwrap();
    let s0 = d.initial_state(&pf.initial).unwrap();
    let mut checked = 0;
    let mut accepted = 0;
    for n in 0..=max_len {
        for t in all_trajectories(d, &s0, n).into_iter().filter(|t| t.len() == n) {
            let fast = is_trace(d, &graph, &t);
            let slow = reference_is_trace(d, p, &t);
            assert_eq!(fast, slow, "trace check differs on {}", d.show_actions(&t));
            checked += 1;
            accepted += fast as usize;
            if fast {
                if let Node::Htn(h) = graph.node(graph.root()) {
                    let w = TraceChecker::new(d, &graph, &t).htn_witness(graph.root(), 0, n).expect("witness");
                    validate_witness(d, p, &t, h.tasks.len(), &w);
                }
            }
        }
    }
    (checked, accepted)
}

/// The witness covers `[0, n]` with every task once, contiguously, and
/// satisfies every constraint of the root HTN.
fn validate_witness(d: &Domain, p: &GeneralProgram, t: &Trajectory, k: usize, w: &[aspplan_core::program::Placement]) {
    let h = match &p.main {
        Program::Htn(h) => (**h).clone(),
        Program::Call(c) => match p.table.resolve(c).unwrap() {
            Program::Htn(h) => *h,
            other => panic!("root is not an htn: {other}"),
        },
        other => panic!("root is not an htn: {other}"),
    };
    assert_eq!(w.len(), k);
    let perm: Vec<usize> = w.iter().map(|x| x.task).collect();
    let mut bounds = vec![0];
    for x in w {
        assert_eq!(x.begin, *bounds.last().unwrap());
        bounds.push(x.end);
    }
    assert_eq!(*bounds.last().unwrap(), t.len());
    let mut r = Reference { d, p, states: &t.states, actions: &t.actions, active: HashSet::new() };
    assert!(r.placement_ok(&h, &perm, &bounds), "witness violates a constraint");
}

#[test]
fn golog_programs_match_reference() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut programs = 0;
    let mut accepted = 0;
    while programs < 40 {
        let pf = parse(&random_golog_problem(&mut rng, 1));
        let Knowledge::Program(p) = &pf.knowledge else { unreachable!() };
        if !check_program(p).is_coherent() {
            continue;
        }
        programs += 1;
        let max_len = if programs <= 8 { 6 } else { 4 };
        accepted += compare_on(&pf, max_len).1;
    }
    assert!(accepted > 0);
}

#[test]
fn htn_programs_match_reference() {
    let mut rng = StdRng::seed_from_u64(12);
    let mut programs = 0;
    let mut accepted = 0;
    while programs < 40 {
        let pf = parse(&random_htn_problem(&mut rng, 3));
        let Knowledge::Program(p) = &pf.knowledge else { unreachable!() };
        if !check_program(p).is_coherent() {
            continue;
        }
        programs += 1;
        accepted += compare_on(&pf, 5).1;
    }
    assert!(accepted > 0);
}

#[test]
fn blocks_reference_rejects_wrong_order() {
    let pf = corpus::blocks();
    let (checked, accepted) = compare_on(&pf, 2);
    assert!(checked > 0);
    assert_eq!(accepted, 1);
}

#[test]
fn elevator_plans_and_mutations() {
    let mut rng = StdRng::seed_from_u64(13);
    let pf = corpus::elevator(2, 1, &[0, 2], 9);
    let Knowledge::Program(p) = pf.knowledge.clone() else { unreachable!() };
    let prob = PlanningProblem::from_file(pf, None).unwrap();
    let d = &prob.domain;
    let graph = ProgramGraph::build(d, &p).unwrap();
    let plans = plan_asp(&prob, &PlannerConfig::default()).unwrap().plans;
    assert!(!plans.is_empty());
    for fp in plans {
        let t = fp.trajectory;
        assert!(reference_is_trace(d, &p, &t));
        // replace one action by another executable one and recompute states
        for _ in 0..20 {
            let at = rng.gen_range(0..t.len());
            let mut m = Trajectory::new(t.states[0].clone());
            let mut ok = true;
            for (i, &a) in t.actions.iter().enumerate() {
                let a = if i == at {
                    let exec: Vec<usize> = d.executable_actions(m.last()).collect();
                    exec[rng.gen_range(0..exec.len())]
                } else {
                    a
                };
                match d.successors(a, m.last()).into_iter().next() {
                    Some(s) => {
                        m.actions.push(a);
                        m.states.push(s);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                assert_eq!(is_trace(d, &graph, &m), reference_is_trace(d, &p, &m), "{}", d.show_actions(&m));
            }
        }
    }
}

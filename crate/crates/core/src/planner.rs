//! Planning by two routes: depth-first search over the transition function
//! with control knowledge checked on complete trajectories, and solving the
//! logic-program encoding and decoding its answer sets. Both routes use the
//! same notion of a plan: a trajectory of exactly `n` steps, or a shorter one
//! ending in a state where no action is executable.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::action::{ActionId, Domain, InitialState, Literal, State, Trajectory, DEFAULT_MAX_FLUENTS};
use crate::encoder::{encode_problem, holds_term, occ_term, EncodeError, EncodeOptions};
use crate::formula::{sat, Formula, FormulaError};
use crate::ground::{Atom, GroundProgram};
use crate::program::{GroundKind, ProgramError, ProgramGraph, TraceChecker};
use crate::solver::{enumerate, AnswerSet, SolveConfig, SolveError};
use crate::syntax::{Knowledge, ProblemFile};

/// A planning problem with optional control knowledge.
#[derive(Clone, Debug)]
pub struct PlanningProblem {
    pub domain: Domain,
    pub initial: InitialState,
    pub goal: Vec<Literal>,
    pub horizon: usize,
    pub knowledge: Knowledge,
}

impl PlanningProblem {
    /// Uses `horizon` when given, else the file's horizon.
    pub fn from_file(p: ProblemFile, horizon: Option<usize>) -> Result<PlanningProblem, PlanError> {
        let horizon = horizon.or(p.horizon).ok_or(PlanError::NoHorizon)?;
        Ok(PlanningProblem { domain: p.domain, initial: p.initial, goal: p.goal, horizon, knowledge: p.knowledge })
    }
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub encode: EncodeOptions,
    pub solve: SolveConfig,
    /// Maximum number of search nodes on the direct route.
    pub node_budget: u64,
    /// Cut direct-route prefixes that can no longer be traces of the program.
    pub prune: bool,
    /// Stop after this many plans.
    pub limit: Option<usize>,
    pub max_fluents: usize,
}

impl Default for PlannerConfig {
    fn default() -> PlannerConfig {
        PlannerConfig {
            encode: EncodeOptions::default(),
            solve: SolveConfig::default(),
            node_budget: 50_000_000,
            prune: false,
            limit: None,
            max_fluents: DEFAULT_MAX_FLUENTS,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("no horizon given")]
    NoHorizon,
    #[error("invalid initial state: {0}")]
    InitialState(String),
    #[error("search budget of {0} nodes exhausted")]
    Budget(u64),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

impl PlanError {
    /// Exceeding a search or size cap, as opposed to bad input.
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            PlanError::Budget(_) | PlanError::Solve(SolveError::Budget(_) | SolveError::TooManyAtoms { .. })
        )
    }
}

/// One plan: the trajectory up to its effective length.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct FoundPlan {
    pub trajectory: Trajectory,
    /// Shorter than the horizon, ending where no action is executable.
    pub dead_end: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PlanKind {
    /// The domain is deterministic, so the action sequence alone achieves the goal.
    Plan,
    /// Some run of the action sequence achieves the goal.
    PossiblePlan,
}

impl PlanKind {
    pub fn describe(self) -> &'static str {
        match self {
            PlanKind::Plan => "plan",
            PlanKind::PossiblePlan => "possible plan",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    /// Sorted, without duplicates.
    pub plans: Vec<FoundPlan>,
    pub kind: PlanKind,
}

/// Whether every action has at most one successor in every state, when the
/// domain is small enough to check.
pub fn plan_kind(d: &Domain, gamma: &InitialState, max_fluents: usize) -> PlanKind {
    if d.fluent_count() > max_fluents {
        return PlanKind::PossiblePlan;
    }
    match d.validate_theory(gamma, true, max_fluents).deterministic {
        Some(true) => PlanKind::Plan,
        _ => PlanKind::PossiblePlan,
    }
}

struct Checker<'a> {
    prob: &'a PlanningProblem,
    goal_set: BTreeSet<Literal>,
    goal: Vec<crate::action::Lit>,
    temporal: Option<Formula>,
    graph: Option<ProgramGraph>,
}

impl<'a> Checker<'a> {
    fn new(prob: &'a PlanningProblem) -> Result<Checker<'a>, PlanError> {
        let d = &prob.domain;
        let mut goal = Vec::new();
        for l in &prob.goal {
            goal.push(d.lit(l).map_err(|_| EncodeError::UnknownFluent(l.to_string()))?);
        }
        let (temporal, graph) = match &prob.knowledge {
            Knowledge::None => (None, None),
            Knowledge::Temporal(f) => {
                let g = f.ground_quantifiers()?;
                g.check_goal_usage()?;
                if g.is_goal_dependent() && prob.goal.is_empty() {
                    return Err(EncodeError::GoalRequired.into());
                }
                (Some(g), None)
            }
            Knowledge::Program(p) => (None, Some(ProgramGraph::build(d, p)?)),
        };
        Ok(Checker { prob, goal_set: prob.goal.iter().cloned().collect(), goal, temporal, graph })
    }

    fn goal_ok(&self, s: &State) -> bool {
        self.goal.iter().all(|&l| s.holds(l))
    }

    /// The states of `t` padded with its last state up to the horizon.
    fn padded(&self, t: &Trajectory) -> Vec<State> {
        let mut v = t.states.clone();
        while v.len() < self.prob.horizon + 1 {
            v.push(t.last().clone());
        }
        v
    }

    fn temporal_ok(&self, t: &Trajectory) -> Result<bool, PlanError> {
        match &self.temporal {
            None => Ok(true),
            Some(f) => {
                let goal = (!self.goal_set.is_empty()).then_some(&self.goal_set);
                Ok(sat(&self.prob.domain, &self.padded(t), f, goal)?)
            }
        }
    }

    fn trace_ok(&self, t: &Trajectory) -> bool {
        match &self.graph {
            None => true,
            Some(g) => t.len() == self.prob.horizon && TraceChecker::new(&self.prob.domain, g, t).is_trace(),
        }
    }

    fn accepts(&self, t: &Trajectory) -> Result<bool, PlanError> {
        Ok(self.goal_ok(t.last()) && self.trace_ok(t) && self.temporal_ok(t)?)
    }
}

/// Depth-first enumeration of plans from the initial state.
pub fn plan_direct(prob: &PlanningProblem, cfg: &PlannerConfig) -> Result<PlanResult, PlanError> {
    let d = &prob.domain;
    let s0 = d.initial_state(&prob.initial).map_err(|v| {
        PlanError::InitialState(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
    })?;
    let checker = Checker::new(prob)?;
    let mut search = Direct { prob, cfg, checker: &checker, out: Vec::new(), nodes: 0 };
    let mut t = Trajectory::new(s0);
    search.dfs(&mut t)?;
    let mut plans = search.out;
    plans.sort();
    plans.dedup();
    Ok(PlanResult { plans, kind: plan_kind(d, &prob.initial, cfg.max_fluents) })
}

struct Direct<'a> {
    prob: &'a PlanningProblem,
    cfg: &'a PlannerConfig,
    checker: &'a Checker<'a>,
    out: Vec<FoundPlan>,
    nodes: u64,
}

impl Direct<'_> {
    fn done(&self) -> bool {
        self.cfg.limit.is_some_and(|l| self.out.len() >= l)
    }

    fn viable(&self, t: &Trajectory) -> bool {
        let Some(g) = &self.checker.graph else { return true };
        if !self.cfg.prune {
            return true;
        }
        let mut c = TraceChecker::on_prefix(&self.prob.domain, g, &t.states, &t.actions);
        c.may_extend(g.root(), 0)
    }

    fn dfs(&mut self, t: &mut Trajectory) -> Result<(), PlanError> {
        self.nodes += 1;
        if self.nodes > self.cfg.node_budget {
            return Err(PlanError::Budget(self.cfg.node_budget));
        }
        let d = &self.prob.domain;
        let s = t.last().clone();
        let dead_end = d.executable_actions(&s).next().is_none();
        if t.len() == self.prob.horizon || dead_end {
            if self.checker.accepts(t)? {
                self.out.push(FoundPlan { trajectory: t.clone(), dead_end: t.len() < self.prob.horizon });
            }
            return Ok(());
        }
        if !self.viable(t) {
            return Ok(());
        }
        let actions: Vec<ActionId> = d.executable_actions(&s).collect();
        for a in actions {
            for s2 in d.successors(a, &s) {
                t.states.push(s2);
                t.actions.push(a);
                let r = self.dfs(t);
                t.states.pop();
                t.actions.pop();
                r?;
                if self.done() {
                    return Ok(());
                }
            }
        }
        Ok(())
    }
}

/// Atoms to project answer sets on: occurrences by time, then states.
pub fn projection(g: &GroundProgram, d: &Domain, n: usize) -> Vec<Atom> {
    let mut v = Vec::new();
    for t in 0..n {
        for a in d.actions() {
            v.extend(g.atom_id(&occ_term(a, t)));
        }
    }
    for t in 0..=n {
        for f in 0..d.fluent_count() {
            for pos in [true, false] {
                let l = d.literal(crate::action::Lit::new(f, pos));
                v.extend(g.atom_id(&holds_term(&l, t)));
            }
        }
    }
    v
}

/// The trajectory of an answer set, cut after the last step with an action.
pub fn decode(g: &GroundProgram, d: &Domain, n: usize, m: &AnswerSet) -> Option<FoundPlan> {
    let mut states = Vec::new();
    for t in 0..=n {
        let mut s = State::all_false(d.fluent_count());
        for f in 0..d.fluent_count() {
            let pos = g.atom_id(&holds_term(&d.literal(crate::action::Lit::new(f, true)), t));
            let neg = g.atom_id(&holds_term(&d.literal(crate::action::Lit::new(f, false)), t));
            let (p, q) = (pos.is_some_and(|a| m.contains(a)), neg.is_some_and(|a| m.contains(a)));
            if p == q {
                return None;
            }
            s.set(f, p);
        }
        states.push(s);
    }
    let mut actions = Vec::new();
    for t in 0..n {
        let occ: Vec<ActionId> = (0..d.action_count())
            .filter(|&a| g.atom_id(&occ_term(d.action(a), t)).is_some_and(|x| m.contains(x)))
            .collect();
        match occ.as_slice() {
            [] => break,
            [a] => actions.push(*a),
            _ => return None,
        }
    }
    let k = actions.len();
    states.truncate(k + 1);
    Some(FoundPlan { trajectory: Trajectory { states, actions }, dead_end: k < n })
}

/// Encodes, solves and decodes. Answer sets are projected on occurrence
/// and state atoms, so each plan is found once.
pub fn plan_asp(prob: &PlanningProblem, cfg: &PlannerConfig) -> Result<PlanResult, PlanError> {
    let d = &prob.domain;
    d.initial_state(&prob.initial).map_err(|v| {
        PlanError::InitialState(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
    })?;
    let g = encode_problem(d, &prob.initial, &prob.goal, prob.horizon, &prob.knowledge, cfg.encode)?;
    let mut solve = cfg.solve.clone();
    solve.projection = Some(projection(&g, d, prob.horizon));
    solve.limit = cfg.limit;
    let models = enumerate(&g, &solve)?;
    let mut plans: Vec<FoundPlan> = models.iter().filter_map(|m| decode(&g, d, prob.horizon, m)).collect();
    plans.sort();
    plans.dedup();
    Ok(PlanResult { plans, kind: plan_kind(d, &prob.initial, cfg.max_fluents) })
}

/// Outcome of checking one trajectory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub valid: bool,
    pub kind: PlanKind,
    pub diagnostics: Vec<String>,
}

impl Verdict {
    /// `VALID (plan)`, or the first diagnostic.
    pub fn summary(&self) -> String {
        if self.valid {
            format!("VALID ({})", self.kind.describe())
        } else {
            self.diagnostics.first().cloned().unwrap_or_else(|| "INVALID".into())
        }
    }
}

/// Checks a trajectory against the domain, the horizon, the goal and the
/// control knowledge.
pub fn verify_plan(prob: &PlanningProblem, t: &Trajectory, max_fluents: usize) -> Result<Verdict, PlanError> {
    let d = &prob.domain;
    let kind = plan_kind(d, &prob.initial, max_fluents);
    let mut diags = Vec::new();
    let checker = Checker::new(prob)?;
    let s0 = d.initial_state(&prob.initial).map_err(|v| {
        PlanError::InitialState(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
    })?;
    if t.states.first() != Some(&s0) {
        diags.push("INVALID: first state is not the initial state".to_string());
    }
    if !d.is_trajectory(t) {
        let step = (0..t.actions.len())
            .find(|&i| !d.is_successor(t.actions[i], &t.states[i], &t.states[i + 1]))
            .unwrap_or(0);
        diags.push(format!("INVALID: not a trajectory at step {step}"));
        return Ok(Verdict { valid: false, kind, diagnostics: diags });
    }
    let n = prob.horizon;
    if t.len() > n {
        diags.push(format!("INVALID: length {} exceeds horizon {n}", t.len()));
    } else if t.len() < n && d.executable_actions(t.last()).next().is_some() {
        diags.push(format!("INVALID: length {} is short of horizon {n} and the last state is not a dead end", t.len()));
    }
    if !checker.goal_ok(t.last()) {
        diags.push("INVALID: goal at n".to_string());
    }
    if !checker.temporal_ok(t)? {
        diags.push("INVALID: temporal constraint".to_string());
    }
    if let Some(g) = &checker.graph {
        if t.len() == n && !TraceChecker::new(d, g, t).is_trace() {
            diags.push(trace_diagnostic(d, g, t));
        } else if t.len() != n {
            diags.push("INVALID: not a trace of the program".to_string());
        }
    }
    Ok(Verdict { valid: diags.is_empty(), kind, diagnostics: diags })
}

/// Names the root HTN constraint whose removal makes `t` a trace, if any.
fn trace_diagnostic(d: &Domain, g: &ProgramGraph, t: &Trajectory) -> String {
    if let Some(h) = g.root_htn() {
        for (k, c) in h.constraints.iter().enumerate() {
            let relaxed = g.without_root_constraint(k);
            if TraceChecker::new(d, &relaxed, t).is_trace() {
                let kind = match c.kind {
                    GroundKind::Order(..) => "ordering",
                    GroundKind::Pre(..) => "precondition",
                    GroundKind::Post(..) => "postcondition",
                    GroundKind::Maintain(..) => "maintain",
                };
                return format!("INVALID: {kind} constraint {}", c.name);
            }
        }
    }
    "INVALID: not a trace of the program".to_string()
}

/// Plans found by only one route.
#[derive(Clone, Debug, Default)]
pub struct CrossCheck {
    pub direct: usize,
    pub asp: usize,
    pub only_direct: Vec<FoundPlan>,
    pub only_asp: Vec<FoundPlan>,
}

impl CrossCheck {
    pub fn agree(&self) -> bool {
        self.only_direct.is_empty() && self.only_asp.is_empty()
    }
}

/// Runs both routes to completion and compares the plan sets.
pub fn cross_check(prob: &PlanningProblem, cfg: &PlannerConfig) -> Result<CrossCheck, PlanError> {
    let cfg = PlannerConfig { limit: None, ..cfg.clone() };
    let a = plan_direct(prob, &cfg)?.plans;
    let b = plan_asp(prob, &cfg)?.plans;
    let (sa, sb): (BTreeSet<_>, BTreeSet<_>) = (a.iter().cloned().collect(), b.iter().cloned().collect());
    Ok(CrossCheck {
        direct: sa.len(),
        asp: sb.len(),
        only_direct: sa.difference(&sb).cloned().collect(),
        only_asp: sb.difference(&sa).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn problem(src: &str, horizon: Option<usize>) -> PlanningProblem {
        PlanningProblem::from_file(corpus::problem(src), horizon).unwrap()
    }

    fn actions(prob: &PlanningProblem, p: &FoundPlan) -> String {
        prob.domain.show_actions(&p.trajectory)
    }

    #[test]
    fn suitcase_both_routes() {
        let prob = problem(corpus::SUITCASE, None);
        let cfg = PlannerConfig::default();
        let direct = plan_direct(&prob, &cfg).unwrap();
        let asp = plan_asp(&prob, &cfg).unwrap();
        assert_eq!(direct.plans, asp.plans);
        assert_eq!(direct.plans.len(), 1);
        assert_eq!(actions(&prob, &direct.plans[0]), "open(l2)");
        assert_eq!(direct.kind, PlanKind::Plan);
    }

    #[test]
    fn contradictory_temporal_constraint() {
        let mut prob = problem(corpus::TOGGLE, None);
        prob.knowledge = Knowledge::Temporal(corpus::parse_formula("always(negation(f))"));
        let cfg = PlannerConfig::default();
        assert!(plan_direct(&prob, &cfg).unwrap().plans.is_empty());
        assert!(plan_asp(&prob, &cfg).unwrap().plans.is_empty());
    }

    #[test]
    fn blocks_htn_order() {
        let prob = PlanningProblem::from_file(corpus::blocks(), None).unwrap();
        let cfg = PlannerConfig::default();
        let asp = plan_asp(&prob, &cfg).unwrap();
        assert_eq!(asp.plans.len(), 1);
        assert_eq!(actions(&prob, &asp.plans[0]), "move(b,c), move(a,b)");
        assert!(cross_check(&prob, &cfg).unwrap().agree());
    }

    #[test]
    fn verify_diagnostics() {
        let prob = problem(corpus::SUITCASE, None);
        let p = plan_direct(&prob, &PlannerConfig::default()).unwrap().plans.remove(0);
        let v = verify_plan(&prob, &p.trajectory, DEFAULT_MAX_FLUENTS).unwrap();
        assert_eq!(v.summary(), "VALID (plan)");
        let mut bad = prob.clone();
        bad.goal = vec![corpus::parse_literal("locked(s)")];
        let v = verify_plan(&bad, &p.trajectory, DEFAULT_MAX_FLUENTS).unwrap();
        assert_eq!(v.summary(), "INVALID: goal at n");
    }

    #[test]
    fn htn_order_diagnostic() {
        let src = format!(
            "{}goal(p(3)).\nproc h : htn {{ turn_on(1), turn_on(2) ; o: order(turn_on(1), turn_on(2)) }}.\nmain h.\n",
            corpus::SWITCHES.replace("horizon 3.", "horizon 2.")
        );
        let prob = problem(&src, None);
        let d = &prob.domain;
        let mut t = Trajectory::new(d.initial_state(&prob.initial).unwrap());
        for name in ["turn_on(2)", "turn_on(1)"] {
            let a = d.action_id(&crate::syntax::parse_term(name).unwrap()).unwrap();
            let s = d.successors(a, t.last()).remove(0);
            t.actions.push(a);
            t.states.push(s);
        }
        let v = verify_plan(&prob, &t, DEFAULT_MAX_FLUENTS).unwrap();
        assert_eq!(v.summary(), "INVALID: ordering constraint o");
        let plans = plan_asp(&prob, &PlannerConfig::default()).unwrap().plans;
        assert_eq!(plans.len(), 1);
        assert_eq!(actions(&prob, &plans[0]), "turn_on(1), turn_on(2)");
    }

    #[test]
    fn dead_end_is_reported() {
        // a is executable only while f is false
        let src = "%! aspplan problem v1\nfluent f.\naction a.\ncauses(a, f, {}).\nexecutable(a, {-f}).\ninitially(-f).\ngoal(f).\n";
        let prob = problem(src, Some(3));
        let cfg = PlannerConfig::default();
        let direct = plan_direct(&prob, &cfg).unwrap();
        assert_eq!(direct.plans, plan_asp(&prob, &cfg).unwrap().plans);
        assert_eq!(direct.plans.len(), 1);
        assert!(direct.plans[0].dead_end);
        assert_eq!(direct.plans[0].trajectory.len(), 1);
        let v = verify_plan(&prob, &direct.plans[0].trajectory, DEFAULT_MAX_FLUENTS).unwrap();
        assert!(v.valid, "{v:?}");
    }

    #[test]
    fn elevator_request_at_current_floor() {
        let prob = PlanningProblem::from_file(corpus::elevator(1, 0, &[0], 4), None).unwrap();
        let cfg = PlannerConfig::default();
        let direct = plan_direct(&prob, &cfg).unwrap();
        assert_eq!(direct.plans.len(), 1);
        assert_eq!(actions(&prob, &direct.plans[0]), "turnoff(0), open, close, open");
        assert_eq!(plan_asp(&prob, &cfg).unwrap().plans, direct.plans);
    }

    #[test]
    fn elevator_three_floors_agree() {
        let prob = PlanningProblem::from_file(corpus::elevator(2, 1, &[0, 2], 9), None).unwrap();
        let cfg = PlannerConfig { prune: true, ..Default::default() };
        let r = cross_check(&prob, &cfg).unwrap();
        assert!(r.agree(), "{r:?}");
        assert!(r.direct > 0);
    }
}

//! Action language B: domain descriptions, states, closure under static
//! causal laws, direct effects, the transition function and trajectories.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexSet;
use thiserror::Error;

use crate::bits::Bits;
use crate::term::Term;

pub type FluentId = usize;
pub type ActionId = usize;

/// Compact literal over the fluent table of a [`Domain`]: `2 * fluent + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Lit(u32);

impl Lit {
    pub fn new(fluent: FluentId, positive: bool) -> Lit {
        Lit((fluent as u32) << 1 | (!positive) as u32)
    }

    pub fn fluent(self) -> FluentId {
        (self.0 >> 1) as usize
    }

    pub fn positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn complement(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

/// A fluent literal written with terms: `f` or `¬f`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub fluent: Term,
    pub positive: bool,
}

impl Literal {
    pub fn pos(fluent: Term) -> Literal {
        Literal { fluent, positive: true }
    }

    pub fn neg(fluent: Term) -> Literal {
        Literal { fluent, positive: false }
    }

    pub fn complement(&self) -> Literal {
        Literal { fluent: self.fluent.clone(), positive: !self.positive }
    }

    /// The term naming this literal inside logic programs: `f` or `neg(f)`.
    pub fn to_term(&self) -> Term {
        if self.positive {
            self.fluent.clone()
        } else {
            Term::app("neg", vec![self.fluent.clone()])
        }
    }

    /// Inverse of [`Literal::to_term`].
    pub fn from_term(t: &Term) -> Literal {
        match t {
            Term::App(n, a) if &**n == "neg" && a.len() == 1 => Literal::neg(a[0].clone()),
            _ => Literal::pos(t.clone()),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("-")?;
        }
        write!(f, "{}", self.fluent)
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Object constants, sorts and the action/fluent name tables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub objects: BTreeSet<Term>,
    pub sorts: BTreeMap<String, Vec<Term>>,
    pub action_names: BTreeMap<String, usize>,
    pub fluent_names: BTreeMap<String, usize>,
}

/// `caused(body, head)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct StaticLaw {
    pub body: Vec<Lit>,
    pub head: Lit,
}

/// `causes(action, effect, pre)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct DynamicLaw {
    pub action: ActionId,
    pub effect: Lit,
    pub pre: Vec<Lit>,
}

/// `executable(action, cond)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ExecLaw {
    pub action: ActionId,
    pub cond: Vec<Lit>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("unknown fluent {0}")]
    UnknownFluent(Term),
    #[error("unknown action {0}")]
    UnknownAction(Term),
    #[error("{0} is not ground")]
    NotGround(Term),
    #[error("name {0} is used both as an action and as a fluent")]
    NameClash(String),
    #[error("{name} used with arity {found}, declared with arity {declared}")]
    ArityMismatch { name: String, declared: usize, found: usize },
    #[error("{count} fluents exceed the cap of {cap}")]
    TooManyFluents { count: usize, cap: usize },
}

/// Default bound on the number of fluents for state enumeration.
pub const DEFAULT_MAX_FLUENTS: usize = 24;

/// A set of literals that may be incomplete or inconsistent.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LitSet {
    pos: Bits,
    neg: Bits,
}

impl LitSet {
    pub fn new(fluents: usize) -> LitSet {
        LitSet { pos: Bits::new(fluents), neg: Bits::new(fluents) }
    }

    pub fn from_lits(fluents: usize, lits: impl IntoIterator<Item = Lit>) -> LitSet {
        let mut s = LitSet::new(fluents);
        for l in lits {
            s.insert(l);
        }
        s
    }

    #[inline]
    pub fn contains(&self, l: Lit) -> bool {
        if l.positive() {
            self.pos.get(l.fluent())
        } else {
            self.neg.get(l.fluent())
        }
    }

    #[inline]
    pub fn insert(&mut self, l: Lit) -> bool {
        let was = self.contains(l);
        if l.positive() {
            self.pos.set(l.fluent(), true)
        } else {
            self.neg.set(l.fluent(), true)
        }
        !was
    }

    pub fn is_consistent(&self) -> bool {
        !self.pos.intersects(&self.neg)
    }

    pub fn is_subset(&self, other: &LitSet) -> bool {
        self.pos.is_subset(&other.pos) && self.neg.is_subset(&other.neg)
    }

    pub fn union_with(&mut self, other: &LitSet) {
        self.pos.union_with(&other.pos);
        self.neg.union_with(&other.neg);
    }

    pub fn len(&self) -> usize {
        self.pos.count() + self.neg.count()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.none() && self.neg.none()
    }

    pub fn iter(&self) -> impl Iterator<Item = Lit> + '_ {
        (0..self.pos.len()).flat_map(move |f| {
            let p = self.pos.get(f).then(|| Lit::new(f, true));
            let n = self.neg.get(f).then(|| Lit::new(f, false));
            p.into_iter().chain(n)
        })
    }

    /// The state with exactly these literals, if the set is complete and consistent.
    pub fn to_state(&self) -> Option<State> {
        let n = self.pos.len();
        if !self.is_consistent() || self.len() != n {
            return None;
        }
        Some(State { bits: self.pos.clone() })
    }
}

/// `Defined(Cl_K(Y))` or `Undefined`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClosureResult {
    Defined(LitSet),
    Undefined,
}

/// Least fixpoint of the immediate consequence operator of `laws` starting at
/// `y`; defined iff that fixpoint is consistent.
pub fn closure(laws: &[StaticLaw], y: &LitSet) -> ClosureResult {
    let mut cur = y.clone();
    loop {
        let mut changed = false;
        for law in laws {
            if !cur.contains(law.head) && law.body.iter().all(|&l| cur.contains(l)) {
                cur.insert(law.head);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if cur.is_consistent() {
        ClosureResult::Defined(cur)
    } else {
        ClosureResult::Undefined
    }
}

/// A complete, consistent interpretation of the fluents: bit `f` is the value of fluent `f`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct State {
    bits: Bits,
}

impl State {
    pub fn from_bits(bits: Bits) -> State {
        State { bits }
    }

    /// All fluents false.
    pub fn all_false(fluents: usize) -> State {
        State { bits: Bits::new(fluents) }
    }

    #[inline]
    pub fn holds(&self, l: Lit) -> bool {
        self.bits.get(l.fluent()) == l.positive()
    }

    #[inline]
    pub fn value(&self, f: FluentId) -> bool {
        self.bits.get(f)
    }

    pub fn set(&mut self, f: FluentId, v: bool) {
        self.bits.set(f, v)
    }

    pub fn fluent_count(&self) -> usize {
        self.bits.len()
    }

    pub fn lits(&self) -> impl Iterator<Item = Lit> + '_ {
        (0..self.bits.len()).map(move |f| Lit::new(f, self.bits.get(f)))
    }

    pub fn to_litset(&self) -> LitSet {
        LitSet::from_lits(self.bits.len(), self.lits())
    }

    pub fn satisfies_all(&self, lits: &[Lit]) -> bool {
        lits.iter().all(|&l| self.holds(l))
    }
}

/// The initial facts Γ.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InitialState {
    pub facts: BTreeSet<Literal>,
}

/// A state/action sequence `s0 a0 s1 ... s_n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<ActionId>,
}

impl Trajectory {
    pub fn new(s0: State) -> Trajectory {
        Trajectory { states: vec![s0], actions: vec![] }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// A ground action description: fluent and action tables plus the three kinds
/// of laws. Laws are deduplicated.
#[derive(Clone, Debug)]
pub struct Domain {
    pub signature: Signature,
    fluents: IndexSet<Term>,
    actions: IndexSet<Term>,
    statics: Vec<StaticLaw>,
    dynamics: Vec<DynamicLaw>,
    executables: Vec<ExecLaw>,
    dyn_by_action: Vec<Vec<usize>>,
    exec_by_action: Vec<Vec<usize>>,
    // For each fluent index i, the static laws all of whose fluents are < i + 1
    // and which mention fluent i.
    statics_closing_at: Vec<Vec<usize>>,
}

/// Incrementally collects declarations and laws.
#[derive(Clone, Debug, Default)]
pub struct DomainBuilder {
    signature: Signature,
    fluents: IndexSet<Term>,
    actions: IndexSet<Term>,
    statics: BTreeSet<StaticLaw>,
    dynamics: BTreeSet<DynamicLaw>,
    executables: BTreeSet<ExecLaw>,
}

fn norm(mut v: Vec<Lit>) -> Vec<Lit> {
    v.sort();
    v.dedup();
    v
}

impl DomainBuilder {
    pub fn new() -> DomainBuilder {
        DomainBuilder::default()
    }

    pub fn signature_mut(&mut self) -> &mut Signature {
        &mut self.signature
    }

    fn declare(
        names: &mut BTreeMap<String, usize>,
        other: &BTreeMap<String, usize>,
        t: &Term,
    ) -> Result<(), DomainError> {
        if !t.is_ground() {
            return Err(DomainError::NotGround(t.clone()));
        }
        let name = t.name().ok_or_else(|| DomainError::NotGround(t.clone()))?;
        if other.contains_key(name) {
            return Err(DomainError::NameClash(name.to_string()));
        }
        match names.get(name) {
            Some(&a) if a != t.arity() => Err(DomainError::ArityMismatch {
                name: name.to_string(),
                declared: a,
                found: t.arity(),
            }),
            _ => {
                names.insert(name.to_string(), t.arity());
                Ok(())
            }
        }
    }

    fn note_objects(&mut self, t: &Term) {
        for a in t.args() {
            self.signature.objects.insert(a.clone());
        }
    }

    pub fn fluent(&mut self, t: Term) -> Result<FluentId, DomainError> {
        Self::declare(&mut self.signature.fluent_names, &self.signature.action_names, &t)?;
        self.note_objects(&t);
        Ok(self.fluents.insert_full(t).0)
    }

    pub fn action(&mut self, t: Term) -> Result<ActionId, DomainError> {
        Self::declare(&mut self.signature.action_names, &self.signature.fluent_names, &t)?;
        self.note_objects(&t);
        Ok(self.actions.insert_full(t).0)
    }

    pub fn lit(&self, l: &Literal) -> Result<Lit, DomainError> {
        self.fluents
            .get_index_of(&l.fluent)
            .map(|f| Lit::new(f, l.positive))
            .ok_or_else(|| DomainError::UnknownFluent(l.fluent.clone()))
    }

    fn lits(&self, ls: &[Literal]) -> Result<Vec<Lit>, DomainError> {
        ls.iter().map(|l| self.lit(l)).collect()
    }

    fn action_id(&self, a: &Term) -> Result<ActionId, DomainError> {
        self.actions.get_index_of(a).ok_or_else(|| DomainError::UnknownAction(a.clone()))
    }

    pub fn caused(&mut self, body: &[Literal], head: &Literal) -> Result<(), DomainError> {
        let law = StaticLaw { body: norm(self.lits(body)?), head: self.lit(head)? };
        self.statics.insert(law);
        Ok(())
    }

    pub fn causes(&mut self, action: &Term, effect: &Literal, pre: &[Literal]) -> Result<(), DomainError> {
        let law = DynamicLaw {
            action: self.action_id(action)?,
            effect: self.lit(effect)?,
            pre: norm(self.lits(pre)?),
        };
        self.dynamics.insert(law);
        Ok(())
    }

    pub fn executable(&mut self, action: &Term, cond: &[Literal]) -> Result<(), DomainError> {
        let law = ExecLaw { action: self.action_id(action)?, cond: norm(self.lits(cond)?) };
        self.executables.insert(law);
        Ok(())
    }

    pub fn build(self) -> Domain {
        let nf = self.fluents.len();
        let na = self.actions.len();
        let statics: Vec<_> = self.statics.into_iter().collect();
        let dynamics: Vec<_> = self.dynamics.into_iter().collect();
        let executables: Vec<_> = self.executables.into_iter().collect();
        let mut dyn_by_action = vec![Vec::new(); na];
        for (i, d) in dynamics.iter().enumerate() {
            dyn_by_action[d.action].push(i);
        }
        let mut exec_by_action = vec![Vec::new(); na];
        for (i, e) in executables.iter().enumerate() {
            exec_by_action[e.action].push(i);
        }
        let mut statics_closing_at = vec![Vec::new(); nf];
        for (i, s) in statics.iter().enumerate() {
            let last = s.body.iter().chain(std::iter::once(&s.head)).map(|l| l.fluent()).max();
            if let Some(last) = last {
                statics_closing_at[last].push(i);
            }
        }
        Domain {
            signature: self.signature,
            fluents: self.fluents,
            actions: self.actions,
            statics,
            dynamics,
            executables,
            dyn_by_action,
            exec_by_action,
            statics_closing_at,
        }
    }
}

/// A problem with the theory found by [`Domain::validate_theory`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownFluent(Term),
    IncompleteInitialState { missing: Vec<Term> },
    InconsistentInitialState { fluent: Term },
    InitialStateNotClosed { law: String },
    NoSuccessor { action: Term, state: String },
    TooManyFluents { count: usize, cap: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownFluent(t) => write!(f, "initial state mentions unknown fluent {t}"),
            Violation::IncompleteInitialState { missing } => {
                write!(f, "initial state is incomplete; no value for")?;
                for m in missing {
                    write!(f, " {m}")?;
                }
                Ok(())
            }
            Violation::InconsistentInitialState { fluent } => {
                write!(f, "initial state is inconsistent: both {fluent} and -{fluent}")
            }
            Violation::InitialStateNotClosed { law } => {
                write!(f, "initial state violates static law {law}")
            }
            Violation::NoSuccessor { action, state } => {
                write!(f, "{action} is executable in {state} but has no successor state")
            }
            Violation::TooManyFluents { count, cap } => {
                write!(f, "{count} fluents exceed the enumeration cap of {cap}")
            }
        }
    }
}

/// Outcome of [`Domain::validate_theory`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// `Some` only when transitions were checked.
    pub consistent: Option<bool>,
    pub deterministic: Option<bool>,
    /// An action and state with more than one successor.
    pub nondeterminism_witness: Option<(Term, String)>,
    pub state_count: Option<usize>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Domain {
    pub fn fluent_count(&self) -> usize {
        self.fluents.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn fluents(&self) -> &IndexSet<Term> {
        &self.fluents
    }

    pub fn actions(&self) -> &IndexSet<Term> {
        &self.actions
    }

    pub fn fluent(&self, f: FluentId) -> &Term {
        &self.fluents[f]
    }

    pub fn action(&self, a: ActionId) -> &Term {
        &self.actions[a]
    }

    pub fn action_id(&self, a: &Term) -> Option<ActionId> {
        self.actions.get_index_of(a)
    }

    pub fn fluent_id(&self, f: &Term) -> Option<FluentId> {
        self.fluents.get_index_of(f)
    }

    pub fn statics(&self) -> &[StaticLaw] {
        &self.statics
    }

    pub fn dynamics(&self) -> &[DynamicLaw] {
        &self.dynamics
    }

    pub fn executables(&self) -> &[ExecLaw] {
        &self.executables
    }

    pub fn lit(&self, l: &Literal) -> Result<Lit, DomainError> {
        self.fluents
            .get_index_of(&l.fluent)
            .map(|f| Lit::new(f, l.positive))
            .ok_or_else(|| DomainError::UnknownFluent(l.fluent.clone()))
    }

    pub fn literal(&self, l: Lit) -> Literal {
        Literal { fluent: self.fluents[l.fluent()].clone(), positive: l.positive() }
    }

    pub fn check_size(&self, cap: usize) -> Result<(), DomainError> {
        if self.fluents.len() > cap {
            return Err(DomainError::TooManyFluents { count: self.fluents.len(), cap });
        }
        Ok(())
    }

    /// Builds a state from literals; every fluent must get exactly one value.
    pub fn state_from_literals(&self, lits: &[Literal]) -> Result<State, Vec<Violation>> {
        let facts: BTreeSet<Literal> = lits.iter().cloned().collect();
        let (set, violations) = self.collect_facts(&facts);
        match set.and_then(|s| s.to_state()) {
            Some(s) if violations.is_empty() => Ok(s),
            _ => Err(violations),
        }
    }

    fn collect_facts(&self, facts: &BTreeSet<Literal>) -> (Option<LitSet>, Vec<Violation>) {
        let mut violations = Vec::new();
        let mut set = LitSet::new(self.fluent_count());
        for l in facts {
            match self.lit(l) {
                Ok(x) => {
                    set.insert(x);
                }
                Err(_) => violations.push(Violation::UnknownFluent(l.fluent.clone())),
            }
        }
        for f in 0..self.fluent_count() {
            if set.contains(Lit::new(f, true)) && set.contains(Lit::new(f, false)) {
                violations.push(Violation::InconsistentInitialState { fluent: self.fluents[f].clone() });
            }
        }
        let missing: Vec<Term> = (0..self.fluent_count())
            .filter(|&f| !set.contains(Lit::new(f, true)) && !set.contains(Lit::new(f, false)))
            .map(|f| self.fluents[f].clone())
            .collect();
        if !missing.is_empty() {
            violations.push(Violation::IncompleteInitialState { missing });
        }
        (Some(set), violations)
    }

    /// The state described by Γ, or the violations preventing it.
    pub fn initial_state(&self, gamma: &InitialState) -> Result<State, Vec<Violation>> {
        let (set, mut violations) = self.collect_facts(&gamma.facts);
        if !violations.is_empty() {
            return Err(violations);
        }
        let s = set.and_then(|s| s.to_state()).expect("complete and consistent");
        if let Some(law) = self.violated_static(&s) {
            violations.push(Violation::InitialStateNotClosed { law: self.show_static(law) });
            return Err(violations);
        }
        Ok(s)
    }

    fn violated_static(&self, s: &State) -> Option<&StaticLaw> {
        self.statics.iter().find(|law| s.satisfies_all(&law.body) && !s.holds(law.head))
    }

    /// True iff `s` is closed under the static laws.
    pub fn is_state(&self, s: &State) -> bool {
        s.fluent_count() == self.fluent_count() && self.violated_static(s).is_none()
    }

    /// Cl over this domain's static laws.
    pub fn closure(&self, y: &LitSet) -> ClosureResult {
        closure(&self.statics, y)
    }

    /// E(a, s).
    pub fn direct_effects(&self, a: ActionId, s: &State) -> LitSet {
        let mut e = LitSet::new(self.fluent_count());
        for &i in &self.dyn_by_action[a] {
            let d = &self.dynamics[i];
            if s.satisfies_all(&d.pre) {
                e.insert(d.effect);
            }
        }
        e
    }

    pub fn is_executable(&self, a: ActionId, s: &State) -> bool {
        self.exec_by_action[a].iter().any(|&i| s.satisfies_all(&self.executables[i].cond))
    }

    pub fn executable_actions<'a>(&'a self, s: &'a State) -> impl Iterator<Item = ActionId> + 'a {
        (0..self.action_count()).filter(move |&a| self.is_executable(a, s))
    }

    /// True iff `s2` satisfies `s2 = Cl(E(a,s) ∪ (s ∩ s2))` and `a` is executable in `s`.
    pub fn is_successor(&self, a: ActionId, s: &State, s2: &State) -> bool {
        if !self.is_executable(a, s) || !self.is_state(s2) {
            return false;
        }
        let e = self.direct_effects(a, s);
        self.fixpoint_holds(&e, s, s2)
    }

    fn fixpoint_holds(&self, e: &LitSet, s: &State, s2: &State) -> bool {
        let mut y = e.clone();
        for f in 0..self.fluent_count() {
            if s.value(f) == s2.value(f) {
                y.insert(Lit::new(f, s.value(f)));
            }
        }
        match self.closure(&y) {
            ClosureResult::Defined(c) => c == s2.to_litset(),
            ClosureResult::Undefined => false,
        }
    }

    /// Φ(a, s), sorted.
    ///
    /// Candidates are complete interpretations containing E(a,s) and closed
    /// under the static laws; the search assigns fluents in index order and
    /// drops a branch as soon as a fully assigned static law is violated.
    /// Each candidate is then checked against the fixpoint equation.
    pub fn successors(&self, a: ActionId, s: &State) -> Vec<State> {
        if !self.is_executable(a, s) {
            return Vec::new();
        }
        let e = self.direct_effects(a, s);
        if !e.is_consistent() {
            return Vec::new();
        }
        let mut out = Vec::new();
        self.for_each_closed_interpretation(Some(&e), &mut |cand| {
            if self.fixpoint_holds(&e, s, cand) {
                out.push(cand.clone());
            }
        });
        out
    }

    /// Every state of the domain, sorted.
    pub fn all_states(&self) -> Vec<State> {
        let mut out = Vec::new();
        self.for_each_closed_interpretation(None, &mut |s| out.push(s.clone()));
        out
    }

    fn for_each_closed_interpretation(&self, fixed: Option<&LitSet>, f: &mut dyn FnMut(&State)) {
        let mut cur = State::all_false(self.fluent_count());
        self.dfs(0, fixed, &mut cur, f);
    }

    fn dfs(&self, i: usize, fixed: Option<&LitSet>, cur: &mut State, f: &mut dyn FnMut(&State)) {
        if i == self.fluent_count() {
            f(cur);
            return;
        }
        for v in [false, true] {
            if let Some(e) = fixed {
                if e.contains(Lit::new(i, !v)) {
                    continue;
                }
            }
            cur.set(i, v);
            let ok = self.statics_closing_at[i].iter().all(|&k| {
                let law = &self.statics[k];
                !cur.satisfies_all(&law.body) || cur.holds(law.head)
            });
            if ok {
                self.dfs(i + 1, fixed, cur, f);
            }
        }
        cur.set(i, false);
    }

    pub fn is_trajectory(&self, t: &Trajectory) -> bool {
        if t.states.len() != t.actions.len() + 1 {
            return false;
        }
        if !t.states.iter().all(|s| self.is_state(s)) {
            return false;
        }
        t.actions
            .iter()
            .enumerate()
            .all(|(i, &a)| a < self.action_count() && self.is_successor(a, &t.states[i], &t.states[i + 1]))
    }

    /// Checks Γ and, when `check_transitions` is set, enumerates every state
    /// and action to decide consistency and determinism of the domain.
    pub fn validate_theory(&self, gamma: &InitialState, check_transitions: bool, max_fluents: usize) -> ValidationReport {
        let mut report = ValidationReport::default();
        if let Err(v) = self.initial_state(gamma) {
            report.violations.extend(v);
        }
        if !check_transitions {
            return report;
        }
        if self.fluent_count() > max_fluents {
            report
                .violations
                .push(Violation::TooManyFluents { count: self.fluent_count(), cap: max_fluents });
            return report;
        }
        let states = self.all_states();
        let mut consistent = true;
        let mut deterministic = true;
        for s in &states {
            for a in 0..self.action_count() {
                if !self.is_executable(a, s) {
                    continue;
                }
                let succ = self.successors(a, s);
                if succ.is_empty() {
                    if consistent {
                        report.violations.push(Violation::NoSuccessor {
                            action: self.actions[a].clone(),
                            state: self.show_state(s),
                        });
                    }
                    consistent = false;
                }
                if succ.len() > 1 && deterministic {
                    deterministic = false;
                    report.nondeterminism_witness = Some((self.actions[a].clone(), self.show_state(s)));
                }
            }
        }
        report.consistent = Some(consistent);
        report.deterministic = Some(deterministic);
        report.state_count = Some(states.len());
        report
    }

    pub fn show_lit(&self, l: Lit) -> String {
        self.literal(l).to_string()
    }

    pub fn show_state(&self, s: &State) -> String {
        let parts: Vec<String> = s.lits().map(|l| self.show_lit(l)).collect();
        format!("{{{}}}", parts.join(", "))
    }

    pub fn show_static(&self, law: &StaticLaw) -> String {
        let body: Vec<String> = law.body.iter().map(|&l| self.show_lit(l)).collect();
        format!("caused({{{}}}, {})", body.join(", "), self.show_lit(law.head))
    }

    pub fn show_actions(&self, t: &Trajectory) -> String {
        let acts: Vec<String> = t.actions.iter().map(|&a| self.actions[a].to_string()).collect();
        acts.join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn lits(d: &Domain, xs: &[&str]) -> LitSet {
        LitSet::from_lits(d.fluent_count(), xs.iter().map(|x| d.lit(&corpus::parse_literal(x)).unwrap()))
    }

    fn state(d: &Domain, xs: &[&str]) -> State {
        let ls: Vec<Literal> = xs.iter().map(|x| corpus::parse_literal(x)).collect();
        d.state_from_literals(&ls).unwrap()
    }

    #[test]
    fn literal_complement_involution() {
        let l = Literal::pos(Term::sym("f"));
        assert_eq!(l.complement().complement(), l);
        let x = Lit::new(3, false);
        assert_eq!(x.complement().complement(), x);
        assert_eq!(x.fluent(), 3);
        assert!(!x.positive());
    }

    #[test]
    fn literal_term_round_trip() {
        let l = Literal::neg(Term::app("up", vec![Term::sym("l2")]));
        assert_eq!(l.to_term().to_string(), "neg(up(l2))");
        assert_eq!(Literal::from_term(&l.to_term()), l);
    }

    #[test]
    fn closure_without_laws_is_identity() {
        let mut b = DomainBuilder::new();
        b.fluent(Term::sym("f")).unwrap();
        let d = b.build();
        let y = lits(&d, &["f"]);
        assert_eq!(closure(&[], &y), ClosureResult::Defined(y.clone()));
    }

    #[test]
    fn closure_pathology_is_undefined() {
        let mut b = DomainBuilder::new();
        for f in ["f", "g", "h"] {
            b.fluent(Term::sym(f)).unwrap();
        }
        let f = Literal::pos(Term::sym("f"));
        let g = Literal::pos(Term::sym("g"));
        let h = Literal::pos(Term::sym("h"));
        b.caused(std::slice::from_ref(&f), &h).unwrap();
        b.caused(&[f, g], &h.complement()).unwrap();
        let d = b.build();
        assert_eq!(d.closure(&lits(&d, &["f", "g"])), ClosureResult::Undefined);
        assert!(matches!(d.closure(&lits(&d, &["f"])), ClosureResult::Defined(_)));
    }

    #[test]
    fn suitcase_closure_by_hand() {
        let (d, _) = corpus::suitcase();
        let c = d.closure(&lits(&d, &["up(l1)", "up(l2)"]));
        assert_eq!(c, ClosureResult::Defined(lits(&d, &["up(l1)", "up(l2)", "-locked(s)"])));
    }

    #[test]
    fn suitcase_effects_and_executability() {
        let (d, g) = corpus::suitcase();
        let s0 = d.initial_state(&g).unwrap();
        let open = |x: &str| d.action_id(&Term::app("open", vec![Term::sym(x)])).unwrap();
        assert_eq!(d.direct_effects(open("l2"), &s0), lits(&d, &["up(l2)"]));
        assert!(d.is_executable(open("l2"), &s0));
        assert!(!d.is_executable(open("l1"), &s0));
        let exec: Vec<String> = d.executable_actions(&s0).map(|a| d.action(a).to_string()).collect();
        assert_eq!(exec.len(), 3, "{exec:?}");
    }

    #[test]
    fn toggle_successor() {
        let (d, _) = corpus::toggle();
        let a = d.action_id(&Term::sym("a")).unwrap();
        let s = state(&d, &["-f"]);
        assert_eq!(d.successors(a, &s), vec![state(&d, &["f"])]);
    }

    #[test]
    fn contradictory_effects_have_no_successor() {
        let mut b = DomainBuilder::new();
        b.fluent(Term::sym("f")).unwrap();
        b.action(Term::sym("a")).unwrap();
        let f = Literal::pos(Term::sym("f"));
        b.causes(&Term::sym("a"), &f, &[]).unwrap();
        b.causes(&Term::sym("a"), &f.complement(), &[]).unwrap();
        b.executable(&Term::sym("a"), &[]).unwrap();
        let d = b.build();
        let s = State::all_false(1);
        assert!(d.successors(0, &s).is_empty());
        let r = d.validate_theory(&InitialState { facts: [f.complement()].into() }, true, 24);
        assert_eq!(r.consistent, Some(false));
    }

    #[test]
    fn suitcase_theory_is_consistent_and_deterministic() {
        let (d, g) = corpus::suitcase();
        let r = d.validate_theory(&g, true, DEFAULT_MAX_FLUENTS);
        assert!(r.is_ok(), "{:?}", r.violations);
        assert_eq!(r.consistent, Some(true));
        assert_eq!(r.deterministic, Some(true));
    }

    #[test]
    fn incomplete_and_inconsistent_initial_states() {
        let (d, mut g) = corpus::suitcase();
        g.facts.retain(|l| l.fluent.to_string() != "holding(k1)");
        let r = d.validate_theory(&g, false, 24);
        assert!(matches!(r.violations[0], Violation::IncompleteInitialState { .. }));

        let (d, _) = corpus::toggle();
        let f = Literal::pos(Term::sym("f"));
        let g = InitialState { facts: [f.clone(), f.complement()].into() };
        let r = d.validate_theory(&g, false, 24);
        assert!(matches!(r.violations[0], Violation::InconsistentInitialState { .. }));
    }

    #[test]
    fn unknown_initial_fluent_is_rejected() {
        let (d, mut g) = corpus::toggle();
        g.facts.insert(Literal::pos(Term::sym("zzz")));
        let r = d.validate_theory(&g, false, 24);
        assert!(r.violations.contains(&Violation::UnknownFluent(Term::sym("zzz"))));
    }

    #[test]
    fn zero_length_trajectory() {
        let (d, g) = corpus::suitcase();
        let s0 = d.initial_state(&g).unwrap();
        assert!(d.is_trajectory(&Trajectory::new(s0)));
        // up(l1), up(l2) and locked(s) together violate a static law
        let bad = state(&d, &["up(l1)", "up(l2)", "locked(s)", "holding(k1)", "holding(k2)"]);
        assert!(!d.is_trajectory(&Trajectory::new(bad)));
    }
}

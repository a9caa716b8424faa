//! Stable models of ground programs.
//!
//! The default search assigns atoms depth first, propagating the completion
//! of the program (a true atom needs a rule with a true body, a rule with a
//! true body forces its head, constraints and choice bounds prune), and
//! checks every total assignment against the least model of its reduct.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::bits::Bits;
use crate::ground::{Atom, GroundProgram, Head, Rule, RuleFamily};
use crate::term::Term;

/// A stable model, as a sorted list of atoms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AnswerSet {
    pub atoms: Vec<Atom>,
}

impl AnswerSet {
    pub fn from_set(s: &BTreeSet<Atom>) -> AnswerSet {
        AnswerSet { atoms: s.iter().copied().collect() }
    }

    pub fn contains(&self, a: Atom) -> bool {
        self.atoms.binary_search(&a).is_ok()
    }

    pub fn to_set(&self) -> BTreeSet<Atom> {
        self.atoms.iter().copied().collect()
    }

    /// Printed atoms, sorted by text.
    pub fn show(&self, g: &GroundProgram) -> Vec<String> {
        g.show_atoms(&self.to_set())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum ChoiceMode {
    #[default]
    Native,
    Expand,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Strategy {
    #[default]
    Search,
    /// Tests every subset of the atoms left open by a simple preprocessing
    /// step. Refuses programs with more than `exhaustive_cap` open atoms.
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub limit: Option<usize>,
    pub choice_mode: ChoiceMode,
    pub strategy: Strategy,
    /// When set, at most one model is returned per distinct restriction to
    /// these atoms, and they are branched on first, in the given order.
    pub projection: Option<Vec<Atom>>,
    /// Maximum number of decisions plus conflicts.
    pub budget: u64,
    pub exhaustive_cap: usize,
}

impl Default for SolveConfig {
    fn default() -> SolveConfig {
        SolveConfig {
            limit: None,
            choice_mode: ChoiceMode::Native,
            strategy: Strategy::Search,
            projection: None,
            budget: 200_000_000,
            exhaustive_cap: 22,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("search budget of {0} steps exhausted")]
    Budget(u64),
    #[error("{count} open atoms exceed the exhaustive cap of {cap}")]
    TooManyAtoms { count: usize, cap: usize },
    #[error("choice rule bounds {lower}..{upper} are outside the supported form (lower <= 1, upper = 1)")]
    UnsupportedChoice { lower: u32, upper: u32 },
}

fn check_choices(g: &GroundProgram) -> Result<(), SolveError> {
    for r in g.rules() {
        if let Head::Choice { lower, upper, .. } = r.head {
            if lower > 1 || upper != 1 {
                return Err(SolveError::UnsupportedChoice { lower, upper });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Reduct, least model, stability

/// Outcome of a least-model computation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LeastModel {
    Model(BTreeSet<Atom>),
    /// Some constraint body is satisfied.
    Inconsistent,
}

/// The reduct of `g` with respect to `s`: rules whose negative body meets
/// `s` are dropped and the remaining negative bodies removed. A surviving
/// choice rule becomes one rule `b <- body` per head atom `b` in `s`.
pub fn reduct(g: &GroundProgram, s: &BTreeSet<Atom>) -> GroundProgram {
    let mut out = GroundProgram::new();
    for t in g.atoms() {
        out.atom(t.clone());
    }
    for r in g.rules() {
        if r.neg.iter().any(|a| s.contains(a)) {
            continue;
        }
        match &r.head {
            Head::Choice { atoms, .. } => {
                for &b in atoms.iter().filter(|b| s.contains(b)) {
                    out.add(Rule::normal(b, r.pos.clone(), vec![]), RuleFamily::Input);
                }
            }
            h => {
                out.add(Rule { head: h.clone(), pos: r.pos.clone(), neg: vec![] }, RuleFamily::Input);
            }
        }
    }
    out
}

/// Least model of a program without negation; choice heads are read as
/// making every listed atom derivable.
pub fn least_model(g: &GroundProgram) -> LeastModel {
    let n = g.atom_count();
    let mut val = Bits::new(n);
    let mut bottom = false;
    fixpoint(g.rules(), n, |_| true, &mut val, &mut bottom);
    if bottom {
        LeastModel::Inconsistent
    } else {
        LeastModel::Model(val.iter_ones().map(|i| i as Atom).collect())
    }
}

/// Unit-propagation fixpoint of the positive parts of the rules selected by
/// `keep`. Heads of choice rules are derived only if `keep_head` allows.
fn fixpoint(
    rules: &[Rule],
    n: usize,
    keep: impl Fn(&Rule) -> bool,
    val: &mut Bits,
    bottom: &mut bool,
) {
    fixpoint_with(rules, n, keep, |_, _| true, val, bottom)
}

fn fixpoint_with(
    rules: &[Rule],
    n: usize,
    keep: impl Fn(&Rule) -> bool,
    keep_head: impl Fn(&Rule, Atom) -> bool,
    val: &mut Bits,
    bottom: &mut bool,
) {
    let mut occ: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut missing: Vec<u32> = vec![0; rules.len()];
    let mut queue: Vec<Atom> = Vec::new();
    let fire = |ri: usize, val: &mut Bits, queue: &mut Vec<Atom>, bottom: &mut bool| match &rules[ri].head {
        Head::Atom(h) => {
            if !val.get(*h as usize) {
                val.set(*h as usize, true);
                queue.push(*h);
            }
        }
        Head::Bottom => *bottom = true,
        Head::Choice { atoms, .. } => {
            for &h in atoms {
                if keep_head(&rules[ri], h) && !val.get(h as usize) {
                    val.set(h as usize, true);
                    queue.push(h);
                }
            }
        }
    };
    for (ri, r) in rules.iter().enumerate() {
        if !keep(r) {
            missing[ri] = u32::MAX;
            continue;
        }
        let mut m = 0;
        for &a in &r.pos {
            if !val.get(a as usize) {
                m += 1;
                occ[a as usize].push(ri as u32);
            }
        }
        missing[ri] = m;
    }
    for ri in 0..rules.len() {
        if missing[ri] == 0 {
            fire(ri, val, &mut queue, bottom);
        }
    }
    while let Some(a) = queue.pop() {
        for &ri in &occ[a as usize] {
            let ri = ri as usize;
            if missing[ri] == u32::MAX {
                continue;
            }
            missing[ri] -= 1;
            if missing[ri] == 0 {
                fire(ri, val, &mut queue, bottom);
            }
        }
    }
}

fn stable_bits(g: &GroundProgram, s: &Bits) -> bool {
    let rules = g.rules();
    // Constraints and choice bounds.
    for r in rules {
        let body = r.pos.iter().all(|&a| s.get(a as usize)) && r.neg.iter().all(|&a| !s.get(a as usize));
        if !body {
            continue;
        }
        match &r.head {
            Head::Bottom => return false,
            Head::Atom(h) => {
                if !s.get(*h as usize) {
                    return false;
                }
            }
            Head::Choice { lower, upper, atoms } => {
                let c = atoms.iter().filter(|&&a| s.get(a as usize)).count() as u32;
                if c < *lower || c > *upper {
                    return false;
                }
            }
        }
    }
    // Rules with a negative literal in s are not part of the reduct.
    let mut lm = Bits::new(g.atom_count());
    let mut bottom = false;
    fixpoint_with(
        rules,
        g.atom_count(),
        |r| r.neg.iter().all(|&a| !s.get(a as usize)),
        |_, h| s.get(h as usize),
        &mut lm,
        &mut bottom,
    );
    !bottom && lm == *s
}

/// `s` is a stable model of `g` (choice rules handled natively).
pub fn is_answer_set(g: &GroundProgram, s: &BTreeSet<Atom>) -> bool {
    let mut b = Bits::new(g.atom_count());
    for &a in s {
        if (a as usize) >= g.atom_count() {
            return false;
        }
        b.set(a as usize, true);
    }
    stable_bits(g, &b)
}

// ---------------------------------------------------------------------------
// Choice expansion

fn aux_atom(g: &mut GroundProgram, idx: usize) -> Atom {
    let mut k = 0;
    loop {
        let t = if k == 0 {
            Term::app("_none", vec![Term::int(idx as i64)])
        } else {
            Term::app("_none", vec![Term::int(idx as i64), Term::int(k)])
        };
        if g.atom_id(&t).is_none() {
            return g.atom(t);
        }
        k += 1;
    }
}

/// Replaces one choice rule with normal rules: one rule per atom blocked by
/// the others, an auxiliary "none chosen" atom when the lower bound is 0, and
/// a constraint per pair of atoms, since other rules may support them too.
pub fn expand_choice(g: &mut GroundProgram, r: &Rule, idx: usize) -> Result<Vec<Rule>, SolveError> {
    let Head::Choice { lower, upper, atoms } = &r.head else {
        return Ok(vec![r.clone()]);
    };
    if *lower > 1 || *upper != 1 {
        return Err(SolveError::UnsupportedChoice { lower: *lower, upper: *upper });
    }
    let mut out = Vec::new();
    if *lower == 1 && atoms.len() == 1 {
        out.push(Rule::normal(atoms[0], r.pos.clone(), r.neg.clone()));
        return Ok(out);
    }
    if *lower == 1 && atoms.is_empty() {
        out.push(Rule::constraint(r.pos.clone(), r.neg.clone()));
        return Ok(out);
    }
    let aux = if *lower == 0 {
        let a = aux_atom(g, idx);
        let mut neg = r.neg.clone();
        neg.extend(atoms.iter().copied());
        out.push(Rule::normal(a, r.pos.clone(), neg));
        Some(a)
    } else {
        None
    };
    for (i, &b) in atoms.iter().enumerate() {
        let mut neg = r.neg.clone();
        neg.extend(atoms.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x));
        neg.extend(aux);
        out.push(Rule::normal(b, r.pos.clone(), neg));
    }
    for (i, &b) in atoms.iter().enumerate() {
        for &c in &atoms[i + 1..] {
            let mut pos = r.pos.clone();
            pos.extend([b, c]);
            out.push(Rule::constraint(pos, r.neg.clone()));
        }
    }
    Ok(out)
}

/// A copy of `g` with every choice rule expanded. Auxiliary atoms are
/// appended after the original ones.
pub fn expand_all_choices(g: &GroundProgram) -> Result<GroundProgram, SolveError> {
    let mut out = GroundProgram::new();
    for t in g.atoms() {
        out.atom(t.clone());
    }
    for (i, r) in g.rules().iter().enumerate() {
        if r.is_choice() {
            for nr in expand_choice(&mut out, r, i)? {
                out.add(nr, RuleFamily::ChoiceExpansion);
            }
        } else {
            out.add(r.clone(), g.family(i));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Enumeration

/// All stable models (or one per projection class), in search order.
pub fn enumerate(g: &GroundProgram, cfg: &SolveConfig) -> Result<Vec<AnswerSet>, SolveError> {
    check_choices(g)?;
    let n0 = g.atom_count();
    let expanded;
    let prog = match cfg.choice_mode {
        ChoiceMode::Native => g,
        ChoiceMode::Expand => {
            expanded = expand_all_choices(g)?;
            &expanded
        }
    };
    let mut models = match cfg.strategy {
        Strategy::Search => Search::new(prog, cfg).run()?,
        Strategy::Exhaustive => exhaustive(prog, cfg)?,
    };
    if prog.atom_count() > n0 {
        for m in &mut models {
            m.atoms.retain(|&a| (a as usize) < n0);
        }
        if cfg.projection.is_some() {
            let mut seen = BTreeSet::new();
            let proj: BTreeSet<Atom> = cfg.projection.iter().flatten().copied().collect();
            models.retain(|m| seen.insert(m.atoms.iter().filter(|a| proj.contains(a)).copied().collect::<Vec<_>>()));
        }
    }
    Ok(models)
}

/// Atoms true in every stable model and atoms false in every one, by two
/// cheap fixpoints.
pub fn simplify(g: &GroundProgram) -> (Bits, Bits) {
    let n = g.atom_count();
    let mut sure = Bits::new(n);
    let mut bottom = false;
    fixpoint(g.rules(), n, |r| r.neg.is_empty() && !r.is_choice(), &mut sure, &mut bottom);
    let mut possible = Bits::new(n);
    let mut b2 = false;
    fixpoint(g.rules(), n, |_| true, &mut possible, &mut b2);
    (sure, possible)
}

fn exhaustive(g: &GroundProgram, cfg: &SolveConfig) -> Result<Vec<AnswerSet>, SolveError> {
    let (sure, possible) = simplify(g);
    let open: Vec<usize> = (0..g.atom_count()).filter(|&i| possible.get(i) && !sure.get(i)).collect();
    if open.len() > cfg.exhaustive_cap {
        return Err(SolveError::TooManyAtoms { count: open.len(), cap: cfg.exhaustive_cap });
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for mask in 0u64..(1u64 << open.len()) {
        let mut s = sure.clone();
        for (k, &i) in open.iter().enumerate() {
            if mask >> k & 1 == 1 {
                s.set(i, true);
            }
        }
        if stable_bits(g, &s) {
            let m = AnswerSet { atoms: s.iter_ones().map(|i| i as Atom).collect() };
            if let Some(p) = &cfg.projection {
                let key: Vec<Atom> = p.iter().copied().filter(|&a| m.contains(a)).collect();
                if !seen.insert(key) {
                    continue;
                }
            }
            out.push(m);
            if cfg.limit.is_some_and(|l| out.len() >= l) {
                break;
            }
        }
    }
    out.sort();
    Ok(out)
}

const UNSET: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

struct Search<'a> {
    g: &'a GroundProgram,
    cfg: &'a SolveConfig,
    value: Vec<i8>,
    trail: Vec<Atom>,
    qhead: usize,
    // (atom, value, already flipped, trail length before the decision)
    decisions: Vec<(Atom, bool, bool, usize)>,
    pos_occ: Vec<Vec<u32>>,
    neg_occ: Vec<Vec<u32>>,
    head_occ: Vec<Vec<u32>>,
    true_cnt: Vec<u32>,
    false_cnt: Vec<u32>,
    support: Vec<u32>,
    order: Vec<Atom>,
    in_projection: Vec<bool>,
    cursor: usize,
    rank: Vec<u32>,
    steps: u64,
}

impl<'a> Search<'a> {
    fn new(g: &'a GroundProgram, cfg: &'a SolveConfig) -> Search<'a> {
        let n = g.atom_count();
        let rules = g.rules();
        let mut pos_occ = vec![Vec::new(); n];
        let mut neg_occ = vec![Vec::new(); n];
        let mut head_occ = vec![Vec::new(); n];
        let mut support = vec![0u32; n];
        for (ri, r) in rules.iter().enumerate() {
            for &a in &r.pos {
                pos_occ[a as usize].push(ri as u32);
            }
            for &a in &r.neg {
                neg_occ[a as usize].push(ri as u32);
            }
            for &h in r.head_atoms() {
                head_occ[h as usize].push(ri as u32);
                support[h as usize] += 1;
            }
        }
        let mut in_projection = vec![false; n];
        let mut order = Vec::with_capacity(n);
        if let Some(p) = &cfg.projection {
            for &a in p {
                if (a as usize) < n && !in_projection[a as usize] {
                    in_projection[a as usize] = true;
                    order.push(a);
                }
            }
        }
        let mut rest: Vec<(String, Atom)> =
            (0..n as Atom).filter(|&a| !in_projection[a as usize]).map(|a| (g.show_atom(a), a)).collect();
        rest.sort();
        order.extend(rest.into_iter().map(|(_, a)| a));
        let mut rank = vec![0u32; n];
        for (i, &a) in order.iter().enumerate() {
            rank[a as usize] = i as u32;
        }
        Search {
            g,
            cfg,
            value: vec![UNSET; n],
            trail: Vec::new(),
            qhead: 0,
            decisions: Vec::new(),
            pos_occ,
            neg_occ,
            head_occ,
            true_cnt: vec![0; rules.len()],
            false_cnt: vec![0; rules.len()],
            support,
            order,
            in_projection,
            cursor: 0,
            rank,
            steps: 0,
        }
    }

    fn body_len(&self, r: usize) -> u32 {
        let r = &self.g.rules()[r];
        (r.pos.len() + r.neg.len()) as u32
    }

    fn assign(&mut self, a: Atom, v: bool) -> Result<(), ()> {
        let cur = self.value[a as usize];
        if cur != UNSET {
            return if (cur == TRUE) == v { Ok(()) } else { Err(()) };
        }
        self.value[a as usize] = if v { TRUE } else { FALSE };
        self.trail.push(a);
        let rules = self.g.rules();
        for k in 0..self.pos_occ[a as usize].len() {
            let r = self.pos_occ[a as usize][k] as usize;
            if v {
                self.true_cnt[r] += 1;
            } else {
                self.falsify_body(r, rules);
            }
        }
        for k in 0..self.neg_occ[a as usize].len() {
            let r = self.neg_occ[a as usize][k] as usize;
            if v {
                self.falsify_body(r, rules);
            } else {
                self.true_cnt[r] += 1;
            }
        }
        Ok(())
    }

    fn falsify_body(&mut self, r: usize, rules: &[Rule]) {
        self.false_cnt[r] += 1;
        if self.false_cnt[r] == 1 {
            for &h in rules[r].head_atoms() {
                self.support[h as usize] -= 1;
            }
        }
    }

    fn unassign(&mut self, a: Atom) {
        let v = self.value[a as usize] == TRUE;
        self.value[a as usize] = UNSET;
        if (self.rank[a as usize] as usize) < self.cursor {
            self.cursor = self.rank[a as usize] as usize;
        }
        let rules = self.g.rules();
        for &r in &self.pos_occ[a as usize] {
            let r = r as usize;
            if v {
                self.true_cnt[r] -= 1;
            } else {
                self.false_cnt[r] -= 1;
                if self.false_cnt[r] == 0 {
                    for &h in rules[r].head_atoms() {
                        self.support[h as usize] += 1;
                    }
                }
            }
        }
        for &r in &self.neg_occ[a as usize] {
            let r = r as usize;
            if v {
                self.false_cnt[r] -= 1;
                if self.false_cnt[r] == 0 {
                    for &h in rules[r].head_atoms() {
                        self.support[h as usize] += 1;
                    }
                }
            } else {
                self.true_cnt[r] -= 1;
            }
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let a = self.trail.pop().expect("nonempty trail");
            self.unassign(a);
        }
        self.qhead = self.qhead.min(len);
    }

    fn val(&self, a: Atom) -> i8 {
        self.value[a as usize]
    }

    /// Forces the body of rule `r` to be true.
    fn force_body(&mut self, r: usize) -> Result<(), ()> {
        let rule = &self.g.rules()[r];
        for &a in &rule.pos {
            self.assign(a, true)?;
        }
        for &a in &rule.neg {
            self.assign(a, false)?;
        }
        Ok(())
    }

    /// Makes the body of `r` false when exactly one literal is open and the
    /// rest are true; fails when all are true.
    fn block_body(&mut self, r: usize) -> Result<(), ()> {
        if self.false_cnt[r] > 0 {
            return Ok(());
        }
        let len = self.body_len(r);
        if self.true_cnt[r] == len {
            return Err(());
        }
        if self.true_cnt[r] + 1 == len {
            let rule = &self.g.rules()[r];
            if let Some(&a) = rule.pos.iter().find(|&&a| self.val(a) == UNSET) {
                return self.assign(a, false);
            }
            if let Some(&a) = rule.neg.iter().find(|&&a| self.val(a) == UNSET) {
                return self.assign(a, true);
            }
        }
        Ok(())
    }

    fn check_rule(&mut self, r: usize) -> Result<(), ()> {
        let body_true = self.true_cnt[r] == self.body_len(r);
        let body_false = self.false_cnt[r] > 0;
        match &self.g.rules()[r].head {
            Head::Atom(h) => {
                let h = *h;
                if body_true {
                    self.assign(h, true)?;
                } else if self.val(h) == FALSE && !body_false {
                    self.block_body(r)?;
                }
            }
            Head::Bottom => {
                if !body_false {
                    self.block_body(r)?;
                }
            }
            Head::Choice { lower, upper, atoms } => {
                if body_false {
                    return Ok(());
                }
                let (lower, upper) = (*lower, *upper);
                let t = atoms.iter().filter(|&&a| self.val(a) == TRUE).count() as u32;
                let u = atoms.iter().filter(|&&a| self.val(a) == UNSET).count() as u32;
                if t > upper || t + u < lower {
                    return self.block_body(r);
                }
                if body_true {
                    if t == upper {
                        let open: Vec<Atom> = atoms.iter().copied().filter(|&a| self.val(a) == UNSET).collect();
                        for a in open {
                            self.assign(a, false)?;
                        }
                    } else if t + u == lower {
                        let open: Vec<Atom> = atoms.iter().copied().filter(|&a| self.val(a) == UNSET).collect();
                        for a in open {
                            self.assign(a, true)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_support(&mut self, h: Atom) -> Result<(), ()> {
        let s = self.support[h as usize];
        if s == 0 {
            return self.assign(h, false);
        }
        if s == 1 && self.val(h) == TRUE {
            let r = self.head_occ[h as usize]
                .iter()
                .copied()
                .find(|&r| self.false_cnt[r as usize] == 0)
                .expect("one supporting rule") as usize;
            self.force_body(r)?;
        }
        Ok(())
    }

    fn propagate(&mut self) -> Result<(), ()> {
        while self.qhead < self.trail.len() {
            let a = self.trail[self.qhead];
            self.qhead += 1;
            let rules = self.g.rules();
            for k in 0..self.pos_occ[a as usize].len() + self.neg_occ[a as usize].len() {
                let r = if k < self.pos_occ[a as usize].len() {
                    self.pos_occ[a as usize][k]
                } else {
                    self.neg_occ[a as usize][k - self.pos_occ[a as usize].len()]
                } as usize;
                self.check_rule(r)?;
                if self.false_cnt[r] > 0 {
                    for &h in rules[r].head_atoms() {
                        self.check_support(h)?;
                    }
                }
            }
            for k in 0..self.head_occ[a as usize].len() {
                let r = self.head_occ[a as usize][k] as usize;
                self.check_rule(r)?;
            }
            self.check_support(a)?;
        }
        Ok(())
    }

    fn initial(&mut self) -> Result<(), ()> {
        for r in 0..self.g.rules().len() {
            self.check_rule(r)?;
        }
        for a in 0..self.g.atom_count() as Atom {
            self.check_support(a)?;
        }
        self.propagate()
    }

    fn next_open(&mut self) -> Option<Atom> {
        while self.cursor < self.order.len() {
            let a = self.order[self.cursor];
            if self.val(a) == UNSET {
                return Some(a);
            }
            self.cursor += 1;
        }
        None
    }

    /// Undoes to the most recent unflipped decision and flips it.
    fn backtrack(&mut self) -> bool {
        while let Some((a, v, flipped, len)) = self.decisions.pop() {
            self.undo_to(len);
            if !flipped {
                self.decisions.push((a, !v, true, len));
                let ok = self.assign(a, !v).is_ok();
                debug_assert!(ok);
                return true;
            }
        }
        false
    }

    fn tick(&mut self) -> Result<(), SolveError> {
        self.steps += 1;
        if self.steps > self.cfg.budget {
            Err(SolveError::Budget(self.cfg.budget))
        } else {
            Ok(())
        }
    }

    fn run(mut self) -> Result<Vec<AnswerSet>, SolveError> {
        let mut out = Vec::new();
        if self.initial().is_err() {
            return Ok(out);
        }
        let n = self.g.atom_count();
        loop {
            let ok = self.propagate().is_ok();
            if ok {
                if let Some(a) = self.next_open() {
                    self.tick()?;
                    let len = self.trail.len();
                    self.decisions.push((a, false, false, len));
                    let _ = self.assign(a, false);
                    continue;
                }
                let mut s = Bits::new(n);
                for a in 0..n {
                    if self.value[a] == TRUE {
                        s.set(a, true);
                    }
                }
                if stable_bits(self.g, &s) {
                    out.push(AnswerSet { atoms: s.iter_ones().map(|i| i as Atom).collect() });
                    if self.cfg.limit.is_some_and(|l| out.len() >= l) {
                        return Ok(out);
                    }
                    if self.cfg.projection.is_some() {
                        while let Some(&(a, _, _, len)) = self.decisions.last() {
                            if self.in_projection[a as usize] {
                                break;
                            }
                            self.decisions.pop();
                            self.undo_to(len);
                        }
                    }
                }
            } else {
                self.tick()?;
            }
            if !self.backtrack() {
                return Ok(out);
            }
        }
    }
}

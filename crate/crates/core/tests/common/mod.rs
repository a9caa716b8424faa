//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use aspplan_core::action::{Domain, State, Trajectory};
use aspplan_core::formula::Formula;
use aspplan_core::syntax::parse_problem;
use aspplan_core::{Literal, ProblemFile, Term};

/// Three fluents, four actions, one static law and a nondeterministic-free
/// transition function; `initially` is appended by the caller.
pub const SMALL_DOMAIN: &str = "%! aspplan problem v1
fluent p, q, r.
action a, b, c, d.
causes(a, p, {-p}).
causes(a, -p, {p}).
causes(b, q, {}).
causes(c, -q, {}).
causes(c, r, {p}).
causes(d, -r, {}).
caused({q, -p}, r).
executable(a, {}).
executable(b, {-q}).
executable(c, {}).
executable(d, {r}).
";

pub const SMALL_FLUENTS: [&str; 3] = ["p", "q", "r"];
pub const SMALL_ACTIONS: [&str; 4] = ["a", "b", "c", "d"];

/// A random initial state of [`SMALL_DOMAIN`] that respects its static law.
pub fn small_initially(rng: &mut StdRng) -> String {
    loop {
        let vals: Vec<bool> = (0..3).map(|_| rng.gen()).collect();
        // q and -p force r
        if vals[1] && !vals[0] && !vals[2] {
            continue;
        }
        let lits: Vec<String> =
            SMALL_FLUENTS.iter().zip(&vals).map(|(f, &v)| format!("{}{f}", if v { "" } else { "-" })).collect();
        return format!("initially({}).\n", lits.join(", "));
    }
}

pub fn random_literal_text(rng: &mut StdRng) -> String {
    let f = SMALL_FLUENTS.choose(rng).unwrap();
    if rng.gen() {
        f.to_string()
    } else {
        format!("-{f}")
    }
}

/// A fluent formula in surface syntax.
pub fn random_fluent_formula_text(rng: &mut StdRng, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.5) {
        return random_literal_text(rng);
    }
    match rng.gen_range(0..3) {
        0 => format!("and({}, {})", random_fluent_formula_text(rng, depth - 1), random_fluent_formula_text(rng, depth - 1)),
        1 => format!("or({}, {})", random_fluent_formula_text(rng, depth - 1), random_fluent_formula_text(rng, depth - 1)),
        _ => format!("negation({})", random_fluent_formula_text(rng, depth - 1)),
    }
}

/// An HTN-free program over [`SMALL_DOMAIN`]; `call` may be used as a
/// procedure name.
pub fn random_program_text(rng: &mut StdRng, depth: usize, call: Option<&str>) -> String {
    let leaf = |rng: &mut StdRng| match rng.gen_range(0..10) {
        0 => "null".to_string(),
        1 => format!("?{}", random_fluent_formula_text(rng, 1)),
        2 if call.is_some() => call.unwrap().to_string(),
        _ => SMALL_ACTIONS.choose(rng).unwrap().to_string(),
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..7) {
        0 => leaf(rng),
        1 | 2 => format!(
            "({}; {})",
            random_program_text(rng, depth - 1, call),
            random_program_text(rng, depth - 1, call)
        ),
        3 => format!(
            "({} | {})",
            random_program_text(rng, depth - 1, call),
            random_program_text(rng, depth - 1, call)
        ),
        4 => format!(
            "if {} then ({}) else ({})",
            random_fluent_formula_text(rng, 1),
            random_program_text(rng, depth - 1, call),
            random_program_text(rng, depth - 1, call)
        ),
        5 => format!("while {} do ({})", random_fluent_formula_text(rng, 1), random_program_text(rng, depth - 1, call)),
        _ => format!("({} | {}; {})", SMALL_ACTIONS.choose(rng).unwrap(), SMALL_ACTIONS.choose(rng).unwrap(), random_program_text(rng, depth - 1, call)),
    }
}

/// A problem over [`SMALL_DOMAIN`] with a random initial state, a random
/// program (with one helper procedure) and horizon `n`, without a goal.
pub fn random_golog_problem(rng: &mut StdRng, n: usize) -> String {
    let helper = random_program_text(rng, 2, None);
    let main = random_program_text(rng, 3, Some("helper"));
    format!(
        "{SMALL_DOMAIN}{}horizon {n}.\nproc helper : {helper}.\nmain {main}.\n",
        small_initially(rng)
    )
}

fn random_task(rng: &mut StdRng) -> (String, usize) {
    let act = |rng: &mut StdRng| SMALL_ACTIONS.choose(rng).unwrap().to_string();
    match rng.gen_range(0..4) {
        0 => (format!("({}; {})", act(rng), act(rng)), 2),
        1 => (format!("({} | {})", act(rng), act(rng)), 1),
        _ => (act(rng), 1),
    }
}

/// An HTN problem over [`SMALL_DOMAIN`] with at most `max_tasks` labelled
/// tasks, acyclic ordering and random pre, post and maintain constraints.
/// The horizon is the total task length, occasionally off by one.
pub fn random_htn_problem(rng: &mut StdRng, max_tasks: usize) -> String {
    let k = rng.gen_range(1..=max_tasks);
    let tasks: Vec<(String, usize)> = (0..k).map(|_| random_task(rng)).collect();
    let total: usize = tasks.iter().map(|t| t.1).sum();
    let n = match rng.gen_range(0..6) {
        0 => total.saturating_sub(1).max(1),
        1 => (total + 1).min(5),
        _ => total.min(5),
    };
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    let mut cons = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if rng.gen_bool(0.4) {
                cons.push(format!("order(t{}, t{})", perm[i], perm[j]));
            }
        }
    }
    for i in 0..k {
        match rng.gen_range(0..6) {
            0 => cons.push(format!("pre({}, t{i})", random_fluent_formula_text(rng, 1))),
            1 => cons.push(format!("post(t{i}, {})", random_fluent_formula_text(rng, 1))),
            2 if k > 1 => {
                let j = (i + rng.gen_range(1..k)) % k;
                cons.push(format!("maintain(t{i}, {}, t{j})", random_literal_text(rng)));
            }
            _ => {}
        }
    }
    let labelled: Vec<String> = cons.iter().enumerate().map(|(i, c)| format!("c{i}: {c}")).collect();
    let task_list: Vec<String> = tasks.iter().enumerate().map(|(i, t)| format!("t{i}: {}", t.0)).collect();
    let body = if labelled.is_empty() {
        task_list.join(", ")
    } else {
        format!("{} ; {}", task_list.join(", "), labelled.join(", "))
    };
    format!("{SMALL_DOMAIN}{}horizon {n}.\nproc h : htn {{ {body} }}.\nmain h.\n", small_initially(rng))
}

pub fn parse(src: &str) -> ProblemFile {
    parse_problem(src).unwrap_or_else(|e| panic!("generated problem does not parse: {e}\n{src}"))
}

/// Fluents `f0..f{k-1}` with no laws, for formula tests.
pub fn free_domain(k: usize) -> Domain {
    let names: Vec<String> = (0..k).map(|i| format!("f{i}")).collect();
    let src = format!("%! aspplan problem v1\nfluent {}.\naction noop.\nexecutable(noop, {{}}).\n", names.join(", "));
    parse_problem(&src).unwrap().domain
}

pub fn random_state(rng: &mut StdRng, d: &Domain) -> State {
    let mut s = State::all_false(d.fluent_count());
    for f in 0..d.fluent_count() {
        s.set(f, rng.gen());
    }
    s
}

pub fn random_temporal_formula(rng: &mut StdRng, d: &Domain, depth: usize, goal_ok: bool) -> Formula {
    let lit = |rng: &mut StdRng| {
        let f = d.fluent(rng.gen_range(0..d.fluent_count())).clone();
        if rng.gen() {
            Literal::pos(f)
        } else {
            Literal::neg(f)
        }
    };
    if depth == 0 || rng.gen_bool(0.25) {
        return if goal_ok && rng.gen_bool(0.15) { Formula::goal(Formula::lit(lit(rng))) } else { Formula::lit(lit(rng)) };
    }
    let sub = |rng: &mut StdRng| random_temporal_formula(rng, d, depth - 1, goal_ok);
    match rng.gen_range(0..8) {
        0 => Formula::and(sub(rng), sub(rng)),
        1 => Formula::or(sub(rng), sub(rng)),
        2 => Formula::not(sub(rng)),
        3 => Formula::next(sub(rng)),
        4 => Formula::always(sub(rng)),
        5 => Formula::eventually(sub(rng)),
        _ => Formula::until(sub(rng), sub(rng)),
    }
}

/// Every subformula, including `f` itself.
pub fn subformulas(f: &Formula) -> Vec<Formula> {
    let mut out = vec![f.clone()];
    match f {
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
            out.extend(subformulas(a));
            out.extend(subformulas(b));
        }
        Formula::Not(a) | Formula::Next(a) | Formula::Always(a) | Formula::Eventually(a) | Formula::Goal(a) => {
            out.extend(subformulas(a))
        }
        Formula::Lit(_) | Formula::Forall(..) | Formula::Exists(..) => {}
    }
    out
}

/// All trajectories from `s0` of exactly `n` steps, together with those cut
/// short in a state where no action is executable.
pub fn all_trajectories(d: &Domain, s0: &State, n: usize) -> Vec<Trajectory> {
    fn go(d: &Domain, t: &mut Trajectory, n: usize, out: &mut Vec<Trajectory>) {
        let s = t.last().clone();
        let acts: Vec<usize> = d.executable_actions(&s).collect();
        if t.len() == n || acts.is_empty() {
            out.push(t.clone());
            return;
        }
        for a in acts {
            for s2 in d.successors(a, &s) {
                t.actions.push(a);
                t.states.push(s2);
                go(d, t, n, out);
                t.actions.pop();
                t.states.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(d, &mut Trajectory::new(s0.clone()), n, &mut out);
    out
}

/// A ground program text with at most `atoms` atoms: restricted choice
/// rules, normal rules and constraints.
pub fn random_choice_program(rng: &mut StdRng, atoms: usize) -> String {
    let name = |i: usize| format!("x{i}");
    let body = |rng: &mut StdRng| {
        let mut parts = Vec::new();
        for _ in 0..rng.gen_range(0..3) {
            let a = name(rng.gen_range(0..atoms));
            parts.push(if rng.gen_bool(0.4) { format!("not {a}") } else { a });
        }
        parts
    };
    let mut out = String::new();
    for _ in 0..rng.gen_range(2..=6) {
        let k = rng.gen_range(1..=4.min(atoms));
        let mut ids: Vec<usize> = (0..atoms).collect();
        ids.shuffle(rng);
        let head: Vec<String> = ids[..k].iter().map(|&i| name(i)).collect();
        let lower = rng.gen_range(0..=1);
        let b = body(rng);
        let tail = if b.is_empty() { String::new() } else { format!(" :- {}", b.join(", ")) };
        out.push_str(&format!("{lower} {{{}}} 1{tail}.\n", head.join("; ")));
    }
    for _ in 0..rng.gen_range(0..=5) {
        let h = name(rng.gen_range(0..atoms));
        let b = body(rng);
        if b.is_empty() {
            out.push_str(&format!("{h} :- {h}.\n"));
        } else {
            out.push_str(&format!("{h} :- {}.\n", b.join(", ")));
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        let b = body(rng);
        if !b.is_empty() {
            out.push_str(&format!(":- {}.\n", b.join(", ")));
        }
    }
    out
}

/// Graph colouring as a ground program: one restricted choice rule per
/// vertex and one constraint per edge and colour.
pub fn coloring_program(vertices: usize, edges: &[(usize, usize)], colors: usize) -> String {
    let mut out = String::new();
    for v in 0..vertices {
        let opts: Vec<String> = (0..colors).map(|c| format!("col(v{v},c{c})")).collect();
        out.push_str(&format!("1 {{{}}} 1.\n", opts.join("; ")));
    }
    for &(u, v) in edges {
        for c in 0..colors {
            out.push_str(&format!(":- col(v{u},c{c}), col(v{v},c{c}).\n"));
        }
    }
    out
}

/// Number of proper colourings by brute force.
pub fn count_colorings(vertices: usize, edges: &[(usize, usize)], colors: usize) -> usize {
    let total = colors.pow(vertices as u32);
    (0..total)
        .filter(|&code| {
            let col: Vec<usize> = (0..vertices).map(|v| code / colors.pow(v as u32) % colors).collect();
            edges.iter().all(|&(u, v)| col[u] != col[v])
        })
        .count()
}

pub fn term(s: &str) -> Term {
    aspplan_core::syntax::parse_term(s).unwrap()
}

pub fn sorted<T: Ord + Clone>(v: &[T]) -> BTreeSet<T> {
    v.iter().cloned().collect()
}

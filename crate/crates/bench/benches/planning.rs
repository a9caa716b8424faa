use criterion::{criterion_group, criterion_main, Criterion};

use aspplan_core::corpus;
use aspplan_core::ground::parse_ground;
use aspplan_core::planner::{plan_asp, plan_direct, PlannerConfig, PlanningProblem};
use aspplan_core::solver::{enumerate, SolveConfig};
use aspplan_core::ProblemFile;

fn problem(pf: ProblemFile) -> PlanningProblem {
    PlanningProblem::from_file(pf, None).unwrap()
}

fn planning(c: &mut Criterion) {
    let all = PlannerConfig { limit: None, ..PlannerConfig::default() };
    let pruned = PlannerConfig { prune: true, ..all.clone() };
    let cases = [
        ("suitcase", problem(corpus::problem(corpus::SUITCASE))),
        ("blocks", problem(corpus::blocks())),
        ("elevator", problem(corpus::elevator(2, 1, &[0, 2], 9))),
    ];
    for (name, prob) in &cases {
        c.bench_function(&format!("asp/{name}"), |b| b.iter(|| plan_asp(prob, &all).unwrap()));
        c.bench_function(&format!("direct_pruned/{name}"), |b| b.iter(|| plan_direct(prob, &pruned).unwrap()));
    }
}

fn coloring(c: &mut Criterion) {
    // K3,3 with three colours
    let mut src = String::new();
    for v in 0..6 {
        src.push_str(&format!("1 {{col(v{v},r); col(v{v},g); col(v{v},b)}} 1.\n"));
    }
    for u in 0..3 {
        for v in 3..6 {
            for c in ["r", "g", "b"] {
                src.push_str(&format!(":- col(v{u},{c}), col(v{v},{c}).\n"));
            }
        }
    }
    let g = parse_ground(&src).unwrap();
    c.bench_function("enumerate/k33_3", |b| b.iter(|| enumerate(&g, &SolveConfig::default()).unwrap()));
}

criterion_group!(benches, planning, coloring);
criterion_main!(benches);

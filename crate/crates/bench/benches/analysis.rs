use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use prexpect_bench::{program, source};
use prexpect_core::fixpoint::{kleene_iterate, KleeneOptions};
use prexpect_core::oracle::{value_iteration, StateBox};
use prexpect_core::rva::{abstract_step, beta_abs, AbstractDomain, AbstractElement};
use prexpect_core::{farkas_dominates, normalize, wp_step, LinExpr, Polyhedron, Program};

fn setup(p: &Program) -> (prexpect_core::NormalizedProgram, AbstractElement) {
    let np = normalize(p).unwrap();
    let d = Arc::new(AbstractDomain::from_program(p, &np).unwrap());
    let beta = beta_abs(&d, &p.post).unwrap();
    (np, beta)
}

fn front_end(c: &mut Criterion) {
    let text = source("martingale.pgts");
    c.bench_function("parse martingale", |b| {
        b.iter(|| prexpect_cli::parse_program("m", black_box(&text)).unwrap())
    });
    let p = program("martingale.pgts");
    c.bench_function("normalize martingale", |b| b.iter(|| normalize(black_box(&p)).unwrap()));
}

fn transformer(c: &mut Criterion) {
    let p = program("martingale.pgts");
    let (np, beta) = setup(&p);
    c.bench_function("wp step martingale", |b| b.iter(|| wp_step(&np, black_box(&p.post))));
    let bottom = AbstractElement::bottom(beta.domain.clone());
    let one = abstract_step(&np, &beta, &bottom).unwrap();
    c.bench_function("abstract step martingale", |b| {
        b.iter(|| abstract_step(&np, &beta, black_box(&one)).unwrap())
    });
}

fn fixpoint(c: &mut Criterion) {
    let mut group = c.benchmark_group("kleene");
    group.sample_size(10);
    for name in ["geometric.pgts", "martingale.pgts"] {
        let p = program(name);
        let (np, beta) = setup(&p);
        let opts = KleeneOptions {
            eps: 1e-9,
            ..KleeneOptions::default()
        };
        group.bench_function(name, |b| b.iter(|| kleene_iterate(&np, &beta, &opts).unwrap()));
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let p = program("geometric.pgts");
    let bounds = StateBox::uniform(2, -1000, 1000);
    c.bench_function("value iteration geometric h=60", |b| {
        b.iter(|| value_iteration(&p, 60, &bounds, &[vec![1, 0]]).unwrap())
    });
}

fn farkas(c: &mut Criterion) {
    let (x, y) = (LinExpr::var("x"), LinExpr::var("y"));
    let p = Polyhedron::new([
        prexpect_core::polyhedron::ge(x.clone(), LinExpr::int(0)),
        prexpect_core::polyhedron::ge(y.clone(), LinExpr::int(0)),
        prexpect_core::polyhedron::le(x.clone() + y.clone(), LinExpr::int(10)),
    ]);
    let g = x.clone() + y.clone();
    let h = LinExpr::int(10) + x;
    c.bench_function("farkas dominance triangle", |b| {
        b.iter(|| farkas_dominates(black_box(&g), black_box(&h), &p).unwrap())
    });
}

criterion_group!(benches, front_end, transformer, fixpoint, oracle, farkas);
criterion_main!(benches);

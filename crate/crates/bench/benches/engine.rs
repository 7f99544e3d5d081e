use criterion::{criterion_group, criterion_main, Criterion};
use rca_cluster::ca;
use rca_cluster::rules;
use rca_cluster::Rule;
use std::hint::black_box;

fn bench_engine(c: &mut Criterion) {
    let rule = Rule::from_decimal(4042321935);

    c.bench_function("step_value n=13", |b| {
        b.iter(|| black_box(rule.step_value(black_box(0x1a2b), 13)))
    });

    c.bench_function("is_reversible n=16", |b| {
        b.iter(|| ca::is_reversible(black_box(rule), 16).unwrap())
    });

    c.bench_function("decompose_cycles n=13", |b| {
        b.iter(|| ca::decompose_cycles(black_box(rule), 13).unwrap())
    });

    c.bench_function("signature_report n=13", |b| {
        let partition = ca::decompose_cycles(rule, 13).unwrap();
        b.iter(|| rules::signature_report(black_box(&partition)))
    });

    c.bench_function("criteria sweep n=10", |b| {
        let candidates = rules::candidate_rules(10).unwrap();
        b.iter(|| {
            for &rule in &candidates {
                black_box(rules::passes_criterion2(rule, 10, 0.4).unwrap());
            }
        })
    });
}

criterion_group!(benches, bench_engine);
criterion_main!(benches);

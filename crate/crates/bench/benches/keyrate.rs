use catqkd_core::channel::{Case, ChannelScenario};
use catqkd_core::fock::{build_phi4, DEFAULT_CUTOFF};
use catqkd_core::optimizer::{maximize_over_t, TSearch};
use catqkd_core::secret_key_rate;
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn key_rate(c: &mut Criterion) {
    let s = ChannelScenario::for_case(Case::Asymmetric, 25.0, 0.002).unwrap();
    c.bench_function("secret_key_rate", |b| {
        b.iter(|| secret_key_rate(black_box(0.75), black_box(0.275), &s, 0.95).unwrap())
    });
    c.bench_function("maximize_over_t", |b| {
        b.iter(|| maximize_over_t(black_box(0.75), &s, 0.95, &TSearch::default()).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    c.bench_function("build_phi4", |b| b.iter(|| build_phi4(black_box(0.75), DEFAULT_CUTOFF).unwrap()));
}

criterion_group!(benches, key_rate, oracle);
criterion_main!(benches);

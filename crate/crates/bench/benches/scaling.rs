//! Wall-clock scaling of the optimization pieces across surface
//! architectures. The inner subproblem dimension is `sum_g M_g (M_g + 1)`
//! real variables, so the fully-connected case dominates; these benchmarks
//! put numbers on that trade-off.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bdisac::pdd::{self, ProblemKind};
use bdisac::qcqp::{self, SolveOptions};
use bdisac::reflection::ReflectionMatrix;
use bdisac::scenario::build_channels;
use bdisac::{metrics, linalg};
use bdisac_bench::bench_scenario;

fn architectures() -> Vec<(&'static str, Vec<usize>)> {
    vec![
        ("fully", vec![16]),
        ("group2", vec![8, 8]),
        ("group4", vec![4, 4, 4, 4]),
        ("single", vec![1; 16]),
    ]
}

fn bench_subproblem(c: &mut Criterion) {
    let mut group = c.benchmark_group("inner_subproblem");
    group.sample_size(10);
    for (name, sizes) in architectures() {
        let cfg = bench_scenario(sizes);
        let ch = build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut state = pdd::PddState::new(ReflectionMatrix::identity(&cfg.group_sizes), 1.0);
        let (nz, nu) = pdd::update_nu(&state.phi, &ch, &cfg).unwrap();
        state.nu_zeta = nz;
        state.nu_users = nu;
        state.alpha = 1.0;
        let gamma = (1.0 / cfg.gamma_pcrb - ch.f_p) / (2.0 * cfg.p0 * cfg.block_len as f64);
        let kind = ProblemKind::Isac {
            gamma: (gamma > 0.0).then_some(gamma),
        };

        group.bench_with_input(BenchmarkId::new("build", name), &state, |b, state| {
            b.iter(|| pdd::build_subproblem(state, &ch, &cfg, kind).unwrap())
        });
        let sub = pdd::build_subproblem(&state, &ch, &cfg, kind).unwrap();
        let opts = SolveOptions {
            initial_point: Some(sub.lift_point(&state.phi, 0.0)),
            ..SolveOptions::default()
        };
        group.bench_with_input(BenchmarkId::new("solve", name), &sub, |b, sub| {
            b.iter(|| qcqp::solve(&sub.qcqp, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let cfg = bench_scenario(vec![16]);
    let ch = build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut ChaCha8Rng::seed_from_u64(2));
    c.bench_function("fisher_observation", |b| {
        b.iter(|| metrics::fisher_observation(&phi, &ch, &cfg).unwrap())
    });
    c.bench_function("expected_rate_bound", |b| {
        b.iter(|| metrics::expected_rate_lower_bound(0, &phi, &ch, &cfg).unwrap())
    });
    c.bench_function("channel_build", |b| {
        b.iter(|| build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap())
    });
    c.bench_function("project_unitary_16", |b| {
        let block = phi.block(0);
        b.iter(|| linalg::project_unitary(block).unwrap())
    });
}

criterion_group!(benches, bench_subproblem, bench_metrics);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use oscimarket::market::normal_modes;
use oscimarket::oscillator::{simulate_cartesian, simulate_polar_radial};
use oscimarket::stats::periodogram;
use oscimarket::{
    DampedOscillatorModel, IntegratorConfig, MarketSpec, Method, NoiseStream, RadialConvention,
};

fn modes(c: &mut Criterion) {
    let n = 32;
    let a: Vec<f64> = (0..n).map(|i| 0.5 + 0.1 * i as f64).collect();
    let b: Vec<f64> = (0..n).map(|i| 1.0 + 0.03 * (i * i % 7) as f64).collect();
    let spec = MarketSpec::from_coefficients(a, b).unwrap();
    c.bench_function("normal_modes_n32", |bch| {
        bch.iter(|| normal_modes(black_box(&spec)).unwrap())
    });
}

fn oscillator(c: &mut Criterion) {
    let model = DampedOscillatorModel::harmonic(1.0, 1.0);
    for method in [Method::StratonovichHeun, Method::HamiltonianSplitting] {
        let cfg = IntegratorConfig::new(1e-3, 10_000, method).recording_every(100);
        c.bench_function(&format!("cartesian_{method:?}_10k"), |bch| {
            bch.iter(|| {
                let mut noise = NoiseStream::new(7, 0, 2);
                simulate_cartesian(&model, 1.0, 0.0, &cfg, &mut noise).unwrap()
            })
        });
    }
    let cfg = IntegratorConfig::new(1e-3, 10_000, Method::EulerMaruyama).recording_every(100);
    c.bench_function("polar_radial_10k", |bch| {
        bch.iter(|| {
            let mut noise = NoiseStream::new(7, 0, 1);
            simulate_polar_radial(
                &model,
                1.0,
                &cfg,
                &mut noise,
                RadialConvention::CartesianConsistent,
            )
            .unwrap()
        })
    });
}

fn spectrum(c: &mut Criterion) {
    let x: Vec<f64> = (0..1 << 16)
        .map(|k| (0.01 * k as f64).sin() + (0.037 * k as f64).cos())
        .collect();
    c.bench_function("periodogram_65536", |bch| {
        bch.iter(|| periodogram(black_box(&x), 0.1).unwrap())
    });
}

criterion_group!(benches, modes, oscillator, spectrum);
criterion_main!(benches);

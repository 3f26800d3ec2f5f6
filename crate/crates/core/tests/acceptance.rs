//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use oscimarket::ingest::{fit_ar2, fit_series, load_csv, FitOptions};
use oscimarket::market::{
    closed_form_solution, component_energies, inverse_from_frequencies, normal_modes,
    reduce_sector, sector_energy_split, simulate_deterministic, verify_interlacing,
    DEFAULT_GAMMA_TOLERANCE,
};
use oscimarket::oscillator::{simulate_cartesian, simulate_polar_radial};
use oscimarket::reduce::{
    check_projectable_deterministic, check_projectable_sds, DEFAULT_FAIL_THRESHOLD,
    DEFAULT_FIBER_SAMPLES, DEFAULT_PASS_THRESHOLD,
};
use oscimarket::stats::{
    find_peaks, ks_statistic, ks_two_sample, periodogram, EmpiricalDistribution, Periodogram,
};
use oscimarket::stochastic::simulate_market;
use oscimarket::{
    ensemble, ConstrainedState, DampedOscillatorModel, IntegratorConfig, MarketSpec, Method,
    ModeParams, NoiseStream, ProjectionSetup, RadialConvention, StochasticMarketModel, VectorField,
    VectorFieldSet, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn random_spec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> MarketSpec {
    let a = (0..n).map(|_| log_uniform(rng, lo, hi)).collect();
    let b = (0..n).map(|_| log_uniform(rng, lo, hi)).collect();
    MarketSpec::from_coefficients(a, b).unwrap()
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn interlacing_sweep() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=12);
        let spec = random_spec(&mut rng, n, 0.05, 20.0);
        let d = normal_modes(&spec).map_err(err)?;
        if !verify_interlacing(&spec.gammas(), &d.lambdas)
            .map_err(err)?
            .holds
        {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(failures == 0, || {
        format!("{failures} of 1000 specs violate interlacing")
    })?;
    within(elapsed, 10.0)?;
    Ok(format!(
        "1000 specs, 0 failures, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

/// `2n - 1` distinct sorted values split alternately into gammas and lambdas.
fn interlaced(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    loop {
        let mut v: Vec<f64> = (0..2 * n - 1)
            .map(|_| log_uniform(rng, 0.1, 10.0))
            .collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-3)) {
            let g = v.iter().step_by(2).copied().collect();
            let l = v.iter().skip(1).step_by(2).copied().collect();
            return (g, l);
        }
    }
}

fn inverse_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=12);
        let (gammas, lambdas) = interlaced(&mut rng, n);
        let sol = inverse_from_frequencies(&gammas, &lambdas).map_err(err)?;
        let spec = sol.spec().map_err(err)?;
        let forward = normal_modes(&spec).map_err(err)?;
        for (got, want) in forward.lambdas.iter().zip(&lambdas) {
            worst = worst.max((got - want).abs() / want);
        }
        for (got, want) in spec.gammas().iter().zip(&gammas) {
            worst = worst.max((got - want).abs() / want);
        }
    }
    let elapsed = start.elapsed();
    ensure(worst < 1e-8, || format!("worst relative error {worst:e}"))?;
    within(elapsed, 5.0)?;
    Ok(format!(
        "200 sets, worst relative error {worst:.2e}, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn closed_form_vs_numeric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = random_spec(&mut rng, 4, 0.5, 2.0);
    let d = normal_modes(&spec).map_err(err)?;
    let x0 = d.from_modal(&[0.8, -0.5, 0.3]);
    let v0 = d.from_modal(&[0.2, 0.4, -0.6]);
    let initial = ConstrainedState::new(x0, v0);
    let exact = closed_form_solution(&d, &initial).map_err(err)?;
    let cfg =
        IntegratorConfig::new(1e-3, 100_000, Method::HamiltonianSplitting).recording_every(100);
    let traj = simulate_deterministic(&spec, &initial, &cfg).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let e = exact.state(*t);
        for (a, b) in s.iter().zip(&e.x) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(*traj.times.last().unwrap() >= 100.0 - 1e-9, || {
        "horizon short of 100".into()
    })?;
    ensure(worst < 1e-4, || format!("max deviation {worst:e}"))?;
    Ok(format!(
        "n=4, t in [0,100], dt=1e-3, max deviation {worst:.2e} (lambdas {:.3?})",
        d.lambdas
    ))
}

fn conservation_and_transfer() -> Outcome {
    let spec =
        MarketSpec::from_coefficients(vec![0.3, 0.8, 1.5], vec![1.0, 1.0, 1.2]).map_err(err)?;
    let initial = ConstrainedState::new(vec![1.0, -1.0, 0.0], vec![0.0; 3]);
    let cfg = IntegratorConfig::new(1e-3, 100_000, Method::HamiltonianSplitting);
    let traj = simulate_deterministic(&spec, &initial, &cfg).map_err(err)?;
    let (_, e0) = component_energies(&spec, &initial);
    let mut drift: f64 = 0.0;
    let mut constraint: f64 = 0.0;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in &traj.states {
        let st = ConstrainedState::new(s[..3].to_vec(), s[3..].to_vec());
        let (e, total) = component_energies(&spec, &st);
        drift = drift.max((total - e0).abs() / e0);
        constraint = constraint.max(st.x.iter().sum::<f64>().abs());
        for i in 0..3 {
            lo[i] = lo[i].min(e[i]);
            hi[i] = hi[i].max(e[i]);
        }
    }
    let transfer = (0..3).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    ensure(drift < 1e-6, || format!("relative energy drift {drift:e}"))?;
    ensure(transfer > 0.1 * e0, || {
        format!("energy transfer {transfer} <= 0.1 E = {}", 0.1 * e0)
    })?;
    ensure(constraint < 1e-8, || {
        format!("constraint residual {constraint:e}")
    })?;
    Ok(format!(
        "drift {drift:.2e}, transfer {:.3} E, |sum x| <= {constraint:.1e}",
        transfer / e0
    ))
}

const SAMPLES: usize = 1_000_000;
const PATHS: usize = 100;
/// Time between retained samples and burn-in, in model time units.
const SPACING: f64 = 0.25;
const BURN_IN: f64 = 10.0;

fn rayleigh_cdf(r: f64) -> f64 {
    1.0 - (-r * r).exp()
}

/// CDF of the density proportional to `r^2 exp(-r^2)`.
fn chi3_cdf(r: f64) -> f64 {
    erf(r) - 2.0 * r * (-r * r).exp() / PI.sqrt()
}

fn thinned_config(dt: f64, method: Method) -> (IntegratorConfig, usize) {
    let every = (SPACING / dt).round() as usize;
    let burn = (BURN_IN / SPACING) as usize;
    let per_path = SAMPLES / PATHS;
    (
        IntegratorConfig::new(dt, every * (burn + per_path), method).recording_every(every),
        burn + 1,
    )
}

fn polar_radii(convention: RadialConvention, seed: u64) -> Result<Vec<f64>, String> {
    let m = DampedOscillatorModel::harmonic(1.0, 1.0);
    let (cfg, skip) = thinned_config(1e-3, Method::EulerMaruyama);
    let chunks = ensemble(PATHS, |i| {
        let t =
            simulate_polar_radial(&m, 1.0, &cfg, &mut NoiseStream::new(seed, i, 1), convention)?;
        Ok(t.states[skip..].iter().map(|s| s[0]).collect::<Vec<_>>())
    })
    .map_err(err)?;
    Ok(chunks.concat())
}

fn cartesian_radii(seed: u64) -> Result<Vec<f64>, String> {
    let m = DampedOscillatorModel::harmonic(1.0, 1.0);
    let (cfg, skip) = thinned_config(5e-3, Method::StratonovichHeun);
    let chunks = ensemble(PATHS, |i| {
        let t = simulate_cartesian(&m, 1.0, 0.0, &cfg, &mut NoiseStream::new(seed, i, 2))?;
        Ok(t.states[skip..]
            .iter()
            .map(|s| s[0].hypot(s[1]))
            .collect::<Vec<_>>())
    })
    .map_err(err)?;
    Ok(chunks.concat())
}

fn stationary_density(polar_cc: &mut Option<Vec<f64>>) -> Outcome {
    let start = Instant::now();
    let cc = polar_radii(RadialConvention::CartesianConsistent, 5)?;
    let t_cc = start.elapsed();
    let ks_cc = ks_statistic(
        &EmpiricalDistribution::new(cc.clone()).map_err(err)?,
        rayleigh_cdf,
    );
    let start = Instant::now();
    let lit = polar_radii(RadialConvention::PaperLiteral, 6)?;
    let t_lit = start.elapsed();
    let ks_lit = ks_statistic(
        &EmpiricalDistribution::new(lit.clone()).map_err(err)?,
        chi3_cdf,
    );
    ensure(cc.len() == SAMPLES && lit.len() == SAMPLES, || {
        "wrong sample count".into()
    })?;
    *polar_cc = Some(cc);
    ensure(ks_cc < 0.01, || format!("cartesian_consistent KS {ks_cc}"))?;
    ensure(ks_lit < 0.01, || format!("paper_literal KS {ks_lit}"))?;
    within(t_cc, 60.0)?;
    within(t_lit, 60.0)?;
    Ok(format!(
        "10^6 samples each: KS {ks_cc:.4} (r e^-r^2, {:.1} s), KS {ks_lit:.4} (r^2 e^-r^2, {:.1} s)",
        t_cc.as_secs_f64(),
        t_lit.as_secs_f64()
    ))
}

fn cartesian_polar_equivalence(polar_cc: Option<Vec<f64>>) -> Outcome {
    let polar = match polar_cc {
        Some(p) => p,
        None => polar_radii(RadialConvention::CartesianConsistent, 5)?,
    };
    let start = Instant::now();
    let cart = cartesian_radii(7)?;
    let ks = ks_two_sample(&cart, &polar);
    ensure(ks < 0.01, || format!("two-sample KS {ks}"))?;
    Ok(format!(
        "10^6 vs 10^6 radii, two-sample KS {ks:.4} (cartesian route {:.1} s)",
        start.elapsed().as_secs_f64()
    ))
}

fn projectability_catalog() -> Outcome {
    let sds = |v: &VectorFieldSet, s: &ProjectionSetup| {
        check_projectable_sds(
            v,
            s,
            DEFAULT_FIBER_SAMPLES,
            DEFAULT_PASS_THRESHOLD,
            DEFAULT_FAIL_THRESHOLD,
        )
    };
    let det = |v: &VectorField, s: &ProjectionSetup| {
        check_projectable_deterministic(
            v,
            s,
            DEFAULT_FIBER_SAMPLES,
            DEFAULT_PASS_THRESHOLD,
            DEFAULT_FAIL_THRESHOLD,
        )
    };
    let x_axis = ProjectionSetup::coordinate_projection(2, vec![0], 2.0).map_err(err)?;
    let radius = ProjectionSetup::radius();
    let oscillator = DampedOscillatorModel::harmonic(1.0, 1.0).vector_field_set();
    let rotation = VectorField::new(2, |p, out| {
        out[0] = p[1];
        out[1] = -p[0];
    });
    let cases = [
        (
            "brownian / x",
            sds(&VectorFieldSet::brownian(2, 1.0), &x_axis),
            Verdict::Projectable,
        ),
        (
            "oscillator / radius",
            sds(&oscillator, &radius),
            Verdict::Projectable,
        ),
        (
            "oscillator / x (forget momentum)",
            sds(&oscillator, &x_axis),
            Verdict::NotProjectable,
        ),
        (
            "constant / x",
            det(&VectorField::constant(vec![1.0, 0.0]), &x_axis),
            Verdict::Projectable,
        ),
        (
            "rotation / x",
            det(&rotation, &x_axis),
            Verdict::NotProjectable,
        ),
        (
            "rotation / radius",
            det(&rotation, &radius),
            Verdict::Projectable,
        ),
    ];
    let mut summary = Vec::new();
    for (name, report, expected) in cases {
        let report = report.map_err(err)?;
        ensure(report.verdict == expected, || {
            format!(
                "{name}: {:?} (variation {:e}), expected {expected:?}",
                report.verdict, report.max_fiber_variation
            )
        })?;
        summary.push(format!(
            "{name}: {:?} ({:.1e})",
            report.verdict, report.max_fiber_variation
        ));
    }
    Ok(summary.join("; "))
}

fn spectral_recovery() -> Outcome {
    // Proper frequencies 0.5 .. 2.5 with interlaced mode frequencies.
    let gammas = [0.5, 1.0, 1.5, 2.0, 2.5];
    let lambdas = [0.75, 1.25, 1.75, 2.25];
    let spec = inverse_from_frequencies(&gammas, &lambdas)
        .map_err(err)?
        .spec()
        .map_err(err)?;
    let d = normal_modes(&spec).map_err(err)?;
    let initial = ConstrainedState::new(d.from_modal(&[1.0; 4]), vec![0.0; 5]);
    let n_samples = 1usize << 16;
    let dt = 0.01;
    let cfg = IntegratorConfig::new(dt, n_samples - 1, Method::HamiltonianSplitting);
    let traj = simulate_deterministic(&spec, &initial, &cfg).map_err(err)?;
    // Sum the component periodograms so that no mode hides behind a small
    // loading in one component.
    let mut total: Option<Periodogram> = None;
    for i in 0..5 {
        let p = periodogram(&traj.component(i), dt).map_err(err)?;
        total = Some(match total {
            None => p,
            Some(mut acc) => {
                acc.power
                    .iter_mut()
                    .zip(&p.power)
                    .for_each(|(a, b)| *a += b);
                acc.input_power += p.input_power;
                acc
            }
        });
    }
    let total = total.unwrap();
    let bin = total.bin_width();
    let peaks = find_peaks(&total, 4, 4.0 * bin).map_err(err)?;
    let worst = peaks
        .iter()
        .zip(&d.lambdas)
        .map(|(p, l)| (p - l).abs() / bin)
        .fold(0.0, f64::max);
    ensure(worst <= 1.0, || {
        format!(
            "peaks {peaks:?} vs lambdas {:?}: off by {worst:.2} bins",
            d.lambdas
        )
    })?;
    Ok(format!(
        "2^16 samples, bin {bin:.2e}, worst offset {worst:.3} bins"
    ))
}

fn sector_consistency() -> Outcome {
    // Components 0 and 2 share gamma = 2.
    let spec = MarketSpec::from_coefficients(vec![4.0, 1.0, 8.0, 0.7], vec![1.0, 1.0, 2.0, 1.3])
        .map_err(err)?;
    let group = [0, 2];
    let reduced = reduce_sector(&spec, &group, DEFAULT_GAMMA_TOLERANCE).map_err(err)?;
    let (a_hat, b_hat) = (reduced.sector.a_hat, reduced.sector.b_hat);

    // Synchronous motion: x_i = x_hat a_hat / a_i and v_i = v_hat a_hat / a_i
    // inside the group, which is x_i = x_hat / k when the a_i agree.
    let equal =
        MarketSpec::from_coefficients(vec![4.0, 4.0, 1.0], vec![1.0, 1.0, 1.0]).map_err(err)?;
    let equal_sector = reduce_sector(&equal, &[0, 1], DEFAULT_GAMMA_TOLERANCE)
        .map_err(err)?
        .sector;
    let mut identity: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let (x_hat, v_hat): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let merged = 0.5 * a_hat * x_hat * x_hat + 0.5 * b_hat * v_hat * v_hat;
        let original: f64 = group
            .iter()
            .map(|&i| {
                let w = a_hat / spec.a()[i];
                0.5 * spec.a()[i] * (w * x_hat).powi(2) + 0.5 * spec.b()[i] * (w * v_hat).powi(2)
            })
            .sum();
        identity = identity.max((merged - original).abs() / original.max(1e-300));

        let (x, v) = (x_hat / 2.0, v_hat / 2.0);
        let merged = 0.5 * equal_sector.a_hat * (2.0 * x).powi(2)
            + 0.5 * equal_sector.b_hat * (2.0 * v).powi(2);
        let original = 2.0 * (0.5 * 4.0 * x * x + 0.5 * v * v);
        identity = identity.max((merged - original).abs() / original.max(1e-300));
    }
    ensure(identity <= 1e-12, || {
        format!("synchronous energy identity off by {identity:e}")
    })?;

    let mut min_internal = f64::INFINITY;
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let e = sector_energy_split(&spec, &group, &ConstrainedState::new(x, v)).map_err(err)?;
        min_internal = min_internal.min(e.internal);
    }
    ensure(min_internal >= 0.0, || {
        format!("internal energy {min_internal:e} < 0")
    })?;

    // Zero internal energy: x_i = x_hat a_hat / a_i inside the group.
    let share = |i: usize| a_hat / spec.a()[i];
    let (x_hat, v_hat) = (0.9, -0.4);
    let mut x = vec![x_hat * share(0), -0.5, x_hat * share(2), 0.0];
    x[3] = -(x[0] + x[1] + x[2]);
    let mut v = vec![v_hat * share(0), 0.3, v_hat * share(2), 0.0];
    v[3] = -(v[0] + v[1] + v[2]);
    let full_state = ConstrainedState::new(x.clone(), v.clone());
    let internal = sector_energy_split(&spec, &group, &full_state)
        .map_err(err)?
        .internal;
    let full =
        closed_form_solution(&normal_modes(&spec).map_err(err)?, &full_state).map_err(err)?;
    let small = closed_form_solution(
        &normal_modes(&reduced.spec).map_err(err)?,
        &ConstrainedState::new(reduced.reduce_vector(&x), reduced.reduce_vector(&v)),
    )
    .map_err(err)?;
    let mut worst: f64 = 0.0;
    for k in 0..=2000 {
        let t = k as f64 * 0.05;
        let projected = reduced.reduce_vector(&full.state(t).x);
        let direct = small.state(t).x;
        for (p, q) in projected.iter().zip(&direct) {
            worst = worst.max((p - q).abs());
        }
    }
    ensure(worst < 1e-8, || {
        format!("full vs reduced trajectories differ by {worst:e}")
    })?;
    Ok(format!(
        "identity {identity:.1e}, min internal {min_internal:.2e} over 10^4 states, \
         trajectory gap {worst:.1e} (internal energy {internal:.1e})"
    ))
}

fn stochastic_market_sanity() -> Outcome {
    let spec = MarketSpec::from_coefficients(vec![1.0, 2.0, 3.5, 0.8], vec![1.5, 1.0, 1.2, 0.9])
        .map_err(err)?;
    let d = normal_modes(&spec).map_err(err)?;
    let r0 = [0.7, 1.3, 0.4];
    let still: Vec<ModeParams> = r0
        .iter()
        .map(|&r0| ModeParams {
            c: 0.0,
            sigma: 0.0,
            r0,
        })
        .collect();
    let mut model = StochasticMarketModel::new(d.clone(), still);
    model.phase_sigma = vec![0.0; 3];
    let cfg = IntegratorConfig::new(0.01, 10_000, Method::EulerMaruyama).recording_every(10);
    let path = simulate_market(&model, &cfg, &mut NoiseStream::new(1, 0, 6)).map_err(err)?;
    let z0: Vec<f64> = (0..3).map(|j| r0[j] * path.theta[j].sin()).collect();
    let v0: Vec<f64> = (0..3)
        .map(|j| r0[j] * d.lambdas[j] * path.theta[j].cos())
        .collect();
    let exact = closed_form_solution(
        &d,
        &ConstrainedState::new(d.from_modal(&z0), d.from_modal(&v0)),
    )
    .map_err(err)?;
    let mut noiseless: f64 = 0.0;
    for (t, s) in path.trajectory.times.iter().zip(&path.trajectory.states) {
        let e = exact.state(*t);
        for (a, b) in s.iter().zip(&e.x) {
            noiseless = noiseless.max((a - b).abs());
        }
    }
    ensure(noiseless < 1e-8, || {
        format!("noiseless deviation {noiseless:e}")
    })?;

    let noisy: Vec<ModeParams> = r0
        .iter()
        .map(|&r0| ModeParams {
            c: 1.0,
            sigma: 1.0,
            r0,
        })
        .collect();
    let model = StochasticMarketModel::new(d, noisy);
    let cfg = IntegratorConfig::new(1e-3, 200_000, Method::EulerMaruyama).recording_every(20);
    let mut constraint: f64 = 0.0;
    let mut min_r = f64::INFINITY;
    for seed in 0..8 {
        let path = simulate_market(&model, &cfg, &mut NoiseStream::new(seed, 0, 6)).map_err(err)?;
        for s in &path.trajectory.states {
            constraint = constraint.max(s[..4].iter().sum::<f64>().abs());
        }
        for r in path.radii.iter().flatten() {
            min_r = min_r.min(*r);
        }
    }
    ensure(constraint < 1e-10, || {
        format!("constraint residual {constraint:e}")
    })?;
    ensure(min_r > 0.0, || format!("radius reached {min_r}"))?;
    Ok(format!(
        "noiseless deviation {noiseless:.1e}; noisy |sum x| <= {constraint:.1e}, min r {min_r:.2e}"
    ))
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn ingest_smoke() -> Outcome {
    let series = load_csv(data_dir().join("gold_weekly.csv")).map_err(err)?;
    let report = fit_series(&series, &FitOptions::default()).map_err(err)?;

    // Quarter-period sampling keeps the least-squares AR(2) unbiased for
    // the planar oscillator.
    let m = DampedOscillatorModel::harmonic(0.1, 0.3);
    let every = 157;
    let cfg =
        IntegratorConfig::new(0.01, every * 4000, Method::StratonovichHeun).recording_every(every);
    let t = simulate_cartesian(&m, 1.0, 0.0, &cfg, &mut NoiseStream::new(21, 0, 2)).map_err(err)?;
    let fit = fit_ar2(&t.component(0), every as f64 * 0.01).map_err(err)?;
    let period = fit
        .period_estimate
        .ok_or_else(|| format!("synthetic series not oscillatory: {fit:?}"))?;
    let rel = (period - TAU).abs() / TAU;
    ensure(rel < 0.05, || format!("period {period} vs {TAU}"))?;
    Ok(format!(
        "gold: {} rows, period {:?} days; synthetic period {period:.4} (error {:.2}%)",
        report.rows,
        report.fit.period_estimate.map(|p| p.round()),
        100.0 * rel
    ))
}

fn main() {
    let mut polar_cc = None;
    let results: Vec<(&str, Outcome)> = vec![
        ("1 interlacing sweep", interlacing_sweep()),
        ("2 inverse round trip", inverse_round_trip()),
        ("3 closed form vs numeric", closed_form_vs_numeric()),
        ("4 conservation and transfer", conservation_and_transfer()),
        ("5 stationary density", stationary_density(&mut polar_cc)),
        (
            "6 cartesian/polar equivalence",
            cartesian_polar_equivalence(polar_cc.take()),
        ),
        ("7 projectability catalog", projectability_catalog()),
        ("8 spectral recovery", spectral_recovery()),
        ("9 sector consistency", sector_consistency()),
        ("10 stochastic market sanity", stochastic_market_sanity()),
        ("11 ingest smoke test", ingest_smoke()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

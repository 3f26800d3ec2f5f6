//! Stochastic constrained n-oscillator: every normal mode carries a positive
//! radial diffusion `r_j` and a phase martingale `S_j`,
//!
//! ```text
//! x_i(t) = sum_j c_ij r_j(t) sin(lambda_j t + theta_j + S_j(t)),
//! dS_j   = (phase_sigma_j / r_j) dW_j.
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{IntegratorConfig, NoiseStream, Trajectory};
use crate::market::NormalModeDecomposition;
use crate::oscillator::{step_radial, RadialConvention, RadialParams, MAX_TRANSVERSE};

const THETA_TAG: u64 = 0x7E7A;
const TRANSVERSE_TAG: u64 = 0xB21D_0000;

/// Radial parameters of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    /// Linear damping rate.
    pub c: f64,
    pub sigma: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMarketModel {
    pub decomp: NormalModeDecomposition,
    /// Initial phases; drawn uniformly on `[0, 2 pi)` from the master seed when absent.
    pub theta: Option<Vec<f64>>,
    pub radial: Vec<ModeParams>,
    pub phase_sigma: Vec<f64>,
    pub convention: RadialConvention,
}

impl StochasticMarketModel {
    /// Model with unit phase noise and the default radial convention.
    pub fn new(decomp: NormalModeDecomposition, radial: Vec<ModeParams>) -> Self {
        let m = decomp.modes();
        Self {
            decomp,
            theta: None,
            radial,
            phase_sigma: vec![1.0; m],
            convention: RadialConvention::default(),
        }
    }

    pub fn modes(&self) -> usize {
        self.decomp.modes()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.modes();
        for (name, len) in [
            ("radial", self.radial.len()),
            ("phase_sigma", self.phase_sigma.len()),
        ] {
            if len != m {
                return Err(Error::invalid(
                    name,
                    format!("expected {m} modes, got {len}"),
                ));
            }
        }
        if let Some(theta) = &self.theta {
            if theta.len() != m {
                return Err(Error::invalid(
                    "theta",
                    format!("expected {m} phases, got {}", theta.len()),
                ));
            }
            if theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::invalid("theta", "phases must be finite"));
            }
        }
        for p in &self.radial {
            if !(p.r0 > 0.0 && p.r0.is_finite()) {
                return Err(Error::invalid(
                    "r0",
                    format!("must be positive, got {}", p.r0),
                ));
            }
            if !(p.c >= 0.0 && p.c.is_finite()) {
                return Err(Error::invalid(
                    "c",
                    format!("must be nonnegative, got {}", p.c),
                ));
            }
            if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
                return Err(Error::invalid(
                    "sigma",
                    format!("must be nonnegative, got {}", p.sigma),
                ));
            }
        }
        if self
            .phase_sigma
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(Error::invalid("phase_sigma", "must be nonnegative"));
        }
        for j in 0..m {
            let col = self.decomp.c.column(j);
            let scale = col.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
            if col.iter().sum::<f64>().abs() > 1e-10 * scale {
                return Err(Error::invalid(
                    "decomp",
                    format!("column {j} of C does not sum to zero"),
                ));
            }
        }
        Ok(())
    }

    /// Phases in use for a given master seed.
    pub fn initial_phases(&self, master_seed: u64) -> Vec<f64> {
        match &self.theta {
            Some(t) => t.clone(),
            None => {
                let m = self.modes();
                let mut u = vec![0.0; m];
                NoiseStream::new(master_seed, 0, m)
                    .auxiliary(THETA_TAG, m)
                    .uniforms(0, &mut u);
                u.into_iter().map(|v| v * std::f64::consts::TAU).collect()
            }
        }
    }
}

/// Phase increment `(phase_sigma / r) dW`.
#[inline]
pub fn step_phase(phase_sigma: f64, r: f64, dw: f64) -> f64 {
    phase_sigma / r * dw
}

/// Simulated market path.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPath {
    /// States `[x_1..x_n, xdot_1..xdot_n]`; velocities ignore the noise
    /// differentials of `r` and `S`.
    pub trajectory: Trajectory,
    /// `radii[k][j]` is `r_j` at frame `k`.
    pub radii: Vec<Vec<f64>>,
    pub phases: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

/// Advances every mode in lockstep. The noise stream has dimension
/// `2 (n - 1)`: the first half drives the radii, the second the phases.
pub fn simulate_market(
    model: &StochasticMarketModel,
    cfg: &IntegratorConfig,
    noise: &mut NoiseStream,
) -> Result<MarketPath> {
    model.validate()?;
    cfg.validate()?;
    let m = model.modes();
    let n = model.decomp.n();
    if noise.dim() != 2 * m {
        return Err(Error::LengthMismatch {
            expected: 2 * m,
            actual: noise.dim(),
        });
    }
    let theta = model.initial_phases(noise.master_seed());
    let params: Vec<RadialParams> = model
        .radial
        .iter()
        .map(|p| RadialParams::linear(p.c, p.sigma, model.convention))
        .collect();
    let mut transverse: Vec<NoiseStream> = (0..m)
        .map(|j| noise.auxiliary(TRANSVERSE_TAG + j as u64, MAX_TRANSVERSE))
        .collect();
    let mut xi = [0.0; MAX_TRANSVERSE];

    let capacity = cfg.steps / cfg.record_every + 2;
    let mut path = MarketPath {
        trajectory: Trajectory::with_capacity(capacity),
        radii: Vec::with_capacity(capacity),
        phases: Vec::with_capacity(capacity),
        theta: theta.clone(),
    };
    let mut r: Vec<f64> = model.radial.iter().map(|p| p.r0).collect();
    let mut s = vec![0.0; m];
    let mut frame = vec![0.0; 2 * n];
    let mut record = |path: &mut MarketPath, t: f64, r: &[f64], s: &[f64]| {
        frame.fill(0.0);
        for j in 0..m {
            let lam = model.decomp.lambdas[j];
            let (sin, cos) = (lam * t + theta[j] + s[j]).sin_cos();
            let (amp, vel) = (r[j] * sin, r[j] * lam * cos);
            for i in 0..n {
                let cij = model.decomp.c[(i, j)];
                frame[i] += cij * amp;
                frame[n + i] += cij * vel;
            }
        }
        path.trajectory.push(t, &frame);
        path.radii.push(r.to_vec());
        path.phases.push(s.to_vec());
    };
    record(&mut path, 0.0, &r, &s);

    let mut db = vec![0.0; 2 * m];
    for step in 1..=cfg.steps {
        noise.increments(step as u64 - 1, cfg.dt, &mut db);
        for j in 0..m {
            let ds = step_phase(model.phase_sigma[j], r[j], db[m + j]);
            transverse[j].standard_normals(step as u64 - 1, &mut xi);
            r[j] = step_radial(&params[j], r[j], cfg.dt, db[j], &xi)
                .ok_or(Error::StepRejectionExhausted { step, attempts: 1 })?;
            s[j] += ds;
        }
        if cfg.records(step) {
            record(&mut path, step as f64 * cfg.dt, &r, &s);
        }
    }
    Ok(path)
}

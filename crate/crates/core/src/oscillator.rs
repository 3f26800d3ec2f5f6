//! Single-asset damped stochastic oscillator.
//!
//! Phase space is `(x, y)` = (mispricing, momentum). The stochastic vector
//! field is a Hamiltonian part for `h = U(x) + y^2 / 2`, a radial damping
//! `-kappa(r) (x, y)` and isotropic additive noise of amplitude `sigma`:
//!
//! ```text
//! dx = (y - kappa(r) x) dt + sigma dB1
//! dy = (-U'(x) - kappa(r) y) dt + sigma dB2
//! ```
//!
//! For the quadratic potential with `k = 1` the radius `r = |(x, y)|` is
//! itself a diffusion, simulated directly by [`simulate_polar_radial`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{
    integrate_sde, EnergyRecord, IntegratorConfig, Method, NoiseStream, Trajectory,
};
use crate::quad;
use crate::sds::{VectorField, VectorFieldSet};

/// Shape of the potential energy of mispricing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `k x^2 / 2`.
    Quadratic { k: f64 },
    /// Quartic with minima exactly at `v1` and `v2` and barrier height `depth`.
    DoubleWell { v1: f64, v2: f64, depth: f64 },
    /// Quadratic plus a Gaussian bump ("wall") centred at `wall_position`.
    Walled {
        k: f64,
        wall_position: f64,
        wall_height: f64,
        wall_width: f64,
    },
}

impl PotentialSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PotentialSpec::Quadratic { .. } => "quadratic",
            PotentialSpec::DoubleWell { .. } => "double_well",
            PotentialSpec::Walled { .. } => "walled",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        match *self {
            PotentialSpec::Quadratic { k } => positive("k", k),
            PotentialSpec::DoubleWell { v1, v2, depth } => {
                positive("depth", depth)?;
                if !(v1.is_finite() && v2.is_finite()) || v1 == v2 {
                    return Err(Error::invalid(
                        "v1",
                        "well positions must be finite and distinct",
                    ));
                }
                Ok(())
            }
            PotentialSpec::Walled {
                k,
                wall_position,
                wall_height,
                wall_width,
            } => {
                positive("k", k)?;
                positive("wall_height", wall_height)?;
                positive("wall_width", wall_width)?;
                if !wall_position.is_finite() {
                    return Err(Error::invalid("wall_position", "must be finite"));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Quadratic { k } => 0.5 * k * x * x,
            PotentialSpec::DoubleWell { v1, v2, depth } => {
                let half = 0.5 * (v2 - v1);
                let q = (x - v1) * (x - v2);
                depth * q * q / half.powi(4)
            }
            PotentialSpec::Walled {
                k,
                wall_position,
                wall_height,
                wall_width,
            } => {
                let z = (x - wall_position) / wall_width;
                0.5 * k * x * x + wall_height * (-0.5 * z * z).exp()
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Quadratic { k } => k * x,
            PotentialSpec::DoubleWell { v1, v2, depth } => {
                let half = 0.5 * (v2 - v1);
                let q = (x - v1) * (x - v2);
                depth * 2.0 * q * (2.0 * x - v1 - v2) / half.powi(4)
            }
            PotentialSpec::Walled {
                k,
                wall_position,
                wall_height,
                wall_width,
            } => {
                let z = (x - wall_position) / wall_width;
                k * x - wall_height * z / wall_width * (-0.5 * z * z).exp()
            }
        }
    }
}

/// Radial damping rate `kappa(r)`; the damping field is `-kappa(r) (x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingSpec {
    /// Constant rate `c`: linear damping field, radial friction `c r`.
    Linear { c: f64 },
    /// Piecewise-linear rate through `(radii[i], rates[i])`, flat outside.
    Tabulated { radii: Vec<f64>, rates: Vec<f64> },
}

impl DampingSpec {
    pub fn linear(c: f64) -> Self {
        DampingSpec::Linear { c }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DampingSpec::Linear { c } => {
                if *c >= 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(
                        "c",
                        format!("damping coefficient must be nonnegative, got {c}"),
                    ))
                }
            }
            DampingSpec::Tabulated { radii, rates } => {
                if radii.is_empty() || radii.len() != rates.len() {
                    return Err(Error::invalid(
                        "rates",
                        "radii and rates must be non-empty and equally long",
                    ));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
                    return Err(Error::invalid(
                        "radii",
                        "must be nonnegative and strictly increasing",
                    ));
                }
                if rates.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
                    return Err(Error::invalid("rates", "must be nonnegative and finite"));
                }
                Ok(())
            }
        }
    }

    #[inline]
    pub fn rate(&self, r: f64) -> f64 {
        match self {
            DampingSpec::Linear { c } => *c,
            DampingSpec::Tabulated { radii, rates } => {
                if r <= radii[0] {
                    return rates[0];
                }
                let last = radii.len() - 1;
                if r >= radii[last] {
                    return rates[last];
                }
                let i = radii.partition_point(|&k| k <= r) - 1;
                let w = (r - radii[i]) / (radii[i + 1] - radii[i]);
                rates[i] + w * (rates[i + 1] - rates[i])
            }
        }
    }

    /// `int_0^r kappa(u) u du`.
    fn friction_integral(&self, r: f64) -> f64 {
        match self {
            DampingSpec::Linear { c } => 0.5 * c * r * r,
            DampingSpec::Tabulated { .. } => {
                if r <= 0.0 {
                    return 0.0;
                }
                quad::integrate(&|u| self.rate(u) * u, 0.0, r, 1e-15, 1e-14).0
            }
        }
    }
}

/// Single-asset model: potential, damping and noise amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampedOscillatorModel {
    pub potential: PotentialSpec,
    pub damping: DampingSpec,
    pub sigma: f64,
}

impl DampedOscillatorModel {
    /// Quadratic `k = 1` potential with linear damping `c`.
    pub fn harmonic(c: f64, sigma: f64) -> Self {
        Self {
            potential: PotentialSpec::Quadratic { k: 1.0 },
            damping: DampingSpec::linear(c),
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.damping.validate()?;
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(
                "sigma",
                format!("must be nonnegative, got {}", self.sigma),
            ));
        }
        Ok(())
    }

    pub fn energy(&self, x: f64, y: f64) -> EnergyRecord {
        let potential = self.potential.value(x);
        let kinetic = 0.5 * y * y;
        EnergyRecord {
            potential,
            kinetic,
            total: potential + kinetic,
        }
    }

    /// The model as a Stratonovich system on `R^2` (drift plus two additive
    /// noise fields `sigma d/dx`, `sigma d/dy`).
    pub fn vector_field_set(&self) -> VectorFieldSet {
        let potential = self.potential.clone();
        let damping = self.damping.clone();
        let drift = VectorField::new(2, move |p, out| {
            let kappa = damping.rate(p[0].hypot(p[1]));
            out[0] = p[1] - kappa * p[0];
            out[1] = -potential.derivative(p[0]) - kappa * p[1];
        });
        let noise = vec![
            VectorField::axis(2, 0, self.sigma),
            VectorField::axis(2, 1, self.sigma),
        ];
        VectorFieldSet::new(drift, noise)
            .expect("planar fields")
            .with_additive_noise()
    }

    fn require_isotropic(&self) -> Result<()> {
        match self.potential {
            PotentialSpec::Quadratic { k: 1.0 } => Ok(()),
            PotentialSpec::Quadratic { k } => Err(Error::invalid(
                "k",
                format!("the radial reduction needs k = 1 (isotropic energy), got {k}"),
            )),
            ref other => Err(Error::UnsupportedPotential(other.kind_name())),
        }
    }
}

/// Simulates the planar model from `(x0, y0)`; energies are attached to the
/// returned trajectory.
pub fn simulate_cartesian(
    model: &DampedOscillatorModel,
    x0: f64,
    y0: f64,
    cfg: &IntegratorConfig,
    noise: &mut NoiseStream,
) -> Result<Trajectory> {
    model.validate()?;
    cfg.validate()?;
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(Error::invalid("x0", "initial state must be finite"));
    }
    let mut traj = match cfg.method {
        Method::EulerMaruyama | Method::StratonovichHeun => {
            integrate_sde(&model.vector_field_set(), &[x0, y0], cfg, noise)?
        }
        Method::HamiltonianSplitting => splitting(model, x0, y0, cfg, noise)?,
    };
    traj.energies = Some(
        traj.states
            .iter()
            .map(|s| model.energy(s[0], s[1]))
            .collect(),
    );
    Ok(traj)
}

/// Kick-drift-kick for `h`, then the damping flow `(x, y) *= exp(-kappa dt)`,
/// then the noise increment on both coordinates.
fn splitting(
    model: &DampedOscillatorModel,
    x0: f64,
    y0: f64,
    cfg: &IntegratorConfig,
    noise: &mut NoiseStream,
) -> Result<Trajectory> {
    let dt = cfg.dt;
    let noisy = model.sigma > 0.0;
    if noisy && noise.dim() != 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            actual: noise.dim(),
        });
    }
    let mut traj = Trajectory::with_capacity(cfg.steps / cfg.record_every + 2);
    let (mut x, mut y) = (x0, y0);
    traj.push(0.0, &[x, y]);
    let mut db = [0.0; 2];
    for step in 1..=cfg.steps {
        y -= 0.5 * dt * model.potential.derivative(x);
        x += dt * y;
        y -= 0.5 * dt * model.potential.derivative(x);
        let kappa = model.damping.rate(x.hypot(y));
        if kappa != 0.0 {
            let decay = (-kappa * dt).exp();
            x *= decay;
            y *= decay;
        }
        if noisy {
            noise.increments(step as u64 - 1, dt, &mut db);
            x += model.sigma * db[0];
            y += model.sigma * db[1];
        }
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::numerical(Some(step), "state became non-finite"));
        }
        if cfg.records(step) {
            traj.push(step as f64 * dt, &[x, y]);
        }
    }
    Ok(traj)
}

/// Which radial equation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialConvention {
    /// `dr = (sigma^2 / 2r - kappa(r) r) dt + sigma dB`: the radius of the
    /// planar model.
    #[default]
    CartesianConsistent,
    /// `dr = (1/r - kappa(r) r) dt + dB`, unit noise regardless of `sigma`.
    PaperLiteral,
}

/// Parameters of a positive radial ("bell-shaped") diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialParams {
    pub damping: DampingSpec,
    pub sigma: f64,
    pub convention: RadialConvention,
}

/// Transverse normals supplied to [`step_radial`]: enough for either convention.
pub const MAX_TRANSVERSE: usize = 2;

impl RadialParams {
    pub fn linear(c: f64, sigma: f64, convention: RadialConvention) -> Self {
        Self {
            damping: DampingSpec::linear(c),
            sigma,
            convention,
        }
    }

    #[inline]
    pub fn drift(&self, r: f64) -> f64 {
        let friction = self.damping.rate(r) * r;
        match self.convention {
            RadialConvention::CartesianConsistent => 0.5 * self.sigma * self.sigma / r - friction,
            RadialConvention::PaperLiteral => 1.0 / r - friction,
        }
    }

    #[inline]
    pub fn noise_scale(&self) -> f64 {
        match self.convention {
            RadialConvention::CartesianConsistent => self.sigma,
            RadialConvention::PaperLiteral => 1.0,
        }
    }

    /// Number of transverse directions `d - 1`: the radial equation is the
    /// norm of a `d`-dimensional isotropic process, `d = 2` for the
    /// Cartesian radius and `d = 3` for the `1/r` drift with unit noise.
    #[inline]
    pub fn transverse_dim(&self) -> usize {
        match self.convention {
            RadialConvention::CartesianConsistent => 1,
            RadialConvention::PaperLiteral => 2,
        }
    }
}

/// One step of the radial diffusion driven by the Brownian increment `db`.
///
/// Plain Euler-Maruyama is unusable here: near `r ~ sqrt(dt)` every
/// halved step fails about as often as the original one, and the
/// surviving paths undersample small radii. Instead the underlying
/// isotropic process is stepped and its length taken,
/// `r' = |(r e^{-kappa dt} + s db, s sqrt(dt) xi)|`, where `xi` are the
/// first [`RadialParams::transverse_dim`] entries of `transverse`
/// (standard normals). To first order this has the drift and noise of the
/// radial equation, and it is positive almost surely. `None` signals a
/// non-finite or zero result.
pub fn step_radial(
    params: &RadialParams,
    r: f64,
    dt: f64,
    db: f64,
    transverse: &[f64],
) -> Option<f64> {
    let s = params.noise_scale();
    let along = r * (-params.damping.rate(r) * dt).exp() + s * db;
    let spread: f64 = transverse[..params.transverse_dim()]
        .iter()
        .map(|z| z * z)
        .sum();
    let next = (along * along + s * s * dt * spread).sqrt();
    (next > 0.0 && next.is_finite()).then_some(next)
}

/// Simulates the radius directly from `r0`.
pub fn simulate_polar_radial(
    model: &DampedOscillatorModel,
    r0: f64,
    cfg: &IntegratorConfig,
    noise: &mut NoiseStream,
    convention: RadialConvention,
) -> Result<Trajectory> {
    model.validate()?;
    model.require_isotropic()?;
    cfg.validate()?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::invalid(
            "r0",
            format!("initial radius must be positive, got {r0}"),
        ));
    }
    let params = RadialParams {
        damping: model.damping.clone(),
        sigma: model.sigma,
        convention,
    };
    radial_path(&params, r0, cfg, noise)
}

pub(crate) const TRANSVERSE_TAG: u64 = 0xB21D;

pub(crate) fn radial_path(
    params: &RadialParams,
    r0: f64,
    cfg: &IntegratorConfig,
    noise: &mut NoiseStream,
) -> Result<Trajectory> {
    let mut aux = noise.auxiliary(TRANSVERSE_TAG, MAX_TRANSVERSE);
    let mut traj = Trajectory::with_capacity(cfg.steps / cfg.record_every + 2);
    let mut r = r0;
    traj.push(0.0, &[r]);
    let noisy = params.noise_scale() > 0.0;
    let mut db = [0.0];
    let mut xi = [0.0; MAX_TRANSVERSE];
    for step in 1..=cfg.steps {
        if noisy {
            noise.increments(step as u64 - 1, cfg.dt, &mut db);
            aux.standard_normals(step as u64 - 1, &mut xi);
        }
        r = step_radial(params, r, cfg.dt, db[0], &xi)
            .ok_or(Error::StepRejectionExhausted { step, attempts: 1 })?;
        if cfg.records(step) {
            traj.push(step as f64 * cfg.dt, &[r]);
        }
    }
    Ok(traj)
}

/// Normalized stationary density of the radius, tabulated for fast CDF
/// evaluation. The CDF is a cubic Hermite interpolant of exact quadrature
/// values with the density as derivative.
#[derive(Clone)]
pub struct RadialDensity {
    log_unnormalized: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    log_norm: f64,
    upper: f64,
    grid: Vec<f64>,
    cdf_knots: Vec<f64>,
    pdf_knots: Vec<f64>,
}

impl std::fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialDensity")
            .field("upper", &self.upper)
            .field("log_norm", &self.log_norm)
            .finish()
    }
}

const CDF_GRID: usize = 4096;

impl RadialDensity {
    fn build(log_unnormalized: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Result<Self> {
        // Locate the bulk: scan for the peak, then extend until the log
        // density has fallen by 80 from it.
        let lp = |r: f64| log_unnormalized(r);
        let mut peak_r = 1.0;
        let mut peak = lp(1.0);
        let mut r = 1e-3;
        while r < 1e6 {
            let v = lp(r);
            if v > peak {
                peak = v;
                peak_r = r;
            }
            if r > 2.0 * peak_r && v < peak - 100.0 {
                break;
            }
            r *= 1.05;
        }
        let mut upper = peak_r.max(1e-3) * 2.0;
        while lp(upper) > peak - 80.0 {
            upper *= 1.25;
            if upper > 1e8 {
                return Err(Error::numerical(
                    None,
                    "stationary density is not normalizable",
                ));
            }
        }
        let shifted = |r: f64| if r <= 0.0 { 0.0 } else { (lp(r) - peak).exp() };
        let (mass, err) = quad::integrate(&shifted, 0.0, upper, 1e-300, 1e-14);
        if !(mass > 0.0 && mass.is_finite()) || err > 1e-10 * mass {
            return Err(Error::numerical(
                None,
                "could not normalize the stationary density",
            ));
        }
        let log_norm = peak + mass.ln();

        let h = upper / CDF_GRID as f64;
        let grid: Vec<f64> = (0..=CDF_GRID).map(|i| i as f64 * h).collect();
        let pdf = |r: f64| {
            if r <= 0.0 {
                0.0
            } else {
                (lp(r) - log_norm).exp()
            }
        };
        let pdf_knots: Vec<f64> = grid.iter().map(|&r| pdf(r)).collect();
        let mut cdf_knots = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cdf_knots.push(0.0);
        for w in grid.windows(2) {
            acc += quad::integrate(&pdf, w[0], w[1], 1e-17, 1e-13).0;
            cdf_knots.push(acc);
        }
        Ok(Self {
            log_unnormalized,
            log_norm,
            upper,
            grid,
            cdf_knots,
            pdf_knots,
        })
    }

    pub fn pdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            ((self.log_unnormalized)(r) - self.log_norm).exp()
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.upper {
            return 1.0;
        }
        let h = self.grid[1];
        let i = ((r / h) as usize).min(CDF_GRID - 1);
        let t = (r - self.grid[i]) / h;
        let (y0, y1) = (self.cdf_knots[i], self.cdf_knots[i + 1]);
        let (m0, m1) = (self.pdf_knots[i] * h, self.pdf_knots[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        v.clamp(0.0, 1.0)
    }

    /// Truncation radius beyond which the mass is below `e^-80`.
    pub fn support_upper(&self) -> f64 {
        self.upper
    }

    pub fn total_mass(&self) -> f64 {
        quad::integrate(&|r| self.pdf(r), 0.0, self.upper, 1e-300, 1e-14).0
    }

    pub fn mean(&self) -> f64 {
        quad::integrate(&|r| r * self.pdf(r), 0.0, self.upper, 1e-300, 1e-14).0
    }

    pub fn mode(&self) -> f64 {
        let lp = |r: f64| (self.log_unnormalized)(r);
        let (mut best, mut best_v) = (self.grid[1], f64::NEG_INFINITY);
        for &r in &self.grid[1..] {
            let v = lp(r);
            if v > best_v {
                best = r;
                best_v = v;
            }
        }
        // Golden-section refinement within one grid cell on each side.
        let h = self.grid[1];
        let (mut a, mut b) = ((best - h).max(h * 1e-6), best + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if lp(c) > lp(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    /// Density of the energy `h = r^2 / 2` implied by the radial density.
    pub fn energy_pdf(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let r = (2.0 * h).sqrt();
        self.pdf(r) / r
    }
}

/// Stationary density of the radius, `p(r) ∝ exp((2/s^2) int drift)` with
/// `s` the radial noise scale of the chosen convention.
pub fn stationary_radial_density(
    model: &DampedOscillatorModel,
    convention: RadialConvention,
) -> Result<RadialDensity> {
    model.validate()?;
    model.require_isotropic()?;
    let positive_damping = match &model.damping {
        DampingSpec::Linear { c } => *c > 0.0,
        DampingSpec::Tabulated { rates, .. } => rates.last().is_some_and(|&c| c > 0.0),
    };
    if !positive_damping {
        return Err(Error::invalid(
            "c",
            "a stationary law needs positive damping",
        ));
    }
    let damping = model.damping.clone();
    let log_density: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match convention {
        RadialConvention::CartesianConsistent => {
            if model.sigma <= 0.0 {
                return Err(Error::invalid(
                    "sigma",
                    "a stationary law needs positive noise",
                ));
            }
            let s2 = model.sigma * model.sigma;
            Arc::new(move |r: f64| r.ln() - 2.0 / s2 * damping.friction_integral(r))
        }
        RadialConvention::PaperLiteral => {
            Arc::new(move |r: f64| 2.0 * r.ln() - 2.0 * damping.friction_integral(r))
        }
    };
    RadialDensity::build(log_density)
}

/// One row of an energy series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub potential: f64,
    pub kinetic: f64,
    pub total: f64,
}

/// Potential `U(x)`, kinetic `y^2/2` and total energy at every sample.
pub fn energy_series(traj: &Trajectory, model: &DampedOscillatorModel) -> Vec<EnergySample> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let e = model.energy(s[0], s[1]);
            EnergySample {
                t,
                potential: e.potential,
                kinetic: e.kinetic,
                total: e.total,
            }
        })
        .collect()
}

//! The linear constrained n-oscillator: `n` quadratic oscillators with
//! potential `a_i x_i^2 / 2` and kinetic energy `b_i xdot_i^2 / 2`, coupled
//! only through the holonomic constraint `sum x_i = 0`.

mod modes;
mod sectors;

pub use modes::{
    closed_form_solution, inverse_from_frequencies, normal_modes, verify_interlacing,
    ClosedFormSolution, InterlacingReport, InverseSolution, NormalModeDecomposition,
};
pub use sectors::{
    detect_sectors, reduce_sector, sector_energy_split, ReducedMarket, Sector, SectorEnergy,
    SectorGrouping, DEFAULT_GAMMA_TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{
    integrate_second_order, EnergyRecord, IntegratorConfig, NoiseStream, Trajectory,
};

/// Tolerance on `sum v_i = 1`.
const FAIR_VALUE_SUM_TOL: f64 = 1e-12;
/// Largest `|sum x_i|` accepted by [`equation_rhs`].
pub const CONSTRAINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarketSpec {
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(default)]
    v: Option<Vec<f64>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

/// Coefficients, fair relative values and labels of an n-asset market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarketSpec")]
pub struct MarketSpec {
    a: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
    labels: Vec<String>,
}

impl TryFrom<RawMarketSpec> for MarketSpec {
    type Error = Error;

    fn try_from(raw: RawMarketSpec) -> Result<Self> {
        let n = raw.a.len();
        let v = raw.v.unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
        let labels = raw
            .labels
            .unwrap_or_else(|| (1..=n).map(|i| format!("x{i}")).collect());
        MarketSpec::new(raw.a, raw.b, v, labels)
    }
}

impl MarketSpec {
    pub fn new(a: Vec<f64>, b: Vec<f64>, v: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        let n = a.len();
        if n < 2 {
            return Err(Error::invalid(
                "a",
                format!("need at least 2 components, got {n}"),
            ));
        }
        for (name, len) in [("b", b.len()), ("v", v.len()), ("labels", labels.len())] {
            if len != n {
                return Err(Error::invalid(
                    name,
                    format!("expected {n} entries, got {len}"),
                ));
            }
        }
        if let Some(i) = a.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::invalid(
                "a",
                format!("a[{i}] = {} is not positive", a[i]),
            ));
        }
        if let Some(i) = b.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::invalid(
                "b",
                format!("b[{i}] = {} is not positive", b[i]),
            ));
        }
        let total: f64 = v.iter().sum();
        if !((total - 1.0).abs() <= FAIR_VALUE_SUM_TOL) {
            return Err(Error::invalid(
                "v",
                format!("fair values must sum to 1, got {total}"),
            ));
        }
        Ok(Self { a, b, v, labels })
    }

    /// Market with uniform fair values `1/n` and labels `x1..xn`.
    pub fn from_coefficients(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::try_from(RawMarketSpec {
            a,
            b,
            v: None,
            labels: None,
        })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Proper frequencies `gamma_i = sqrt(a_i / b_i)`.
    pub fn gammas(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| (a / b).sqrt())
            .collect()
    }

    /// Relative prices `R_i = x_i + v_i`; the flag reports any negative price.
    pub fn relative_prices(&self, x: &[f64]) -> (Vec<f64>, bool) {
        let r: Vec<f64> = x.iter().zip(&self.v).map(|(x, v)| x + v).collect();
        let negative = r.iter().any(|&p| p < 0.0);
        (r, negative)
    }
}

/// Mispricings and their velocities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedState {
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
}

impl ConstrainedState {
    pub fn new(x: Vec<f64>, xdot: Vec<f64>) -> Self {
        Self { x, xdot }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; n])
    }

    pub fn satisfies_constraint(&self, tol: f64) -> bool {
        self.x.iter().sum::<f64>().abs() <= tol && self.xdot.iter().sum::<f64>().abs() <= tol
    }
}

/// `(sum a_i x_i / b_i) / (sum 1 / b_i)`.
pub fn lagrange_multiplier(spec: &MarketSpec, x: &[f64]) -> f64 {
    let num: f64 = spec
        .a
        .iter()
        .zip(&spec.b)
        .zip(x)
        .map(|((a, b), x)| a * x / b)
        .sum();
    let den: f64 = spec.b.iter().map(|b| 1.0 / b).sum();
    num / den
}

/// Accelerations `xddot_i = (lambda - a_i x_i) / b_i` of the constrained system.
pub fn equation_rhs(spec: &MarketSpec, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; spec.n()];
    equation_rhs_into(spec, x, &mut out)?;
    Ok(out)
}

pub(crate) fn equation_rhs_into(spec: &MarketSpec, x: &[f64], out: &mut [f64]) -> Result<()> {
    if x.len() != spec.n() {
        return Err(Error::LengthMismatch {
            expected: spec.n(),
            actual: x.len(),
        });
    }
    let sum: f64 = x.iter().sum();
    if sum.abs() > CONSTRAINT_TOL {
        return Err(Error::ConstraintViolation { sum });
    }
    accelerations(spec, x, out);
    Ok(())
}

#[inline]
fn accelerations(spec: &MarketSpec, x: &[f64], out: &mut [f64]) {
    let lambda = lagrange_multiplier(spec, x);
    for i in 0..x.len() {
        out[i] = (lambda - spec.a[i] * x[i]) / spec.b[i];
    }
}

/// Component energies `E_i = a_i x_i^2 / 2 + b_i xdot_i^2 / 2` and their sum.
pub fn component_energies(spec: &MarketSpec, state: &ConstrainedState) -> (Vec<f64>, f64) {
    let e: Vec<f64> = (0..spec.n())
        .map(|i| {
            0.5 * spec.a[i] * state.x[i] * state.x[i]
                + 0.5 * spec.b[i] * state.xdot[i] * state.xdot[i]
        })
        .collect();
    let total = e.iter().sum();
    (e, total)
}

/// Numerically integrates the deterministic market from `state`. States are
/// `[x_1..x_n, xdot_1..xdot_n]`; the total energy is attached.
pub fn simulate_deterministic(
    spec: &MarketSpec,
    state: &ConstrainedState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let n = spec.n();
    if state.x.len() != n || state.xdot.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: state.x.len().min(state.xdot.len()),
        });
    }
    let sum = state.x.iter().sum::<f64>();
    let vsum = state.xdot.iter().sum::<f64>();
    if sum.abs() > CONSTRAINT_TOL || vsum.abs() > CONSTRAINT_TOL {
        return Err(Error::ConstraintViolation {
            sum: if sum.abs() > vsum.abs() { sum } else { vsum },
        });
    }
    let force = |x: &[f64], _p: &[f64], out: &mut [f64]| accelerations(spec, x, out);
    let mut traj = integrate_second_order(
        force,
        |_, _| 0.0,
        0.0,
        &state.x,
        &state.xdot,
        cfg,
        &mut NoiseStream::new(0, 0, n),
    )?;
    traj.energies = Some(
        traj.states
            .iter()
            .map(|s| {
                let st = ConstrainedState::new(s[..n].to_vec(), s[n..].to_vec());
                let (e, total) = component_energies(spec, &st);
                let potential: f64 = (0..n).map(|i| 0.5 * spec.a[i] * st.x[i] * st.x[i]).sum();
                debug_assert_eq!(e.len(), n);
                EnergyRecord {
                    potential,
                    kinetic: total - potential,
                    total,
                }
            })
            .collect(),
    );
    Ok(traj)
}

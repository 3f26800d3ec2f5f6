//! Numerical projectability test for a map `Phi: R^d -> R^m`.
//!
//! An SDS projects to a Markov process on the target exactly when, for
//! every test function `f`, the generator applied to the pullback `f o Phi`
//! is constant on every fiber of `Phi`. For a deterministic system the
//! condition is that the pushforward `DPhi . X_0` is constant on fibers.
//! The checker samples both the test functions and the fibers, so a
//! `Projectable` verdict is evidence rather than proof.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sds::{apply_diffusion_operator, FdScheme, ScalarField, VectorField, VectorFieldSet};

pub const DEFAULT_PASS_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_FAIL_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_FIBER_SAMPLES: usize = 8;
pub const DEFAULT_BASE_POINTS: usize = 16;
/// Required accuracy of sampled preimages.
pub const FIBER_TOL: f64 = 1e-10;

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// `(q, count) -> count points p with Phi(p) = q`. Point `k` must not depend
/// on `count`, so larger samples extend smaller ones.
pub type FiberSampler = Arc<dyn Fn(&[f64], usize) -> Result<Vec<Vec<f64>>> + Send + Sync>;

#[derive(Clone)]
pub struct ProjectionSetup {
    pub source_dim: usize,
    pub target_dim: usize,
    pub phi: MapFn,
    pub fiber_sampler: FiberSampler,
    pub test_functions: Vec<ScalarField>,
    pub base_points: Vec<Vec<f64>>,
}

impl std::fmt::Debug for ProjectionSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionSetup")
            .field("source_dim", &self.source_dim)
            .field("target_dim", &self.target_dim)
            .field("test_functions", &self.test_functions.len())
            .field("base_points", &self.base_points)
            .finish()
    }
}

/// Deterministic hash to `[0, 1)`.
fn unit_hash(a: u64, b: u64) -> f64 {
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// `u`, `u^2`, `u^3` and `sin u`, each applied coordinatewise and summed.
pub fn default_test_functions() -> Vec<ScalarField> {
    vec![
        ScalarField::new(|u| u.iter().sum()),
        ScalarField::new(|u| u.iter().map(|v| v * v).sum()),
        ScalarField::new(|u| u.iter().map(|v| v * v * v).sum()),
        ScalarField::new(|u| u.iter().map(|v| v.sin()).sum()),
    ]
}

impl ProjectionSetup {
    /// `Phi(p) = (p[k] for k in coords)`. Fiber points fill the remaining
    /// coordinates with pseudo-random values in `[-range, range]`; base
    /// points are pseudo-random in the same box.
    pub fn coordinate_projection(
        source_dim: usize,
        coords: Vec<usize>,
        range: f64,
    ) -> Result<Self> {
        if coords.is_empty()
            || coords.len() >= source_dim
            || coords.iter().any(|&k| k >= source_dim)
        {
            return Err(Error::invalid(
                "coords",
                "need 1..d-1 distinct in-range coordinates",
            ));
        }
        let mut sorted = coords.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != coords.len() {
            return Err(Error::invalid("coords", "coordinates must be distinct"));
        }
        let m = coords.len();
        let keep = coords.clone();
        let phi: MapFn = Arc::new(move |p| keep.iter().map(|&k| p[k]).collect());
        let keep = coords.clone();
        let sampler: FiberSampler = Arc::new(move |q, count| {
            Ok((0..count as u64)
                .map(|k| {
                    let mut p: Vec<f64> = (0..source_dim as u64)
                        .map(|i| range * (2.0 * unit_hash(k + 1, i) - 1.0))
                        .collect();
                    for (slot, &coord) in keep.iter().enumerate() {
                        p[coord] = q[slot];
                    }
                    p
                })
                .collect())
        });
        let base_points = (0..DEFAULT_BASE_POINTS as u64)
            .map(|b| {
                (0..m as u64)
                    .map(|i| range * (2.0 * unit_hash(1000 + b, i) - 1.0))
                    .collect()
            })
            .collect();
        Ok(Self {
            source_dim,
            target_dim: m,
            phi,
            fiber_sampler: sampler,
            test_functions: default_test_functions(),
            base_points,
        })
    }

    /// `Phi(x, y) = sqrt(x^2 + y^2)` on the plane; fibers are circles,
    /// sampled at pseudo-random angles; base radii spread over `[0.5, 2.5]`.
    pub fn radius() -> Self {
        let phi: MapFn = Arc::new(|p| vec![p[0].hypot(p[1])]);
        let sampler: FiberSampler = Arc::new(|q, count| {
            if !(q[0] > 0.0) {
                return Err(Error::FiberSamplerFailure(format!(
                    "radius fiber needs r > 0, got {}",
                    q[0]
                )));
            }
            Ok((0..count as u64)
                .map(|k| {
                    let angle = std::f64::consts::TAU * unit_hash(k + 1, 77);
                    vec![q[0] * angle.cos(), q[0] * angle.sin()]
                })
                .collect())
        });
        let base_points = (0..DEFAULT_BASE_POINTS)
            .map(|i| vec![0.5 + 2.0 * i as f64 / (DEFAULT_BASE_POINTS - 1) as f64])
            .collect();
        Self {
            source_dim: 2,
            target_dim: 1,
            phi,
            fiber_sampler: sampler,
            test_functions: default_test_functions(),
            base_points,
        }
    }

    fn fiber(&self, q: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
        let pts = (self.fiber_sampler)(q, count)?;
        if pts.len() != count {
            return Err(Error::FiberSamplerFailure(format!(
                "asked for {count} points, got {}",
                pts.len()
            )));
        }
        for p in &pts {
            if p.len() != self.source_dim {
                return Err(Error::FiberSamplerFailure(format!(
                    "point of dimension {} in a {}-dimensional space",
                    p.len(),
                    self.source_dim
                )));
            }
            let image = (self.phi)(p);
            let err = image
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if !(err < FIBER_TOL) {
                return Err(Error::FiberSamplerFailure(format!(
                    "sampled point {p:?} maps to {image:?}, not {q:?}"
                )));
            }
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Projectable,
    NotProjectable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase {
    /// Test-function index (component index of the pushforward in the
    /// deterministic check).
    pub test_function: usize,
    pub base_point: Vec<f64>,
    /// Fiber points attaining the largest and smallest value.
    pub fiber_points: (Vec<f64>, Vec<f64>),
    pub values: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectabilityReport {
    pub verdict: Verdict,
    pub max_fiber_variation: f64,
    pub worst_case: Option<WorstCase>,
    pub pass_threshold: f64,
    pub fail_threshold: f64,
    pub fiber_samples: usize,
    pub note: String,
}

const NOTE: &str =
    "verdict from sampled test functions and fiber points: projectable is evidence, not proof; \
                    the map is assumed to be a surjective submersion, which is not checked";

fn check_thresholds(samples: usize, pass: f64, fail: f64) -> Result<()> {
    if samples < 2 {
        return Err(Error::invalid(
            "fiber_samples",
            "need at least 2 fiber points",
        ));
    }
    if !(pass > 0.0 && pass < fail) {
        return Err(Error::invalid(
            "pass_threshold",
            "need 0 < pass_threshold < fail_threshold",
        ));
    }
    Ok(())
}

/// Accumulates per-cell variations into a report.
struct Tracker {
    worst: f64,
    case: Option<WorstCase>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            worst: 0.0,
            case: None,
        }
    }

    fn cell(&mut self, index: usize, q: &[f64], pts: &[Vec<f64>], values: &[f64]) {
        let (imax, imin) = argmax_argmin(values);
        let scale = 1.0 + values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let variation = (values[imax] - values[imin]) / scale;
        if self.case.is_none() || variation > self.worst {
            self.worst = variation;
            self.case = Some(WorstCase {
                test_function: index,
                base_point: q.to_vec(),
                fiber_points: (pts[imax].clone(), pts[imin].clone()),
                values: (values[imax], values[imin]),
            });
        }
    }

    fn report(self, samples: usize, pass: f64, fail: f64) -> ProjectabilityReport {
        let verdict = if self.worst < pass {
            Verdict::Projectable
        } else if self.worst > fail {
            Verdict::NotProjectable
        } else {
            Verdict::Inconclusive
        };
        ProjectabilityReport {
            verdict,
            max_fiber_variation: self.worst,
            worst_case: self.case,
            pass_threshold: pass,
            fail_threshold: fail,
            fiber_samples: samples,
            note: NOTE.to_string(),
        }
    }
}

fn argmax_argmin(values: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[imax] {
            imax = i;
        }
        if *v < values[imin] {
            imin = i;
        }
    }
    (imax, imin)
}

/// Samples `A_X (f o Phi)` on fibers for every test function and base point.
pub fn check_projectable_sds(
    system: &VectorFieldSet,
    setup: &ProjectionSetup,
    fiber_samples: usize,
    pass_threshold: f64,
    fail_threshold: f64,
) -> Result<ProjectabilityReport> {
    check_thresholds(fiber_samples, pass_threshold, fail_threshold)?;
    if system.dim() != setup.source_dim {
        return Err(Error::LengthMismatch {
            expected: setup.source_dim,
            actual: system.dim(),
        });
    }
    let scheme = FdScheme::default();
    let mut tracker = Tracker::new();
    for (index, f) in setup.test_functions.iter().enumerate() {
        let phi = setup.phi.clone();
        let f = f.clone();
        let pullback = ScalarField::new(move |p| f.eval(&phi(p)));
        for q in &setup.base_points {
            let pts = setup.fiber(q, fiber_samples)?;
            let values = pts
                .iter()
                .map(|p| apply_diffusion_operator(system, &pullback, p, scheme))
                .collect::<Result<Vec<f64>>>()?;
            tracker.cell(index, q, &pts, &values);
        }
    }
    Ok(tracker.report(fiber_samples, pass_threshold, fail_threshold))
}

/// Samples the pushforward `DPhi . X_0` (central differences along `X_0`)
/// on fibers, component by component.
pub fn check_projectable_deterministic(
    drift: &VectorField,
    setup: &ProjectionSetup,
    fiber_samples: usize,
    pass_threshold: f64,
    fail_threshold: f64,
) -> Result<ProjectabilityReport> {
    check_thresholds(fiber_samples, pass_threshold, fail_threshold)?;
    if drift.dim() != setup.source_dim {
        return Err(Error::LengthMismatch {
            expected: setup.source_dim,
            actual: drift.dim(),
        });
    }
    let h = FdScheme::default().step();
    let mut tracker = Tracker::new();
    // (base point, fiber points, pushforward at each point)
    type Cell = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>);
    let mut pushforwards: Vec<Cell> = Vec::new();
    for q in &setup.base_points {
        let pts = setup.fiber(q, fiber_samples)?;
        let push = pts
            .iter()
            .map(|p| {
                let v = drift.eval(p);
                let plus: Vec<f64> = p.iter().zip(&v).map(|(a, b)| a + h * b).collect();
                let minus: Vec<f64> = p.iter().zip(&v).map(|(a, b)| a - h * b).collect();
                let d: Vec<f64> = (setup.phi)(&plus)
                    .iter()
                    .zip((setup.phi)(&minus))
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                if d.iter().all(|x| x.is_finite()) {
                    Ok(d)
                } else {
                    Err(Error::numerical(None, "non-finite pushforward"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        pushforwards.push((q.clone(), pts, push));
    }
    for component in 0..setup.target_dim {
        for (q, pts, push) in &pushforwards {
            let values: Vec<f64> = push.iter().map(|d| d[component]).collect();
            tracker.cell(component, q, pts, &values);
        }
    }
    Ok(tracker.report(fiber_samples, pass_threshold, fail_threshold))
}

//! Stochastic dynamical systems on `R^d` in Stratonovich form
//! `dx = X_0 dt + sum_i X_i o dB^i`, and their diffusion operator
//! `A f = X_0 f + 1/2 sum_i X_i (X_i f)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A smooth vector field `R^d -> R^d`, written into a caller-provided buffer.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    f: Arc<FieldFn>,
}

impl VectorField {
    pub fn new(dim: usize, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, |_, out| out.fill(0.0))
    }

    /// The constant field with components `v`.
    pub fn constant(v: Vec<f64>) -> Self {
        Self::new(v.len(), move |_, out| out.copy_from_slice(&v))
    }

    /// Coordinate field `d/dx_axis` scaled by `scale`.
    pub fn axis(dim: usize, axis: usize, scale: f64) -> Self {
        assert!(axis < dim);
        Self::new(dim, move |_, out| {
            out.fill(0.0);
            out[axis] = scale;
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval_into(&self, p: &[f64], out: &mut [f64]) {
        (self.f)(p, out)
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(p, &mut out);
        out
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .finish()
    }
}

/// Drift field plus an ordered list of diffusion fields.
#[derive(Clone, Debug)]
pub struct VectorFieldSet {
    drift: VectorField,
    diffusion: Vec<VectorField>,
    additive: bool,
}

impl VectorFieldSet {
    pub fn new(drift: VectorField, diffusion: Vec<VectorField>) -> Result<Self> {
        let d = drift.dim();
        if d == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if let Some(bad) = diffusion.iter().find(|f| f.dim() != d) {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: bad.dim(),
            });
        }
        Ok(Self {
            drift,
            diffusion,
            additive: false,
        })
    }

    /// Deterministic system (no diffusion fields).
    pub fn deterministic(drift: VectorField) -> Result<Self> {
        Self::new(drift, Vec::new())
    }

    /// Marks the diffusion fields as state-independent, which allows
    /// Euler-Maruyama integration without a Stratonovich correction.
    pub fn with_additive_noise(mut self) -> Self {
        self.additive = true;
        self
    }

    /// `d`-dimensional Brownian motion scaled by `sigma`, with zero drift.
    pub fn brownian(dim: usize, sigma: f64) -> Self {
        let fields = (0..dim).map(|i| VectorField::axis(dim, i, sigma)).collect();
        Self::new(VectorField::zero(dim), fields)
            .expect("dimensions agree by construction")
            .with_additive_noise()
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.diffusion.len()
    }

    pub fn drift(&self) -> &VectorField {
        &self.drift
    }

    pub fn diffusion(&self) -> &[VectorField] {
        &self.diffusion
    }

    pub fn has_additive_noise(&self) -> bool {
        self.additive || self.diffusion.is_empty()
    }
}

/// Scalar test function with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    f: Arc<ScalarFn>,
    grad: Option<VectorField>,
}

impl ScalarField {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            grad: None,
        }
    }

    pub fn with_gradient(mut self, grad: VectorField) -> Self {
        self.grad = Some(grad);
        self
    }

    #[inline]
    pub fn eval(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }

    pub fn gradient(&self) -> Option<&VectorField> {
        self.grad.as_ref()
    }

    /// `c1 * f + c2 * g`.
    pub fn linear_combination(c1: f64, f: &ScalarField, c2: f64, g: &ScalarField) -> ScalarField {
        let (f, g) = (f.clone(), g.clone());
        ScalarField::new(move |p| c1 * f.eval(p) + c2 * g.eval(p))
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

/// Second-order central finite differences with step `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScheme {
    h: f64,
}

impl FdScheme {
    pub const DEFAULT_STEP: f64 = 1e-4;

    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(
                "h",
                format!("step must be positive and finite, got {h}"),
            ));
        }
        Ok(Self { h })
    }

    pub fn step(&self) -> f64 {
        self.h
    }
}

impl Default for FdScheme {
    fn default() -> Self {
        Self {
            h: Self::DEFAULT_STEP,
        }
    }
}

fn check_finite_point(p: &[f64]) -> Result<()> {
    if p.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical(None, "evaluation point is not finite"))
    }
}

/// Directional derivative along `dir` of a function given as a closure.
/// Uses `(g(p + h v) - g(p - h v)) / 2h`, exact for quadratics along the line.
fn directional_fd(g: &dyn Fn(&[f64]) -> Result<f64>, p: &[f64], v: &[f64], h: f64) -> Result<f64> {
    let plus: Vec<f64> = p.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = p.iter().zip(v).map(|(a, b)| a - h * b).collect();
    let d = (g(&plus)? - g(&minus)?) / (2.0 * h);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::numerical(
            None,
            "non-finite finite-difference quotient",
        ))
    }
}

/// `(X . grad f)(p)`; analytic gradient is used when `f` carries one.
pub fn directional_derivative(
    field: &VectorField,
    f: &ScalarField,
    p: &[f64],
    scheme: FdScheme,
) -> Result<f64> {
    check_finite_point(p)?;
    let x = field.eval(p);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::numerical(
            None,
            "vector field is not finite at the evaluation point",
        ));
    }
    let value = match f.gradient() {
        Some(grad) => crate::linalg::dot(&x, &grad.eval(p)),
        None => directional_fd(&|q: &[f64]| Ok(f.eval(q)), p, &x, scheme.step())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::numerical(None, "non-finite directional derivative"))
    }
}

/// Evaluates the diffusion operator `(A_X f)(p)`: the drift derivative plus
/// half the sum of the iterated derivatives along each diffusion field.
pub fn apply_diffusion_operator(
    system: &VectorFieldSet,
    f: &ScalarField,
    p: &[f64],
    scheme: FdScheme,
) -> Result<f64> {
    check_finite_point(p)?;
    let mut total = directional_derivative(system.drift(), f, p, scheme)?;
    for field in system.diffusion() {
        // X_i (X_i f): differentiate the function q -> (X_i f)(q) along X_i(p).
        let inner = |q: &[f64]| directional_derivative(field, f, q, scheme);
        let xi = field.eval(p);
        let second = directional_fd(&inner, p, &xi, scheme.step())?;
        total += 0.5 * second;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::numerical(
            None,
            "non-finite diffusion operator value",
        ))
    }
}

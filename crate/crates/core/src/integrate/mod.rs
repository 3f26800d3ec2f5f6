//! Fixed-step integrators for SDEs and second-order (phase-space) systems.

mod noise;
mod sde;
mod second_order;

pub use noise::NoiseStream;
pub use sde::integrate_sde;
pub use second_order::integrate_second_order;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EulerMaruyama,
    StratonovichHeun,
    HamiltonianSplitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    pub method: Method,
    /// Keep every `record_every`-th state (the initial state is always kept).
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl IntegratorConfig {
    pub fn new(dt: f64, steps: usize, method: Method) -> Self {
        Self {
            dt,
            steps,
            method,
            record_every: 1,
        }
    }

    pub fn recording_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(
                "dt",
                format!("must be positive and finite, got {}", self.dt),
            ));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub(crate) fn records(&self, step: usize) -> bool {
        step.is_multiple_of(self.record_every) || step == self.steps
    }
}

/// Energy bookkeeping attached to a trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub potential: f64,
    pub kinetic: f64,
    pub total: f64,
}

/// Sampled solution path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energies: Option<Vec<EnergyRecord>>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            energies: None,
        }
    }

    pub fn push(&mut self, t: f64, state: &[f64]) {
        self.times.push(t);
        self.states.push(state.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Values of coordinate `i` across all samples.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    /// Checks the structural invariants: equal lengths, strictly increasing times.
    pub fn is_well_formed(&self) -> bool {
        self.times.len() == self.states.len()
            && self
                .energies
                .as_ref()
                .is_none_or(|e| e.len() == self.times.len())
            && self.times.windows(2).all(|w| w[1] > w[0])
    }
}

pub(crate) fn expected_samples(cfg: &IntegratorConfig) -> usize {
    cfg.steps / cfg.record_every + 2
}

/// Runs `path` for every index in `0..paths`, possibly in parallel; results
/// are ordered by path index regardless of scheduling.
pub fn ensemble<T, F>(paths: usize, path: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..paths as u64).into_par_iter().map(path).collect()
}

pub(crate) fn check_finite(state: &[f64], step: usize) -> Result<()> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical(Some(step), "state became non-finite"))
    }
}

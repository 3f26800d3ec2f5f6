use super::{check_finite, expected_samples, IntegratorConfig, Method, NoiseStream, Trajectory};
use crate::error::{Error, Result};
use crate::sds::VectorFieldSet;

/// Integrates `dx = X_0 dt + sum_i X_i o dB^i` from `x0`.
///
/// `StratonovichHeun` is the predictor-corrector scheme that converges to the
/// Stratonovich solution; `EulerMaruyama` is only accepted for additive noise,
/// where Ito and Stratonovich coincide.
pub fn integrate_sde(
    system: &VectorFieldSet,
    x0: &[f64],
    cfg: &IntegratorConfig,
    noise: &mut NoiseStream,
) -> Result<Trajectory> {
    cfg.validate()?;
    let d = system.dim();
    if x0.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: x0.len(),
        });
    }
    let k = system.noise_dim();
    if k > 0 && noise.dim() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: noise.dim(),
        });
    }
    check_finite(x0, 0)?;
    match cfg.method {
        Method::EulerMaruyama if !system.has_additive_noise() => {
            return Err(Error::invalid(
                "method",
                "euler_maruyama requires additive noise; use stratonovich_heun",
            ))
        }
        Method::HamiltonianSplitting => {
            return Err(Error::invalid(
                "method",
                "hamiltonian_splitting applies to second-order systems only",
            ))
        }
        _ => {}
    }

    let mut traj = Trajectory::with_capacity(expected_samples(cfg));
    let mut x = x0.to_vec();
    traj.push(0.0, &x);

    let mut db = vec![0.0; k];
    let mut b0 = vec![0.0; d];
    let mut b1 = vec![0.0; d];
    let mut s0: Vec<Vec<f64>> = vec![vec![0.0; d]; k];
    let mut s1 = vec![0.0; d];
    let mut pred = vec![0.0; d];
    let additive = system.has_additive_noise();

    for step in 1..=cfg.steps {
        if k > 0 {
            noise.increments(step as u64 - 1, cfg.dt, &mut db);
        }
        system.drift().eval_into(&x, &mut b0);
        for (field, out) in system.diffusion().iter().zip(s0.iter_mut()) {
            field.eval_into(&x, out);
        }
        match cfg.method {
            Method::EulerMaruyama => {
                for i in 0..d {
                    x[i] += b0[i] * cfg.dt;
                }
                for (s, dbj) in s0.iter().zip(&db) {
                    for i in 0..d {
                        x[i] += s[i] * dbj;
                    }
                }
            }
            Method::StratonovichHeun => {
                for i in 0..d {
                    pred[i] = x[i] + b0[i] * cfg.dt;
                }
                for (s, dbj) in s0.iter().zip(&db) {
                    for i in 0..d {
                        pred[i] += s[i] * dbj;
                    }
                }
                system.drift().eval_into(&pred, &mut b1);
                for i in 0..d {
                    x[i] += 0.5 * (b0[i] + b1[i]) * cfg.dt;
                }
                for (j, field) in system.diffusion().iter().enumerate() {
                    if additive {
                        for i in 0..d {
                            x[i] += s0[j][i] * db[j];
                        }
                    } else {
                        field.eval_into(&pred, &mut s1);
                        for i in 0..d {
                            x[i] += 0.5 * (s0[j][i] + s1[i]) * db[j];
                        }
                    }
                }
            }
            Method::HamiltonianSplitting => unreachable!("rejected above"),
        }
        check_finite(&x, step)?;
        if cfg.records(step) {
            traj.push(step as f64 * cfg.dt, &x);
        }
    }
    Ok(traj)
}

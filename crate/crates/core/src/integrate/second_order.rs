use super::{check_finite, expected_samples, IntegratorConfig, Method, NoiseStream, Trajectory};
use crate::error::{Error, Result};

/// Integrates `x' = p`, `p' = F(x, p) - kappa(x, p) p + sigma dW` in phase space.
///
/// States are stored as `[x_1..x_n, p_1..p_n]`. With `HamiltonianSplitting`
/// each step is a Strang kick-drift-kick for the force, followed by the exact
/// damping factor `exp(-kappa dt)` on `p` and the additive noise increment.
/// `EulerMaruyama` and `StratonovichHeun` treat the same system as a
/// first-order SDE with additive noise on the momenta.
pub fn integrate_second_order<F, D>(
    force: F,
    damping: D,
    noise_amplitude: f64,
    x0: &[f64],
    p0: &[f64],
    cfg: &IntegratorConfig,
    noise: &mut NoiseStream,
) -> Result<Trajectory>
where
    F: Fn(&[f64], &[f64], &mut [f64]),
    D: Fn(&[f64], &[f64]) -> f64,
{
    cfg.validate()?;
    let n = x0.len();
    if p0.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: p0.len(),
        });
    }
    if noise_amplitude < 0.0 || !noise_amplitude.is_finite() {
        return Err(Error::invalid(
            "noise_amplitude",
            "must be nonnegative and finite",
        ));
    }
    let noisy = noise_amplitude > 0.0;
    if noisy && noise.dim() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: noise.dim(),
        });
    }

    let mut state = [x0, p0].concat();
    check_finite(&state, 0)?;
    let mut traj = Trajectory::with_capacity(expected_samples(cfg));
    traj.push(0.0, &state);

    let dt = cfg.dt;
    let mut acc = vec![0.0; n];
    let mut acc1 = vec![0.0; n];
    let mut dw = vec![0.0; n];
    let mut pred = vec![0.0; 2 * n];

    for step in 1..=cfg.steps {
        if noisy {
            noise.increments(step as u64 - 1, dt, &mut dw);
        }
        let (x, p) = state.split_at_mut(n);
        match cfg.method {
            Method::HamiltonianSplitting => {
                force(x, p, &mut acc);
                for i in 0..n {
                    p[i] += 0.5 * dt * acc[i];
                }
                for i in 0..n {
                    x[i] += dt * p[i];
                }
                force(x, p, &mut acc);
                for i in 0..n {
                    p[i] += 0.5 * dt * acc[i];
                }
                let kappa = damping(x, p);
                if kappa != 0.0 {
                    let decay = (-kappa * dt).exp();
                    p.iter_mut().for_each(|v| *v *= decay);
                }
            }
            Method::EulerMaruyama => {
                force(x, p, &mut acc);
                let kappa = damping(x, p);
                for i in 0..n {
                    let dp = (acc[i] - kappa * p[i]) * dt;
                    x[i] += p[i] * dt;
                    p[i] += dp;
                }
            }
            Method::StratonovichHeun => {
                force(x, p, &mut acc);
                let kappa = damping(x, p);
                let (px, pp) = pred.split_at_mut(n);
                for i in 0..n {
                    px[i] = x[i] + p[i] * dt;
                    pp[i] = p[i] + (acc[i] - kappa * p[i]) * dt + noise_amplitude * dw[i];
                }
                force(px, pp, &mut acc1);
                let kappa1 = damping(px, pp);
                for i in 0..n {
                    x[i] += 0.5 * (p[i] + pp[i]) * dt;
                    p[i] += 0.5 * ((acc[i] - kappa * p[i]) + (acc1[i] - kappa1 * pp[i])) * dt;
                }
            }
        }
        if noisy {
            for i in 0..n {
                p[i] += noise_amplitude * dw[i];
            }
        }
        check_finite(&state, step)?;
        if cfg.records(step) {
            traj.push(step as f64 * dt, &state);
        }
    }
    Ok(traj)
}

use serde::Serialize;

use super::{ConstrainedState, MarketSpec};
use crate::error::{Error, Result};

/// Relative tolerance for "same proper frequency".
pub const DEFAULT_GAMMA_TOLERANCE: f64 = 1e-9;

/// Components sharing one proper frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sector {
    /// Zero-based component indices, ascending.
    pub members: Vec<usize>,
    pub gamma: f64,
    /// `1 / sum(1 / a_i)`.
    pub a_hat: f64,
    /// `a_hat / gamma^2`.
    pub b_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorGrouping {
    /// Partition of the components, ordered by smallest member.
    pub groups: Vec<Sector>,
    pub tolerance: f64,
}

fn sector(spec: &MarketSpec, members: Vec<usize>) -> Sector {
    let gammas = spec.gammas();
    let gamma = gammas[members[0]];
    // A singleton keeps its coefficients bit for bit.
    let (a_hat, b_hat) = match members[..] {
        [i] => (spec.a()[i], spec.b()[i]),
        _ => {
            let a_hat = 1.0 / members.iter().map(|&i| 1.0 / spec.a()[i]).sum::<f64>();
            (a_hat, a_hat / (gamma * gamma))
        }
    };
    Sector {
        members,
        gamma,
        a_hat,
        b_hat,
    }
}

/// Groups components whose `gamma_i = sqrt(a_i / b_i)` agree within the
/// relative `gamma_tolerance` (chained in ascending gamma order).
pub fn detect_sectors(spec: &MarketSpec, gamma_tolerance: f64) -> SectorGrouping {
    let gammas = spec.gammas();
    let mut order: Vec<usize> = (0..spec.n()).collect();
    order.sort_by(|&i, &j| gammas[i].total_cmp(&gammas[j]).then(i.cmp(&j)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if (gammas[i] - gammas[g[0]]).abs() <= gamma_tolerance * gammas[g[0]] => {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    let mut groups: Vec<Sector> = groups
        .into_iter()
        .map(|mut g| {
            g.sort_unstable();
            sector(spec, g)
        })
        .collect();
    groups.sort_by_key(|s| s.members[0]);
    SectorGrouping {
        groups,
        tolerance: gamma_tolerance,
    }
}

/// Market with one sector collapsed into a single component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedMarket {
    pub spec: MarketSpec,
    pub sector: Sector,
    /// `mapping[i]` is the reduced index of original component `i`.
    pub mapping: Vec<usize>,
}

impl ReducedMarket {
    /// Reduced mispricings: group members summed, others copied.
    pub fn reduce_vector(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.n()];
        for (i, &target) in self.mapping.iter().enumerate() {
            out[target] += x[i];
        }
        out
    }
}

/// Replaces `group` by one component with `a_hat = 1 / sum(1/a_i)` and
/// `b_hat = a_hat / gamma^2`; it takes the place of the group's first member.
pub fn reduce_sector(
    spec: &MarketSpec,
    group: &[usize],
    gamma_tolerance: f64,
) -> Result<ReducedMarket> {
    let sector = validated_sector(spec, group, gamma_tolerance)?;
    let n = spec.n();
    let first = sector.members[0];
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut v = Vec::new();
    let mut labels = Vec::new();
    let mut mapping = vec![0; n];
    for i in 0..n {
        if i == first {
            mapping[i] = a.len();
            a.push(sector.a_hat);
            b.push(sector.b_hat);
            v.push(sector.members.iter().map(|&k| spec.v()[k]).sum());
            labels.push(
                sector
                    .members
                    .iter()
                    .map(|&k| spec.labels()[k].as_str())
                    .collect::<Vec<_>>()
                    .join("+"),
            );
        } else if sector.members.contains(&i) {
            mapping[i] = mapping[first];
        } else {
            mapping[i] = a.len();
            a.push(spec.a()[i]);
            b.push(spec.b()[i]);
            v.push(spec.v()[i]);
            labels.push(spec.labels()[i].clone());
        }
    }
    // Summation order can move sum(v) by an ulp; renormalize.
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    let reduced = if a.len() >= 2 {
        MarketSpec::new(a, b, v, labels)?
    } else {
        return Err(Error::invalid(
            "group",
            "cannot collapse the whole market into one component",
        ));
    };
    Ok(ReducedMarket {
        spec: reduced,
        sector,
        mapping,
    })
}

fn validated_sector(spec: &MarketSpec, group: &[usize], gamma_tolerance: f64) -> Result<Sector> {
    if group.is_empty() {
        return Err(Error::invalid("group", "must not be empty"));
    }
    let mut members = group.to_vec();
    members.sort_unstable();
    members.dedup();
    if let Some(&bad) = members.iter().find(|&&i| i >= spec.n()) {
        return Err(Error::invalid(
            "group",
            format!("component index {bad} out of range"),
        ));
    }
    let gammas = spec.gammas();
    let expected = gammas[members[0]];
    for &i in &members {
        if (gammas[i] - expected).abs() > gamma_tolerance * expected {
            return Err(Error::FrequencyMismatch {
                index: i,
                gamma: gammas[i],
                expected,
            });
        }
    }
    Ok(sector(spec, members))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorEnergy {
    pub sector: f64,
    pub external: f64,
    pub internal: f64,
}

/// Splits the sector energy into the energy of the summed coordinate
/// `x_hat = sum x_i` under `(a_hat, b_hat)` and the remainder, which is
/// nonnegative by Cauchy-Schwarz.
pub fn sector_energy_split(
    spec: &MarketSpec,
    group: &[usize],
    state: &ConstrainedState,
) -> Result<SectorEnergy> {
    let s = validated_sector(spec, group, DEFAULT_GAMMA_TOLERANCE)?;
    for len in [state.x.len(), state.xdot.len()] {
        if len != spec.n() {
            return Err(Error::LengthMismatch {
                expected: spec.n(),
                actual: len,
            });
        }
    }
    let total: f64 = s
        .members
        .iter()
        .map(|&i| {
            0.5 * spec.a()[i] * state.x[i].powi(2) + 0.5 * spec.b()[i] * state.xdot[i].powi(2)
        })
        .sum();
    let x_hat: f64 = s.members.iter().map(|&i| state.x[i]).sum();
    let v_hat: f64 = s.members.iter().map(|&i| state.xdot[i]).sum();
    let external = 0.5 * s.a_hat * x_hat * x_hat + 0.5 * s.b_hat * v_hat * v_hat;
    Ok(SectorEnergy {
        sector: total,
        external,
        internal: total - external,
    })
}

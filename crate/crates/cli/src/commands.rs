use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use oscimarket::ingest::{self, FitOptions, MispricingMode};
use oscimarket::market::{
    self, detect_sectors, inverse_from_frequencies, normal_modes, reduce_sector,
    sector_energy_split, verify_interlacing, DEFAULT_GAMMA_TOLERANCE,
};
use oscimarket::oscillator::{
    simulate_cartesian, simulate_polar_radial, stationary_radial_density,
};
use oscimarket::reduce::{check_projectable_deterministic, check_projectable_sds};
use oscimarket::stats::{find_peaks, ks_statistic, periodogram, EmpiricalDistribution};
use oscimarket::stochastic::simulate_market as simulate_stochastic;
use oscimarket::{
    ensemble, Error, NoiseStream, ProjectionSetup, StochasticMarketModel, Trajectory, VectorField,
    VectorFieldSet,
};

use crate::config::{
    AssetConfig, CheckKind, DensityConfig, InverseConfig, MarketConfig, ModesConfig,
    ProjectionConfig, ReduceConfig, SectorsConfig, SystemConfig,
};
use crate::{read_config, CliError, CliResult, Context};

/// Relative tolerance on the time column of `spectrum` input.
const SPACING_TOL: f64 = 1e-6;
/// Minimum peak separation in bins.
const PEAK_SEPARATION_BINS: f64 = 4.0;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

struct CsvOut {
    path: std::path::PathBuf,
    w: BufWriter<File>,
}

impl CsvOut {
    fn create(path: std::path::PathBuf, header: &[String]) -> CliResult<Self> {
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut out = Self {
            path,
            w: BufWriter::new(file),
        };
        out.line(header.join(","))?;
        Ok(out)
    }

    fn line(&mut self, s: String) -> CliResult<()> {
        writeln!(self.w, "{s}").map_err(|e| io_err(&self.path, e))
    }

    fn row(&mut self, values: &[f64]) -> CliResult<()> {
        let s = values
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
        self.line(s)
    }

    fn finish(mut self) -> CliResult<()> {
        self.w.flush().map_err(|e| io_err(&self.path, e))
    }
}

fn write_json(ctx: &Context, name: &str, value: &impl Serialize) -> CliResult<()> {
    let path = ctx.output(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

/// `stem.csv` for a single path, `stem_0000.csv`... otherwise.
fn path_file(stem: &str, index: usize, paths: usize) -> String {
    if paths == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_{index:04}.csv")
    }
}

pub fn simulate_asset(ctx: &Context, config: &Path) -> CliResult<()> {
    let cfg: AssetConfig = read_config(config)?;
    let seed = ctx.seed(cfg.seed);
    let paths = ctx.paths(cfg.paths)?;
    let [x0, y0] = cfg.initial;
    let trajectories = ensemble(paths, |p| {
        let mut noise = NoiseStream::new(seed, p, 2);
        simulate_cartesian(&cfg.model, x0, y0, &cfg.integrator, &mut noise)
    })?;
    let header: Vec<String> = ["t", "x", "y", "potential", "kinetic", "total"]
        .map(String::from)
        .into();
    for (i, traj) in trajectories.iter().enumerate() {
        let mut out = CsvOut::create(ctx.output(&path_file("asset", i, paths)), &header)?;
        let energies = traj.energies.as_deref().unwrap_or_default();
        for (k, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
            let e = energies[k];
            out.row(&[*t, s[0], s[1], e.potential, e.kinetic, e.total])?;
        }
        out.finish()?;
    }
    let finals: Vec<f64> = trajectories
        .iter()
        .filter_map(|t| t.energies.as_ref().and_then(|e| e.last()).map(|e| e.total))
        .collect();
    ctx.say(format!(
        "simulate-asset: {paths} path(s), {} frames, mean final energy {:.6}",
        trajectories[0].len(),
        finals.iter().sum::<f64>() / finals.len() as f64
    ));
    Ok(())
}

pub fn modes(ctx: &Context, config: &Path) -> CliResult<()> {
    let cfg: ModesConfig = read_config(config)?;
    let decomp = normal_modes(&cfg.market)?;
    let gammas = cfg.market.gammas();
    let interlacing = verify_interlacing(&gammas, &decomp.lambdas)?;
    write_json(
        ctx,
        "modes.json",
        &json!({
            "gammas": gammas,
            "lambdas": decomp.lambdas,
            "c": decomp.c.to_rows(),
            "pseudo_inverse": decomp.pseudo_inverse.to_rows(),
            "interlacing": interlacing,
        }),
    )?;
    ctx.say(format!(
        "modes: lambdas {:?}, interlacing {}",
        decomp.lambdas,
        if interlacing.holds {
            "holds"
        } else {
            "violated"
        }
    ));
    Ok(())
}

pub fn inverse_modes(ctx: &Context, config: &Path) -> CliResult<()> {
    let cfg: InverseConfig = read_config(config)?;
    let solution = inverse_from_frequencies(&cfg.gammas, &cfg.lambdas)?;
    write_json(ctx, "inverse_modes.json", &solution)?;
    ctx.say(format!(
        "inverse-modes: round-trip error {:.3e}",
        solution.round_trip_error
    ));
    Ok(())
}

pub fn simulate_market(ctx: &Context, config: &Path) -> CliResult<()> {
    let cfg: MarketConfig = read_config(config)?;
    let n = cfg.market.n();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n).map(|i| format!("E_{i}")));
    header.push("E_total".into());

    let Some(stoch) = cfg.stochastic else {
        let initial = cfg.initial.ok_or_else(|| {
            CliError::Usage("initial: required when the `stochastic` block is absent".into())
        })?;
        let traj = market::simulate_deterministic(&cfg.market, &initial, &cfg.integrator)?;
        write_market(ctx, &cfg.market, "market.csv", &header, &traj, None)?;
        ctx.say(format!(
            "simulate-market: deterministic, {} frames",
            traj.len()
        ));
        return Ok(());
    };

    if cfg.initial.is_some() {
        return Err(CliError::Usage(
            "initial: not used by the stochastic model; set `modes[].r0` and `theta` instead"
                .into(),
        ));
    }
    let decomp = normal_modes(&cfg.market)?;
    let m = decomp.modes();
    let mut model = StochasticMarketModel::new(decomp, stoch.modes);
    model.theta = stoch.theta;
    if let Some(ps) = stoch.phase_sigma {
        model.phase_sigma = ps;
    }
    model.convention = stoch.convention;
    model.validate()?;
    let seed = ctx.seed(cfg.seed);
    let paths = ctx.paths(cfg.paths)?;
    header.extend((1..=m).map(|j| format!("r_{j}")));
    header.extend((1..=m).map(|j| format!("S_{j}")));
    let results = ensemble(paths, |p| {
        let mut noise = NoiseStream::new(seed, p, 2 * m);
        simulate_stochastic(&model, &cfg.integrator, &mut noise)
    })?;
    for (i, path) in results.iter().enumerate() {
        let extra: Vec<Vec<f64>> = path
            .radii
            .iter()
            .zip(&path.phases)
            .map(|(r, s)| r.iter().chain(s).copied().collect())
            .collect();
        write_market(
            ctx,
            &cfg.market,
            &path_file("market", i, paths),
            &header,
            &path.trajectory,
            Some(&extra),
        )?;
    }
    ctx.say(format!(
        "simulate-market: stochastic, {paths} path(s), {} frames, theta {:?}",
        results[0].trajectory.len(),
        results[0].theta
    ));
    Ok(())
}

fn write_market(
    ctx: &Context,
    spec: &oscimarket::MarketSpec,
    name: &str,
    header: &[String],
    traj: &Trajectory,
    extra: Option<&[Vec<f64>]>,
) -> CliResult<()> {
    let n = spec.n();
    let mut out = CsvOut::create(ctx.output(name), header)?;
    let mut row = Vec::with_capacity(header.len());
    for (k, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let state = oscimarket::ConstrainedState::new(s[..n].to_vec(), s[n..2 * n].to_vec());
        let (e, total) = market::component_energies(spec, &state);
        row.clear();
        row.push(*t);
        row.extend_from_slice(&state.x);
        row.extend_from_slice(&e);
        row.push(total);
        if let Some(extra) = extra {
            row.extend_from_slice(&extra[k]);
        }
        out.row(&row)?;
    }
    out.finish()
}

pub fn sectors(ctx: &Context, config: &Path) -> CliResult<()> {
    let cfg: SectorsConfig = read_config(config)?;
    let tol = cfg.tolerance.unwrap_or(DEFAULT_GAMMA_TOLERANCE);
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tolerance", "must be nonnegative").into());
    }
    let grouping = detect_sectors(&cfg.market, tol);
    let mut reductions = Vec::new();
    for s in grouping.groups.iter().filter(|s| s.members.len() > 1) {
        let reduced = reduce_sector(&cfg.market, &s.members, tol)?;
        let energy = match &cfg.state {
            Some(state) => Some(sector_energy_split(&cfg.market, &s.members, state)?),
            None => None,
        };
        reductions.push(json!({
            "members": s.members,
            "reduced": reduced,
            "energy": energy,
        }));
    }
    ctx.say(format!(
        "sectors: {} group(s), {} multi-member",
        grouping.groups.len(),
        reductions.len()
    ));
    write_json(
        ctx,
        "sectors.json",
        &json!({ "grouping": grouping, "reductions": reductions }),
    )
}

fn rotation() -> VectorField {
    VectorField::new(2, |p, out| {
        out[0] = p[1];
        out[1] = -p[0];
    })
}

fn build_system(cfg: &SystemConfig) -> CliResult<VectorFieldSet> {
    Ok(match cfg {
        SystemConfig::Brownian { dim, sigma } => {
            if *dim == 0 {
                return Err(Error::invalid("system.dim", "must be at least 1").into());
            }
            VectorFieldSet::brownian(*dim, *sigma)
        }
        SystemConfig::DampedOscillator { model } => {
            model.validate()?;
            model.vector_field_set()
        }
        SystemConfig::Rotation => VectorFieldSet::deterministic(rotation())?,
        SystemConfig::Constant { vector } => {
            if vector.is_empty() {
                return Err(Error::invalid("system.vector", "must not be empty").into());
            }
            VectorFieldSet::deterministic(VectorField::constant(vector.clone()))?
        }
    })
}

pub fn check_reduce(ctx: &Context, config: &Path) -> CliResult<()> {
    let cfg: ReduceConfig = read_config(config)?;
    let system = build_system(&cfg.system)?;
    let setup = match &cfg.projection {
        ProjectionConfig::Coordinate {
            source_dim,
            coords,
            range,
        } => ProjectionSetup::coordinate_projection(*source_dim, coords.clone(), *range)?,
        ProjectionConfig::Radius => ProjectionSetup::radius(),
    };
    let report = match cfg.check {
        CheckKind::Sds => check_projectable_sds(
            &system,
            &setup,
            cfg.fiber_samples,
            cfg.pass_threshold,
            cfg.fail_threshold,
        )?,
        CheckKind::Deterministic => check_projectable_deterministic(
            system.drift(),
            &setup,
            cfg.fiber_samples,
            cfg.pass_threshold,
            cfg.fail_threshold,
        )?,
    };
    ctx.say(format!(
        "check-reduce: {:?}, max fiber variation {:.3e}",
        report.verdict, report.max_fiber_variation
    ));
    write_json(ctx, "check_reduce.json", &report)
}

pub fn spectrum(ctx: &Context, csv_path: &Path, peaks: usize) -> CliResult<()> {
    let mut reader = csv::Reader::from_path(csv_path).map_err(|e| io_err(csv_path, e))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| io_err(csv_path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if names.len() < 2 {
        return Err(CliError::Usage(format!(
            "{}: need a time column and at least one series",
            csv_path.display()
        )));
    }
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(csv_path, e))?;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::Usage(format!(
                    "{}: row {}, column `{}`: not a number: {field:?}",
                    csv_path.display(),
                    row + 2,
                    names[c]
                ))
            })?;
            columns[c].push(v);
        }
    }
    let times = &columns[0];
    if times.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: times.len(),
            min: oscimarket::stats::MIN_PERIODOGRAM_LEN,
        }
        .into());
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0)
        || times
            .windows(2)
            .any(|w| ((w[1] - w[0]) - dt).abs() > SPACING_TOL * dt)
    {
        return Err(CliError::Usage(format!(
            "{}: column `{}` must be uniformly spaced and increasing",
            csv_path.display(),
            names[0]
        )));
    }

    let grams = columns[1..]
        .iter()
        .map(|c| periodogram(c, dt))
        .collect::<oscimarket::Result<Vec<_>>>()?;
    let mut header = vec!["omega".to_string()];
    header.extend(names[1..].iter().cloned());
    let mut out = CsvOut::create(ctx.output("spectrum.csv"), &header)?;
    let mut row = Vec::with_capacity(header.len());
    for k in 0..grams[0].len() {
        row.clear();
        row.push(grams[0].frequencies[k]);
        row.extend(grams.iter().map(|g| g.power[k]));
        out.row(&row)?;
    }
    out.finish()?;

    let header: Vec<String> = ["series", "rank", "omega"].map(String::from).into();
    let mut out = CsvOut::create(ctx.output("peaks.csv"), &header)?;
    for (name, g) in names[1..].iter().zip(&grams) {
        let separation = PEAK_SEPARATION_BINS * g.bin_width();
        // A column with fewer resolvable peaks reports the ones it has.
        let found = match find_peaks(g, peaks, separation) {
            Err(Error::InsufficientPeaks { found, requested }) => {
                eprintln!("warning: {name}: found {found} of {requested} requested peaks");
                match found {
                    0 => Vec::new(),
                    k => find_peaks(g, k, separation)?,
                }
            }
            other => other?,
        };
        for (rank, w) in found.iter().enumerate() {
            out.line(format!("{name},{},{w:.16e}", rank + 1))?;
        }
        ctx.say(format!("spectrum: {name}: peaks {found:?}"));
    }
    out.finish()?;
    ctx.say(format!(
        "wrote {} and {}",
        ctx.output("spectrum.csv").display(),
        ctx.output("peaks.csv").display()
    ));
    Ok(())
}

pub fn density(ctx: &Context, config: &Path) -> CliResult<()> {
    let cfg: DensityConfig = read_config(config)?;
    if cfg.bins == 0 {
        return Err(Error::invalid("bins", "must be at least 1").into());
    }
    if !(cfg.burn_in >= 0.0 && cfg.burn_in.is_finite()) {
        return Err(Error::invalid("burn_in", "must be nonnegative").into());
    }
    let density = stationary_radial_density(&cfg.model, cfg.convention)?;
    let seed = ctx.seed(cfg.seed);
    let paths = ctx.paths(cfg.paths)?;
    let runs = ensemble(paths, |p| {
        let mut noise = NoiseStream::new(seed, p, 1);
        simulate_polar_radial(
            &cfg.model,
            cfg.r0,
            &cfg.integrator,
            &mut noise,
            cfg.convention,
        )
    })?;
    let samples: Vec<f64> = runs
        .iter()
        .flat_map(|t| {
            t.times
                .iter()
                .zip(&t.states)
                .filter(|(t, _)| **t >= cfg.burn_in)
                .map(|(_, s)| s[0])
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::invalid("burn_in", "discards every recorded sample").into());
    }
    let emp = EmpiricalDistribution::new(samples)?;
    let ks = ks_statistic(&emp, |r| density.cdf(r));

    let r_max = match cfg.r_max {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(r) => {
            return Err(Error::invalid("r_max", format!("must be positive, got {r}")).into())
        }
        None => quantile(|r| density.cdf(r), 1.0 - 1e-6, density.support_upper()),
    };
    let width = r_max / cfg.bins as f64;
    let mut counts = vec![0usize; cfg.bins];
    for &r in emp.samples() {
        let b = (r / width) as usize;
        if b < cfg.bins {
            counts[b] += 1;
        }
    }
    let header: Vec<String> = ["r", "analytic_pdf", "empirical_pdf"]
        .map(String::from)
        .into();
    let mut out = CsvOut::create(ctx.output("density.csv"), &header)?;
    let total = emp.len() as f64;
    for (b, &count) in counts.iter().enumerate() {
        let r = (b as f64 + 0.5) * width;
        out.row(&[r, density.pdf(r), count as f64 / (total * width)])?;
    }
    out.finish()?;
    ctx.say(format!(
        "density: {} samples, KS {ks:.4e}, analytic mean {:.6}, mode {:.6}",
        emp.len(),
        density.mean(),
        density.mode()
    ));
    Ok(())
}

/// Bisection for `cdf(r) = p` on `[0, upper]`.
fn quantile(cdf: impl Fn(f64) -> f64, p: f64, upper: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn fit(
    ctx: &Context,
    csv_path: &Path,
    mode: &str,
    fair_value: Option<f64>,
    window: usize,
) -> CliResult<()> {
    let mode = match mode {
        "log_ratio" => MispricingMode::LogRatio,
        "difference" => MispricingMode::Difference,
        other => {
            return Err(CliError::Usage(format!(
                "--mode: expected `log_ratio` or `difference`, got `{other}`"
            )))
        }
    };
    let series = ingest::load_csv(csv_path)?;
    let report = ingest::fit_series(
        &series,
        &FitOptions {
            mode,
            constant_fair_value: fair_value,
            rolling_window: window,
        },
    )?;
    match report.fit.period_estimate {
        Some(p) => ctx.say(format!(
            "fit: oscillatory, period {p:.1} days, damping {:.3e} per day",
            report.fit.damping_estimate.unwrap_or(f64::NAN)
        )),
        None => ctx.say("fit: not oscillatory"),
    }
    write_json(ctx, "fit.json", &report)
}

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{load_config, parse_grid, Resolver};
use super::output::{OutDir, RunMeta, Table};
use super::svg::{polar, Mark, Plot, Series};
use super::{
    CliError, Command, CommonArgs, EstimateArgs, LimitsArgs, SweepPhaseArgs, SweepPhotonsArgs,
    TrackArgs,
};
use crate::bounds::{
    build_bound_table, fisher_at_phase, max_fisher, optimal_phase, squeezed_noon_crossover,
    SchemeKind,
};
use crate::estimator::{
    map_estimate_detail, monte_carlo, MonteCarloConfig, PhaseGrid, PhasePosterior, UniformPrior,
    WidthKind,
};
use crate::model::StateModel;
use crate::sampler::{
    batch_from_parts, read_batch_csv, sample_batch_stream, sample_timeseries, BatchMetadata,
    QuadratureBatch, SamplerOptions,
};
use crate::tracker::{
    bandpass_with_order, fit_tone, synthesize_demo_signal, track, welch, window_response,
    NoiseProfile, PhaseTimeSeries, Spectrum, TrackerConfig,
};

pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_OUT: &str = "out";

pub fn run(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Limits(a) => limits(a),
        Command::SweepPhase(a) => sweep_phase(a),
        Command::SweepPhotons(a) => sweep_photons(a),
        Command::Estimate(a) => estimate(a),
        Command::Track(a) => track_command(a),
    }
}

struct Setup {
    res: Resolver,
    out: String,
}

fn setup(common: &CommonArgs) -> Result<Setup, CliError> {
    let file = match &common.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    let mut res = Resolver::new(file);
    let out = res.get_unrecorded("out", common.out.clone(), DEFAULT_OUT.to_string())?;
    Ok(Setup { res, out })
}

fn state_summary(state: &StateModel) -> StateSummary {
    let vars = state.variances();
    StateSummary {
        n: state.mean_photon_number(),
        r: state.r(),
        eta: state.eta(),
        v_minus: vars.v_minus(),
        v_plus: vars.v_plus(),
    }
}

#[derive(Debug, Serialize)]
struct StateSummary {
    n: f64,
    r: f64,
    eta: f64,
    v_minus: f64,
    v_plus: f64,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

fn sampler_options(jitter: f64) -> Result<SamplerOptions, CliError> {
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(CliError::Usage(format!(
            "jitter must be finite and >= 0, got {jitter}"
        )));
    }
    Ok(SamplerOptions {
        phase_jitter_rms: jitter,
    })
}

// ---------------------------------------------------------------- limits

#[derive(Debug, Serialize)]
struct LimitsSummary {
    meta: RunMeta,
    eta: f64,
    noon_loss_model: String,
    points: usize,
    /// Photon number where lossy squeezing falls behind ideal NOON.
    crossover_n: Option<f64>,
    /// Large-n limit of the lossy squeezed Fisher information per photon.
    per_photon_fisher_limit: Option<f64>,
}

fn limits(a: &LimitsArgs) -> Result<Vec<PathBuf>, CliError> {
    let Setup { mut res, out } = setup(&a.common)?;
    let eta = res.get("eta", a.common.eta, 0.89)?;
    let grid_text = res.get("photons", a.photons.clone(), "0.1:100:121:log".to_string())?;
    res.get("seed", a.common.seed, DEFAULT_SEED)?;
    let meta = RunMeta::new("limits", res.finish()?);

    let grid = parse_grid(&grid_text)?;
    let bounds = build_bound_table(&grid, eta)?;
    let crossover = squeezed_noon_crossover(eta)?;

    let mut columns = vec!["n".to_string()];
    columns.extend(
        SchemeKind::ALL
            .iter()
            .map(|s| format!("sigma_{}", s.column())),
    );
    columns.extend(
        SchemeKind::ALL
            .iter()
            .map(|s| format!("fisher_{}", s.column())),
    );
    columns.push("fisher_per_photon_sqz_lossy".to_string());
    let mut table = Table::new(columns);
    for row in &bounds.rows {
        let mut cells = vec![row.n];
        cells.extend(row.bounds.iter().map(|b| b.sigma));
        cells.extend(row.bounds.iter().map(|b| b.fisher));
        cells.push(row.get(SchemeKind::SqueezedLossy).fisher / row.n);
        table.push(cells);
    }

    let plot = Plot {
        title: format!("Phase sensitivity per sample, eta = {eta}"),
        x_label: "mean photon number n".into(),
        y_label: "delta phi (rad)".into(),
        x_log: true,
        y_log: true,
        series: SchemeKind::ALL
            .iter()
            .map(|s| {
                let name = format!("sigma_{}", s.column());
                let mark = if matches!(s, SchemeKind::Snl) {
                    Mark::Dashed
                } else {
                    Mark::Line
                };
                Series::new(s.column(), table.xy("n", &name), mark)
            })
            .collect(),
    };

    let summary = LimitsSummary {
        eta,
        noon_loss_model: bounds.noon_loss_model.clone(),
        points: bounds.rows.len(),
        crossover_n: crossover,
        per_photon_fisher_limit: (eta < 1.0).then(|| 2.0 / (1.0 - eta)),
        meta: meta.clone(),
    };
    let extra = [("noon_loss_model", bounds.noon_loss_model.clone())];

    let mut dir = OutDir::create(Path::new(&out))?;
    dir.write_table("bounds.csv", &table, &meta, &extra)?;
    dir.write("bounds.svg", &plot.render())?;
    dir.write_json("limits.json", &summary)?;
    Ok(dir.written().to_vec())
}

// ---------------------------------------------------------------- sweep-phase

#[derive(Debug, Serialize)]
struct PhaseSweepCase {
    state: StateSummary,
    phi_opt: f64,
    /// Phase of the smallest estimator variance on the sweep grid.
    phi_min_var: Option<f64>,
    min_var: Option<f64>,
    crb_at_opt: f64,
    /// Shot-noise variance for `m` samples, `1 / (m n)`.
    snl_var: f64,
    /// Ideal NOON variance with `N = 2n`, `1 / (4 m n^2)`.
    noon_var: f64,
    /// Four-photon NOON reference, `1 / (16 m)`.
    noon4_var: f64,
}

#[derive(Debug, Serialize)]
struct PhaseSweepSummary {
    meta: RunMeta,
    cases: Vec<PhaseSweepCase>,
}

fn sweep_phase(a: &SweepPhaseArgs) -> Result<Vec<PathBuf>, CliError> {
    let Setup { mut res, out } = setup(&a.common)?;
    let eta = res.get("eta", a.common.eta, 1.0)?;
    let seed = res.get("seed", a.common.seed, DEFAULT_SEED)?;
    let photons = res.get("photons", a.photons.clone(), "1.8".to_string())?;
    let phases = res.get("phases", a.phases.clone(), "0.02:1.57:32".to_string())?;
    let m = res.get("m", a.m, 1000usize)?;
    let trials = res.get("trials", a.trials, 500usize)?;
    let grid_points = res.get("grid-points", a.grid_points, 2000usize)?;
    let jitter = res.get("jitter", a.jitter, 0.0)?;
    let meta = RunMeta::new("sweep-phase", res.finish()?);

    let photon_grid = parse_grid(&photons)?;
    let phase_grid = parse_grid(&phases)?;
    if let Some(p) = phase_grid.iter().find(|p| !(**p > 0.0 && **p < FRAC_PI_2)) {
        return Err(CliError::Usage(format!(
            "phases must lie strictly inside (0, pi/2), got {p}"
        )));
    }
    let mut cfg = MonteCarloConfig::new(m, trials, seed);
    cfg.width_grid = Some(PhaseGrid::new(0.0, FRAC_PI_2, grid_points)?);
    cfg.sampler = sampler_options(jitter)?;

    let with_var = trials > 1;
    let mut columns = vec!["n", "phi_true"];
    if with_var {
        columns.push("var_estimates");
    }
    columns.extend(["mean_width", "crb", "mean_estimate", "clamped_fraction"]);
    let mut table = Table::new(columns);
    let mut cases = Vec::new();
    let mut extra = Vec::new();
    let mut line_series = Vec::new();
    let mut polar_series = Vec::new();

    for &n in &photon_grid {
        let state = StateModel::for_target_photons(positive("photons", n)?, eta)?;
        let vars = state.variances();
        let phi_opt = optimal_phase(&vars)?;
        let mut points = Vec::new();
        let mut crb_points = Vec::new();
        for &phi in &phase_grid {
            let s = monte_carlo(&vars, phi, &cfg)?;
            let crb = s
                .crb
                .ok_or_else(|| CliError::NonFinite(format!("CRB at phi = {phi}")))?;
            let width = s.mean_width.unwrap_or(f64::NAN);
            let mut row = vec![n, phi];
            if let Some(v) = s.variance {
                row.push(v);
            }
            row.extend([width, crb, s.mean, s.clamped_fraction]);
            table.push(row);
            points.push((phi, s.variance.unwrap_or(width * width)));
            crb_points.push((phi, crb));
        }
        let best = with_var.then(|| {
            points.iter().copied().fold(
                (f64::NAN, f64::INFINITY),
                |b, p| if p.1 < b.1 { p } else { b },
            )
        });
        let case = PhaseSweepCase {
            state: state_summary(&state),
            phi_opt,
            phi_min_var: best.map(|b| b.0),
            min_var: best.map(|b| b.1),
            crb_at_opt: 1.0 / (m as f64 * max_fisher(&vars)),
            snl_var: 1.0 / (m as f64 * n),
            noon_var: 1.0 / (4.0 * m as f64 * n * n),
            noon4_var: 1.0 / (16.0 * m as f64),
        };
        extra.push((n, case.snl_var, case.noon_var, case.noon4_var));

        let (lo, hi) = (phase_grid[0], phase_grid[phase_grid.len() - 1]);
        let label = if with_var { "var" } else { "width^2" };
        let cap = points.iter().map(|p| p.1).fold(0.0, f64::max);
        polar_series.push(Series::new(
            format!("{label} n={n}"),
            points.clone(),
            Mark::Line,
        ));
        polar_series.push(Series::new(
            format!("CRB n={n}"),
            crb_points.iter().map(|&(p, c)| (p, c.min(cap))).collect(),
            Mark::Dashed,
        ));
        line_series.push(Series::new(format!("{label} n={n}"), points, Mark::Points));
        line_series.push(Series::new(format!("CRB n={n}"), crb_points, Mark::Line));
        line_series.push(Series::new(
            format!("SNL n={n}"),
            vec![(lo, case.snl_var), (hi, case.snl_var)],
            Mark::Dashed,
        ));
        line_series.push(Series::new(
            "NOON N=4",
            vec![(lo, case.noon4_var), (hi, case.noon4_var)],
            Mark::Dashed,
        ));
        cases.push(case);
    }

    let extra: Vec<(String, String)> = extra
        .iter()
        .flat_map(|(n, snl, noon, noon4)| {
            [
                (format!("snl_var[n={n}]"), snl.to_string()),
                (format!("noon_var[n={n}]"), noon.to_string()),
                (format!("noon4_var[n={n}]"), noon4.to_string()),
            ]
        })
        .collect();
    let extra: Vec<(&str, String)> = extra.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();

    let plot = Plot {
        title: format!("Estimator variance vs phase, M = {m}, {trials} trials"),
        x_label: "phi (rad)".into(),
        y_label: "variance (rad^2)".into(),
        x_log: false,
        y_log: true,
        series: line_series,
    };
    let summary = PhaseSweepSummary {
        meta: meta.clone(),
        cases,
    };

    let mut dir = OutDir::create(Path::new(&out))?;
    dir.write_table("sweep_phase.csv", &table, &meta, &extra)?;
    dir.write("sweep_phase.svg", &plot.render())?;
    dir.write(
        "sweep_phase_polar.svg",
        &polar(
            "Estimator variance vs phase",
            "variance (rad^2)",
            &polar_series,
        ),
    )?;
    dir.write_json("sweep_phase.json", &summary)?;
    Ok(dir.written().to_vec())
}

// ---------------------------------------------------------------- sweep-photons

#[derive(Debug, Serialize)]
struct PhotonSweepSummary {
    meta: RunMeta,
    /// First swept photon number whose Monte Carlo sensitivity is worse than
    /// ideal NOON, interpolated on a log scale.
    noon_crossover_n: Option<f64>,
    /// Largest ratio of Monte Carlo sensitivity to the lossy squeezed bound.
    max_ratio_to_bound: f64,
    max_clamped_fraction: f64,
}

fn sweep_photons(a: &SweepPhotonsArgs) -> Result<Vec<PathBuf>, CliError> {
    let Setup { mut res, out } = setup(&a.common)?;
    let eta = res.get("eta", a.common.eta, 0.89)?;
    let seed = res.get("seed", a.common.seed, DEFAULT_SEED)?;
    let photons = res.get("photons", a.photons.clone(), "0.25:25:12:log".to_string())?;
    let m = res.get("m", a.m, 1000usize)?;
    let trials = res.get("trials", a.trials, 500usize)?;
    let jitter = res.get("jitter", a.jitter, 0.0)?;
    let meta = RunMeta::new("sweep-photons", res.finish()?);

    if trials < 2 {
        return Err(CliError::Usage("sweep-photons needs trials >= 2".into()));
    }
    let grid = parse_grid(&photons)?;
    let bounds = build_bound_table(&grid, eta)?;
    let mut cfg = MonteCarloConfig::new(m, trials, seed);
    cfg.sampler = sampler_options(jitter)?;

    let mut columns: Vec<String> = [
        "n",
        "r",
        "phi_opt",
        "var_mc",
        "sigma_mc",
        "fisher_mc",
        "clamped_fraction",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    columns.extend(
        SchemeKind::ALL
            .iter()
            .map(|s| format!("sigma_{}", s.column())),
    );
    let mut table = Table::new(columns);

    let mut crossover = None;
    let mut prev: Option<(f64, f64)> = None;
    let mut max_ratio: f64 = 0.0;
    let mut max_clamped: f64 = 0.0;
    for row in &bounds.rows {
        let state = StateModel::for_target_photons(row.n, eta)?;
        let vars = state.variances();
        let phi = optimal_phase(&vars)?;
        let s = monte_carlo(&vars, phi, &cfg)?;
        let var = s
            .variance
            .ok_or_else(|| CliError::NonFinite("estimator variance".into()))?;
        let sigma = (var * m as f64).sqrt();
        let mut cells = vec![
            row.n,
            state.r(),
            phi,
            var,
            sigma,
            1.0 / (var * m as f64),
            s.clamped_fraction,
        ];
        cells.extend(row.bounds.iter().map(|b| b.sigma));
        table.push(cells);

        max_ratio = max_ratio.max(sigma / row.get(SchemeKind::SqueezedLossy).sigma);
        max_clamped = max_clamped.max(s.clamped_fraction);
        // log-gap between MC sensitivity and ideal NOON
        let gap = (sigma / row.get(SchemeKind::NoonIdeal).sigma).ln();
        if crossover.is_none() {
            if let Some((pn, pg)) = prev {
                if pg <= 0.0 && gap > 0.0 {
                    let t = -pg / (gap - pg);
                    crossover = Some((pn.ln() + t * (row.n.ln() - pn.ln())).exp());
                }
            }
        }
        prev = Some((row.n, gap));
    }

    let mut series: Vec<Series> = SchemeKind::ALL
        .iter()
        .map(|s| {
            let name = format!("sigma_{}", s.column());
            Series::new(s.column(), table.xy("n", &name), Mark::Line)
        })
        .collect();
    series.push(Series::new(
        "Monte Carlo",
        table.xy("n", "sigma_mc"),
        Mark::Points,
    ));
    let plot = Plot {
        title: format!("Sensitivity at the optimal phase, eta = {eta}, M = {m}"),
        x_label: "mean photon number n".into(),
        y_label: "delta phi * sqrt(M) (rad)".into(),
        x_log: true,
        y_log: true,
        series,
    };
    let summary = PhotonSweepSummary {
        meta: meta.clone(),
        noon_crossover_n: crossover,
        max_ratio_to_bound: max_ratio,
        max_clamped_fraction: max_clamped,
    };

    let mut dir = OutDir::create(Path::new(&out))?;
    dir.write_table("sweep_photons.csv", &table, &meta, &[])?;
    dir.write("sweep_photons.svg", &plot.render())?;
    dir.write_json("sweep_photons.json", &summary)?;
    Ok(dir.written().to_vec())
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Serialize)]
struct Checkpoint {
    m: usize,
    map: f64,
    width: f64,
}

#[derive(Debug, Serialize)]
struct EstimateSummary {
    meta: RunMeta,
    /// Grid MAP phase.
    map: f64,
    /// Posterior standard deviation.
    width: f64,
    m: usize,
    /// Whether the closed-form MAP was clamped to an edge of `[0, pi/2]`.
    clamped: bool,
    map_closed_form: f64,
    posterior_mean: f64,
    fwhm: f64,
    laplace_width: Option<f64>,
    phi_true: f64,
    v_minus: f64,
    v_plus: f64,
    checkpoints: Vec<Checkpoint>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn import_batch(input: &str, meta_path: Option<&str>) -> Result<QuadratureBatch, CliError> {
    let input = Path::new(input);
    let meta_path = meta_path.map_or_else(|| input.with_extension("json"), PathBuf::from);
    let file = std::fs::File::open(input).map_err(|source| CliError::Io {
        path: input.to_path_buf(),
        source,
    })?;
    let samples = read_batch_csv(BufReader::new(file))?;
    let meta: BatchMetadata = serde_json::from_str(&read_text(&meta_path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", meta_path.display())))?;
    Ok(batch_from_parts(samples, &meta)?)
}

fn estimate(a: &EstimateArgs) -> Result<Vec<PathBuf>, CliError> {
    let Setup { mut res, out } = setup(&a.common)?;
    let seed = res.get("seed", a.common.seed, DEFAULT_SEED)?;
    let grid_points = res.get("grid-points", a.grid_points, 10_000usize)?;
    let checkpoints = res.get("checkpoints", a.checkpoints.clone(), "1,10,100".to_string())?;
    let input = res.get_opt("input", a.input.clone())?;
    let batch = match input {
        Some(path) => {
            let meta_path = res.get_opt("meta", a.meta.clone())?;
            import_batch(&path, meta_path.as_deref())?
        }
        None => {
            let eta = res.get("eta", a.common.eta, 1.0)?;
            let state = match res.get_opt("r", a.r)? {
                Some(r) => StateModel::new(r, eta)?,
                None => {
                    let n = res.get("photons", a.photons, 1.8)?;
                    StateModel::for_target_photons(positive("photons", n)?, eta)?
                }
            };
            let vars = state.variances();
            let phi = match res.get_opt("phi", a.phi)? {
                Some(p) if (0.0..=FRAC_PI_2).contains(&p) => p,
                Some(p) => {
                    return Err(CliError::Usage(format!(
                        "phi must lie in [0, pi/2], got {p}"
                    )))
                }
                None => {
                    let p = optimal_phase(&vars)?;
                    res.note("phi", p);
                    p
                }
            };
            let m = res.get("m", a.m, 1000usize)?;
            let jitter = res.get("jitter", a.jitter, 0.0)?;
            sample_batch_stream(&vars, phi, m, seed, 0, &sampler_options(jitter)?)?
        }
    };
    let meta = RunMeta::new("estimate", res.finish()?);

    let m = batch.m();
    let mut marks: Vec<usize> = parse_grid(&checkpoints)?
        .iter()
        .map(|c| {
            if c.fract() == 0.0 && *c >= 1.0 {
                Ok(*c as usize)
            } else {
                Err(CliError::Usage(format!(
                    "checkpoints must be positive integers, got {c}"
                )))
            }
        })
        .collect::<Result<_, _>>()?;
    marks.retain(|c| *c < m);
    marks.push(m);
    marks.sort_unstable();
    marks.dedup();

    let grid = PhaseGrid::new(0.0, FRAC_PI_2, grid_points)?;
    let prior = UniformPrior::default();
    let mut post = PhasePosterior::from_prior(&batch.vars, &grid, &prior)?;
    let mut snapshots: Vec<Vec<f64>> = Vec::new();
    let mut recorded = Vec::new();
    let mut next = marks.iter().peekable();
    for (i, &x) in batch.samples.iter().enumerate() {
        post.absorb(x)?;
        if next.peek() == Some(&&(i + 1)) {
            next.next();
            snapshots.push(post.density());
            recorded.push(Checkpoint {
                m: i + 1,
                map: post.map_phase(),
                width: post.credible_width(),
            });
        }
    }

    let closed = map_estimate_detail(&batch.vars, batch.sum_of_squares(), m)?;
    let density = post.density();
    let mut posterior_table = Table::new(["phi", "density"]);
    for (phi, d) in grid.points().zip(&density) {
        posterior_table.push(vec![phi, *d]);
    }
    let mut columns = vec!["phi".to_string()];
    columns.extend(recorded.iter().map(|c| format!("density_m{}", c.m)));
    let mut updates = Table::new(columns);
    for (i, phi) in grid.points().enumerate() {
        let mut row = vec![phi];
        row.extend(snapshots.iter().map(|s| s[i]));
        updates.push(row);
    }
    let mut batch_table = Table::new(["index", "x"]);
    for (i, x) in batch.samples.iter().enumerate() {
        batch_table.push(vec![i as f64, *x]);
    }

    let series = recorded
        .iter()
        .zip(&snapshots)
        .map(|(c, s)| {
            Series::new(
                format!("M = {}", c.m),
                grid.points().zip(s.iter().copied()).collect(),
                Mark::Line,
            )
        })
        .collect();
    let plot = Plot {
        title: "Posterior phase density".into(),
        x_label: "phi (rad)".into(),
        y_label: "density (1/rad)".into(),
        x_log: false,
        y_log: false,
        series,
    };

    let summary = EstimateSummary {
        meta: meta.clone(),
        map: post.map_phase(),
        width: post.credible_width(),
        m,
        clamped: closed.clamped,
        map_closed_form: closed.phase,
        posterior_mean: post.mean(),
        fwhm: post.width(WidthKind::Fwhm),
        laplace_width: post.laplace_width(),
        phi_true: batch.phi_true,
        v_minus: batch.vars.v_minus(),
        v_plus: batch.vars.v_plus(),
        checkpoints: recorded,
    };

    let mut dir = OutDir::create(Path::new(&out))?;
    dir.write_table("batch.csv", &batch_table, &meta, &[])?;
    dir.write_json("batch.json", &batch.metadata())?;
    dir.write_table("posterior.csv", &posterior_table, &meta, &[])?;
    dir.write_table("posterior_updates.csv", &updates, &meta, &[])?;
    dir.write("posterior.svg", &plot.render())?;
    dir.write_json("estimate.json", &summary)?;
    Ok(dir.written().to_vec())
}

// ---------------------------------------------------------------- track

#[derive(Debug, Serialize)]
struct ToneSummary {
    freq_hz: f64,
    injected_amp: f64,
    /// Amplitude fitted on the raw estimate stream.
    fitted_amp: f64,
    /// Boxcar response of the estimation window at the tone frequency.
    window_response: f64,
    /// Fitted amplitude divided by the window response.
    corrected_amp: f64,
    relative_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SpectrumSummary {
    resolution_hz: f64,
    segments: usize,
    /// Highest raw PSD bin above DC.
    peak_freq_hz: f64,
    /// Median raw PSD above the drift corner and below the band.
    floor_measured: f64,
    /// White level `2 / (rate W F(phi_opt))` predicted by the Cramer-Rao bound.
    floor_expected: f64,
    /// Highest raw PSD bin within one bin of the tone frequency, relative to
    /// the measured floor.
    tone_peak_over_floor_db: f64,
    /// Highest raw PSD bin in the band relative to the band median.
    band_peak_over_median_db: f64,
    /// Peak in-band PSD over mean out-of-band PSD after bandpass filtering.
    suppression_db: f64,
}

#[derive(Debug, Serialize)]
struct TrackSummary {
    meta: RunMeta,
    state: StateSummary,
    center_phase: f64,
    estimate_rate_hz: f64,
    samples: usize,
    windows: usize,
    drift_rms: f64,
    tone: ToneSummary,
    spectrum: SpectrumSummary,
}

fn series_table(s: &PhaseTimeSeries) -> Table {
    let mut t = Table::new(["t", "delta_phi"]);
    for (time, d) in s.t.iter().zip(&s.delta_phi) {
        t.push(vec![*time, *d]);
    }
    t
}

fn psd_table(s: &Spectrum) -> Table {
    let mut t = Table::new(["freq_hz", "psd"]);
    for (f, p) in s.freq.iter().zip(&s.psd) {
        t.push(vec![*f, *p]);
    }
    t
}

fn track_command(a: &TrackArgs) -> Result<Vec<PathBuf>, CliError> {
    let Setup { mut res, out } = setup(&a.common)?;
    let eta = res.get("eta", a.common.eta, 0.89)?;
    let seed = res.get("seed", a.common.seed, DEFAULT_SEED)?;
    let n = res.get("photons", a.photons, 6.0)?;
    let fs = res.get("fs", a.fs, 1e6)?;
    let window = res.get("window", a.window, 100usize)?;
    let duration = res.get("duration", a.duration, 1.0)?;
    let tone_freq = res.get("tone-freq", a.tone_freq, 3000.0)?;
    let tone_amp = res.get("tone-amp", a.tone_amp, 0.01)?;
    let noise_rms = res.get("noise-rms", a.noise_rms, 0.002)?;
    let noise_corner = res.get("noise-corner", a.noise_corner, 200.0)?;
    let band_lo = res.get("band-lo", a.band_lo, 2000.0)?;
    let band_hi = res.get("band-hi", a.band_hi, 4000.0)?;
    let jitter = res.get("jitter", a.jitter, 0.0)?;
    let meta = RunMeta::new("track", res.finish()?);

    let state = StateModel::for_target_photons(positive("photons", n)?, eta)?;
    let vars = state.variances();
    let cfg = TrackerConfig {
        fs,
        window_m: window,
        band_lo,
        band_hi,
        ..TrackerConfig::for_state(&vars)?
    };
    cfg.validate()?;
    let noise = NoiseProfile::new(noise_rms, noise_corner, seed);
    let demo = synthesize_demo_signal(&cfg, tone_freq, tone_amp, Some(&noise))?;
    let input = sample_timeseries(
        &vars,
        |t| demo.phase_at(t),
        fs,
        duration,
        seed,
        &sampler_options(jitter)?,
    )?;
    let raw = track(&input.samples, &vars, &cfg)?;
    let filtered = bandpass_with_order(&raw, band_lo, band_hi, cfg.filter_order)?;
    let rate = cfg.estimate_rate();
    let psd_raw = welch(&raw.delta_phi, rate, &cfg.welch)?;
    let psd_filtered = welch(&filtered.delta_phi, rate, &cfg.welch)?;

    let fit = fit_tone(&raw, tone_freq)?;
    let response = window_response(tone_freq, window, fs);
    let corrected = fit.corrected_amplitude(window, fs);
    let floor_lo = if noise_rms > 0.0 {
        2.0 * noise_corner
    } else {
        0.0
    };
    let floor_measured = psd_raw
        .median_in(floor_lo.max(psd_raw.resolution), band_lo)
        .or_else(|| psd_raw.median_in(psd_raw.resolution, 0.5 * rate))
        .unwrap_or(f64::NAN);
    let floor_expected = 2.0 / (rate * window as f64 * fisher_at_phase(&vars, cfg.center_phase));
    let band_peak = psd_raw.peak_in(band_lo, band_hi).map_or(f64::NAN, |p| p.1);
    let band_median = psd_raw.median_in(band_lo, band_hi).unwrap_or(f64::NAN);
    let res_hz = psd_raw.resolution;
    let tone_peak = psd_raw
        .peak_in(tone_freq - res_hz, tone_freq + res_hz)
        .map_or(f64::NAN, |p| p.1);
    let summary = TrackSummary {
        meta: meta.clone(),
        state: state_summary(&state),
        center_phase: cfg.center_phase,
        estimate_rate_hz: rate,
        samples: input.len(),
        windows: raw.len(),
        drift_rms: demo.drift_rms(),
        tone: ToneSummary {
            freq_hz: tone_freq,
            injected_amp: tone_amp,
            fitted_amp: fit.amplitude(),
            window_response: response,
            corrected_amp: corrected,
            relative_error: (tone_amp > 0.0).then(|| (corrected - tone_amp).abs() / tone_amp),
        },
        spectrum: SpectrumSummary {
            resolution_hz: psd_raw.resolution,
            segments: psd_raw.segments,
            peak_freq_hz: psd_raw.peak().map_or(f64::NAN, |p| p.0),
            floor_measured,
            floor_expected,
            tone_peak_over_floor_db: 10.0 * (tone_peak / floor_measured).log10(),
            band_peak_over_median_db: 10.0 * (band_peak / band_median).log10(),
            suppression_db: psd_filtered
                .out_of_band_suppression_db(band_lo, band_hi)
                .unwrap_or(f64::NAN),
        },
    };
    let check = [
        summary.spectrum.peak_freq_hz,
        floor_measured,
        summary.spectrum.tone_peak_over_floor_db,
        summary.spectrum.band_peak_over_median_db,
        summary.spectrum.suppression_db,
        corrected,
    ];
    if check.iter().any(|v| !v.is_finite()) {
        return Err(CliError::NonFinite("track spectrum summary".into()));
    }

    // first 20 ms of the traces
    let shown = ((0.02 * rate) as usize).clamp(2, raw.len());
    let take = |s: &PhaseTimeSeries| -> Vec<(f64, f64)> {
        s.t.iter()
            .zip(&s.delta_phi)
            .take(shown)
            .map(|(t, d)| (t * 1e3, *d))
            .collect()
    };
    let trace = Plot {
        title: format!("Tracked phase, {window}-sample windows"),
        x_label: "t (ms)".into(),
        y_label: "delta phi (rad)".into(),
        x_log: false,
        y_log: false,
        series: vec![
            Series::new("raw", take(&raw), Mark::Line),
            Series::new("bandpassed", take(&filtered), Mark::Line),
        ],
    };
    let spec_points = |s: &Spectrum| -> Vec<(f64, f64)> {
        s.freq
            .iter()
            .zip(&s.psd)
            .skip(1)
            .map(|(f, p)| (*f, *p))
            .collect()
    };
    let psd_plot = Plot {
        title: "Welch PSD of the phase estimates".into(),
        x_label: "frequency (Hz)".into(),
        y_label: "PSD (rad^2/Hz)".into(),
        x_log: false,
        y_log: true,
        series: vec![
            Series::new("raw", spec_points(&psd_raw), Mark::Line),
            Series::new("bandpassed", spec_points(&psd_filtered), Mark::Line),
            Series::new(
                "CRB floor",
                vec![(0.0, floor_expected), (0.5 * rate, floor_expected)],
                Mark::Dashed,
            ),
        ],
    };

    let extra = [
        ("state_n", summary.state.n.to_string()),
        ("state_r", summary.state.r.to_string()),
        ("state_v_minus", summary.state.v_minus.to_string()),
        ("state_v_plus", summary.state.v_plus.to_string()),
        ("center_phase", cfg.center_phase.to_string()),
        ("estimate_rate_hz", rate.to_string()),
    ];
    let mut dir = OutDir::create(Path::new(&out))?;
    dir.write_table("track_raw.csv", &series_table(&raw), &meta, &extra)?;
    dir.write_table(
        "track_bandpassed.csv",
        &series_table(&filtered),
        &meta,
        &extra,
    )?;
    dir.write_table("psd_raw.csv", &psd_table(&psd_raw), &meta, &extra)?;
    dir.write_table(
        "psd_bandpassed.csv",
        &psd_table(&psd_filtered),
        &meta,
        &extra,
    )?;
    dir.write("track.svg", &trace.render())?;
    dir.write("psd.svg", &psd_plot.render())?;
    dir.write_json("track.json", &summary)?;
    Ok(dir.written().to_vec())
}

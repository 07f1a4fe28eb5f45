//! One function per subcommand. Each reads its config, writes its outputs
//! under the output directory and returns the text printed to stdout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use lumber_dol::adm::adm_failure_prob;
use lumber_dol::failure::FailureModel;
use lumber_dol::inference::{
    run_parallel_tempering_prepared, summarize_draws, Dataset, PosteriorSamples, PreparedData,
};
use lumber_dol::io::{
    read_dataset_csv, read_json, read_posterior_csv, write_curve_csv, write_dataset_csv,
    write_json, write_posterior_csv, write_table_csv,
};
use lumber_dol::predict::{reliability, residual_life, CurveBand};
use lumber_dol::profile::ramp_then_constant;
use lumber_dol::simulate::simulate_dataset_with_mode;
use lumber_dol::{DegradationParams, DolError, LoadGrid, LoadProfile, Result, HOURS_PER_YEAR};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{
    AdmCompareConfig, FitConfig, ParamSource, ProfileGenConfig, ReliabilityConfig, ResidualConfig,
    SimulateConfig, SummarizeConfig,
};

pub struct Context {
    pub config_path: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Context {
    /// Directory relative paths in the config resolve against.
    fn base(&self) -> PathBuf {
        self.config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out_file(name)?)?))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.out_file(name)?, text)?;
        Ok(())
    }

    /// The only file that may differ between identical runs.
    fn write_meta(&self, command: &str) -> Result<()> {
        #[derive(Serialize)]
        struct Meta<'a> {
            command: &'a str,
            version: &'a str,
            config: String,
            seed: Option<u64>,
            unix_time: u64,
        }
        let unix_time = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        write_json(
            &self.out_file("run_meta.json")?,
            &Meta {
                command,
                version: env!("CARGO_PKG_VERSION"),
                config: self.config_path.display().to_string(),
                seed: self.seed,
                unix_time,
            },
        )
    }
}

fn years(hours: f64) -> f64 {
    hours / HOURS_PER_YEAR
}

/// `n` points evenly spaced on `[lo, hi]`.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![hi];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// `0` followed by `n - 1` log-spaced points on `[lo, hi]`.
fn logspace_with_zero(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0];
    let (l0, l1) = (lo.ln(), hi.ln());
    for i in 0..n.saturating_sub(1) {
        let f = if n > 2 {
            i as f64 / (n - 2) as f64
        } else {
            1.0
        };
        t.push((l0 + (l1 - l0) * f).exp().min(hi));
    }
    t
}

/// Evenly thinned subset of at most `max` items.
fn thin<T: Clone>(items: &[T], max: Option<usize>) -> Vec<T> {
    match max {
        Some(m) if m > 0 && items.len() > m => {
            (0..m).map(|i| items[i * items.len() / m].clone()).collect()
        }
        _ => items.to_vec(),
    }
}

fn load_draws(
    source: &ParamSource,
    base: &Path,
    max: Option<usize>,
) -> Result<Vec<(DegradationParams, f64)>> {
    let draws = match (&source.posterior, &source.params) {
        (Some(_), Some(_)) => {
            return Err(DolError::Config(
                "give either 'posterior' or 'params', not both".into(),
            ))
        }
        (Some(path), None) => read_posterior_csv(File::open(base.join(path))?)?,
        (None, params) => {
            let params = params.unwrap_or_else(crate::config::means);
            params.validate()?;
            vec![(params, 0.0)]
        }
    };
    if draws.is_empty() {
        return Err(DolError::Config("posterior has no draws".into()));
    }
    Ok(thin(&draws, max))
}

pub fn simulate(cfg: &SimulateConfig, ctx: &Context) -> Result<String> {
    let base = ctx.base();
    let seed = ctx.seed.unwrap_or(cfg.seed);
    let design = cfg.design(&base)?;
    let grid = LoadGrid::covering(cfg.grid_spacing, design.profiles())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = simulate_dataset_with_mode(&cfg.params, &grid, &design, cfg.eta_mode, &mut rng)?;
    write_dataset_csv(ctx.create("dataset.csv")?, &data.records)?;
    let dir = ctx.out_file("profiles")?;
    fs::create_dir_all(&dir)?;
    for (id, p) in &data.profiles {
        write_json(&dir.join(format!("{id}.json")), p)?;
    }
    #[derive(Serialize)]
    struct Arm<'a> {
        id: &'a str,
        n_pieces: usize,
        truncation_hours: f64,
    }
    #[derive(Serialize)]
    struct Truth<'a> {
        params: DegradationParams,
        seed: u64,
        grid_spacing: f64,
        eta_mode: lumber_dol::EtaMode,
        arms: Vec<Arm<'a>>,
    }
    let truth = Truth {
        params: cfg.params,
        seed,
        grid_spacing: cfg.grid_spacing,
        eta_mode: cfg.eta_mode,
        arms: design
            .arms
            .iter()
            .map(|a| Arm {
                id: &a.id,
                n_pieces: a.n_pieces,
                truncation_hours: a.truncation,
            })
            .collect(),
    };
    write_json(&ctx.out_file("truth.json")?, &truth)?;
    ctx.write_meta("simulate")?;
    let mut msg = format!("simulated {} records (seed {seed})\n", data.len());
    for arm in &design.arms {
        let n = data.arm(&arm.id).count();
        let c = data.arm(&arm.id).filter(|r| r.censored).count();
        writeln!(msg, "  {:<16} {n:>5} pieces, {c:>5} censored", arm.id).unwrap();
    }
    Ok(msg)
}

fn load_dataset(cfg: &FitConfig, base: &Path) -> Result<Dataset> {
    let path = base.join(&cfg.dataset);
    let records = read_dataset_csv(File::open(&path)?)?;
    let dir = match &cfg.profiles_dir {
        Some(d) => base.join(d),
        None => path
            .parent()
            .map(|p| p.join("profiles"))
            .unwrap_or_else(|| PathBuf::from("profiles")),
    };
    let mut profiles = BTreeMap::new();
    for r in &records {
        if profiles.contains_key(&r.profile_id) {
            continue;
        }
        let p: LoadProfile = match cfg.profiles.get(&r.profile_id) {
            Some(src) => src.build(base)?,
            None => read_json(&dir.join(format!("{}.json", r.profile_id))).map_err(|e| {
                DolError::Config(format!(
                    "profile '{}' (looked in {}): {e}",
                    r.profile_id,
                    dir.display()
                ))
            })?,
        };
        profiles.insert(r.profile_id.clone(), p);
    }
    Dataset::new(profiles, records)
}

pub fn fit(cfg: &FitConfig, ctx: &Context) -> Result<String> {
    let base = ctx.base();
    let data = load_dataset(cfg, &base)?;
    if data.is_empty() {
        return Err(DolError::Config("dataset has no records".into()));
    }
    let grid = LoadGrid::covering(cfg.grid_spacing, data.profiles.values())?;
    let prepared = PreparedData::with_mode(&grid, &data, cfg.eta_mode)?;
    let mut pt = cfg.pt.clone();
    if let Some(s) = ctx.seed {
        pt.seed = s;
    }
    let samples = run_parallel_tempering_prepared(&prepared, &cfg.prior, &pt, cfg.start.as_ref())?;
    write_posterior_csv(ctx.create("posterior.csv")?, &samples)?;
    let summary = summarize_draws(&samples.draws)?;
    ctx.write_text("summary.txt", &summary.to_string())?;

    #[derive(Serialize)]
    struct Diagnostics<'a> {
        n_records: usize,
        n_distinct: usize,
        init: DegradationParams,
        temperatures: &'a [f64],
        acceptance: &'a [f64],
        swap_rates: &'a [f64],
        seed: u64,
    }
    write_json(
        &ctx.out_file("diagnostics.json")?,
        &Diagnostics {
            n_records: prepared.n_records(),
            n_distinct: prepared.n_distinct(),
            init: samples.init,
            temperatures: &samples.temperatures,
            acceptance: &samples.acceptance,
            swap_rates: &samples.swap_rates,
            seed: pt.seed,
        },
    )?;
    write_cdf_bands(&samples, &grid, &data, cfg, ctx)?;
    ctx.write_meta("fit")?;
    let mut msg = format!(
        "{} draws kept; acceptance (T=1) {:.3}\n",
        samples.len(),
        samples.acceptance.first().copied().unwrap_or(f64::NAN)
    );
    msg.push_str(&summary.to_string());
    Ok(msg)
}

/// Posterior CDF bands and empirical CDFs per profile, for plotting fit against data.
fn write_cdf_bands(
    samples: &PosteriorSamples,
    grid: &LoadGrid,
    data: &Dataset,
    cfg: &FitConfig,
    ctx: &Context,
) -> Result<()> {
    let draws = thin(&samples.draws, Some(cfg.band_draws));
    for (id, profile) in &data.profiles {
        let mut fails: Vec<f64> = data
            .arm(id)
            .filter(|r| !r.censored)
            .map(|r| r.time)
            .collect();
        fails.sort_by(f64::total_cmp);
        let n = data.arm(id).count() as f64;
        let end = data.arm(id).map(|r| r.time).fold(0.0, f64::max);
        let times = logspace_with_zero((end * 1e-6).min(1e-4), end, 200);
        let curves = draws
            .iter()
            .map(|d| {
                FailureModel::new(d, grid, profile)
                    .map(|m| m.with_mode(cfg.eta_mode))?
                    .cdf_curve(&times)
            })
            .collect::<Result<Vec<_>>>()?;
        let band = CurveBand::from_curves(&times, &curves)?;
        write_band(ctx, &format!("cdf_{id}.csv"), &band, "cdf")?;
        let ecdf: Vec<f64> = (1..=fails.len()).map(|k| k as f64 / n).collect();
        write_curve_csv(ctx.create(&format!("ecdf_{id}.csv"))?, &fails, &ecdf)?;
    }
    Ok(())
}

fn write_band(ctx: &Context, name: &str, band: &CurveBand, what: &str) -> Result<()> {
    let header = [
        "time_hours".to_string(),
        format!("{what}_mean"),
        format!("{what}_lo"),
        format!("{what}_hi"),
    ];
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table_csv(
        ctx.create(name)?,
        &header,
        &[&band.times, &band.mean, &band.lo, &band.hi],
    )
}

pub fn summarize(cfg: &SummarizeConfig, ctx: &Context) -> Result<String> {
    let draws = read_posterior_csv(File::open(ctx.base().join(&cfg.posterior))?)?;
    if draws.is_empty() {
        return Err(DolError::Config("posterior has no draws".into()));
    }
    let params: Vec<DegradationParams> = draws.iter().map(|d| d.0).collect();
    let text = summarize_draws(&params)?.to_string();
    ctx.write_text("summary.txt", &text)?;
    ctx.write_meta("summarize")?;
    Ok(text)
}

pub fn reliability_cmd(cfg: &ReliabilityConfig, ctx: &Context) -> Result<String> {
    let base = ctx.base();
    let draws = load_draws(&cfg.source, &base, cfg.max_draws)?;
    let profile = cfg.profile.build(&base)?;
    let grid = LoadGrid::covering(cfg.grid_spacing, [&profile])?;
    let times = linspace(0.0, profile.horizon(), cfg.curve_points.max(2));
    let report = reliability(&draws, &grid, &profile, &times)?;
    write_json(&ctx.out_file("profile.json")?, &profile)?;
    let idx: Vec<f64> = (0..report.probabilities.len()).map(|i| i as f64).collect();
    write_table_csv(
        ctx.create("failure_probs.csv")?,
        &["draw", "probability"],
        &[&idx, &report.probabilities],
    )?;
    let b = &report.eta_band;
    write_table_csv(
        ctx.create("eta_curve.csv")?,
        &["time_hours", "eta_best", "eta_mean", "eta_lo", "eta_hi"],
        &[&b.times, &report.eta_best, &b.mean, &b.lo, &b.hi],
    )?;
    let s = &report.summary;
    let text = format!(
        "failure probability by {:.4} yr over {} draw(s)\n  mean {:.6}\n  95% interval ({:.6}, {:.6})\n  median {:.6}\n",
        years(report.horizon),
        report.probabilities.len(),
        s.mean,
        s.q025,
        s.q975,
        s.median
    );
    ctx.write_text("reliability.txt", &text)?;
    ctx.write_meta("reliability")?;
    Ok(text)
}

pub fn residual_life_cmd(cfg: &ResidualConfig, ctx: &Context) -> Result<String> {
    let base = ctx.base();
    let draws: Vec<DegradationParams> = load_draws(&cfg.source, &base, cfg.max_draws)?
        .into_iter()
        .map(|d| d.0)
        .collect();
    let mut text = String::new();
    for sc in &cfg.scenarios {
        if sc.horizon.0 <= sc.t_prime.0 {
            return Err(DolError::Config(format!(
                "scenario '{}': horizon must exceed t_prime",
                sc.name
            )));
        }
        let profile = ramp_then_constant(sc.ramp_rate, sc.level, sc.horizon.0)?;
        let grid = LoadGrid::covering(cfg.grid_spacing, [&profile])?;
        let end = sc.curve_end.0.min(sc.horizon.0 - sc.t_prime.0);
        let t_rs = linspace(0.0, end, cfg.curve_points.max(2));
        let report = residual_life(&draws, &grid, &profile, sc.t_prime.0, &t_rs, cfg.eta_mode)?;
        write_band(
            ctx,
            &format!("residual_{}.csv", sc.name),
            &report.survivor_band,
            "survivor",
        )?;
        writeln!(
            text,
            "{}: {} psi, survived {:.4} yr; {} draw(s), {} excluded (zero survival), {} with median beyond {:.1} yr",
            sc.name,
            sc.level,
            years(sc.t_prime.0),
            draws.len(),
            report.excluded_null,
            report.beyond_horizon,
            years(sc.horizon.0)
        )
        .unwrap();
        match &report.median_summary {
            Some(m) => writeln!(
                text,
                "  median residual life (yr): median {:.4}, mean {:.4}, 95% interval ({:.4}, {:.4})",
                years(m.median),
                years(m.mean),
                years(m.q025),
                years(m.q975)
            )
            .unwrap(),
            None => writeln!(text, "  no draw reaches its median within the horizon").unwrap(),
        }
    }
    ctx.write_text("residual_life.txt", &text)?;
    ctx.write_meta("residual-life")?;
    Ok(text)
}

pub fn adm_compare(cfg: &AdmCompareConfig, ctx: &Context) -> Result<String> {
    let base = ctx.base();
    let draws = load_draws(&cfg.source, &base, cfg.max_draws)?;
    let profile = cfg.profile.build(&base)?;
    let grid = LoadGrid::covering(cfg.grid_spacing, [&profile])?;
    let report = reliability(&draws, &grid, &profile, &[profile.horizon()])?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.unwrap_or(cfg.seed));
    let (p_adm, se_adm) = adm_failure_prob(&cfg.population, &profile, cfg.n_sim, &mut rng)?;
    #[derive(Serialize)]
    struct Comparison {
        horizon_hours: f64,
        gamma_mean: f64,
        gamma_q025: f64,
        gamma_q975: f64,
        gamma_draws: usize,
        adm_probability: f64,
        adm_std_error: f64,
        adm_n_sim: usize,
    }
    let s = &report.summary;
    let cmp = Comparison {
        horizon_hours: profile.horizon(),
        gamma_mean: s.mean,
        gamma_q025: s.q025,
        gamma_q975: s.q975,
        gamma_draws: draws.len(),
        adm_probability: p_adm,
        adm_std_error: se_adm,
        adm_n_sim: cfg.n_sim,
    };
    write_json(&ctx.out_file("adm_compare.json")?, &cmp)?;
    let text = format!(
        "failure probability by {:.4} yr\n  gamma process: {:.6} (95% interval {:.6}, {:.6}; {} draw(s))\n  ADM:           {:.6} (standard error {:.6}; {} pieces)\n",
        years(profile.horizon()),
        s.mean,
        s.q025,
        s.q975,
        draws.len(),
        p_adm,
        se_adm,
        cfg.n_sim
    );
    ctx.write_text("adm_compare.txt", &text)?;
    ctx.write_meta("adm-compare")?;
    Ok(text)
}

pub fn profile_gen(cfg: &ProfileGenConfig, ctx: &Context) -> Result<String> {
    let profile = cfg.profile.build(&ctx.base())?;
    write_json(&ctx.out_file("profile.json")?, &profile)?;
    let (t, l): (Vec<f64>, Vec<f64>) = profile.polyline().into_iter().unzip();
    write_table_csv(
        ctx.create("profile.csv")?,
        &["time_hours", "load_psi"],
        &[&t, &l],
    )?;
    ctx.write_meta("profile-gen")?;
    Ok(format!(
        "{} segments over {:.4} yr, load {} to {} psi\n",
        profile.segments().len(),
        years(profile.horizon()),
        profile.min_load(),
        profile.max_load()
    ))
}

//! `apkrig` command-line driver.
//!
//! Exit status: 0 on success, 2 on usage errors (bad flags, missing input
//! files), 1 on runtime failures.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use apkrig::clustering::{
    amplitude_from_pairwise, hierarchical_cluster, l2_dissimilarity_matrix, pairwise_distances,
    phase_from_pairwise, rand_index, Linkage, Partition, Weighting,
};
use apkrig::fdcore::Grid;
use apkrig::io::{fmt_num, load_dataset, load_targets, save_dataset, write_table};
use apkrig::kriging::{
    loocv_metrics, ordinary_krige_functional, predict_apk, trace_variograms, KrigingConfig,
    LoocvReport, Method,
};
use apkrig::plots::{prediction_plot, site_map, variogram_plot};
use apkrig::preprocess::{detrend_spatial, smooth_dataset};
use apkrig::simgen::{
    default_range, gen_cluster_dataset, gen_kriging_dataset, ozone_like, weather_like,
    ClusterDesign, ClusterDesignParams, KrigingDesign, KrigingDesignParams, Layout, SimDataset,
};
use apkrig::study::{
    cluster_study, kriging_study, mean_sd, ClusterStudyParams, KrigingStudyParams, DEFAULT_SIM_IOTA,
};
use apkrig::variogram::{shape_distance_matrix, Binning, FitOptions};
use apkrig::SpatialDataset;

#[derive(Parser, Debug)]
#[command(
    name = "apkrig",
    version,
    about = "Amplitude-phase kriging and clustering of spatial functional data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a simulated dataset with its ground truth.
    Simulate(SimulateArgs),
    /// Predict functions at target sites with amplitude-phase and ordinary kriging.
    Krige(KrigeArgs),
    /// Leave-one-out cross-validation of both kriging methods.
    Loocv(LoocvArgs),
    /// Amplitude, phase and L2 hierarchical clustering.
    Cluster(ClusterArgs),
    /// Multi-replicate kriging or clustering simulation study.
    Study(StudyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Design {
    Bimodal,
    Bspline,
    Agree,
    Disagree,
    Ozone,
    Weather,
}

#[derive(Args, Debug, Clone)]
struct DesignArgs {
    #[arg(long, value_enum, default_value = "bimodal")]
    design: Design,
    /// Phase variation bound B.
    #[arg(long, default_value_t = 1.0)]
    bound: f64,
    #[arg(long, default_value_t = 0.5)]
    noise_sd: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_a2: f64,
    /// Amplitude correlation range (defaults to 2√2).
    #[arg(long)]
    ell1: Option<f64>,
    /// Phase correlation range (defaults to 2√2).
    #[arg(long)]
    ell2: Option<f64>,
    /// Number of uniformly placed sites instead of the 5x5 grid.
    #[arg(long)]
    random_sites: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    delta_a: f64,
    #[arg(long, default_value_t = 0.5)]
    delta_b: f64,
    #[arg(long, default_value_t = 101)]
    grid: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct PrepArgs {
    /// Smoothing parameter; 0 disables smoothing.
    #[arg(long, default_value_t = 0.0)]
    iota: f64,
    /// Comma-separated covariate names to regress out per grid node.
    #[arg(long, value_delimiter = ',')]
    detrend: Vec<String>,
    /// Resample the input onto a grid with this many points.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct KrigingArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.1,1,10")]
    lambda_grid: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,1,10,100,1000,10000"
    )]
    omega_grid: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

impl KrigingArgs {
    fn config(&self, seed: u64) -> KrigingConfig {
        KrigingConfig {
            lambda_grid: self.lambda_grid.clone(),
            omega_candidates: self.omega_grid.clone(),
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed,
            ..KrigingConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct KrigeArgs {
    #[arg(long)]
    data: PathBuf,
    /// CSV with header site_id,x,y.
    #[arg(long)]
    targets: PathBuf,
    #[command(flatten)]
    prep: PrepArgs,
    #[command(flatten)]
    kriging: KrigingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LoocvArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    prep: PrepArgs,
    #[command(flatten)]
    kriging: KrigingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum LinkageArg {
    Average,
    Complete,
    Single,
}

impl From<LinkageArg> for Linkage {
    fn from(l: LinkageArg) -> Linkage {
        match l {
            LinkageArg::Average => Linkage::Average,
            LinkageArg::Complete => Linkage::Complete,
            LinkageArg::Single => Linkage::Single,
        }
    }
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, value_enum, default_value = "average")]
    linkage: LinkageArg,
    /// Enlarged-domain weight for the phase dissimilarity.
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    /// Cluster without spatial variogram weighting.
    #[arg(long)]
    non_spatial: bool,
    /// True partitions (site_id,amplitude,phase); defaults to truth.csv next to the data.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    prep: PrepArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StudyKind {
    Kriging,
    Cluster,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long, value_enum, default_value = "kriging")]
    kind: StudyKind,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    /// Pre-smoothing applied to every simulated dataset.
    #[arg(long, default_value_t = DEFAULT_SIM_IOTA)]
    iota: f64,
    #[command(flatten)]
    kriging: KrigingArgs,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, value_enum, default_value = "average")]
    linkage: LinkageArg,
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// An error that maps to the usage exit status.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!(
            "input file {} does not exist",
            path.display()
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run_command(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Krige(a) => krige(a),
        Command::Loocv(a) => loocv(a),
        Command::Cluster(a) => cluster(a),
        Command::Study(a) => study(a),
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn kriging_design(d: &DesignArgs, seed: u64) -> Result<KrigingDesignParams> {
    let design = match d.design {
        Design::Bimodal => KrigingDesign::Bimodal,
        Design::Bspline => KrigingDesign::Bspline,
        other => return Err(usage(format!("{other:?} is not a kriging design"))),
    };
    let mut p = KrigingDesignParams::new(design, d.bound, seed);
    p.noise_sd = d.noise_sd;
    p.sigma_a2 = d.sigma_a2;
    p.ell1 = d.ell1.unwrap_or_else(default_range);
    p.ell2 = d.ell2.unwrap_or_else(default_range);
    p.grid = Grid::new(d.grid).map_err(|e| usage(e.to_string()))?;
    if let Some(n) = d.random_sites {
        p.layout = Layout::UniformRandom(n);
    }
    Ok(p)
}

fn cluster_design(d: &DesignArgs, seed: u64) -> Result<ClusterDesignParams> {
    let design = match d.design {
        Design::Agree => ClusterDesign::Agree,
        Design::Disagree => ClusterDesign::Disagree,
        other => return Err(usage(format!("{other:?} is not a clustering design"))),
    };
    let mut p = ClusterDesignParams::new(design, d.delta_a, d.delta_b, seed);
    p.bound = d.bound;
    p.noise_sd = d.noise_sd;
    p.sigma_a2 = d.sigma_a2;
    p.ell = d.ell1.unwrap_or_else(default_range);
    p.grid = Grid::new(d.grid).map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

fn generate(d: &DesignArgs, seed: u64) -> Result<SimDataset> {
    Ok(match d.design {
        Design::Bimodal | Design::Bspline => gen_kriging_dataset(&kriging_design(d, seed)?)?,
        Design::Agree | Design::Disagree => gen_cluster_dataset(&cluster_design(d, seed)?)?,
        Design::Ozone => ozone_like(seed)?,
        Design::Weather => weather_like(seed)?,
    })
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let sim = generate(&a.design, a.seed)?;
    let data = &sim.dataset;
    save_dataset(data, &a.out.join("data.csv"))?;
    let amplitudes = data.with_functions(sim.true_amplitudes.clone())?;
    let (header, rows) = function_rows(amplitudes.ids(), amplitudes.functions());
    write_table(&a.out.join("amplitudes.csv"), &header, &rows)?;

    let t = data.grid().len();
    let mut header = vec!["site_id".to_string()];
    header.extend((0..t).map(|k| format!("gamma_{k}")));
    let rows: Vec<Vec<String>> = data
        .ids()
        .iter()
        .zip(&sim.true_phases)
        .map(|(id, g)| {
            std::iter::once(id.clone())
                .chain(g.values().iter().map(|&v| fmt_num(v)))
                .collect()
        })
        .collect();
    write_table(&a.out.join("phases.csv"), &header, &rows)?;

    if let (Some(ap), Some(pp)) = (&sim.amplitude_partition, &sim.phase_partition) {
        let header = ["site_id", "amplitude", "phase"].map(String::from);
        let rows: Vec<Vec<String>> = data
            .ids()
            .iter()
            .zip(ap.assignment().iter().zip(pp.assignment()))
            .map(|(id, (x, y))| vec![id.clone(), x.to_string(), y.to_string()])
            .collect();
        write_table(&a.out.join("truth.csv"), &header, &rows)?;
    }
    eprintln!("wrote {} sites to {}", data.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// shared input handling
// ---------------------------------------------------------------------------

fn prepare(path: &Path, prep: &PrepArgs) -> Result<SpatialDataset> {
    require_file(path)?;
    let grid = match prep.grid {
        Some(n) => Some(Grid::new(n).map_err(|e| usage(e.to_string()))?),
        None => None,
    };
    let mut data =
        load_dataset(path, grid).with_context(|| format!("loading {}", path.display()))?;
    if prep.iota < 0.0 {
        return Err(usage("--iota must be nonnegative"));
    }
    data = smooth_dataset(&data, prep.iota)?;
    let names: Vec<String> = prep
        .detrend
        .iter()
        .filter(|s| !s.is_empty())
        .cloned()
        .collect();
    if !names.is_empty() {
        data = detrend_spatial(&data, &names)?;
    }
    Ok(data)
}

fn function_rows(
    ids: &[String],
    functions: &[apkrig::SampledFunction],
) -> (Vec<String>, Vec<Vec<String>>) {
    let t = functions.first().map(|f| f.grid().len()).unwrap_or(0);
    let mut header = vec!["site_id".to_string(), "x".into(), "y".into()];
    header.extend((0..t).map(|k| format!("t_{k}")));
    let rows = ids
        .iter()
        .zip(functions)
        .map(|(id, f)| {
            let mut r = vec![id.clone(), fmt_num(f.site().x), fmt_num(f.site().y)];
            r.extend(f.values().iter().map(|&v| fmt_num(v)));
            r
        })
        .collect();
    (header, rows)
}

fn variogram_figure(data: &SpatialDataset, out: &Path) -> Result<()> {
    let tv = trace_variograms(
        data,
        Binning::default(),
        FitOptions {
            estimate_nugget: true,
        },
        5,
    )?;
    variogram_plot(
        &out.join("variograms.svg"),
        &[
            ("trace", &tv.raw.empirical, &tv.raw.model),
            ("amplitude", &tv.amplitude.empirical, &tv.amplitude.model),
            ("phase", &tv.phase.empirical, &tv.phase.model),
        ],
    )?;
    let header = [
        "component",
        "scale",
        "range",
        "nugget",
        "r2",
        "signal_fraction",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = [
        ("trace", &tv.raw),
        ("amplitude", &tv.amplitude),
        ("phase", &tv.phase),
    ]
    .iter()
    .map(|(name, f)| {
        let m = &f.model;
        vec![
            name.to_string(),
            fmt_num(m.scale),
            fmt_num(m.range),
            fmt_num(m.nugget),
            fmt_num(m.r2),
            fmt_num(m.signal_fraction()),
        ]
    })
    .collect();
    write_table(&out.join("variogram_models.csv"), &header, &rows)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// krige
// ---------------------------------------------------------------------------

fn krige(a: KrigeArgs) -> Result<()> {
    require_file(&a.targets)?;
    let data = prepare(&a.data, &a.prep)?;
    let targets = load_targets(&a.targets)?;
    if targets.is_empty() {
        bail!("no target sites in {}", a.targets.display());
    }
    let config = a.kriging.config(a.seed);
    let shape = shape_distance_matrix(&data.srsfs()?)?;
    let mut ids = Vec::new();
    let mut apk = Vec::new();
    let mut ok = Vec::new();
    let mut details = Vec::new();
    for (id, site) in &targets {
        let p = predict_apk(&data, *site, &config, Some(&shape))
            .with_context(|| format!("target {id}"))?;
        let o = ordinary_krige_functional(&data, *site, Binning::default())?;
        details.push(vec![
            id.clone(),
            fmt_num(p.lambda),
            fmt_num(p.phase.omega),
            p.amplitude.iterations.to_string(),
            p.amplitude.converged.to_string(),
            fmt_num(p.translation.value),
        ]);
        ids.push(id.clone());
        apk.push(p.combined);
        ok.push(o.function);
    }
    let (header, rows) = function_rows(&ids, &apk);
    write_table(&a.out.join("predictions_apk.csv"), &header, &rows)?;
    let (header, rows) = function_rows(&ids, &ok);
    write_table(&a.out.join("predictions_ok.csv"), &header, &rows)?;
    let header = [
        "site_id",
        "lambda",
        "omega",
        "iterations",
        "converged",
        "translation",
    ]
    .map(String::from);
    write_table(&a.out.join("apk_details.csv"), &header, &details)?;
    variogram_figure(&data, &a.out)?;
    eprintln!("predicted {} targets into {}", ids.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// loocv
// ---------------------------------------------------------------------------

const METRICS: [&str; 5] = ["E1", "E2", "E3", "E4", "E5"];

fn metric_header(method: Method) -> Vec<String> {
    METRICS
        .iter()
        .map(|m| format!("{m}_{}", method.name()))
        .collect()
}

fn loocv(a: LoocvArgs) -> Result<()> {
    let data = prepare(&a.data, &a.prep)?;
    let config = a.kriging.config(a.seed);
    let apk = loocv_metrics(&data, &config, Method::Apk)?;
    let ok = loocv_metrics(&data, &config, Method::Ok)?;
    write_loocv(&data, &apk, &ok, &a.out)?;
    let failed = apk.failed_folds() + ok.failed_folds();
    if failed > 0 {
        eprintln!("warning: {failed} folds failed; see loocv_sites.csv");
    }
    Ok(())
}

fn write_loocv(
    data: &SpatialDataset,
    apk: &LoocvReport,
    ok: &LoocvReport,
    out: &Path,
) -> Result<()> {
    let mut header = vec!["site_id".to_string(), "x".into(), "y".into()];
    header.extend(metric_header(Method::Apk));
    header.extend(metric_header(Method::Ok));
    header.push("status".into());
    let mut rows = Vec::new();
    for (i, (fa, fo)) in apk.folds.iter().zip(&ok.folds).enumerate() {
        let site = data.functions()[i].site();
        let mut r = vec![data.ids()[i].clone(), fmt_num(site.x), fmt_num(site.y)];
        let mut status = Vec::new();
        for (fold, method) in [(fa, "apk"), (fo, "ok")] {
            match &fold.metrics {
                Ok(m) => r.extend(m.as_array().iter().map(|&v| fmt_num(v))),
                Err(e) => {
                    r.extend(std::iter::repeat_n("NaN".to_string(), 5));
                    status.push(format!("{method}: {e}"));
                }
            }
        }
        r.push(if status.is_empty() {
            "ok".into()
        } else {
            status.join("; ")
        });
        rows.push(r);
    }
    write_table(&out.join("loocv_sites.csv"), &header, &rows)?;

    let mut header = metric_header(Method::Apk);
    header.extend(metric_header(Method::Ok));
    let row: Vec<String> = apk
        .mean
        .as_array()
        .iter()
        .chain(ok.mean.as_array().iter())
        .map(|&v| fmt_num(v))
        .collect();
    write_table(&out.join("loocv_mean.csv"), &header, &[row])?;

    let mut panels = Vec::new();
    for (i, (fa, fo)) in apk.folds.iter().zip(&ok.folds).enumerate() {
        if let (Some(pa), Some(po)) = (&fa.prediction, &fo.prediction) {
            panels.push((
                format!("site {}", data.ids()[i]),
                &data.functions()[i],
                pa,
                po,
            ));
        }
    }
    let refs: Vec<_> = panels
        .iter()
        .map(|(l, t, a, o)| (l.as_str(), *t, *a, *o))
        .collect();
    prediction_plot(&out.join("predictions.svg"), &refs)?;
    variogram_figure(data, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

fn load_truth(path: &Path, ids: &[String]) -> Result<(Partition, Partition)> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut amp = std::collections::HashMap::new();
    let mut phase = std::collections::HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().to_string();
        amp.insert(
            id.clone(),
            rec.get(1).unwrap_or_default().trim().parse::<usize>()?,
        );
        phase.insert(id, rec.get(2).unwrap_or_default().trim().parse::<usize>()?);
    }
    let lookup = |m: &std::collections::HashMap<String, usize>| -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                m.get(id)
                    .copied()
                    .with_context(|| format!("site {id} missing from {}", path.display()))
            })
            .collect()
    };
    Ok((
        Partition::new(ids.to_vec(), &lookup(&amp)?)?,
        Partition::new(ids.to_vec(), &lookup(&phase)?)?,
    ))
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let data = prepare(&a.data, &a.prep)?;
    if a.k == 0 || a.k > data.len() {
        return Err(usage(format!("--k must lie in 1..={}", data.len())));
    }
    let weighting = if a.non_spatial {
        Weighting::None
    } else {
        Weighting::Spatial
    };
    let linkage: Linkage = a.linkage.into();
    let pd = pairwise_distances(&data.srsfs()?)?;
    let amp = hierarchical_cluster(
        &amplitude_from_pairwise(&data, &pd, weighting)?.matrix,
        a.k,
        linkage,
    )?;
    let phase = hierarchical_cluster(
        &phase_from_pairwise(&data, &pd, a.omega, weighting)?.matrix,
        a.k,
        linkage,
    )?;
    let l2 = hierarchical_cluster(
        &l2_dissimilarity_matrix(&data, weighting)?.matrix,
        a.k,
        linkage,
    )?;

    let header = ["site_id", "x", "y", "amplitude", "phase", "l2"].map(String::from);
    let rows: Vec<Vec<String>> = (0..data.len())
        .map(|i| {
            let s = data.functions()[i].site();
            vec![
                data.ids()[i].clone(),
                fmt_num(s.x),
                fmt_num(s.y),
                amp.assignment()[i].to_string(),
                phase.assignment()[i].to_string(),
                l2.assignment()[i].to_string(),
            ]
        })
        .collect();
    write_table(&a.out.join("clusters.csv"), &header, &rows)?;
    site_map(
        &a.out.join("cluster_map.svg"),
        &data.sites(),
        &[
            ("amplitude", amp.assignment()),
            ("phase", phase.assignment()),
            ("l2", l2.assignment()),
        ],
    )?;

    let truth_path = a.truth.clone().or_else(|| {
        let p = a.data.parent().unwrap_or(Path::new(".")).join("truth.csv");
        p.is_file().then_some(p)
    });
    if let Some(tp) = truth_path {
        require_file(&tp)?;
        let (ta, tph) = load_truth(&tp, data.ids())?;
        let header = ["method", "rand_amplitude", "rand_phase"].map(String::from);
        let rows = vec![
            vec![
                "amplitude".into(),
                fmt_num(rand_index(&amp, &ta)?),
                fmt_num(rand_index(&amp, &tph)?),
            ],
            vec![
                "phase".into(),
                fmt_num(rand_index(&phase, &ta)?),
                fmt_num(rand_index(&phase, &tph)?),
            ],
            vec![
                "l2".into(),
                fmt_num(rand_index(&l2, &ta)?),
                fmt_num(rand_index(&l2, &tph)?),
            ],
        ];
        write_table(&a.out.join("rand_index.csv"), &header, &rows)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// study
// ---------------------------------------------------------------------------

type ScoreColumn = (&'static str, fn(&apkrig::study::ClusterScores) -> f64);

fn study(a: StudyArgs) -> Result<()> {
    match a.kind {
        StudyKind::Kriging => {
            let p = KrigingStudyParams {
                design: kriging_design(&a.design, a.seed)?,
                replicates: a.replicates,
                seed: a.seed,
                iota: a.iota,
                config: a.kriging.config(a.seed),
            };
            let reps = kriging_study(&p)?;
            let mut header = vec!["replicate".to_string(), "seed".into()];
            header.extend(metric_header(Method::Apk));
            header.extend(metric_header(Method::Ok));
            header.push("failed_folds".into());
            let rows: Vec<Vec<String>> = reps
                .iter()
                .map(|r| {
                    let mut row = vec![r.replicate.to_string(), r.seed.to_string()];
                    row.extend(
                        r.apk
                            .as_array()
                            .iter()
                            .chain(r.ok.as_array().iter())
                            .map(|&v| fmt_num(v)),
                    );
                    row.push(r.failed_folds.to_string());
                    row
                })
                .collect();
            write_table(&a.out.join("study_replicates.csv"), &header, &rows)?;
            let header = ["metric", "method", "mean", "sd"].map(String::from);
            let mut rows = Vec::new();
            for (k, m) in METRICS.iter().enumerate() {
                for method in [Method::Apk, Method::Ok] {
                    let vals: Vec<f64> = reps
                        .iter()
                        .map(|r| {
                            if method == Method::Apk {
                                r.apk.as_array()[k]
                            } else {
                                r.ok.as_array()[k]
                            }
                        })
                        .collect();
                    let (mean, sd) = mean_sd(&vals);
                    rows.push(vec![
                        m.to_string(),
                        method.name().into(),
                        fmt_num(mean),
                        fmt_num(sd),
                    ]);
                }
            }
            write_table(&a.out.join("study_summary.csv"), &header, &rows)?;
        }
        StudyKind::Cluster => {
            let p = ClusterStudyParams {
                design: cluster_design(&a.design, a.seed)?,
                replicates: a.replicates,
                seed: a.seed,
                iota: a.iota,
                k: a.k,
                linkage: a.linkage.into(),
                omega: a.omega,
            };
            let reps = cluster_study(&p)?;
            let header = [
                "replicate",
                "rand_amplitude",
                "rand_phase",
                "rand_l2_amplitude",
                "rand_l2_phase",
            ]
            .map(String::from);
            let rows: Vec<Vec<String>> = reps
                .iter()
                .enumerate()
                .map(|(r, s)| {
                    vec![
                        r.to_string(),
                        fmt_num(s.amplitude),
                        fmt_num(s.phase),
                        fmt_num(s.l2_amplitude),
                        fmt_num(s.l2_phase),
                    ]
                })
                .collect();
            write_table(&a.out.join("study_replicates.csv"), &header, &rows)?;
            let header = ["score", "mean", "sd"].map(String::from);
            let cols: [ScoreColumn; 4] = [
                ("rand_amplitude", |s| s.amplitude),
                ("rand_phase", |s| s.phase),
                ("rand_l2_amplitude", |s| s.l2_amplitude),
                ("rand_l2_phase", |s| s.l2_phase),
            ];
            let rows: Vec<Vec<String>> = cols
                .iter()
                .map(|(name, f)| {
                    let (mean, sd) = mean_sd(&reps.iter().map(f).collect::<Vec<_>>());
                    vec![name.to_string(), fmt_num(mean), fmt_num(sd)]
                })
                .collect();
            write_table(&a.out.join("study_summary.csv"), &header, &rows)?;
        }
    }
    eprintln!("study written to {}", a.out.display());
    Ok(())
}

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fasc::datagen::{sample_arrangement, SampleSpec};
use fasc::filtration::{fsasc, FsascConfig};
use fasc::io::{parse_predictions, read_points_csv, write_points_csv, Manifest, Predictions};
use fasc::sasc::{sasc_cluster, SascVariant};
use fasc::spectral::{clustering_error, compact_labels, eigengap, inter_connectivity, intra_connectivity, normalized_laplacian, spectrum};
use fasc::{PointCloud, RankMode, RankPolicy};

use crate::args::{Cli, Command, EvalArgs, ExperimentArgs, RunArgs};
use crate::config::{parse_config, ConfigLayer, ExperimentConfig, Format, Method};
use crate::CliError;

type Matrix = nalgebra::DMatrix<f64>;

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&resolve(&a)?, a.out.as_deref()),
        Command::Run(a) => cmd_run(&a),
        Command::Bench(a) => cmd_bench(&resolve(&a)?, a.out.as_deref()),
        Command::Eval(a) => cmd_eval(&a),
    }
}

/// Flags over config file over defaults.
pub fn resolve(args: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ConfigLayer::default(),
    };
    ExperimentConfig::resolve(args.layer()?.over(file))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn single<T: Clone>(values: &[T], what: &str) -> Result<T, CliError> {
    match values {
        [one] => Ok(one.clone()),
        _ => Err(CliError::Config(format!("this command takes a single {what}"))),
    }
}

pub fn cmd_gen(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let dims = single(&cfg.dims, "dimension set")?;
    let sigma = single(&cfg.sigmas, "sigma")?;
    let spec = SampleSpec::new(cfg.ambient_dim, dims.clone(), cfg.counts_for(&dims), sigma, cfg.seed);
    let (cloud, arrangement) = sample_arrangement(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = out.unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    write_points_csv(&mut csv, &cloud).map_err(CliError::from_input)?;
    fs::write(dir.join("points.csv"), csv)?;
    let manifest = Manifest::new(&spec, &arrangement, cfg.echo());
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join("manifest.json"), json + "\n")?;
    eprintln!("wrote {} points to {}", cloud.len(), dir.display());
    Ok(())
}

/// Labels plus whatever the method computed along the way.
pub struct MethodOutput {
    pub labels: Vec<usize>,
    pub affinity: Option<Matrix>,
    pub eigengap: Option<f64>,
    pub recovered_dims: Option<Vec<usize>>,
}

/// Runs one method with `clusters` groups.
pub fn run_method(
    cloud: &PointCloud,
    method: Method,
    cfg: &ExperimentConfig,
    clusters: usize,
    seed: u64,
) -> Result<MethodOutput, fasc::Error> {
    let degree = cfg.degree.unwrap_or(clusters);
    match method {
        Method::Fsasc => {
            let out = fsasc(
                cloud,
                &FsascConfig {
                    degree,
                    clusters,
                    min_cluster: cfg.min_cluster,
                    gammas: cfg.gammas.clone(),
                    seed,
                },
            )?;
            let sym = &out.affinity + out.affinity.transpose();
            Ok(MethodOutput {
                labels: out.labels,
                affinity: Some(sym),
                eigengap: Some(out.eigengap),
                recovered_dims: None,
            })
        }
        Method::SascA | Method::SascD => {
            let variant = if method == Method::SascA {
                SascVariant::Angle
            } else {
                SascVariant::Dist
            };
            let out = sasc_cluster(cloud, degree, clusters, variant, seed)?;
            let sym = out.affinity.symmetrized();
            let gap = eigengap(&spectrum(&normalized_laplacian(&sym)), clusters);
            Ok(MethodOutput {
                labels: out.labels,
                affinity: Some(sym),
                eigengap: Some(gap),
                recovered_dims: None,
            })
        }
        Method::Fasc => {
            let policy = RankPolicy::new(cfg.tol, RankMode::Relative)?;
            let out = fasc::fasc::fasc(cloud, degree, &policy)?;
            Ok(MethodOutput {
                labels: out.labels,
                affinity: None,
                eigengap: None,
                recovered_dims: Some(out.dims),
            })
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub error_percent: Option<f64>,
    pub intra: Option<f64>,
    pub inter_percent: Option<f64>,
}

pub fn metrics(labels: &[usize], truth: Option<&[usize]>, affinity: Option<&Matrix>) -> Result<Metrics, fasc::Error> {
    let Some(truth) = truth else {
        return Ok(Metrics::default());
    };
    let error_percent = Some(clustering_error(labels, truth)?);
    let (intra, inter_percent) = match affinity {
        Some(w) => (Some(intra_connectivity(w, truth)?), Some(inter_connectivity(w, truth)?)),
        None => (None, None),
    };
    Ok(Metrics {
        error_percent,
        intra,
        inter_percent,
    })
}

/// Output of `run`; readable back as [`Predictions`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    /// 1-based.
    pub labels: Vec<usize>,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub eigengap: Option<f64>,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered_dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affinity: Option<Vec<Vec<f64>>>,
    pub config: serde_json::Value,
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = resolve(&args.experiment)?;
    let method = single(&cfg.methods, "method")?;
    let file = fs::File::open(&args.input).map_err(|e| CliError::Config(format!("{}: {e}", args.input.display())))?;
    let cloud = read_points_csv(file).map_err(CliError::from_input)?;
    let truth = cloud.labels().map(<[usize]>::to_vec);
    let clusters = match (cfg.n, &truth) {
        (Some(n), _) => n,
        (None, Some(t)) => compact_labels(t).1,
        (None, None) => return Err(CliError::Config("--n is required when the input has no labels".into())),
    };

    let start = Instant::now();
    let out = run_method(&cloud, method, &cfg, clusters, cfg.seed).map_err(CliError::Method)?;
    let seconds = start.elapsed().as_secs_f64();
    let m = metrics(&out.labels, truth.as_deref(), out.affinity.as_ref()).map_err(CliError::Method)?;

    eprintln!(
        "{}: error {}%  intra {}  inter {}%  eigengap {}  time {seconds:.3}s",
        method.name(),
        fmt_opt(m.error_percent, 2),
        fmt_opt(m.intra, 4),
        fmt_opt(m.inter_percent, 2),
        fmt_opt(out.eigengap, 4),
    );
    if let Some(d) = &out.recovered_dims {
        eprintln!("recovered {} subspaces with dims {d:?}", d.len());
    }

    let record = RunRecord {
        method,
        labels: Predictions::new(&out.labels, None).labels,
        metrics: m,
        eigengap: out.eigengap,
        seconds,
        recovered_dims: out.recovered_dims,
        affinity: if args.save_affinity {
            out.affinity.as_ref().and_then(|a| Predictions::new(&[], Some(a)).affinity)
        } else {
            None
        },
        config: cfg.echo(),
    };
    let text = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&record).expect("record serializes") + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["index", "label"]).map_err(|e| CliError::Io(e.to_string()))?;
            for (j, l) in record.labels.iter().enumerate() {
                w.write_record([j.to_string(), l.to_string()]).map_err(|e| CliError::Io(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("utf-8")
        }
    };
    emit(args.experiment.out.as_deref(), &text)
}

/// One aggregated cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    /// Dimensions joined by `-`, e.g. `2-3-4`.
    pub dims: String,
    pub sigma: f64,
    pub trials: usize,
    pub failures: usize,
    pub mean_error: Option<f64>,
    pub mean_intra: Option<f64>,
    pub mean_inter: Option<f64>,
    pub mean_seconds: Option<f64>,
    pub points: usize,
    /// First failure message, if any.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub config: serde_json::Value,
    pub rows: Vec<BenchRow>,
}

pub struct TrialResult {
    pub metrics: Metrics,
    pub seconds: f64,
}

/// Data seeded by `seed`, method seeded by `seed`: the same pair `gen` +
/// `run` would use.
pub fn bench_trial(
    cfg: &ExperimentConfig,
    method: Method,
    dims: &[usize],
    sigma: f64,
    seed: u64,
) -> Result<TrialResult, fasc::Error> {
    let spec = SampleSpec::new(cfg.ambient_dim, dims.to_vec(), cfg.counts_for(dims), sigma, seed);
    let (cloud, _) = sample_arrangement(&spec)?;
    let clusters = cfg.n.unwrap_or(dims.len());
    let start = Instant::now();
    let out = run_method(&cloud, method, cfg, clusters, seed)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(TrialResult {
        metrics: metrics(&out.labels, cloud.labels(), out.affinity.as_ref())?,
        seconds,
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn run_bench(cfg: &ExperimentConfig) -> BenchTable {
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for dims in &cfg.dims {
            for &sigma in &cfg.sigmas {
                let results: Vec<Result<TrialResult, fasc::Error>> = (0..cfg.trials as u64)
                    .into_par_iter()
                    .map(|t| bench_trial(cfg, method, dims, sigma, cfg.seed + t))
                    .collect();
                let ok: Vec<&TrialResult> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
                let note = results
                    .iter()
                    .find_map(|r| r.as_ref().err().map(|e| e.to_string()))
                    .unwrap_or_default();
                if !note.is_empty() {
                    log::warn!("{} {dims:?} σ={sigma}: {note}", method.name());
                }
                rows.push(BenchRow {
                    method: method.name().into(),
                    dims: dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-"),
                    sigma,
                    trials: cfg.trials,
                    failures: results.len() - ok.len(),
                    mean_error: mean_of(ok.iter().map(|r| r.metrics.error_percent)),
                    mean_intra: mean_of(ok.iter().map(|r| r.metrics.intra)),
                    mean_inter: mean_of(ok.iter().map(|r| r.metrics.inter_percent)),
                    mean_seconds: mean_of(ok.iter().map(|r| Some(r.seconds))),
                    points: cfg.counts_for(dims).iter().sum(),
                    note,
                });
            }
        }
    }
    BenchTable {
        config: cfg.echo(),
        rows,
    }
}

pub fn render_bench(table: &BenchTable, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(table).expect("table serializes") + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &table.rows {
                w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
            }
            Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("utf-8"))
        }
    }
}

/// Reads a table written by [`render_bench`] in either format.
pub fn parse_bench(text: &str) -> Result<BenchTable, CliError> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| CliError::Config(format!("benchmark table: {e}")));
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows = r
        .deserialize()
        .collect::<Result<Vec<BenchRow>, _>>()
        .map_err(|e| CliError::Config(format!("benchmark table: {e}")))?;
    Ok(BenchTable {
        config: serde_json::Value::Null,
        rows,
    })
}

pub fn cmd_bench(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let table = run_bench(cfg);
    for row in &table.rows {
        eprintln!(
            "{:>7} ({}) σ={:<6} error {:>7}%  intra {:>7}  inter {:>7}%  time {}s  failures {}",
            row.method,
            row.dims,
            row.sigma,
            fmt_opt(row.mean_error, 2),
            fmt_opt(row.mean_intra, 4),
            fmt_opt(row.mean_inter, 2),
            fmt_opt(row.mean_seconds, 3),
            row.failures
        );
    }
    emit(out, &render_bench(&table, cfg.format)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub points: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

fn read_truth(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        return Ok(parse_predictions(&text).map_err(CliError::from_input)?.zero_based());
    }
    let cloud = read_points_csv(text.as_bytes()).map_err(CliError::from_input)?;
    cloud
        .labels()
        .map(<[usize]>::to_vec)
        .ok_or_else(|| CliError::Config(format!("{} has no label column", path.display())))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let format = args.format.as_deref().map(Format::parse).transpose()?.unwrap_or(Format::Json);
    if let Some(path) = &args.bench {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let table = parse_bench(&text)?;
        return emit(args.out.as_deref(), &render_bench(&table, format)?);
    }
    let (Some(pred_path), Some(truth_path)) = (&args.predictions, &args.truth) else {
        return Err(CliError::Config("--predictions and --truth are required".into()));
    };
    let text = fs::read_to_string(pred_path).map_err(|e| CliError::Config(format!("{}: {e}", pred_path.display())))?;
    let pred = parse_predictions(&text).map_err(CliError::from_input)?;
    let truth = read_truth(truth_path)?;
    if truth.len() != pred.labels.len() {
        return Err(CliError::Config(format!(
            "{} predictions for {} ground-truth labels",
            pred.labels.len(),
            truth.len()
        )));
    }
    let affinity = pred.affinity_matrix().map_err(CliError::from_input)?;
    let m = metrics(&pred.zero_based(), Some(&truth), affinity.as_ref()).map_err(CliError::Method)?;
    let record = EvalRecord {
        points: truth.len(),
        metrics: m,
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&record).expect("record serializes") + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&record).map_err(|e| CliError::Io(e.to_string()))?;
            String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("utf-8")
        }
    };
    emit(args.out.as_deref(), &text)
}

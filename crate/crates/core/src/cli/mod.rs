//! Command-line front end: reads CSV tables, runs one command and writes
//! plot-ready coordinate, dendrogram or model files.
//!
//! Every number is written with 12 significant digits and every output file
//! is written atomically. [`run`] returns the process exit code: 0 on
//! success, 1 on a data error, 2 on a configuration error.

mod table;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use nalgebra::DMatrix;
use serde_json::json;

pub use table::{format_number, parse_table, read_table, round_sig, SIGNIFICANT_DIGITS};
use table::{render_table, write_atomic};

use crate::cluster::{amalgamation_cluster, ward_cluster, ClusterInput};
use crate::composition::{close, marginal_weights, CompositionMatrix, WeightAxis, WeightVector, CLOSURE_TOLERANCE};
use crate::contrast::{fit_logratio_model, permutation_test, MIN_PERMUTATIONS};
use crate::error::Error;
use crate::geometry::{logratio_distances, part_distances, DistanceMatrix};
use crate::lra::lra_fit;
use crate::patterns::{
    alr_pattern, clr_pattern, dag_pattern, ilr_pattern, lr_pattern, plr_pattern, slr_pattern, PatternKind,
    PatternMatrix, RatioSpec, SlrGroup,
};
use crate::transforms::{apply_pattern, invert_alr, invert_dag, invert_linear, invert_slr, slr_transform};
use crate::tree::{Merge, MergeTree};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}: duplicate label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}, column {column}: `{cell}` is not a number")]
    NonNumericCell { line: usize, column: usize, cell: String },
    #[error("{path}: {inner}")]
    InFile { path: String, inner: Box<CliError> },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Data { context: String, source: Error },
}

impl CliError {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        CliError::InFile {
            path: path.display().to_string(),
            inner: Box::new(self),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::InFile { inner, .. } => inner.exit_code(),
            _ => 1,
        }
    }
}

fn data(context: impl Into<String>) -> impl FnOnce(Error) -> CliError {
    let context = context.into();
    move |source| CliError::Data { context, source }
}

fn config(context: &str) -> impl FnOnce(Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{context}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Transform,
    Invert,
    Distance,
    Lra,
    Cluster,
    Regress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClusterTarget {
    Samples,
    Parts,
    Amalgamation,
}

/// Part weights: `uniform`, `marginal` (column means) or a table file with
/// one `weight` column and one row per part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightMode {
    Uniform,
    Marginal,
    File(PathBuf),
}

impl FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "uniform" => WeightMode::Uniform,
            "marginal" => WeightMode::Marginal,
            "" => return Err("empty weight mode".into()),
            path => WeightMode::File(PathBuf::from(path)),
        })
    }
}

/// A logratio family with its parameters, written `kind[:spec]`.
///
/// `alr:REF`, `plr:A,B,C`, `ilr:TREE.json`, `dag:A/B,C/B`, `slr:A+B/C+D,A/B,C/D`;
/// parts are named as in the input header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformSpec {
    Lr,
    Alr(String),
    Clr,
    Plr(Vec<String>),
    Ilr(PathBuf),
    Dag(Vec<(String, String)>),
    Slr(Vec<(Vec<String>, Vec<String>)>),
}

impl FromStr for TransformSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let need = |what: &str| arg.filter(|a| !a.is_empty()).ok_or(format!("`{kind}` needs `{kind}:{what}`"));
        let list = |a: &str| a.split(',').map(|t| t.trim().to_string()).collect::<Vec<_>>();
        let ratio = |t: &str| -> Result<(String, String), String> {
            let (n, d) = t.split_once('/').ok_or(format!("`{t}` is not of the form NUM/DEN"))?;
            Ok((n.trim().to_string(), d.trim().to_string()))
        };
        match kind {
            "lr" | "clr" if arg.is_some() => Err(format!("`{kind}` takes no parameter")),
            "lr" => Ok(TransformSpec::Lr),
            "clr" => Ok(TransformSpec::Clr),
            "alr" => Ok(TransformSpec::Alr(need("REF")?.trim().to_string())),
            "plr" => Ok(TransformSpec::Plr(list(need("ORDER")?))),
            "ilr" => Ok(TransformSpec::Ilr(PathBuf::from(need("TREEFILE")?))),
            "dag" => Ok(TransformSpec::Dag(
                list(need("SPEC")?).iter().map(|t| ratio(t)).collect::<Result<_, _>>()?,
            )),
            "slr" => Ok(TransformSpec::Slr(
                list(need("SPEC")?)
                    .iter()
                    .map(|t| {
                        let (n, d) = ratio(t)?;
                        let group = |g: &str| g.split('+').map(|p| p.trim().to_string()).collect();
                        Ok((group(&n), group(&d)))
                    })
                    .collect::<Result<_, String>>()?,
            )),
            other => Err(format!("unknown transform `{other}` (expected lr, alr, clr, plr, ilr, dag or slr)")),
        }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformSpec::Lr => write!(f, "lr"),
            TransformSpec::Clr => write!(f, "clr"),
            TransformSpec::Alr(r) => write!(f, "alr:{r}"),
            TransformSpec::Plr(o) => write!(f, "plr:{}", o.join(",")),
            TransformSpec::Ilr(p) => write!(f, "ilr:{}", p.display()),
            TransformSpec::Dag(pairs) => {
                let t: Vec<String> = pairs.iter().map(|(n, d)| format!("{n}/{d}")).collect();
                write!(f, "dag:{}", t.join(","))
            }
            TransformSpec::Slr(groups) => {
                let t: Vec<String> = groups.iter().map(|(n, d)| format!("{}/{}", n.join("+"), d.join("+"))).collect();
                write!(f, "slr:{}", t.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "coda", version, about = "Logratio analysis of compositional data tables")]
pub struct RunConfig {
    /// Input CSV: header `,PART1,PART2,...`, one labelled row per sample.
    /// For `invert`, a logratio table as written by `transform`.
    #[arg(long)]
    pub input: PathBuf,
    /// uniform | marginal | path to a one-column weight table.
    #[arg(long, default_value = "uniform")]
    pub weights: WeightMode,
    /// lr | alr:REF | clr | plr:ORDER | ilr:TREEFILE | dag:SPEC | slr:SPEC
    #[arg(long)]
    pub transform: Option<TransformSpec>,
    #[arg(long, value_enum)]
    pub command: Command,
    #[arg(long, value_enum, default_value_t = ClusterTarget::Samples)]
    pub cluster_target: ClusterTarget,
    /// One-column table of log responses, rows labelled as in the input.
    #[arg(long)]
    pub response: Option<PathBuf>,
    #[arg(long, default_value_t = 999)]
    pub permutations: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Part names for `invert` when no weight file supplies them.
    #[arg(long, value_delimiter = ',')]
    pub parts: Vec<String>,
}

/// Initialises logging from `CODA_LOG` (default `error`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("CODA_LOG", "error");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs one command and returns the exit code, reporting any error on stderr.
pub fn run(config: &RunConfig) -> i32 {
    match execute(config) {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command and returns the files written.
pub fn execute(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
    log::info!("{:?} on {}", config.command, config.input.display());
    match config.command {
        Command::Transform => transform(config),
        Command::Invert => invert(config),
        Command::Distance => distance(config),
        Command::Lra => lra(config),
        Command::Cluster => cluster(config),
        Command::Regress => regress(config),
    }
}

fn load_compositions(path: &Path) -> Result<CompositionMatrix, CliError> {
    let raw = read_table(path)?;
    close(&raw, CLOSURE_TOLERANCE).map_err(data(path.display().to_string()))
}

fn part_weights(mode: &WeightMode, labels: &[String], x: Option<&CompositionMatrix>) -> Result<WeightVector, CliError> {
    match mode {
        WeightMode::Uniform => Ok(WeightVector::uniform(labels.len(), WeightAxis::Parts)),
        WeightMode::Marginal => match x {
            Some(x) => Ok(marginal_weights(x)),
            None => Err(CliError::Config("marginal weights need compositions; pass a weight file".into())),
        },
        WeightMode::File(path) => {
            let t = read_table(path)?;
            if t.values.ncols() != 1 {
                return Err(CliError::Config(format!("{}: a weight table has exactly one column", path.display())));
            }
            let raw = labels
                .iter()
                .map(|l| {
                    t.row_labels
                        .iter()
                        .position(|r| r == l)
                        .map(|i| t.values[(i, 0)])
                        .ok_or_else(|| CliError::Config(format!("{}: no weight for part `{l}`", path.display())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if t.row_labels.len() != labels.len() {
                return Err(CliError::Config(format!(
                    "{}: {} weights for {} parts",
                    path.display(),
                    t.row_labels.len(),
                    labels.len()
                )));
            }
            WeightVector::normalized(&raw, WeightAxis::Parts).map_err(config(&path.display().to_string()))
        }
    }
}

/// Part names listed in a weight file, in file order.
fn weight_file_parts(mode: &WeightMode) -> Result<Option<Vec<String>>, CliError> {
    match mode {
        WeightMode::File(path) => Ok(Some(read_table(path)?.row_labels)),
        _ => Ok(None),
    }
}

fn part_index(labels: &[String], name: &str) -> Result<usize, CliError> {
    labels
        .iter()
        .position(|l| l == name)
        .ok_or_else(|| CliError::Config(format!("unknown part `{name}` (parts: {})", labels.join(", "))))
}

fn build_pattern(spec: &TransformSpec, labels: &[String], c: &WeightVector) -> Result<PatternMatrix, CliError> {
    let idx = |n: &str| part_index(labels, n);
    let ctx = format!("--transform {spec}");
    let p = match spec {
        TransformSpec::Lr => lr_pattern(labels),
        TransformSpec::Clr => clr_pattern(labels, c),
        TransformSpec::Alr(r) => alr_pattern(labels, idx(r)?),
        TransformSpec::Plr(order) => {
            let order = order.iter().map(|n| idx(n)).collect::<Result<Vec<_>, _>>()?;
            plr_pattern(labels, c, &order)
        }
        TransformSpec::Ilr(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let tree = MergeTree::from_json(&text).map_err(config(&path.display().to_string()))?;
            ilr_pattern(labels, &tree, c)
        }
        TransformSpec::Dag(pairs) => {
            let pairs = pairs
                .iter()
                .map(|(n, d)| Ok((idx(n)?, idx(d)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            RatioSpec::new(pairs, labels.len()).and_then(|s| dag_pattern(labels, &s))
        }
        TransformSpec::Slr(groups) => {
            let groups = groups
                .iter()
                .map(|(n, d)| {
                    let side = |g: &[String]| g.iter().map(|p| idx(p)).collect::<Result<Vec<_>, _>>();
                    Ok(SlrGroup::new(side(n)?, side(d)?))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            slr_pattern(labels, &groups)
        }
    };
    p.map_err(config(&ctx))
}

fn require_transform(config: &RunConfig) -> Result<&TransformSpec, CliError> {
    config
        .transform
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("--command {:?} needs --transform", config.command).to_lowercase()))
}

fn column(labels: &[String], name: &str, values: &[f64]) -> String {
    render_table("id", &[name.to_string()], labels, &DMatrix::from_column_slice(values.len(), 1, values))
}

fn transform(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let spec = require_transform(config)?;
    let x = load_compositions(&config.input)?;
    let c = part_weights(&config.weights, x.col_labels(), Some(&x))?;
    let p = build_pattern(spec, x.col_labels(), &c)?;
    let y = if p.kind() == PatternKind::Slr {
        slr_transform(&x, &p)
    } else {
        apply_pattern(&x.log(), &p)
    }
    .map_err(data("transform"))?;
    let out = &config.out;
    Ok(vec![
        write_atomic(out, "logratios.csv", &render_table("id", &y.col_labels(), x.row_labels(), &y.values))?,
        write_atomic(out, "weights.csv", &column(x.col_labels(), "weight", c.as_slice()))?,
    ])
}

/// Pairwise logratios are inverted from the first `J−1`, which all share
/// the first part and so form a spanning tree.
fn invert_row(y: &[f64], p: &PatternMatrix, c: &WeightVector) -> crate::Result<nalgebra::DVector<f64>> {
    match p.kind() {
        PatternKind::Alr => {
            let reference = (0..p.nparts()).find(|&k| p.coeffs().column(k).iter().all(|&v| v == -1.0));
            invert_alr(y, reference.expect("ALR has a reference column"))
        }
        PatternKind::Dag => invert_dag(y, p),
        PatternKind::Slr => invert_slr(y, p),
        PatternKind::LrAll => {
            let j = p.nparts();
            let star = RatioSpec::new((1..j).map(|k| (0, k)).collect(), j)?;
            invert_dag(&y[..j - 1], &dag_pattern(p.col_labels(), &star)?)
        }
        PatternKind::Clr | PatternKind::Plr | PatternKind::Ilr => invert_linear(y, p, c),
    }
}

fn invert(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let spec = require_transform(config)?;
    let labels = match (config.parts.is_empty(), weight_file_parts(&config.weights)?) {
        (false, _) => config.parts.clone(),
        (true, Some(l)) => l,
        (true, None) => return Err(CliError::Config("--command invert needs --parts or a weight file".into())),
    };
    if config.weights == WeightMode::Marginal {
        return Err(CliError::Config("marginal weights are undefined for invert; pass a weight file".into()));
    }
    let c = part_weights(&config.weights, &labels, None)?;
    let p = build_pattern(spec, &labels, &c)?;
    let t = read_table(&config.input)?;
    let expected = p.row_names();
    if t.col_labels != expected {
        return Err(CliError::Config(format!(
            "{}: columns [{}] do not match the logratios of {spec} [{}]",
            config.input.display(),
            t.col_labels.join(", "),
            expected.join(", ")
        )));
    }
    let mut comps = DMatrix::zeros(t.values.nrows(), labels.len());
    for i in 0..t.values.nrows() {
        let y: Vec<f64> = t.values.row(i).iter().copied().collect();
        let x = invert_row(&y, &p, &c).map_err(data(format!("row `{}`", t.row_labels[i])))?;
        comps.set_row(i, &x.transpose());
    }
    Ok(vec![write_atomic(
        &config.out,
        "compositions.csv",
        &render_table("id", &labels, &t.row_labels, &comps),
    )?])
}

fn sample_weights(x: &CompositionMatrix) -> WeightVector {
    WeightVector::uniform(x.nrows(), WeightAxis::Samples)
}

fn render_distances(d: &DistanceMatrix) -> String {
    render_table("id", &d.labels, &d.labels, &d.values)
}

fn distance(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let x = load_compositions(&config.input)?;
    let c = part_weights(&config.weights, x.col_labels(), Some(&x))?;
    let d = match config.cluster_target {
        ClusterTarget::Samples => logratio_distances(&x, &c, true),
        ClusterTarget::Parts => part_distances(&x, &sample_weights(&x), true),
        ClusterTarget::Amalgamation => {
            return Err(CliError::Config("distances are between samples or parts".into()));
        }
    }
    .map_err(data("distance"))?;
    Ok(vec![write_atomic(&config.out, "distances.csv", &render_distances(&d))?])
}

fn lra(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let x = load_compositions(&config.input)?;
    let c = part_weights(&config.weights, x.col_labels(), Some(&x))?;
    let res = lra_fit(&x, &sample_weights(&x), &c).map_err(data("lra"))?;
    let dims: Vec<String> = (1..=res.rank()).map(|k| format!("dim{k}")).collect();
    let axes: Vec<String> = (1..=res.rank()).map(|k| k.to_string()).collect();
    let eig = DMatrix::from_fn(res.rank(), 2, |k, col| {
        if col == 0 {
            res.eigenvalues[k]
        } else {
            res.explained_pct[k]
        }
    });
    let out = &config.out;
    Ok(vec![
        write_atomic(out, "rows_principal.csv", &render_table("id", &dims, &res.row_labels, &res.row_principal))?,
        write_atomic(out, "cols_standard.csv", &render_table("id", &dims, &res.col_labels, &res.col_standard))?,
        write_atomic(
            out,
            "cols_contribution.csv",
            &render_table("id", &dims, &res.col_labels, &res.col_contribution),
        )?,
        write_atomic(out, "cols_principal.csv", &render_table("id", &dims, &res.col_labels, &res.col_principal))?,
        write_atomic(
            out,
            "eigenvalues.csv",
            &render_table("axis", &["value".to_string(), "percent".to_string()], &axes, &eig),
        )?,
    ])
}

fn rounded(tree: &MergeTree) -> MergeTree {
    let merges = tree
        .merges()
        .iter()
        .map(|m| Merge {
            height: round_sig(m.height),
            ..*m
        })
        .collect();
    MergeTree::new(tree.leaves().to_vec(), merges).expect("rounding keeps the tree valid")
}

fn cluster(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let x = load_compositions(&config.input)?;
    let c = part_weights(&config.weights, x.col_labels(), Some(&x))?;
    let r = sample_weights(&x);
    let tree = match config.cluster_target {
        ClusterTarget::Samples => logratio_distances(&x, &c, true)
            .and_then(|d| ClusterInput::new(d, r))
            .and_then(|input| ward_cluster(&input)),
        ClusterTarget::Parts => part_distances(&x, &r, true)
            .and_then(|d| ClusterInput::new(d, c))
            .and_then(|input| ward_cluster(&input)),
        ClusterTarget::Amalgamation => amalgamation_cluster(&x, &r, &c, config.weights != WeightMode::Uniform),
    }
    .map_err(data("cluster"))?;
    Ok(vec![write_atomic(&config.out, "tree.json", &rounded(&tree).to_json())?])
}

fn regress(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let seed = config
        .seed
        .ok_or_else(|| CliError::Config("--command regress needs --seed".into()))?;
    if config.permutations < MIN_PERMUTATIONS {
        return Err(CliError::Config(format!(
            "--permutations must be at least {MIN_PERMUTATIONS}, got {}",
            config.permutations
        )));
    }
    let response = config
        .response
        .as_ref()
        .ok_or_else(|| CliError::Config("--command regress needs --response".into()))?;
    let spec = config.transform.clone().unwrap_or(TransformSpec::Clr);
    if matches!(spec, TransformSpec::Slr(_) | TransformSpec::Lr) {
        return Err(CliError::Config(format!("regression needs a linearly independent transform, not {spec}")));
    }

    let x = load_compositions(&config.input)?;
    let c = part_weights(&config.weights, x.col_labels(), Some(&x))?;
    let p = build_pattern(&spec, x.col_labels(), &c)?;
    let t = read_table(response)?;
    if t.values.ncols() != 1 {
        return Err(CliError::Config(format!("{}: a response table has exactly one column", response.display())));
    }
    let logy = x
        .row_labels()
        .iter()
        .map(|l| {
            t.row_labels.iter().position(|r| r == l).map(|i| t.values[(i, 0)]).ok_or_else(|| CliError::Data {
                context: response.display().to_string(),
                source: Error::InvalidParameter(format!("no response for sample `{l}`")),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let fit = fit_logratio_model(&logy, &x, &p, &sample_weights(&x)).map_err(data("regress"))?;
    let perm = permutation_test(&logy, &x, &c, config.permutations, seed).map_err(data("permutation test"))?;
    let names = p.row_names();
    let doc = json!({
        "transform": spec.to_string(),
        "intercept": round_sig(fit.intercept),
        "r_squared": round_sig(fit.r_squared),
        "model_p_value": round_sig(fit.model_p_value),
        "coefficients": names.iter().enumerate().map(|(k, n)| json!({
            "logratio": n,
            "value": round_sig(fit.coeffs[k]),
            "t_p_value": round_sig(fit.coef_p_values[k]),
            "dropped": fit.dropped == Some(k),
        })).collect::<Vec<_>>(),
        "contrast": x.col_labels().iter().enumerate().map(|(j, part)| json!({
            "part": part,
            "a": round_sig(fit.contrast.a[j]),
            "permutation_p_value": round_sig(perm.p_values[j]),
        })).collect::<Vec<_>>(),
        "permutations": config.permutations,
        "seed": seed,
    });
    let text = serde_json::to_string_pretty(&doc).expect("model serialises") + "\n";
    Ok(vec![write_atomic(&config.out, "model.json", &text)?])
}

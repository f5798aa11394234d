//! Command-line front end.
//!
//! Every command prints a one-line JSON summary on stdout. With `--out DIR`
//! it also writes its artifact under `DIR` with a fixed name, plus a
//! provenance record `DIR/meta/<command>.json`; timestamps only ever go there,
//! so artifacts are byte-identical across identical runs.
//!
//! Exit codes: 0 on success, 2 for usage and validation errors, 1 for
//! runtime failures.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fractal_dims::{assouad_dimension, assouad_spectrum, box_dimension};
use crate::horseshoe_map::HorseshoeMap;
use crate::maps::{named_blackbox, IntervalMap, BLACKBOX_NAMES};
use crate::metric_engine::{cantor_left_endpoints, dyadic_grid, entropy_ladder, CountMethod, Metric, PointCloud};
use crate::orbit_tube::{tube_estimates, orbit_cells};
use crate::params::ParameterSpec;
use crate::transition_spectral::{
    bound, build_cover, build_matrix_exact, build_matrix_sampled, BoundMethod, EpsCover, TransitionMatrix,
};

/// Artifact names under `--out`.
pub const ENTROPY_CSV: &str = "entropy.csv";
pub const BOUNDS_JSON: &str = "bounds.json";
pub const DIMS_JSON: &str = "dims.json";
pub const TUBE_JSON: &str = "tube.json";
pub const REPORT_JSON: &str = "report.json";
pub const MAP_JSON: &str = "map.json";
pub const MATRIX_TXT: &str = "matrix.txt";
pub const CELLS_TXT: &str = "cells.txt";

/// Artifacts `report` collects, in order.
pub const REPORT_INPUTS: [&str; 5] = [MAP_JSON, ENTROPY_CSV, BOUNDS_JSON, DIMS_JSON, TUBE_JSON];

#[derive(Parser, Debug)]
#[command(
    name = "mdimlab",
    version,
    about = "Metric mean dimension laboratory for interval maps",
    long_about = "Metric mean dimension laboratory for interval maps.\n\n\
        All logarithms are natural. Numbers accept forms like 0.25, 1e-2, 2/81, 2^-8; \
        scale ladders accept comma lists or ranges like 2^-4..2^-8 or 3^-2..3^-8.\n\
        MDIMLAB_THREADS caps the worker count (0 = automatic)."
)]
struct Cli {
    /// Directory for output artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Horseshoe map evaluation and closed-form quantities.
    Map {
        #[command(subcommand)]
        command: MapCommand,
    },
    /// ε-entropy from separated / spanning / cover counts.
    Entropy {
        #[command(subcommand)]
        command: EntropyCommand,
    },
    /// Transition matrices and spectral bounds.
    Matrix {
        #[command(subcommand)]
        command: MatrixCommand,
    },
    /// Dimension estimates of point clouds.
    Dims {
        #[command(subcommand)]
        command: DimsCommand,
    },
    /// Orbit-tube volume brackets.
    Tube {
        #[command(subcommand)]
        command: TubeCommand,
    },
    /// Collect the artifacts in --out into report.json, with checksums.
    Report,
}

#[derive(Args, Debug, Clone, Default)]
struct MapArgs {
    /// preset1, preset2 or preset3.
    #[arg(long)]
    preset: Option<String>,
    /// Dimension parameter of preset2.
    #[arg(long, value_parser = parse_num)]
    beta: Option<f64>,
    /// Enumeration horizon; also the k_max of `map mdim-formula`.
    #[arg(long)]
    k_max: Option<usize>,
    /// Explicit gap list, comma separated.
    #[arg(long)]
    gaps: Option<String>,
    /// Explicit branch counts, comma separated.
    #[arg(long)]
    branches: Option<String>,
    /// Parameter specification as a JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// A builtin black-box map, `blackbox:NAME`.
    #[arg(long)]
    map: Option<String>,
}

#[derive(Subcommand, Debug)]
enum MapCommand {
    /// T(x).
    Eval {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_parser = parse_num)]
        x: f64,
    },
    /// Closed-form upper / lower metric mean dimension.
    MdimFormula {
        #[command(flatten)]
        map: MapArgs,
    },
    /// Hoelder constants H_k(alpha) for k = 1..=k_max.
    Holder {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_parser = parse_num)]
        alpha: f64,
    },
}

#[derive(Subcommand, Debug)]
enum EntropyCommand {
    /// Counts along a ladder of scales and their growth rates.
    Estimate {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Sampling resolution; defaults to a tenth of the smallest scale.
        #[arg(long, value_parser = parse_num)]
        delta: Option<f64>,
        #[arg(long, value_enum, default_value_t = CountArg::Separated)]
        method: CountArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CountArg {
    Separated,
    Spanning,
    Cover,
}

#[derive(Subcommand, Debug)]
enum MatrixCommand {
    /// Bound log r of the ε-cover transition matrix.
    Bound {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        eps: String,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Power for the knorm method.
        #[arg(long, default_value_t = 12)]
        k: usize,
        #[arg(long, value_enum, default_value_t = CoverArg::Mesh)]
        cover: CoverArg,
        /// Build from samples even when exact images are available.
        #[arg(long)]
        sampled: bool,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Also write matrix.txt (last scale only).
        #[arg(long)]
        export: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum MethodArg {
    GershgorinRow,
    GershgorinCol,
    Knorm,
    PowerIteration,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CoverArg {
    Mesh,
    Grid,
}

#[derive(Args, Debug, Clone)]
struct CloudArgs {
    /// CSV file, one point per row, no header.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Builtin cloud: `cantor:DEPTH` or `grid:M`.
    #[arg(long)]
    cloud: Option<String>,
    #[arg(long)]
    eps: String,
}

#[derive(Subcommand, Debug)]
enum DimsCommand {
    /// Upper and lower box dimension.
    Box {
        #[command(flatten)]
        cloud: CloudArgs,
    },
    /// Assouad dimension over pairs (r, ratio * r), r from --eps.
    Assouad {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, value_parser = parse_num, default_value = "8")]
        ratio: f64,
    },
    /// Assouad spectrum at theta.
    Spectrum {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, value_parser = parse_num)]
        theta: f64,
    },
}

#[derive(Subcommand, Debug)]
enum TubeCommand {
    /// Cell counts, volume brackets and dimension estimates.
    Measure {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: String,
        /// Also write the occupied cells of the last scale (n <= 4).
        #[arg(long)]
        dump: bool,
    },
}

/// Parses `0.25`, `1e-2`, `2/81`, `2^-8`.
pub fn parse_num(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let bad = || format!("cannot parse number '{s}'");
    let v = if let Some((a, b)) = s.split_once('^') {
        let base: f64 = a.trim().parse().map_err(|_| bad())?;
        let exp: f64 = b.trim().parse().map_err(|_| bad())?;
        base.powf(exp)
    } else if let Some((a, b)) = s.split_once('/') {
        let p: f64 = a.trim().parse().map_err(|_| bad())?;
        let q: f64 = b.trim().parse().map_err(|_| bad())?;
        p / q
    } else {
        s.parse().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// Parses a ladder: a comma list of numbers and `B^-A..B^-C` ranges.
pub fn parse_ladder(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (ba, ea) = split_power(a)?;
            let (bb, eb) = split_power(b)?;
            if ba != bb || ea >= eb {
                return Err(Error::InvalidInput(format!("bad ladder range '{part}'; use e.g. 2^-3..2^-8")));
            }
            out.extend((ea..=eb).map(|e| ba.powi(-e)));
        } else {
            out.push(parse_num(part).map_err(Error::InvalidInput)?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("empty ladder".into()));
    }
    Ok(out)
}

fn split_power(s: &str) -> Result<(f64, i32)> {
    let bad = || Error::InvalidInput(format!("ladder ends must look like 2^-8, got '{s}'"));
    let (b, e) = s.trim().split_once("^-").ok_or_else(bad)?;
    let base: f64 = b.parse().map_err(|_| bad())?;
    let exp: i32 = e.parse().map_err(|_| bad())?;
    if !(base > 1.0) || exp < 0 {
        return Err(bad());
    }
    Ok((base, exp))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| Error::InvalidInput(format!("bad {what} entry '{p}'"))))
        .collect()
}

enum LoadedMap {
    Horseshoe(HorseshoeMap),
    Black(Box<dyn IntervalMap>, String),
}

impl LoadedMap {
    fn as_dyn(&self) -> &dyn IntervalMap {
        match self {
            LoadedMap::Horseshoe(h) => h,
            LoadedMap::Black(b, _) => b.as_ref(),
        }
    }

    fn label(&self) -> String {
        match self {
            LoadedMap::Horseshoe(h) => h.spec().label(),
            LoadedMap::Black(_, name) => format!("blackbox:{name}"),
        }
    }

    fn horseshoe(&self) -> Result<&HorseshoeMap> {
        match self {
            LoadedMap::Horseshoe(h) => Ok(h),
            LoadedMap::Black(..) => Err(Error::InvalidInput("this command needs a horseshoe parameter map".into())),
        }
    }
}

impl MapArgs {
    fn spec(&self) -> Result<ParameterSpec> {
        let given = [self.preset.is_some(), self.gaps.is_some() || self.branches.is_some(), self.config.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(Error::InvalidInput("give only one of --preset, --gaps/--branches, --config".into()));
        }
        let mut spec = if let Some(p) = &self.preset {
            match p.as_str() {
                "preset1" => ParameterSpec::preset1(),
                "preset2" => {
                    let beta = self.beta.ok_or_else(|| Error::InvalidInput("preset2 needs --beta".into()))?;
                    ParameterSpec::preset2(beta)
                }
                "preset3" => ParameterSpec::preset3(),
                _ => return Err(Error::InvalidInput(format!("unknown preset '{p}'"))),
            }
        } else if let Some(path) = &self.config {
            serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::InvalidInput(format!("config: {e}")))?
        } else {
            let gaps = self.gaps.as_deref().ok_or_else(|| Error::InvalidInput("--branches needs --gaps".into()))?;
            let branches = self.branches.as_deref().ok_or_else(|| Error::InvalidInput("--gaps needs --branches".into()))?;
            let gaps = gaps
                .split(',')
                .map(|g| parse_num(g).map_err(Error::InvalidInput))
                .collect::<Result<Vec<f64>>>()?;
            ParameterSpec::explicit(gaps, parse_list(branches, "branch")?)
        };
        if let Some(k) = self.k_max {
            spec = spec.with_k_max(k);
        }
        Ok(spec)
    }

    fn load(&self) -> Result<LoadedMap> {
        if let Some(m) = &self.map {
            if self.preset.is_some() || self.gaps.is_some() || self.config.is_some() {
                return Err(Error::InvalidInput("--map cannot be combined with parameter flags".into()));
            }
            let name = m.strip_prefix("blackbox:").ok_or_else(|| {
                Error::InvalidInput(format!("--map takes blackbox:NAME with NAME in {BLACKBOX_NAMES:?}"))
            })?;
            let f = named_blackbox(name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown black box '{name}'; known: {BLACKBOX_NAMES:?}")))?;
            return Ok(LoadedMap::Black(f, name.to_string()));
        }
        if self.preset.is_none() && self.gaps.is_none() && self.branches.is_none() && self.config.is_none() {
            return Err(Error::InvalidInput("no map given; use --preset, --gaps/--branches, --config or --map".into()));
        }
        Ok(LoadedMap::Horseshoe(HorseshoeMap::new(self.spec()?)?))
    }
}

impl CloudArgs {
    fn load(&self) -> Result<PointCloud> {
        match (&self.points, &self.cloud) {
            (Some(path), None) => read_cloud(path),
            (None, Some(spec)) => {
                let (kind, arg) = spec
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidInput(format!("--cloud takes cantor:DEPTH or grid:M, got '{spec}'")))?;
                let n: u32 = arg.parse().map_err(|_| Error::InvalidInput(format!("bad cloud size '{arg}'")))?;
                match kind {
                    "cantor" if n <= 24 => Ok(cantor_left_endpoints(n)),
                    "grid" if n >= 1 => Ok(dyadic_grid(n as usize)),
                    _ => Err(Error::InvalidInput(format!("unknown or oversized cloud '{spec}'"))),
                }
            }
            _ => Err(Error::InvalidInput("give exactly one of --points and --cloud".into())),
        }
    }
}

fn read_cloud(path: &Path) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let p = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad coordinate '{f}'"))))
            .collect::<Result<Vec<f64>>>()?;
        pts.push(p);
    }
    PointCloud::new(pts, Metric::Sup)
}

/// What a command produced.
struct Outcome {
    name: &'static str,
    summary: Value,
    files: Vec<(&'static str, Vec<u8>)>,
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

fn run_map(cmd: MapCommand) -> Result<Outcome> {
    match cmd {
        MapCommand::Eval { map, x } => {
            let m = map.load()?;
            let y = match &m {
                LoadedMap::Horseshoe(h) => h.eval(x)?,
                LoadedMap::Black(f, _) => {
                    if !(0.0..=1.0).contains(&x) {
                        return Err(Error::Domain(x));
                    }
                    f.apply(x)
                }
            };
            let summary = json!({ "y": y });
            let file = json!({ "map": m.label(), "x": x, "y": y });
            Ok(Outcome { name: "map-eval", summary, files: vec![(MAP_JSON, pretty(&file)?)] })
        }
        MapCommand::MdimFormula { map } => {
            let m = map.load()?;
            let h = m.horseshoe()?;
            let r = h.mdim_formula(h.spec().horizon())?;
            let summary = json!({
                "upper": r.upper, "lower": r.lower, "holder_sup": r.holder_sup,
                "k_max": r.k_max, "window_start": r.window_start,
            });
            let file = json!({ "map": m.label(), "mdim_formula": r });
            Ok(Outcome { name: "map-mdim-formula", summary, files: vec![(MAP_JSON, pretty(&file)?)] })
        }
        MapCommand::Holder { map, alpha } => {
            let m = map.load()?;
            let h = m.horseshoe()?;
            let k_max = h.spec().horizon();
            let values = (1..=k_max).map(|k| h.holder_constant(k, alpha)).collect::<Result<Vec<f64>>>()?;
            let (argmax, max) = values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            let summary = json!({ "alpha": alpha, "k_max": k_max, "argmax_k": argmax + 1, "max": max });
            let file = json!({ "map": m.label(), "alpha": alpha, "holder_constants": values });
            Ok(Outcome { name: "map-holder", summary, files: vec![(MAP_JSON, pretty(&file)?)] })
        }
    }
}

fn run_entropy(cmd: EntropyCommand) -> Result<Outcome> {
    let EntropyCommand::Estimate { map, eps, n_max, delta, method } = cmd;
    let m = map.load()?;
    let ladder = parse_ladder(&eps)?;
    let delta = delta.unwrap_or_else(|| ladder.iter().copied().fold(f64::INFINITY, f64::min) / 10.0);
    let method = match method {
        CountArg::Separated => CountMethod::Separated,
        CountArg::Spanning => CountMethod::Spanning,
        CountArg::Cover => CountMethod::Cover,
    };
    let lad = entropy_ladder(m.as_dyn(), &ladder, n_max, delta, method)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "n", "count", "h_eps", "ratio"])?;
    for r in &lad.rows {
        w.write_record([r.epsilon.to_string(), r.n.to_string(), r.count.to_string(), r.h_eps.to_string(), r.ratio.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let rows: Vec<Value> =
        lad.rows.iter().map(|r| json!({ "epsilon": r.epsilon, "h_eps": r.h_eps, "ratio": r.ratio })).collect();
    let summary = json!({ "method": method, "n_max": n_max, "delta": delta, "rows": rows });
    Ok(Outcome { name: "entropy-estimate", summary, files: vec![(ENTROPY_CSV, bytes)] })
}

#[allow(clippy::too_many_arguments)]
fn run_matrix(cmd: MatrixCommand) -> Result<Outcome> {
    let MatrixCommand::Bound { map, eps, method, k, cover, sampled, samples, export } = cmd;
    let m = map.load()?;
    let ladder = parse_ladder(&eps)?;
    let methods: Vec<BoundMethod> = match method {
        MethodArg::GershgorinRow => vec![BoundMethod::GershgorinRow],
        MethodArg::GershgorinCol => vec![BoundMethod::GershgorinCol],
        MethodArg::Knorm => vec![BoundMethod::Knorm { k }],
        MethodArg::PowerIteration => vec![BoundMethod::PowerIteration],
        MethodArg::All => vec![
            BoundMethod::GershgorinRow,
            BoundMethod::GershgorinCol,
            BoundMethod::Knorm { k },
            BoundMethod::PowerIteration,
        ],
    };
    let mut results = Vec::new();
    let mut last: Option<TransitionMatrix> = None;
    for &e in &ladder {
        let c = match cover {
            CoverArg::Mesh => EpsCover::mesh(e)?,
            CoverArg::Grid => build_cover(e)?,
        };
        let mat = if sampled || m.as_dyn().piecewise().is_none() {
            build_matrix_sampled(m.as_dyn(), &c, samples)?
        } else {
            build_matrix_exact(m.as_dyn(), &c)?
        };
        let bounds = methods.iter().map(|&me| bound(&mat, me)).collect::<Result<Vec<_>>>()?;
        results.push(json!({
            "epsilon": e, "size": mat.size, "nnz": mat.nnz(), "exact": mat.exact, "bounds": bounds,
        }));
        last = Some(mat);
    }
    let summary = if results.len() == 1 && methods.len() == 1 {
        let b = &results[0]["bounds"][0];
        json!({
            "bound_log": b["value"], "method": methods[0].name(), "certified": b["certified"],
            "epsilon": ladder[0], "size": results[0]["size"],
        })
    } else {
        let compact: Vec<Value> = results
            .iter()
            .map(|r| {
                let vals: serde_json::Map<String, Value> = methods
                    .iter()
                    .zip(r["bounds"].as_array().unwrap())
                    .map(|(me, b)| (me.name(), b["value"].clone()))
                    .collect();
                json!({ "epsilon": r["epsilon"], "bound_log": vals })
            })
            .collect();
        json!({ "results": compact })
    };
    let label = match cover {
        CoverArg::Mesh => "mesh",
        CoverArg::Grid => "grid",
    };
    let file = json!({ "map": m.label(), "cover": label, "results": results });
    let mut files = vec![(BOUNDS_JSON, pretty(&file)?)];
    if export {
        let mut buf = Vec::new();
        last.unwrap().export(&mut buf)?;
        files.push((MATRIX_TXT, buf));
    }
    Ok(Outcome { name: "matrix-bound", summary, files })
}

fn run_dims(cmd: DimsCommand) -> Result<Outcome> {
    let (file, summary) = match cmd {
        DimsCommand::Box { cloud } => {
            let pts = cloud.load()?;
            let d = box_dimension(&pts, &parse_ladder(&cloud.eps)?)?;
            let s = json!({ "upper": d.upper.value, "lower": d.lower.value });
            (serde_json::to_value(&d)?, s)
        }
        DimsCommand::Assouad { cloud, ratio } => {
            if !(ratio > 1.0) {
                return Err(Error::InvalidInput(format!("--ratio must exceed 1, got {ratio}")));
            }
            let pts = cloud.load()?;
            let pairs: Vec<(f64, f64)> = parse_ladder(&cloud.eps)?.into_iter().map(|r| (r, r * ratio)).collect();
            let d = assouad_dimension(&pts, &pairs)?;
            let s = json!({ "value": d.value });
            (serde_json::to_value(&d)?, s)
        }
        DimsCommand::Spectrum { cloud, theta } => {
            let pts = cloud.load()?;
            let d = assouad_spectrum(&pts, theta, &parse_ladder(&cloud.eps)?)?;
            let s = json!({ "value": d.value, "theta": theta });
            (serde_json::to_value(&d)?, s)
        }
    };
    Ok(Outcome { name: "dims", summary, files: vec![(DIMS_JSON, pretty(&file)?)] })
}

fn run_tube(cmd: TubeCommand) -> Result<Outcome> {
    let TubeCommand::Measure { map, n, eps, dump } = cmd;
    let m = map.load()?;
    let ladder = parse_ladder(&eps)?;
    let brackets = tube_estimates(m.as_dyn(), n, &ladder)?;
    let summary = json!({
        "n": n,
        "cell_counts": brackets.iter().map(|b| b.cell_count).collect::<Vec<_>>(),
        "estimates": brackets.iter().map(|b| b.estimate).collect::<Vec<_>>(),
    });
    let file = json!({ "map": m.label(), "n": n, "brackets": brackets });
    let mut files = vec![(TUBE_JSON, pretty(&file)?)];
    if dump {
        let cells = orbit_cells(m.as_dyn(), n, *ladder.last().unwrap())?;
        let mut buf = String::new();
        for c in cells {
            let line: Vec<String> = c.iter().map(u32::to_string).collect();
            buf.push_str(&line.join(" "));
            buf.push('\n');
        }
        files.push((CELLS_TXT, buf.into_bytes()));
    }
    Ok(Outcome { name: "tube-measure", summary, files })
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn run_report(out: Option<&Path>) -> Result<Outcome> {
    let dir = out.ok_or_else(|| Error::InvalidInput("report needs --out".into()))?;
    let mut inputs = serde_json::Map::new();
    for name in REPORT_INPUTS {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let bytes = fs::read(&path)?;
        let content = if name.ends_with(".csv") {
            let mut rdr = csv::Reader::from_reader(bytes.as_slice());
            let headers = rdr.headers()?.clone();
            let mut rows = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                let row: serde_json::Map<String, Value> = headers
                    .iter()
                    .zip(rec.iter())
                    .map(|(h, v)| (h.to_string(), v.parse::<f64>().map(Value::from).unwrap_or_else(|_| Value::from(v))))
                    .collect();
                rows.push(Value::Object(row));
            }
            Value::Array(rows)
        } else {
            serde_json::from_slice(&bytes)?
        };
        inputs.insert(name.to_string(), json!({ "sha256": sha256_hex(&bytes), "bytes": bytes.len(), "content": content }));
    }
    if inputs.is_empty() {
        return Err(Error::InvalidInput(format!("no artifacts found in {}", dir.display())));
    }
    let names: Vec<&String> = inputs.keys().collect();
    let summary = json!({ "inputs": names });
    let file = json!({ "inputs": inputs });
    Ok(Outcome { name: "report", summary, files: vec![(REPORT_JSON, pretty(&file)?)] })
}

fn write_outcome(dir: &Path, argv: &[String], o: &Outcome) -> Result<()> {
    fs::create_dir_all(dir.join("meta"))?;
    for (name, bytes) in &o.files {
        fs::write(dir.join(name), bytes)?;
    }
    let unix_time = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "command": o.name,
        "argv": argv,
        "version": env!("CARGO_PKG_VERSION"),
        "unix_time": unix_time,
        "outputs": o.files.iter().map(|f| f.0).collect::<Vec<_>>(),
        "sha256": o.files.iter().map(|f| (f.0.to_string(), Value::from(sha256_hex(&f.1)))).collect::<serde_json::Map<_, _>>(),
    });
    fs::write(dir.join("meta").join(format!("{}.json", o.name)), pretty(&meta)?)?;
    Ok(())
}

fn init_threads() {
    let n = std::env::var("MDIMLAB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    // a second call in the same process fails harmlessly
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let out = cli.out.clone();
    let result = match cli.command {
        Command::Map { command } => run_map(command),
        Command::Entropy { command } => run_entropy(command),
        Command::Matrix { command } => run_matrix(command),
        Command::Dims { command } => run_dims(command),
        Command::Tube { command } => run_tube(command),
        Command::Report => run_report(out.as_deref()),
    };
    let outcome = result.and_then(|o| {
        if let Some(dir) = &out {
            write_outcome(dir, &argv, &o)?;
        }
        Ok(o)
    });
    match outcome {
        Ok(o) => {
            println!("{}", o.summary);
            0
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string() }));
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_num("2^-8").unwrap(), 1.0 / 256.0);
        assert_eq!(parse_num("2/81").unwrap(), 2.0 / 81.0);
        assert_eq!(parse_num("1e-2").unwrap(), 0.01);
        assert!(parse_num("abc").is_err());
        assert!(parse_num("1/0").is_err());
    }

    #[test]
    fn ladders() {
        assert_eq!(parse_ladder("2^-3..2^-5").unwrap(), vec![0.125, 0.0625, 0.03125]);
        assert_eq!(parse_ladder("3^-1..3^-2").unwrap(), vec![1.0 / 3.0, 1.0 / 9.0]);
        assert_eq!(parse_ladder("0.1, 2^-4").unwrap(), vec![0.1, 0.0625]);
        assert!(parse_ladder("2^-5..2^-3").is_err());
        assert!(parse_ladder("2^-3..3^-5").is_err());
        assert!(parse_ladder("").is_err());
    }
}

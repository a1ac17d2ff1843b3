//! One function per subcommand. Each reads a validated config and writes its
//! artifacts into the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use krmap::approx::ApproxTransport;
use krmap::density::Density;
use krmap::metrics::{distance_report, pullback_distance};
use krmap::studies::{self, StudyOptions};
use krmap::transport::{ExactTransport, Inverse, TransportSettings, TriangularMap};
use serde::Serialize;

use crate::config::{CommandKind, ExperimentConfig};
use crate::error::CliError;

/// Settings resolved from the command line and the config.
pub struct Context {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    fn path(&self, cmd: CommandKind, suffix: &str) -> PathBuf {
        self.out_dir.join(format!("{}{suffix}", self.config.output_name(cmd)))
    }

    fn study_options(&self) -> StudyOptions {
        let cfg = &self.config;
        let defaults = StudyOptions::default();
        StudyOptions {
            cloud_size: cfg.cloud_size.unwrap_or(defaults.cloud_size),
            seed: self.seed,
            approx: cfg.approx.clone(),
            distances: match cfg.quadrature.distances {
                Some(false) => None,
                _ => Some(cfg.distance_options()),
            },
            record_timing: cfg.record_timing,
        }
    }

    fn exact(&self) -> Result<ExactTransport<f64>, CliError> {
        let target = self.config.target()?;
        let reference = self.config.reference(target.dim())?;
        let mut settings = TransportSettings::default();
        if let Some(n) = self.config.quadrature.cdf_order {
            settings.cdf_order = n;
        }
        Ok(ExactTransport::with_settings(reference, target, settings)?)
    }

    fn approx(&self, exact: &ExactTransport<f64>, epsilon: f64) -> Result<ApproxTransport<f64>, CliError> {
        let xi = self.config.xi(exact.target())?;
        Ok(ApproxTransport::build(exact, &xi, epsilon, &self.config.approx)?)
    }

    /// A serialized map if one is given, else a fitted map if `epsilon` is
    /// set, else the exact transport.
    fn map(&self) -> Result<(Map, ExactTransport<f64>), CliError> {
        let exact = self.exact()?;
        let map = if let Some(path) = &self.config.map {
            let file = File::open(path).map_err(|e| CliError::Config(format!("cannot read map {}: {e}", path.display())))?;
            let approx: ApproxTransport<f64> = serde_json::from_reader(std::io::BufReader::new(file))
                .map_err(|e| CliError::Config(format!("invalid map {}: {e}", path.display())))?;
            if approx.dim() != exact.dim() {
                return Err(CliError::Config(format!("map has dimension {} but target has {}", approx.dim(), exact.dim())));
            }
            Map::Approx(approx)
        } else if let Some(eps) = self.config.epsilon {
            Map::Approx(self.approx(&exact, eps)?)
        } else {
            Map::Exact(Box::new(exact.clone()))
        };
        Ok((map, exact))
    }
}

/// The map a point command operates on.
pub enum Map {
    Exact(Box<ExactTransport<f64>>),
    Approx(ApproxTransport<f64>),
}

impl TriangularMap<f64> for Map {
    fn dim(&self) -> usize {
        match self {
            Map::Exact(m) => m.dim(),
            Map::Approx(m) => m.dim(),
        }
    }

    fn apply_prefix_with_diag(&self, x: &[f64]) -> krmap::Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Map::Exact(m) => m.apply_prefix_with_diag(x),
            Map::Approx(m) => m.apply_prefix_with_diag(x),
        }
    }

    fn invert_prefix(&self, y: &[f64]) -> krmap::Result<Vec<f64>> {
        match self {
            Map::Exact(m) => m.invert_prefix(y),
            Map::Approx(m) => m.invert_prefix(y),
        }
    }
}

pub fn run(cmd: CommandKind, ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(&ctx.out_dir)?;
    match cmd {
        CommandKind::TransportEval => transport_eval(ctx),
        CommandKind::ApproxBuild => approx_build(ctx),
        CommandKind::Distance => distance(ctx),
        CommandKind::Sample => sample(ctx),
        CommandKind::StudyConvergence => study_convergence(ctx),
        CommandKind::StudyTruncation => study_truncation(ctx),
        CommandKind::StudyPosterior => study_posterior(ctx),
    }
}

/// Reads one point per row; a non-numeric first row is taken as a header.
pub fn read_points(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("cannot read points {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let x = match parsed {
            Ok(x) => x,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CliError::Config(format!("{}: row {}: {e}", path.display(), i + 1))),
        };
        if x.len() != dim {
            return Err(CliError::Config(format!("{}: row {} has {} values, expected {dim}", path.display(), i + 1, x.len())));
        }
        if x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(CliError::Config(format!("{}: row {} lies outside [-1,1]^{dim}", path.display(), i + 1)));
        }
        points.push(x);
    }
    Ok(points)
}

fn header(prefixes: &[&str], d: usize) -> Vec<String> {
    prefixes.iter().flat_map(|p| (1..=d).map(move |j| format!("{p}{j}"))).collect()
}

fn write_rows(path: &Path, header: Vec<String>, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(&header)?;
    for row in rows {
        writer.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    writer.flush()?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Columns `x_j`, `y_j = T_j(x)`, `dT_j = ∂_{x_j} T_j(x)`.
fn transport_eval(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (map, _) = ctx.map()?;
    let path = ctx.config.points.as_ref().ok_or_else(|| CliError::Config("missing points".into()))?;
    let points = read_points(path, map.dim())?;
    let rows = eval_rows(&map, &points)?;
    let out = ctx.path(CommandKind::TransportEval, ".csv");
    write_rows(&out, header(&["x", "y", "dT"], map.dim()), &rows)?;
    Ok(vec![out])
}

fn eval_rows<M: TriangularMap<f64>>(map: &M, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CliError> {
    use rayon::prelude::*;
    let rows: krmap::Result<Vec<Vec<f64>>> = points
        .par_iter()
        .map(|x| {
            let (y, diag) = map.apply_with_diag(x)?;
            Ok(x.iter().chain(&y).chain(&diag).copied().collect())
        })
        .collect();
    Ok(rows?)
}

fn approx_build(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let exact = ctx.exact()?;
    let eps = ctx.config.epsilon.ok_or_else(|| CliError::Config("missing epsilon".into()))?;
    let approx = ctx.approx(&exact, eps)?;
    let out = ctx.path(CommandKind::ApproxBuild, ".json");
    write_json(&out, &approx)?;
    Ok(vec![out])
}

fn distance(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let options = ctx.config.distance_options();
    let report = match ctx.config.compare()? {
        Some(other) => {
            let target = ctx.config.target()?;
            let d = target.dim();
            distance_report(|x: &[f64]| Ok(target.evaluate(x)), |x: &[f64]| Ok(other.evaluate(x)), d, &options)?
        }
        None => {
            let (map, exact) = ctx.map()?;
            pullback_distance(&Inverse(&map), exact.reference(), exact.target(), &options)?
        }
    };
    let out = ctx.path(CommandKind::Distance, ".json");
    write_json(&out, &report)?;
    Ok(vec![out])
}

fn sample(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (map, _) = ctx.map()?;
    let n = ctx.config.samples.ok_or_else(|| CliError::Config("missing samples".into()))?;
    let samples = studies::sample_pushforward(&map, n, ctx.seed)?;
    let out = ctx.path(CommandKind::Sample, ".csv");
    write_rows(&out, header(&["y"], map.dim()), &samples)?;
    Ok(vec![out])
}

fn write_study(ctx: &Context, cmd: CommandKind, result: &studies::StudyResult) -> Result<Vec<PathBuf>, CliError> {
    let csv_path = ctx.path(cmd, ".csv");
    let mut out = BufWriter::new(File::create(&csv_path)?);
    studies::write_csv(&result.records, &mut out)?;
    out.flush()?;
    let json_path = ctx.path(cmd, ".json");
    write_json(&json_path, result)?;
    Ok(vec![csv_path, json_path])
}

fn study_convergence(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let exact = ctx.exact()?;
    let xi = ctx.config.xi(exact.target())?;
    let eps = ctx.config.epsilon_list.as_deref().unwrap_or_default();
    let result = studies::convergence_study(&exact, &xi, eps, &ctx.study_options())?;
    write_study(ctx, CommandKind::StudyConvergence, &result)
}

fn study_truncation(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let t = ctx.config.truncation.as_ref().ok_or_else(|| CliError::Config("missing truncation".into()))?;
    let eps = ctx.config.epsilon_list.as_deref().unwrap_or_default();
    let result = studies::truncation_study(t.amplitude, t.decay, t.d_max, t.alpha, eps, &ctx.study_options())?;
    write_study(ctx, CommandKind::StudyTruncation, &result)
}

fn study_posterior(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let target: Density<f64> = ctx.config.target()?;
    let eps = ctx.config.epsilon.ok_or_else(|| CliError::Config("missing epsilon".into()))?;
    let n = ctx.config.samples.ok_or_else(|| CliError::Config("missing samples".into()))?;
    let mut report = studies::posterior_demo(&target, eps, n, &ctx.study_options())?;
    let samples = std::mem::take(&mut report.samples);
    let samples_path = ctx.out_dir.join(format!("{}_samples.csv", ctx.config.output_name(CommandKind::StudyPosterior)));
    write_rows(&samples_path, header(&["y"], target.dim()), &samples)?;
    let json_path = ctx.path(CommandKind::StudyPosterior, ".json");
    write_json(&json_path, &report)?;
    Ok(vec![json_path, samples_path])
}

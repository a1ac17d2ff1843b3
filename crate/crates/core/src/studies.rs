//! Experiment drivers: ε-sweeps of the rational approximation against the
//! exact transport, rate fitting, the posterior sampling demo, and CSV
//! output. Everything here is `f64`.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{default_xi, ApproxConfig, ApproxTransport};
use crate::density::{Density, MAX_QUADRATURE_DIM};
use crate::indexsets::WeightVector;
use crate::metrics::{pullback_distance, DistanceOptions, DistanceReport};
use crate::quadrature::TensorGrid;
use crate::rng::SeededRng;
use crate::transport::{ExactTransport, Inverse, TriangularMap};
use crate::{Error, Result};

/// Errors at or below this value are excluded from rate fits.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Knobs shared by all studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyOptions {
    /// Size of the seeded uniform cloud used for sup-norm estimates (the
    /// projection grid nodes are always added).
    pub cloud_size: usize,
    pub seed: u64,
    pub approx: ApproxConfig,
    /// `None` skips the distance computation.
    pub distances: Option<DistanceOptions>,
    /// Record wall-clock times. Off by default since timings differ
    /// between runs.
    pub record_timing: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            cloud_size: 2048,
            seed: 0,
            approx: ApproxConfig::default(),
            distances: Some(DistanceOptions::default()),
            record_timing: false,
        }
    }
}

/// One row of an ε-sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    /// `N_ε = Σ_k |Λ_{k,ε}|`.
    pub n_eps: usize,
    /// Largest `k` with `Λ_{k,ε} ≠ ∅`.
    pub k_eff: usize,
    pub cardinalities: Vec<usize>,
    /// Aggregate of `component_err_t` (max or sum, depending on the study).
    pub sup_err_t: f64,
    pub sup_err_dt: f64,
    /// Sampled `‖T_k − T̃_k‖_∞` per component.
    pub component_err_t: Vec<f64>,
    /// Sampled `‖∂_k T_k − ∂_k T̃_k‖_∞` per component.
    pub component_err_dt: Vec<f64>,
    /// Points used for the sup-norm estimate of the widest component.
    pub sample_points: usize,
    pub distances: Option<DistanceReport<f64>>,
    pub wall_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `log err` against `N^{1/d}`.
    Exponential { dim: usize },
    /// `log err` against `log N`.
    Algebraic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Fitted,
    /// Fewer than three errors above the floor; no fit was attempted.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub status: FitStatus,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// `((d−1)! Π log ξ_j)^{1/d}` for exponential fits; reference only.
    pub beta_reference: Option<f64>,
}

impl RateFit {
    fn degenerate(model: RateModel, points: usize) -> Self {
        Self { model, status: FitStatus::Degenerate, slope: f64::NAN, intercept: f64::NAN, r_squared: f64::NAN, points, beta_reference: None }
    }
}

/// Least-squares fit of `log err` on the model abscissa over pairs
/// `(N, err)` with `err > ERROR_FLOOR` (and `N > 0` for the algebraic model).
pub fn fit_rate(points: &[(usize, f64)], model: RateModel) -> Result<RateFit> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, e)| e.is_finite() && *e > ERROR_FLOOR && (*n > 0 || matches!(model, RateModel::Exponential { .. })))
        .map(|&(n, e)| {
            let x = match model {
                RateModel::Exponential { dim } => (n as f64).powf(1.0 / dim.max(1) as f64),
                RateModel::Algebraic => (n as f64).ln(),
            };
            (x, e.ln())
        })
        .collect();
    if xy.len() < 3 {
        return Err(Error::TooFewPoints(xy.len()));
    }
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all fit abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { model, status: FitStatus::Fitted, slope, intercept, r_squared, points: xy.len(), beta_reference: None })
}

/// [`fit_rate`] on `(N_ε, sup_err_t)` of the records; too few usable
/// records give a [`FitStatus::Degenerate`] result instead of an error.
pub fn fit_records(records: &[SweepRecord], model: RateModel) -> Result<RateFit> {
    let pts: Vec<(usize, f64)> = records.iter().map(|r| (r.n_eps, r.sup_err_t)).collect();
    match fit_rate(&pts, model) {
        Ok(f) => Ok(f),
        Err(Error::TooFewPoints(n)) => Ok(RateFit::degenerate(model, n)),
        Err(Error::InvalidArgument(_)) => Ok(RateFit::degenerate(model, pts.len())),
        Err(e) => Err(e),
    }
}

/// `β = ((d−1)! Π_j log ξ_j)^{1/d}`.
pub fn theoretical_beta(xi: &WeightVector<f64>) -> f64 {
    let d = xi.len();
    let log_sum: f64 = (1..d).map(|j| (j as f64).ln()).sum::<f64>() + xi.as_slice().iter().map(|x| x.ln().ln()).sum::<f64>();
    (log_sum / d as f64).exp()
}

/// Values are nonincreasing up to a relative band (`0.05` = 5%).
pub fn is_nonincreasing(values: &[f64], band: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + band))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Aggregate {
    Max,
    Sum,
}

/// Exact map values and diagonals at a fixed point set.
struct ExactSamples {
    points: Vec<Vec<f64>>,
    values: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ExactSamples {
    fn new(exact: &ExactTransport<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        let values = points.par_iter().map(|x| exact.apply_with_diag(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self { points, values })
    }
}

/// Per-component sampled errors of `approx` against `exact` over the cloud
/// and each component's projection grid.
fn component_errors(
    exact: &ExactTransport<f64>,
    approx: &ApproxTransport<f64>,
    cloud: &ExactSamples,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let d = exact.dim();
    let mut err_t = vec![0.0f64; d];
    let mut err_dt = vec![0.0f64; d];
    let approx_cloud = cloud.points.par_iter().map(|x| approx.apply_with_diag(x)).collect::<Result<Vec<_>>>()?;
    for ((ty, td), (ay, ad)) in cloud.values.iter().zip(&approx_cloud) {
        for k in 0..d {
            err_t[k] = err_t[k].max((ty[k] - ay[k]).abs());
            err_dt[k] = err_dt[k].max((td[k] - ad[k]).abs());
        }
    }
    let mut widest = 0;
    for (k, comp) in approx.components().iter().enumerate() {
        if comp.grid_orders().is_empty() {
            continue;
        }
        let grid = TensorGrid::<f64>::with_orders(comp.grid_orders());
        widest = widest.max(grid.len());
        let errs = grid
            .map_nodes(|x| -> Result<(f64, f64)> {
                let (ty, td) = exact.apply_prefix_with_diag(x)?;
                let (ay, ad) = comp.value_and_derivative(x)?;
                Ok(((ty[k] - ay).abs(), (td[k] - ad).abs()))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        for (et, edt) in errs {
            err_t[k] = err_t[k].max(et);
            err_dt[k] = err_dt[k].max(edt);
        }
    }
    Ok((err_t, err_dt, cloud.points.len() + widest))
}

fn sweep(
    exact: &ExactTransport<f64>,
    xi: &WeightVector<f64>,
    epsilons: &[f64],
    options: &StudyOptions,
    aggregate: Aggregate,
) -> Result<Vec<SweepRecord>> {
    let d = exact.dim();
    if xi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: xi.len() });
    }
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("epsilon list is empty".into()));
    }
    let mut rng = SeededRng::new(options.seed);
    let cloud = ExactSamples::new(exact, rng.cube_cloud(options.cloud_size, d))?;
    let want_distances = options.distances.as_ref().filter(|_| d <= MAX_QUADRATURE_DIM);
    let mut records = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let start = Instant::now();
        let approx = ApproxTransport::build(exact, xi, epsilon, &options.approx)?;
        let (err_t, err_dt, sample_points) = component_errors(exact, &approx, &cloud)?;
        let distances = match want_distances {
            Some(opts) => Some(pullback_distance(&Inverse(&approx), exact.reference(), exact.target(), opts)?),
            None => None,
        };
        let fold = |v: &[f64]| match aggregate {
            Aggregate::Max => v.iter().copied().fold(0.0, f64::max),
            Aggregate::Sum => v.iter().sum(),
        };
        records.push(SweepRecord {
            epsilon,
            n_eps: approx.n_eps(),
            k_eff: approx.effective_dim(),
            cardinalities: approx.cardinalities(),
            sup_err_t: fold(&err_t),
            sup_err_dt: fold(&err_dt),
            component_err_t: err_t,
            component_err_dt: err_dt,
            sample_points,
            distances,
            wall_ms: if options.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 },
        });
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub records: Vec<SweepRecord>,
    pub fit: RateFit,
}

/// ε-sweep with `sup_err_t = max_k ‖T_k − T̃_k‖_∞`, fitted against
/// `N_ε^{1/d}`.
pub fn convergence_study(exact: &ExactTransport<f64>, xi: &WeightVector<f64>, epsilons: &[f64], options: &StudyOptions) -> Result<StudyResult> {
    let records = sweep(exact, xi, epsilons, options, Aggregate::Max)?;
    let mut fit = fit_records(&records, RateModel::Exponential { dim: exact.dim() })?;
    if fit.status == FitStatus::Fitted {
        fit.beta_reference = Some(theoretical_beta(xi));
    }
    Ok(StudyResult { records, fit })
}

/// Linear target `c_j = amplitude · j^{-decay}` in `d_max` variables,
/// `ξ_j = 1 + alpha/c_j`, with errors summed over all components (those
/// beyond `k_ε` are the identity and contribute `‖T_k − x_k‖_∞`). Fitted
/// against `log N_ε`.
pub fn truncation_study(amplitude: f64, decay: f64, d_max: usize, alpha: f64, epsilons: &[f64], options: &StudyOptions) -> Result<StudyResult> {
    let target = Density::linear_decay(amplitude, decay, d_max)?;
    let xi = default_xi(&target, alpha)?;
    let exact = ExactTransport::new(Density::uniform(d_max), target)?;
    let records = sweep(&exact, &xi, epsilons, options, Aggregate::Sum)?;
    let fit = fit_records(&records, RateModel::Algebraic)?;
    Ok(StudyResult { records, fit })
}

/// `N` seeded uniform points mapped through `map`.
pub fn sample_pushforward<M: TriangularMap<f64>>(map: &M, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = SeededRng::new(seed);
    let xs: Vec<Vec<f64>> = rng.cube_cloud(n, map.dim());
    xs.par_iter().map(|x| map.apply(x)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub epsilon: f64,
    pub n_eps: usize,
    pub cardinalities: Vec<usize>,
    pub distances: Option<DistanceReport<f64>>,
    pub n_samples: usize,
    pub sample_mean: Vec<f64>,
    pub sample_std: Vec<f64>,
    pub quadrature_mean: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub samples: Vec<Vec<f64>>,
}

impl PosteriorReport {
    /// `|sample mean − quadrature mean| ≤ 3·std/√N` in every coordinate.
    pub fn mean_within_clt_band(&self) -> bool {
        let n = self.n_samples as f64;
        self.sample_mean
            .iter()
            .zip(&self.quadrature_mean)
            .zip(&self.sample_std)
            .all(|((m, q), s)| (m - q).abs() <= 3.0 * s / n.sqrt())
    }
}

/// Fits `T̃` from the uniform reference to the Gaussian-likelihood
/// posterior (`ξ_j = 1 + 1/b_j` with `b_j` the column norms of the forward
/// map), then reports distances, pushforward samples and their mean.
pub fn posterior_demo(target: &Density<f64>, epsilon: f64, n_samples: usize, options: &StudyOptions) -> Result<PosteriorReport> {
    let d = target.dim();
    let xi = default_xi(target, 1.0)?;
    let exact = ExactTransport::new(Density::uniform(d), target.clone())?;
    let approx = ApproxTransport::build(&exact, &xi, epsilon, &options.approx)?;
    let distances = match &options.distances {
        Some(opts) => Some(pullback_distance(&Inverse(&approx), exact.reference(), target, opts)?),
        None => None,
    };
    let samples = sample_pushforward(&approx, n_samples, options.seed)?;
    let n = samples.len().max(1) as f64;
    let mut mean = vec![0.0; d];
    for y in &samples {
        for j in 0..d {
            mean[j] += y[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for y in &samples {
        for j in 0..d {
            var[j] += (y[j] - mean[j]).powi(2);
        }
    }
    let denom = (samples.len().max(2) - 1) as f64;
    let std: Vec<f64> = var.iter().map(|v| (v / denom).sqrt()).collect();
    let order = options.distances.clone().unwrap_or_default().order_for(d)?;
    let grid = TensorGrid::uniform(d, order);
    let quadrature_mean = (0..d)
        .map(|j| grid.integrate(|y| y[j] * target.evaluate(y)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorReport {
        epsilon,
        n_eps: approx.n_eps(),
        cardinalities: approx.cardinalities(),
        distances,
        n_samples,
        sample_mean: mean,
        sample_std: std,
        quadrature_mean,
        samples,
    })
}

pub const CSV_HEADER: &str = "epsilon,N_eps,k_eff,sup_err_T,sup_err_dT,hellinger,tv,kl,w1,w1_exact,wall_ms";

/// Writes one row per record. Floats use the shortest representation that
/// round-trips; missing distances are written as `NaN`.
pub fn write_csv<W: Write>(records: &[SweepRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let (h, tv, kl, w1, exact) = match &r.distances {
            Some(d) => (d.hellinger, d.tv, d.kl, d.w1, d.w1_exact.to_string()),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, String::new()),
        };
        writeln!(
            out,
            "{:?},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{},{:?}",
            r.epsilon, r.n_eps, r.k_eff, r.sup_err_t, r.sup_err_dt, h, tv, kl, w1, exact, r.wall_ms
        )?;
    }
    Ok(())
}

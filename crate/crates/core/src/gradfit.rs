//! Spike Jacobians of sampled singular values, batch means and a
//! Levenberg-Marquardt spike fitter.
//!
//! Row `r` of `H` is `sigma_r` times a row of spike-free noise, so holding
//! the noise fixed makes `H` a deterministic function of the spikes. With
//! `H = U D V^T`, `dd_l / dH[i,j] = U[i,l] V[j,l]`, and therefore
//!
//! ```text
//! dd_l / dsigma_r = U[r,l] * sum_j H[r,j] V[j,l] / sigma_r      (r <= k)
//! ```
//!
//! Averaging that over many samples estimates the derivative of the expected
//! singular values.

use serde::{Deserialize, Serialize};

use crate::banded::BandedSample;
use crate::error::{domain, Error, Result};
use crate::linalg::Mat;
use crate::sampler::{scale_noise, SpikeSpec, UnitNoise};
use crate::spectra::{top_svd, SpectralResult};
use crate::variates::RandomStream;

/// `L x k` Jacobian `J[l, r] = dd_l / dsigma_r` of one sample.
///
/// Fails with [`Error::Degenerate`] when any of the first `l` values is
/// clustered, since the derivative of a repeated singular value is not
/// defined.
pub fn sample_jacobian(h: &BandedSample, s: &SpectralResult, l: usize) -> Result<Mat> {
    if l > s.ncomputed() {
        return Err(domain(format!("asked for {l} rows but only {} values were computed", s.ncomputed())));
    }
    if let Some(index) = s.clustered[..l].iter().position(|&c| c) {
        return Err(Error::Degenerate { index });
    }
    let spikes = h.spec().spikes();
    let mut j = Mat::zeros(l, spikes.len());
    for row in 0..l {
        for (r, &sigma) in spikes.iter().enumerate() {
            j[(row, r)] = s.left_rows[row][r] * s.right_projections[row][r] / sigma;
        }
    }
    Ok(j)
}

/// Rebuild `H` from recorded unit-scale noise under new spikes. Replaying
/// with the spikes the noise was drawn with reproduces the original sample
/// bit for bit.
pub fn reparam_resample(spec: &SpikeSpec, noise: &UnitNoise) -> Result<BandedSample> {
    scale_noise(spec, noise)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobianBatch {
    pub per_sample: Vec<Mat>,
    pub mean: Mat,
    pub batch_size: usize,
    pub l: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanEstimate {
    /// Batch means of the `L` leading singular values.
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub jacobian: JacobianBatch,
    /// Samples left out because a covered singular value was clustered.
    pub dropped: usize,
}

fn check_l(spec: &SpikeSpec, l: usize) -> Result<()> {
    if l == 0 || l > spec.rank_bound() {
        return Err(domain(format!("L must be in 1..={}, got {l}", spec.rank_bound())));
    }
    Ok(())
}

/// Means and mean Jacobian over a fixed set of noise draws under `spec`.
pub fn mean_over_noise(spec: &SpikeSpec, l: usize, noise: &[UnitNoise]) -> Result<MeanEstimate> {
    check_l(spec, l)?;
    if noise.is_empty() {
        return Err(domain("batch must hold at least one sample"));
    }
    let k = spec.k();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(noise.len());
    let mut per_sample = Vec::with_capacity(noise.len());
    let mut dropped = 0;
    for z in noise {
        let h = reparam_resample(spec, z)?;
        let s = top_svd(&h, l)?;
        match sample_jacobian(&h, &s, l) {
            Ok(j) => {
                values.push(s.singular_values);
                per_sample.push(j);
            }
            Err(Error::Degenerate { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if per_sample.is_empty() {
        return Err(Error::FitAborted {
            dropped,
            batch: noise.len(),
        });
    }
    let kept = per_sample.len() as f64;
    let mut means = vec![0.0; l];
    for v in &values {
        for (m, x) in means.iter_mut().zip(v) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= kept);
    let std_errors = (0..l)
        .map(|i| {
            if values.len() < 2 {
                return 0.0;
            }
            let var = values.iter().map(|v| (v[i] - means[i]).powi(2)).sum::<f64>() / (kept - 1.0);
            (var / kept).sqrt()
        })
        .collect();
    let mut mean = Mat::zeros(l, k);
    for j in &per_sample {
        for c in 0..k {
            for r in 0..l {
                mean[(r, c)] += j[(r, c)];
            }
        }
    }
    for c in 0..k {
        for r in 0..l {
            mean[(r, c)] /= kept;
        }
    }
    Ok(MeanEstimate {
        means,
        std_errors,
        jacobian: JacobianBatch {
            batch_size: per_sample.len(),
            per_sample,
            mean,
            l,
        },
        dropped,
    })
}

/// Draw `batch` noise records, sample `i` from `stream.substream(i)`.
pub fn draw_noise_batch(spec: &SpikeSpec, batch: usize, stream: &RandomStream) -> Vec<UnitNoise> {
    (0..batch as u64)
        .map(|i| UnitNoise::draw(spec, &mut stream.substream(i)))
        .collect()
}

/// Batch means of the `l` leading singular values and the batch-mean
/// Jacobian. Sample `i` uses `stream.substream(i)`, so growing the batch
/// keeps the earlier samples.
pub fn mean_singular_values(spec: &SpikeSpec, l: usize, batch: usize, stream: &RandomStream) -> Result<MeanEstimate> {
    check_l(spec, l)?;
    if batch == 0 {
        return Err(domain("batch must be at least 1"));
    }
    mean_over_noise(spec, l, &draw_noise_batch(spec, batch, stream))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIters,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub batch: usize,
    pub max_iters: usize,
    /// Draw new noise for every objective evaluation instead of reusing one
    /// batch for the whole fit.
    pub fresh_noise: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            batch: 1000,
            max_iters: 100,
            fresh_noise: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    /// Spikes after each accepted step, starting with the initial guess.
    pub iterates: Vec<Vec<f64>>,
    /// Residual norm at each entry of `iterates`.
    pub residual_norms: Vec<f64>,
    /// Damping in force when each entry of `iterates` was reached.
    pub damping_trace: Vec<f64>,
    pub status: FitStatus,
    /// Best spikes, sorted descending. The ensemble only depends on the
    /// spikes as a multiset, so the optimizer may finish with them in any
    /// order; `iterates` keep the order it used.
    pub final_spikes: Vec<f64>,
    pub target: Vec<f64>,
    /// Model means at the last accepted iterate.
    pub fitted_means: Vec<f64>,
    /// Attempted steps, accepted or not.
    pub iterations: usize,
    pub evaluations: usize,
    /// Samples dropped for clustered values in the last accepted evaluation.
    pub dropped: usize,
    /// `J^T J` was numerically singular for several consecutive steps.
    pub rank_deficient: bool,
    /// Trial steps rejected because too many samples there had clustered
    /// singular values.
    pub degenerate_rejections: usize,
    pub warnings: Vec<String>,
}

const STEP_TOL: f64 = 1e-8;
const DECREASE_TOL: f64 = 1e-12;
const MAX_DROP_FRACTION: f64 = 0.01;

/// Cholesky solve of the small SPD system `a x = b`.
fn solve_spd(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for p in 0..j {
            d -= l[(j, p)] * l[(j, p)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for p in 0..i {
            y[i] -= l[(i, p)] * y[p];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for p in i + 1..n {
            y[i] -= l[(p, i)] * y[p];
        }
        y[i] /= l[(i, i)];
    }
    Some(y)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Evaluation {
    residual: Vec<f64>,
    /// Jacobian with respect to log-spikes.
    jac: Mat,
    means: Vec<f64>,
    dropped: usize,
}

/// Fit spikes so that the batch means of the leading `target.len()`
/// singular values match `target` in least squares.
///
/// `template` supplies `m` and `n`; the number of fitted spikes is
/// `init.len()`. Spikes are optimized in log coordinates, which keeps them
/// positive. Unless `fresh_noise` is set, one noise batch drawn from
/// `stream` is reused for every evaluation, so the objective is a fixed
/// deterministic function within a fit.
pub fn fit_spikes(
    target: &[f64],
    template: &SpikeSpec,
    init: &[f64],
    opts: &FitOptions,
    stream: &RandomStream,
) -> Result<FitReport> {
    let l = target.len();
    if l == 0 {
        return Err(domain("target is empty"));
    }
    if target.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(domain("target values must be positive and finite"));
    }
    if target.windows(2).any(|w| w[1] > w[0]) {
        return Err(domain("target values must be in descending order"));
    }
    if opts.batch == 0 {
        return Err(domain("batch must be at least 1"));
    }
    let spec0 = template.with_spikes(init.to_vec())?;
    if init.is_empty() {
        return Err(domain("need at least one initial spike"));
    }
    check_l(&spec0, l)?;
    let k = init.len();
    let mut warnings = Vec::new();
    if l < k {
        warnings.push(format!("fitting {k} spikes to only {l} singular values; the problem is underdetermined"));
    }

    let fixed_noise = (!opts.fresh_noise).then(|| draw_noise_batch(&spec0, opts.batch, stream));
    let mut evaluations = 0usize;
    let mut evaluate = |spikes: &[f64]| -> Result<Evaluation> {
        let spec = template.with_spikes(spikes.to_vec())?;
        let est = match &fixed_noise {
            Some(noise) => mean_over_noise(&spec, l, noise)?,
            None => {
                let fresh = draw_noise_batch(&spec, opts.batch, &stream.substream(evaluations as u64));
                mean_over_noise(&spec, l, &fresh)?
            }
        };
        evaluations += 1;
        if est.dropped as f64 > MAX_DROP_FRACTION * opts.batch as f64 {
            return Err(Error::FitAborted {
                dropped: est.dropped,
                batch: opts.batch,
            });
        }
        let residual: Vec<f64> = est.means.iter().zip(target).map(|(m, t)| m - t).collect();
        let mut jac = est.jacobian.mean;
        for (r, &s) in spikes.iter().enumerate() {
            for row in 0..l {
                jac[(row, r)] *= s;
            }
        }
        Ok(Evaluation {
            residual,
            jac,
            means: est.means,
            dropped: est.dropped,
        })
    };

    let mut theta: Vec<f64> = init.iter().map(|s| s.ln()).collect();
    let mut spikes = init.to_vec();
    let mut cur = evaluate(&spikes)?;
    let mut cost = norm(&cur.residual);

    let normal_eq = |jac: &Mat| -> Mat {
        let mut a = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] = (0..l).map(|row| jac[(row, i)] * jac[(row, j)]).sum();
            }
        }
        a
    };
    let max_diag = |a: &Mat| (0..k).map(|i| a[(i, i)]).fold(0.0f64, f64::max);

    let jtj = normal_eq(&cur.jac);
    let mut lambda = 1e-3 * max_diag(&jtj);
    if !(lambda > 0.0) {
        lambda = 1e-3;
    }

    let mut report = FitReport {
        iterates: vec![spikes.clone()],
        residual_norms: vec![cost],
        damping_trace: vec![lambda],
        status: FitStatus::MaxIters,
        final_spikes: spikes.clone(),
        target: target.to_vec(),
        fitted_means: cur.means.clone(),
        iterations: 0,
        evaluations: 0,
        dropped: cur.dropped,
        rank_deficient: false,
        degenerate_rejections: 0,
        warnings,
    };

    let target_scale = norm(target);
    if cost <= f64::EPSILON * target_scale {
        report.status = FitStatus::Converged;
        report.evaluations = evaluations;
        report.final_spikes.sort_by(|a, b| b.total_cmp(a));
        return Ok(report);
    }

    let mut singular_streak = 0;
    for _ in 0..opts.max_iters {
        report.iterations += 1;
        let jtj = normal_eq(&cur.jac);
        let grad: Vec<f64> = (0..k)
            .map(|i| (0..l).map(|row| cur.jac[(row, i)] * cur.residual[row]).sum())
            .collect();
        if grad.iter().all(|g| *g == 0.0) {
            report.status = FitStatus::Converged;
            break;
        }

        // condition of the undamped normal equations
        let dmax = max_diag(&jtj);
        let well_posed = solve_spd(&jtj, &vec![0.0; k]).is_some()
            && (0..k).all(|i| jtj[(i, i)] > 1e-12 * dmax);
        singular_streak = if well_posed { 0 } else { singular_streak + 1 };
        if singular_streak >= 3 {
            report.rank_deficient = true;
        }

        let mut damped = jtj.clone();
        for i in 0..k {
            damped[(i, i)] += lambda;
        }
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let Some(delta) = solve_spd(&damped, &neg_grad) else {
            lambda *= 2.0;
            continue;
        };
        let theta_new: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + d).collect();
        let spikes_new: Vec<f64> = theta_new.iter().map(|t| t.exp()).collect();
        let step: Vec<f64> = spikes_new.iter().zip(&spikes).map(|(a, b)| a - b).collect();
        if norm(&step) < STEP_TOL * norm(&spikes) {
            report.status = FitStatus::Converged;
            break;
        }

        // A wild step can leave the representable range or collapse spikes
        // until most samples have clustered values; LM just rejects it.
        let trial = if spikes_new.iter().all(|s| s.is_finite() && *s > 0.0) {
            match evaluate(&spikes_new) {
                Err(Error::FitAborted { .. }) => {
                    report.degenerate_rejections += 1;
                    None
                }
                other => Some(other?),
            }
        } else {
            None
        };
        let trial_cost = trial.as_ref().map_or(f64::INFINITY, |t| norm(&t.residual));
        if let Some(trial) = trial.filter(|_| trial_cost < cost) {
            theta = theta_new;
            spikes = spikes_new;
            cur = trial;
            cost = trial_cost;
            lambda *= 0.5;
            report.iterates.push(spikes.clone());
            report.residual_norms.push(cost);
            report.damping_trace.push(lambda);
            let n = report.residual_norms.len();
            if n >= 4 {
                let before = report.residual_norms[n - 4];
                if before - cost < DECREASE_TOL * before {
                    report.status = FitStatus::Converged;
                    break;
                }
            }
            if cost <= f64::EPSILON * target_scale {
                report.status = FitStatus::Converged;
                break;
            }
        } else {
            lambda *= 2.0;
            if lambda > 1e16 * (1.0 + dmax) {
                report.status = FitStatus::Stalled;
                break;
            }
        }
    }

    if report.degenerate_rejections > 0 {
        report.warnings.push(format!(
            "{} trial steps rejected: more than {}% of samples had clustered singular values",
            report.degenerate_rejections,
            100.0 * MAX_DROP_FRACTION
        ));
    }
    if report.rank_deficient {
        report.warnings.push("J^T J stayed numerically singular over consecutive steps".into());
    }
    report.final_spikes = spikes;
    report.final_spikes.sort_by(|a, b| b.total_cmp(a));
    report.fitted_means = cur.means;
    report.dropped = cur.dropped;
    report.evaluations = evaluations;
    Ok(report)
}

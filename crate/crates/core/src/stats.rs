//! Two-sample Kolmogorov-Smirnov test, histograms and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

fn sorted_finite(xs: &[f64], name: &str) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(domain(format!("sample {name} is empty")));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(domain(format!("sample {name} contains NaN")));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `D = sup |F_a - F_b|` over right-continuous empirical CDFs, with the
/// p-value from the asymptotic Kolmogorov distribution at effective size
/// `n1 n2 / (n1 + n2)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let a = sorted_finite(a, "a")?;
    let b = sorted_finite(b, "b")?;
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let x = a[i].min(b[j]);
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    // once one sample is exhausted its ECDF is 1 and the other's only grows
    d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    Ok(KsResult {
        d_statistic: d,
        p_value: kolmogorov_sf(ne.sqrt() * d),
        n1,
        n2,
    })
}

/// `P(K > lambda)` for the Kolmogorov distribution, 100-term series.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // theta-function form converges fast for small lambda
        let pi2 = std::f64::consts::PI.powi(2);
        let s: f64 = (1..=100)
            .map(|j| {
                let t = (2 * j - 1) as f64;
                (-t * t * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        2.0 * (1..=100)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

pub enum Bins<'a> {
    /// Equal-width bins spanning the sample range.
    Count(usize),
    /// Explicit, strictly increasing edges.
    Edges(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples outside explicit edges (always 0 for `Bins::Count`).
    pub outside: u64,
}

/// Bins are right-closed `(lo, hi]`; the first bin also includes its lower edge.
pub fn histogram(samples: &[f64], bins: Bins<'_>) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(domain("cannot histogram an empty sample"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(domain("histogram samples must be finite"));
    }
    let edges = match bins {
        Bins::Count(0) => return Err(domain("need at least one bin")),
        Bins::Count(nb) => {
            let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
            let width = (hi - lo) / nb as f64;
            let mut e: Vec<f64> = (0..nb).map(|i| lo + width * i as f64).collect();
            e.push(hi);
            e
        }
        Bins::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[1] > w[0])) || e.iter().any(|x| !x.is_finite()) {
                return Err(domain("edges must be finite, strictly increasing and at least two"));
            }
            e.to_vec()
        }
    };
    let nb = edges.len() - 1;
    let mut counts = vec![0u64; nb];
    let mut outside = 0;
    let (lo, hi) = (edges[0], edges[nb]);
    for &x in samples {
        if x < lo || x > hi {
            outside += 1;
            continue;
        }
        let idx = edges.partition_point(|&e| e < x).saturating_sub(1).min(nb - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts, outside })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single value).
    pub variance: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(xs: &[f64]) -> Result<Summary> {
    if xs.is_empty() {
        return Err(domain("cannot summarize an empty sample"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(Summary {
        count: xs.len(),
        mean,
        variance,
        std_error: (variance / n).sqrt(),
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

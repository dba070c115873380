//! Browser bindings for the demo page in `www/`. Every export returns a JSON
//! string so the page stays plain JavaScript.

use serde::Serialize;
use spiked_core::gradfit::{fit_spikes, mean_singular_values, FitOptions, FitReport};
use spiked_core::linalg::dense;
use spiked_core::stats::{histogram, ks_two_sample, Bins, KsResult};
use spiked_core::{full_svd, sample_banded, sample_dense, top_svd, RandomStream, SpikeSpec};
use wasm_bindgen::prelude::*;

/// Keeps a click from freezing the tab for minutes.
const MAX_WORK: f64 = 2e8;

#[derive(Serialize)]
pub struct Comparison {
    pub edges: Vec<f64>,
    pub efficient: Vec<u64>,
    pub dense: Vec<u64>,
    pub ks: KsResult,
    pub efficient_ms: f64,
    pub dense_ms: f64,
}

#[derive(Serialize)]
pub struct Spectrum {
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn guard(work: f64) -> Result<(), String> {
    if work > MAX_WORK {
        return Err(format!("about {work:.1e} operations requested; shrink m, n or the draw count"));
    }
    Ok(())
}

/// Top singular value from both samplers, binned on shared edges. `now`
/// supplies milliseconds for the timing fields.
pub fn compare(m: usize, n: usize, spikes: &[f64], draws: usize, seed: u64, bins: usize, now: impl Fn() -> f64) -> Result<Comparison, String> {
    let spec = SpikeSpec::new(m, n, spikes.to_vec()).map_err(err)?;
    if draws == 0 || bins == 0 {
        return Err("draws and bins must be positive".into());
    }
    let r = spec.rank_bound() as f64;
    guard(draws as f64 * m as f64 * n as f64 * r)?;
    let banded = RandomStream::new(seed, 0);
    let dense_stream = RandomStream::new(seed, 1);
    let t0 = now();
    let eff = (0..draws as u64)
        .map(|i| top_svd(&sample_banded(&spec, &mut banded.substream(i)), 1).map(|s| s.singular_values[0]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let t1 = now();
    let den = (0..draws as u64)
        .map(|i| {
            let g = sample_dense(&spec, &mut dense_stream.substream(i))?;
            dense::singular_values(&g.values).map(|d| d[0])
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let t2 = now();
    let all: Vec<f64> = eff.iter().chain(&den).copied().collect();
    let edges = histogram(&all, Bins::Count(bins)).map_err(err)?.edges;
    Ok(Comparison {
        efficient: histogram(&eff, Bins::Edges(&edges)).map_err(err)?.counts,
        dense: histogram(&den, Bins::Edges(&edges)).map_err(err)?.counts,
        ks: ks_two_sample(&eff, &den).map_err(err)?,
        edges,
        efficient_ms: t1 - t0,
        dense_ms: t2 - t1,
    })
}

/// Mean of every ordered singular value over `batch` banded draws.
pub fn spectrum(m: usize, n: usize, spikes: &[f64], batch: usize, seed: u64) -> Result<Spectrum, String> {
    let spec = SpikeSpec::new(m, n, spikes.to_vec()).map_err(err)?;
    if batch == 0 {
        return Err("batch must be positive".into());
    }
    let r = spec.rank_bound();
    guard(batch as f64 * (r * r) as f64 * spec.k() as f64)?;
    let stream = RandomStream::new(seed, 0);
    let mut sums = vec![0.0; r];
    let mut squares = vec![0.0; r];
    for i in 0..batch as u64 {
        let d = full_svd(&sample_banded(&spec, &mut stream.substream(i))).map_err(err)?.singular_values;
        for (l, x) in d.iter().enumerate() {
            sums[l] += x;
            squares[l] += x * x;
        }
    }
    let b = batch as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / b).collect();
    let std_errors = if batch < 2 {
        vec![0.0; r]
    } else {
        squares
            .iter()
            .zip(&means)
            .map(|(q, mu)| ((q / b - mu * mu).max(0.0) * b / (b - 1.0) / b).sqrt())
            .collect()
    };
    Ok(Spectrum { means, std_errors })
}

/// Generate target means at `truth`, then fit from `init`.
pub fn fit(m: usize, n: usize, truth: &[f64], init: &[f64], batch: usize, seed: u64) -> Result<FitReport, String> {
    let spec = SpikeSpec::new(m, n, truth.to_vec()).map_err(err)?;
    let r = spec.rank_bound();
    guard(40.0 * batch as f64 * (r * r) as f64 * init.len().max(1) as f64)?;
    let target = mean_singular_values(&spec, r, batch.max(1), &RandomStream::new(seed, 0))
        .map_err(err)?
        .means;
    let opts = FitOptions {
        batch,
        max_iters: 60,
        fresh_noise: false,
    };
    fit_spikes(&target, &spec, init, &opts, &RandomStream::new(seed.wrapping_add(1), 0)).map_err(err)
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.and_then(|v| serde_json::to_string(&v).map_err(err)).map_err(|e| JsError::new(&e))
}

fn now_ms() -> f64 {
    #[cfg(target_arch = "wasm32")]
    {
        js_sys_now()
    }
    #[cfg(not(target_arch = "wasm32"))]
    {
        use std::time::{SystemTime, UNIX_EPOCH};
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64() * 1e3)
    }
}

#[cfg(target_arch = "wasm32")]
#[wasm_bindgen]
extern "C" {
    #[wasm_bindgen(js_namespace = Date, js_name = now)]
    fn js_sys_now() -> f64;
}

#[wasm_bindgen(js_name = compareSamplers)]
pub fn compare_samplers(m: usize, n: usize, spikes: &[f64], draws: usize, seed: u64, bins: usize) -> Result<String, JsError> {
    to_json(compare(m, n, spikes, draws, seed, bins, now_ms))
}

#[wasm_bindgen(js_name = meanSpectrum)]
pub fn mean_spectrum(m: usize, n: usize, spikes: &[f64], batch: usize, seed: u64) -> Result<String, JsError> {
    to_json(spectrum(m, n, spikes, batch, seed))
}

#[wasm_bindgen(js_name = fitSpikes)]
pub fn fit_spikes_js(m: usize, n: usize, truth: &[f64], init: &[f64], batch: usize, seed: u64) -> Result<String, JsError> {
    to_json(fit(m, n, truth, init, batch, seed))
}

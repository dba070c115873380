use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use serde::Serialize;
use spiked_core::gradfit::{fit_spikes, FitOptions};
use spiked_core::linalg::dense;
use spiked_core::sampler::sample_banded_df_shifted;
use spiked_core::stats::{histogram, ks_two_sample, summarize, Bins, KsResult};
use spiked_core::{full_svd, sample_banded, sample_dense, top_svd, BandedSample, RandomStream, SpikeSpec};

use crate::svg::{self, Scale, Series};
use crate::table::{read_target, Table};
use crate::{BenchArgs, CliError, FitArgs, Format, Method, SampleArgs, ValidateArgs};

/// Stream ids keep the two samplers' draws independent under one seed.
const BANDED_STREAM: u64 = 0;
const DENSE_STREAM: u64 = 1;

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

fn write_or_stdout(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, contents),
        None => std::io::stdout().write_all(contents.as_bytes()).map_err(CliError::io),
    }
}

fn make_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

fn spikes_label(spikes: &[f64]) -> String {
    spikes.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Leading `count` singular values of one draw.
fn draw_values(spec: &SpikeSpec, method: Method, count: usize, seed: u64, i: u64) -> Result<Vec<f64>, CliError> {
    match method {
        Method::Efficient => {
            let h = sample_banded(spec, &mut RandomStream::new(seed, BANDED_STREAM).substream(i));
            efficient_values(&h, count, spec.rank_bound())
        }
        Method::Dense => {
            let g = sample_dense(spec, &mut RandomStream::new(seed, DENSE_STREAM).substream(i))?;
            let mut d = dense::singular_values(&g.values)?;
            d.truncate(count);
            Ok(d)
        }
    }
}

fn efficient_values(h: &BandedSample, count: usize, rank: usize) -> Result<Vec<f64>, CliError> {
    Ok(if count < rank {
        top_svd(h, count)?.singular_values
    } else {
        full_svd(h)?.singular_values
    })
}

fn check_top(top: Option<usize>, rank: usize) -> Result<usize, CliError> {
    match top {
        None => Ok(rank),
        Some(t) if (1..=rank).contains(&t) => Ok(t),
        Some(t) => Err(CliError::Usage(format!("--top must be in 1..={rank}, got {t}"))),
    }
}

#[derive(Serialize)]
struct SampleJson<'a> {
    m: usize,
    n: usize,
    spikes: &'a [f64],
    method: &'a str,
    seed: u64,
    columns: &'a [String],
    draws: &'a [Vec<f64>],
}

pub fn sample(a: &SampleArgs) -> Result<ExitCode, CliError> {
    let spec = SpikeSpec::new(a.spec.m, a.spec.n, a.spec.spikes.clone())?;
    let cols = check_top(a.top, spec.rank_bound())?;
    if let Some(&bad) = a.hist.iter().find(|&&j| j == 0 || j > cols) {
        return Err(CliError::Usage(format!("--hist index {bad} outside 1..={cols}")));
    }
    if a.bins == 0 {
        return Err(CliError::Usage("--bins must be at least 1".into()));
    }
    let rows = (0..a.draws)
        .map(|i| draw_values(&spec, a.method, cols, a.seed, i))
        .collect::<Result<Vec<_>, _>>()?;
    let table = Table {
        header: (1..=cols).map(|j| format!("d{j}")).collect(),
        rows,
    };

    match a.format {
        Format::Csv => match &a.out {
            Some(p) => table.write_to(fs::File::create(p).map_err(CliError::io)?)?,
            None => table.write_to(std::io::stdout().lock())?,
        },
        Format::Json => {
            let doc = SampleJson {
                m: spec.m(),
                n: spec.n(),
                spikes: spec.spikes(),
                method: match a.method {
                    Method::Efficient => "efficient",
                    Method::Dense => "dense",
                },
                seed: a.seed,
                columns: &table.header,
                draws: &table.rows,
            };
            let text = serde_json::to_string_pretty(&doc).map_err(CliError::io)? + "\n";
            write_or_stdout(a.out.as_deref(), &text)?;
        }
    }

    if let Some(path) = &a.means_out {
        let means = (0..cols)
            .map(|j| {
                let col: Vec<f64> = table.rows.iter().map(|r| r[j]).collect();
                summarize(&col).map(|s| vec![s.mean])
            })
            .collect::<Result<Vec<_>, _>>()?;
        let t = Table {
            header: vec!["mean".into()],
            rows: means,
        };
        t.write_to(fs::File::create(path).map_err(CliError::io)?)?;
    }

    if let Some(dir) = &a.svg_dir {
        make_dir(dir)?;
        for &j in &a.hist {
            let col: Vec<f64> = table.rows.iter().map(|r| r[j - 1]).collect();
            let h = histogram(&col, Bins::Count(a.bins))?;
            let title = format!("d{j}, m={} n={} spikes={} ({} draws)", spec.m(), spec.n(), spikes_label(spec.spikes()), a.draws);
            write_file(&dir.join(format!("hist_d{j}.svg")), &svg::histogram(&title, &format!("d{j}"), &h.edges, &h.counts))?;
        }
    }

    if a.dump_h.is_some() || a.dump_h_dense.is_some() {
        let h = sample_banded(&spec, &mut RandomStream::new(a.seed, BANDED_STREAM).substream(0));
        if let Some(p) = &a.dump_h {
            write_file(p, &h.to_triplets())?;
        }
        if let Some(p) = &a.dump_h_dense {
            write_file(p, &h.to_dense_csv())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ValidateJson<'a> {
    m: usize,
    n: usize,
    spikes: &'a [f64],
    draws: u64,
    seed: u64,
    threshold: f64,
    top: KsResult,
    bottom: KsResult,
    pass: bool,
}

pub fn validate(a: &ValidateArgs) -> Result<ExitCode, CliError> {
    let spec = SpikeSpec::new(a.m, a.n, a.spikes.clone())?;
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(CliError::Usage("--threshold must lie in (0, 1)".into()));
    }
    let r = spec.rank_bound();
    let (mut eff, mut den) = ([vec![], vec![]], [vec![], vec![]]);
    let banded = RandomStream::new(a.seed, BANDED_STREAM);
    for i in 0..a.draws {
        let mut s = banded.substream(i);
        let h = if a.df_shift == 0 {
            sample_banded(&spec, &mut s)
        } else {
            sample_banded_df_shifted(&spec, &mut s, a.df_shift)
        };
        let d = full_svd(&h)?.singular_values;
        eff[0].push(d[0]);
        eff[1].push(d[r - 1]);
        let g = draw_values(&spec, Method::Dense, r, a.seed, i)?;
        den[0].push(g[0]);
        den[1].push(g[r - 1]);
    }
    let top = ks_two_sample(&eff[0], &den[0])?;
    let bottom = ks_two_sample(&eff[1], &den[1])?;
    let verdict = |k: &KsResult| if k.p_value > a.threshold { "PASS" } else { "FAIL" };
    println!(
        "validate m={} n={} spikes={} draws={} seed={} threshold={}",
        a.m,
        a.n,
        spikes_label(&a.spikes),
        a.draws,
        a.seed,
        a.threshold
    );
    println!("top     D={:.6} p={:.6} {}", top.d_statistic, top.p_value, verdict(&top));
    println!("bottom  D={:.6} p={:.6} {}", bottom.d_statistic, bottom.p_value, verdict(&bottom));
    let pass = top.p_value > a.threshold && bottom.p_value > a.threshold;

    if let Some(path) = &a.json {
        let doc = ValidateJson {
            m: a.m,
            n: a.n,
            spikes: &a.spikes,
            draws: a.draws,
            seed: a.seed,
            threshold: a.threshold,
            top,
            bottom,
            pass,
        };
        write_file(path, &(serde_json::to_string_pretty(&doc).map_err(CliError::io)? + "\n"))?;
    }
    if let Some(dir) = &a.svg_dir {
        make_dir(dir)?;
        for (name, (e, d)) in ["top", "bottom"].iter().zip(eff.iter().zip(&den)) {
            // shared edges so the two histograms line up
            let all: Vec<f64> = e.iter().chain(d).copied().collect();
            let edges = histogram(&all, Bins::Count(40))?.edges;
            let he = histogram(e, Bins::Edges(&edges))?;
            let hd = histogram(d, Bins::Edges(&edges))?;
            let mids: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            let series = [
                Series {
                    label: "efficient (banded)",
                    points: mids.iter().zip(&he.counts).map(|(&x, &c)| (x, c as f64)).collect(),
                },
                Series {
                    label: "simple (dense)",
                    points: mids.iter().zip(&hd.counts).map(|(&x, &c)| (x, c as f64)).collect(),
                },
            ];
            let title = format!("{name} singular value, {} draws per sampler", a.draws);
            write_file(
                &dir.join(format!("validate_{name}.svg")),
                &svg::lines(&title, "singular value", "count", &series, Scale::Linear, Scale::Linear),
            )?;
        }
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub method: Method,
    pub seconds: f64,
    /// Sum of the largest singular value over all draws; pins down the
    /// work done independently of timing.
    pub checksum: f64,
}

/// Time `draws` samples plus singular values, median over `reps`.
fn time_method(spec: &SpikeSpec, method: Method, top: Option<usize>, draws: u64, seed: u64, reps: u64) -> Result<(f64, f64), CliError> {
    let count = top.unwrap_or(spec.rank_bound());
    let mut times = Vec::new();
    let mut checksum = 0.0;
    for _ in 0..reps {
        let start = Instant::now();
        let mut sum = 0.0;
        for i in 0..draws {
            let d = match method {
                Method::Efficient => draw_values(spec, method, count, seed, i)?,
                // the simple method always pays for the whole spectrum
                Method::Dense => draw_values(spec, method, spec.rank_bound(), seed, i)?,
            };
            sum += d[0];
        }
        times.push(start.elapsed().as_secs_f64());
        checksum = sum;
    }
    Ok((median(times), checksum))
}

pub fn bench(a: &BenchArgs) -> Result<ExitCode, CliError> {
    if a.m_grid.is_empty() {
        return Err(CliError::Usage("--m needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for &m in &a.m_grid {
        let n = if a.coupled { m } else { a.n };
        let spec = SpikeSpec::new(m, n, a.spikes.clone())?;
        let top = a.top.map(|t| check_top(Some(t), spec.rank_bound())).transpose()?;
        for &method in &a.methods {
            let (seconds, checksum) = time_method(&spec, method, top, a.draws, a.seed, a.reps)?;
            rows.push(BenchRow { m, n, method, seconds, checksum });
        }
    }

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["m", "n", "method", "draws", "seconds", "checksum"]).map_err(CliError::io)?;
        for r in &rows {
            let method = if r.method == Method::Efficient { "efficient" } else { "dense" };
            w.write_record([
                r.m.to_string(),
                r.n.to_string(),
                method.to_string(),
                a.draws.to_string(),
                r.seconds.to_string(),
                r.checksum.to_string(),
            ])
            .map_err(CliError::io)?;
        }
        w.flush().map_err(CliError::io)?;
    }
    write_or_stdout(a.out.as_deref(), &String::from_utf8(buf).map_err(CliError::io)?)?;

    if let Some(path) = &a.svg {
        let series: Vec<Series> = a
            .methods
            .iter()
            .map(|&method| Series {
                label: if method == Method::Efficient { "efficient (banded)" } else { "simple (dense)" },
                points: rows.iter().filter(|r| r.method == method).map(|r| (r.m as f64, r.seconds)).collect(),
            })
            .collect();
        let title = if a.coupled {
            format!("time for {} draws, m = n", a.draws)
        } else {
            format!("time for {} draws, n = {}", a.draws, a.n)
        };
        write_file(path, &svg::lines(&title, "m", "seconds", &series, Scale::Log, Scale::Log))?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn fit(a: &FitArgs) -> Result<ExitCode, CliError> {
    let target = read_target(&a.target)?;
    if a.init.is_empty() {
        return Err(CliError::Usage("--init needs at least one spike".into()));
    }
    let template = SpikeSpec::new(a.m, a.n, a.init.clone())?;
    if target.len() > template.rank_bound() {
        return Err(CliError::Usage(format!(
            "target has {} values but min(m, n) = {}",
            target.len(),
            template.rank_bound()
        )));
    }
    let opts = FitOptions {
        batch: a.batch,
        max_iters: a.max_iters,
        fresh_noise: a.fresh_noise,
    };
    let report = fit_spikes(&target, &template, &a.init, &opts, &RandomStream::new(a.seed, BANDED_STREAM))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = serde_json::to_string_pretty(&report).map_err(CliError::io)? + "\n";
    write_or_stdout(a.out.as_deref(), &text)?;
    if a.out.is_some() {
        println!(
            "status={} iterations={} final_spikes={} residual={}",
            serde_json::to_string(&report.status).map_err(CliError::io)?.trim_matches('"'),
            report.iterations,
            spikes_label(&report.final_spikes),
            report.residual_norms.last().copied().unwrap_or(f64::NAN)
        );
    }
    if let Some(path) = &a.svg {
        let index = |v: &[f64]| v.iter().enumerate().map(|(i, &x)| ((i + 1) as f64, x)).collect();
        let series = [
            Series {
                label: "target",
                points: index(&report.target),
            },
            Series {
                label: "fitted mean",
                points: index(&report.fitted_means),
            },
        ];
        let title = format!("fitted spikes {}", spikes_label(&report.final_spikes));
        write_file(path, &svg::lines(&title, "index", "singular value", &series, Scale::Linear, Scale::Linear))?;
    }
    Ok(ExitCode::SUCCESS)
}

use spiked_core::linalg::dense;
use spiked_core::stats::{ks_two_sample, summarize};
use spiked_core::*;

#[test]
fn chi_one_is_folded_normal() {
    let mut a = RandomStream::new(41, 0);
    let mut b = RandomStream::new(41, 1);
    let chi: Vec<f64> = (0..10_000).map(|_| sample_chi(&mut a, 1, 1.0).unwrap()).collect();
    let folded: Vec<f64> = (0..10_000).map(|_| sample_normal(&mut b, 1.0).unwrap().abs()).collect();
    let ks = ks_two_sample(&chi, &folded).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn chi_three_is_norm_of_three_normals() {
    let mut a = RandomStream::new(42, 0);
    let mut b = RandomStream::new(42, 1);
    let chi: Vec<f64> = (0..10_000).map(|_| sample_chi(&mut a, 3, 2.0).unwrap()).collect();
    let oracle: Vec<f64> = (0..10_000)
        .map(|_| 2.0 * (0..3).map(|_| b.standard_normal().powi(2)).sum::<f64>().sqrt())
        .collect();
    let ks = ks_two_sample(&chi, &oracle).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn dense_rows_have_the_spike_scales() {
    let spec = SpikeSpec::new(3, 2, vec![5.0, 2.0]).unwrap();
    let mut rng = RandomStream::new(43, 0);
    let mut rows = vec![Vec::new(); 3];
    for _ in 0..10_000 {
        let g = sample_dense(&spec, &mut rng).unwrap().values;
        for (i, row) in rows.iter_mut().enumerate() {
            row.extend([g[(i, 0)], g[(i, 1)]]);
        }
    }
    for (row, want) in rows.iter().zip([5.0, 2.0, 1.0]) {
        let sd = summarize(row).unwrap().variance.sqrt();
        assert!((sd / want - 1.0).abs() < 0.02, "{sd} vs {want}");
    }
}

/// Largest and smallest nonzero singular values from both samplers.
fn extremes(spec: &SpikeSpec, draws: usize, seed: u64) -> [(Vec<f64>, Vec<f64>); 2] {
    let banded = RandomStream::new(seed, 0);
    let dense_stream = RandomStream::new(seed, 1);
    let r = spec.rank_bound();
    let mut out = [(Vec::new(), Vec::new()), (Vec::new(), Vec::new())];
    for i in 0..draws as u64 {
        let d = full_svd(&sample_banded(spec, &mut banded.substream(i))).unwrap().singular_values;
        out[0].0.push(d[0]);
        out[1].0.push(d[r - 1]);
        let g = sample_dense(spec, &mut dense_stream.substream(i)).unwrap().values;
        let d = dense::singular_values(&g).unwrap();
        out[0].1.push(d[0]);
        out[1].1.push(d[r - 1]);
    }
    out
}

#[test]
fn banded_and_dense_spectra_agree() {
    let mut seed = 44;
    for m in [20, 50] {
        for n in [10, 50] {
            for k in 1..=3 {
                let spikes = [10.0, 5.0, 3.0][..k].to_vec();
                let spec = SpikeSpec::new(m, n, spikes).unwrap();
                seed += 1;
                for (which, (a, b)) in ["top", "bottom"].iter().zip(extremes(&spec, 2000, seed)) {
                    let ks = ks_two_sample(&a, &b).unwrap();
                    assert!(ks.p_value > 0.01, "m={m} n={n} k={k} {which}: {ks:?}");
                }
            }
        }
    }
}

#[test]
fn unit_spike_gives_the_bidiagonal_model() {
    let spec = SpikeSpec::new(9, 6, vec![1.0]).unwrap();
    let h = sample_banded(&spec, &mut RandomStream::new(45, 0));
    for e in h.entries() {
        assert!(e.row == e.col || e.row == e.col + 1);
        let want = if e.row == e.col {
            EntryKind::ChiDiag((6 - e.col) as u64)
        } else {
            EntryKind::ChiSub((9 - e.row) as u64)
        };
        assert_eq!(e.kind, want, "({}, {})", e.row, e.col);
        assert!(e.value > 0.0);
    }
}

#[test]
fn zero_spikes_normalize_to_the_central_case() {
    let spec = SpikeSpec::new(6, 4, vec![]).unwrap();
    assert_eq!((spec.k(), spec.spikes()), (1, &[1.0][..]));
}

#[test]
fn ks_p_values_are_calibrated() {
    let base = RandomStream::new(46, 0);
    let mut below = 0;
    for rep in 0..500 {
        let mut s = base.substream(rep);
        let a: Vec<f64> = (0..1000).map(|_| s.standard_normal()).collect();
        let b: Vec<f64> = (0..1000).map(|_| s.standard_normal()).collect();
        if ks_two_sample(&a, &b).unwrap().p_value < 0.05 {
            below += 1;
        }
    }
    let frac = below as f64 / 500.0;
    assert!((0.02..=0.09).contains(&frac), "{frac}");
}

//! Lower-banded storage for one realization of `H`, with products against
//! vectors and two text formats (triplets and a dense CSV expansion).

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::Mat;
use crate::sampler::SpikeSpec;

/// How a stored entry was drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryKind {
    /// Diagonal chi entry with the given degrees of freedom.
    ChiDiag(u64),
    /// Chi entry on the outermost subdiagonal.
    ChiSub(u64),
    Normal,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryKind::ChiDiag(df) => write!(f, "chi_diag({df})"),
            EntryKind::ChiSub(df) => write!(f, "chi_sub({df})"),
            EntryKind::Normal => f.write_str("normal"),
        }
    }
}

impl FromStr for EntryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "normal" {
            return Ok(EntryKind::Normal);
        }
        let parse_df = |body: &str| -> Result<u64> {
            body.strip_suffix(')')
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| domain(format!("bad entry kind {s:?}")))
        };
        if let Some(rest) = s.strip_prefix("chi_diag(") {
            Ok(EntryKind::ChiDiag(parse_df(rest)?))
        } else if let Some(rest) = s.strip_prefix("chi_sub(") {
            Ok(EntryKind::ChiSub(parse_df(rest)?))
        } else {
            Err(domain(format!("bad entry kind {s:?}")))
        }
    }
}

/// One stored entry, 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub kind: EntryKind,
}

/// One realization of `H`. Band `t` holds `H[j + t, j]` for
/// `j < min(m - t, n)`; everything else is zero. Only the
/// `block_rows() x block_cols()` leading block can be nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedSample {
    spec: SpikeSpec,
    bands: Vec<Vec<f64>>,
}

impl BandedSample {
    pub(crate) fn from_bands(spec: SpikeSpec, bands: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(bands.len(), spec.k() + 1);
        debug_assert!(bands.iter().enumerate().all(|(t, b)| b.len() == spec.band_len(t)));
        Self { spec, bands }
    }

    /// Build from explicit band values, checking lengths against `spec`.
    /// Intended for fixtures; the entry laws are not checked.
    pub fn from_band_values(spec: SpikeSpec, bands: Vec<Vec<f64>>) -> Result<Self> {
        if bands.len() != spec.k() + 1 {
            return Err(domain(format!("expected {} bands, got {}", spec.k() + 1, bands.len())));
        }
        for (t, b) in bands.iter().enumerate() {
            if b.len() != spec.band_len(t) {
                return Err(domain(format!(
                    "band {t} must hold {} entries, got {}",
                    spec.band_len(t),
                    b.len()
                )));
            }
        }
        Ok(Self { spec, bands })
    }

    pub fn spec(&self) -> &SpikeSpec {
        &self.spec
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    pub fn block_rows(&self) -> usize {
        self.spec.block_rows()
    }

    pub fn block_cols(&self) -> usize {
        self.spec.block_cols()
    }

    pub fn stored_len(&self) -> usize {
        self.bands.iter().map(Vec::len).sum()
    }

    /// Entry `(i, j)` of the full `m x n` matrix, 0-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            return 0.0;
        }
        self.bands
            .get(i - j)
            .and_then(|b| b.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    /// Stored entries in canonical order (band by band, columns ascending).
    pub fn entries(&self) -> impl Iterator<Item = Entry> + '_ {
        self.bands.iter().enumerate().flat_map(move |(t, band)| {
            band.iter().enumerate().map(move |(j, &value)| Entry {
                row: j + t,
                col: j,
                value,
                kind: self.spec.entry_kind(t, j),
            })
        })
    }

    /// Compact product: `x` has `block_cols()` entries, result `block_rows()`.
    pub(crate) fn block_matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.block_cols());
        debug_assert_eq!(y.len(), self.block_rows());
        y.iter_mut().for_each(|v| *v = 0.0);
        for (t, band) in self.bands.iter().enumerate() {
            for (j, &h) in band.iter().enumerate() {
                y[j + t] += h * x[j];
            }
        }
    }

    /// Compact transposed product.
    pub(crate) fn block_rmatvec(&self, y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(y.len(), self.block_rows());
        debug_assert_eq!(x.len(), self.block_cols());
        x.iter_mut().for_each(|v| *v = 0.0);
        for (t, band) in self.bands.iter().enumerate() {
            for (j, &h) in band.iter().enumerate() {
                x[j] += h * y[j + t];
            }
        }
    }

    /// `sum_j H[row, j] v[j]` over the compact columns.
    pub(crate) fn row_dot(&self, row: usize, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (t, band) in self.bands.iter().enumerate() {
            if row >= t {
                if let Some(&h) = band.get(row - t) {
                    acc += h * v[row - t];
                }
            }
        }
        acc
    }

    /// Dense expansion of the compact nonzero block.
    pub fn block_dense(&self) -> Mat {
        let mut a = Mat::zeros(self.block_rows(), self.block_cols());
        for e in self.entries() {
            a[(e.row, e.col)] = e.value;
        }
        a
    }

    /// Dense expansion of the full `m x n` matrix.
    pub fn to_dense(&self) -> Mat {
        let mut a = Mat::zeros(self.spec.m(), self.spec.n());
        for e in self.entries() {
            a[(e.row, e.col)] = e.value;
        }
        a
    }

    /// Triplet text format. A header gives the shape and spikes, then one
    /// line per stored entry in canonical order, 1-based:
    ///
    /// ```text
    /// # banded m=5 n=3 spikes=2
    /// 1 1 3.1 chi_diag(3)
    /// 2 1 -0.7 chi_sub(4)
    /// ```
    ///
    /// Values use the shortest representation that parses back exactly.
    pub fn to_triplets(&self) -> String {
        let spikes: Vec<String> = self.spec.spikes().iter().map(f64::to_string).collect();
        let mut out = format!(
            "# banded m={} n={} spikes={}\n",
            self.spec.m(),
            self.spec.n(),
            spikes.join(",")
        );
        for e in self.entries() {
            let _ = writeln!(out, "{} {} {} {}", e.row + 1, e.col + 1, e.value, e.kind);
        }
        out
    }

    pub fn from_triplets(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| domain("empty triplet file"))?;
        let fields = header
            .strip_prefix("# banded ")
            .ok_or_else(|| domain("triplet file must start with '# banded'"))?;
        let (mut m, mut n, mut spikes) = (None, None, None);
        for kv in fields.split_whitespace() {
            match kv.split_once('=') {
                Some(("m", v)) => m = v.parse::<usize>().ok(),
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("spikes", v)) => {
                    spikes = v.split(',').map(|s| s.parse::<f64>().ok()).collect::<Option<Vec<_>>>()
                }
                _ => return Err(domain(format!("unknown header field {kv:?}"))),
            }
        }
        let spec = SpikeSpec::new(
            m.ok_or_else(|| domain("header is missing m"))?,
            n.ok_or_else(|| domain("header is missing n"))?,
            spikes.ok_or_else(|| domain("header is missing spikes"))?,
        )?;
        let mut bands: Vec<Vec<Option<f64>>> = (0..=spec.k()).map(|t| vec![None; spec.band_len(t)]).collect();
        for (lineno, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || domain(format!("malformed triplet on line {}: {line:?}", lineno + 2));
            if parts.len() != 4 {
                return Err(bad());
            }
            let i: usize = parts[0].parse().map_err(|_| bad())?;
            let j: usize = parts[1].parse().map_err(|_| bad())?;
            let value: f64 = parts[2].parse().map_err(|_| bad())?;
            let kind: EntryKind = parts[3].parse()?;
            if i == 0 || j == 0 || j > i {
                return Err(bad());
            }
            let (t, col) = (i - j, j - 1);
            let slot = bands.get_mut(t).and_then(|b| b.get_mut(col)).ok_or_else(bad)?;
            if kind != spec.entry_kind(t, col) {
                return Err(domain(format!("entry ({i},{j}) should be {}, file says {kind}", spec.entry_kind(t, col))));
            }
            *slot = Some(value);
        }
        let bands = bands
            .into_iter()
            .map(|b| b.into_iter().collect::<Option<Vec<f64>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| domain("triplet file is missing stored entries"))?;
        Ok(Self { spec, bands })
    }

    /// Full `m x n` dense expansion as CSV with a `c1..cn` header.
    pub fn to_dense_csv(&self) -> String {
        let (m, n) = (self.spec.m(), self.spec.n());
        let mut out = (1..=n).map(|j| format!("c{j}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for i in 0..m {
            let row: Vec<String> = (0..n).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `y = H x` for the full `m x n` matrix (`x` has `n` entries).
pub fn band_matvec(h: &BandedSample, x: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (h.spec.m(), h.spec.n());
    if x.len() != n {
        return Err(domain(format!("vector has {} entries, H has {n} columns", x.len())));
    }
    let mut y = vec![0.0; m];
    let (r, c) = (h.block_rows(), h.block_cols());
    h.block_matvec(&x[..c], &mut y[..r]);
    Ok(y)
}

/// `x = H^T y` for the full matrix (`y` has `m` entries).
pub fn band_rmatvec(h: &BandedSample, y: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (h.spec.m(), h.spec.n());
    if y.len() != m {
        return Err(domain(format!("vector has {} entries, H has {m} rows", y.len())));
    }
    let mut x = vec![0.0; n];
    let (r, c) = (h.block_rows(), h.block_cols());
    h.block_rmatvec(&y[..r], &mut x[..c]);
    Ok(x)
}

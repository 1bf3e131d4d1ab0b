//! Complex unit-norm configurations and their Gram geometry.
//!
//! A [`Frame`] holds `N` columns of `d` complex entries in one flat real
//! buffer of length `2dN`. Column `k` occupies `[2dk, 2d(k+1))` with real and
//! imaginary parts interleaved, so the optimizer can treat the whole
//! configuration as an unconstrained point in `R^{2dN}`.
//!
//! Off-diagonal Gram entries are always enumerated in row-major upper
//! triangular order: `(0,1), (0,2), ..., (0,N-1), (1,2), ...`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns with Euclidean norm below this are treated as zero.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

/// Allowed deviation of a column norm from 1 for a frame to count as normalized.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Default merge tolerance for [`angle_spectrum`].
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    d: usize,
    n: usize,
    data: Vec<f64>,
    normalized: bool,
}

impl Frame {
    /// Builds a frame from a flat buffer laid out column by column with
    /// interleaved `(re, im)` pairs.
    pub fn new(d: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidShape { d, n });
        }
        if data.len() != 2 * d * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * d * n,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite entry".into()));
        }
        let mut frame = Frame {
            d,
            n,
            data,
            normalized: false,
        };
        frame.normalized = (0..n).all(|k| (frame.column_norm(k) - 1.0).abs() <= UNIT_NORM_TOL);
        Ok(frame)
    }

    /// Builds a frame from columns of `(re, im)` pairs.
    pub fn from_columns(columns: &[Vec<(f64, f64)>]) -> Result<Self> {
        let n = columns.len();
        let d = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(2 * d * n);
        for col in columns {
            if col.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: col.len(),
                });
            }
            for &(re, im) in col {
                data.push(re);
                data.push(im);
            }
        }
        Frame::new(d, n, data)
    }

    /// The `d x d` identity, i.e. the standard orthonormal basis.
    pub fn identity(d: usize) -> Self {
        let mut data = vec![0.0; 2 * d * d];
        for k in 0..d {
            data[2 * d * k + 2 * k] = 1.0;
        }
        Frame::new(d, d, data).expect("identity frame has a valid shape")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of off-diagonal pairs `j < k`.
    pub fn num_pairs(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Column `k` as interleaved `(re, im)` pairs.
    pub fn column(&self, k: usize) -> &[f64] {
        let w = 2 * self.d;
        &self.data[w * k..w * (k + 1)]
    }

    pub fn column_norm(&self, k: usize) -> f64 {
        norm(self.column(k))
    }

    /// Complex inner product `<phi_j, phi_k>` (conjugate-linear in the first slot).
    pub fn inner(&self, j: usize, k: usize) -> (f64, f64) {
        inner_product(self.column(j), self.column(k))
    }

    /// Copy of this frame with column `k` removed. Returns `None` when only one
    /// column is left.
    pub fn without_column(&self, k: usize) -> Option<Frame> {
        if self.n <= 1 || k >= self.n {
            return None;
        }
        let w = 2 * self.d;
        let mut data = Vec::with_capacity(w * (self.n - 1));
        data.extend_from_slice(&self.data[..w * k]);
        data.extend_from_slice(&self.data[w * (k + 1)..]);
        Some(Frame {
            d: self.d,
            n: self.n - 1,
            data,
            normalized: self.normalized,
        })
    }
}

/// Euclidean norm of an interleaved complex vector.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `sum_i conj(x_i) y_i` for interleaved complex vectors of equal length.
pub fn inner_product(x: &[f64], y: &[f64]) -> (f64, f64) {
    debug_assert_eq!(x.len(), y.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in x.chunks_exact(2).zip(y.chunks_exact(2)) {
        re += a[0] * b[0] + a[1] * b[1];
        im += a[0] * b[1] - a[1] * b[0];
    }
    (re, im)
}

/// Scales every column to unit norm.
pub fn normalize_columns(frame: &Frame) -> Result<Frame> {
    let mut data = frame.data.clone();
    normalize_in_place(frame.d, &mut data)?;
    let mut out = Frame {
        d: frame.d,
        n: frame.n,
        data,
        normalized: true,
    };
    // Rounding can leave a norm a few ulps off; the flag only certifies 1e-12.
    out.normalized = (0..out.n).all(|k| (out.column_norm(k) - 1.0).abs() <= UNIT_NORM_TOL);
    Ok(out)
}

pub(crate) fn normalize_in_place(d: usize, data: &mut [f64]) -> Result<()> {
    for (index, col) in data.chunks_exact_mut(2 * d).enumerate() {
        let nrm = norm(col);
        if nrm < ZERO_COLUMN_TOL || !nrm.is_finite() {
            return Err(Error::ZeroColumn { index, norm: nrm });
        }
        let inv = 1.0 / nrm;
        col.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSummary {
    /// `|<phi_j, phi_k>|` for `j < k`, row-major.
    pub offdiag_mags: Vec<f64>,
    pub coherence: f64,
    pub angle_spectrum: Vec<f64>,
}

/// Off-diagonal Gram magnitudes in row-major upper-triangular order.
pub fn offdiag_magnitudes(frame: &Frame) -> Vec<f64> {
    let n = frame.n;
    let mut mags = Vec::with_capacity(frame.num_pairs());
    for j in 0..n {
        for k in j + 1..n {
            let (re, im) = frame.inner(j, k);
            mags.push(re.hypot(im));
        }
    }
    mags
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Gram summary with the default cluster tolerance.
pub fn gram_summary(frame: &Frame) -> GramSummary {
    gram_summary_with_tol(frame, DEFAULT_CLUSTER_TOL)
}

pub fn gram_summary_with_tol(frame: &Frame, cluster_tol: f64) -> GramSummary {
    let offdiag_mags = offdiag_magnitudes(frame);
    let coherence = max_of(&offdiag_mags);
    let angle_spectrum = cluster_values(&offdiag_mags, cluster_tol)
        .into_iter()
        .map(|c| c.value)
        .collect();
    GramSummary {
        offdiag_mags,
        coherence,
        angle_spectrum,
    }
}

/// Maximum off-diagonal Gram magnitude. Zero for a single column.
pub fn coherence(frame: &Frame) -> f64 {
    max_of(&offdiag_magnitudes(frame))
}

/// `sqrt(1 - |<x, y>|^2)` for unit vectors given as interleaved complex slices.
pub fn chordal_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let (re, im) = inner_product(x, y);
    let overlap = re * re + im * im;
    Ok((1.0 - overlap).clamp(0.0, 1.0).sqrt())
}

/// One group of nearly equal Gram magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Mean of the members.
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Single-linkage clustering of the sorted values: neighbours closer than
/// `tol` share a cluster.
pub fn cluster_values(values: &[f64], tol: f64) -> Vec<Cluster> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut sum = 0.0;
    for &v in &sorted {
        match clusters.last_mut() {
            Some(c) if v - c.max <= tol => {
                c.max = v;
                c.count += 1;
                sum += v;
                c.value = sum / c.count as f64;
            }
            _ => {
                sum = v;
                clusters.push(Cluster {
                    value: v,
                    min: v,
                    max: v,
                    count: 1,
                });
            }
        }
    }
    clusters
}

/// Distinct off-diagonal magnitudes, merged with single linkage at `cluster_tol`.
pub fn angle_spectrum(frame: &Frame, cluster_tol: f64) -> Vec<f64> {
    cluster_values(&offdiag_magnitudes(frame), cluster_tol)
        .into_iter()
        .map(|c| c.value)
        .collect()
}

/// JSON frame file: `{"d": .., "N": .., "columns": [[re, im, ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub columns: Vec<Vec<f64>>,
}

impl From<&Frame> for FrameFile {
    fn from(frame: &Frame) -> Self {
        FrameFile {
            d: frame.d,
            n: frame.n,
            columns: (0..frame.n).map(|k| frame.column(k).to_vec()).collect(),
        }
    }
}

impl TryFrom<FrameFile> for Frame {
    type Error = Error;

    fn try_from(file: FrameFile) -> Result<Frame> {
        if file.columns.len() != file.n {
            return Err(Error::Format(format!(
                "declared N={} but found {} columns",
                file.n,
                file.columns.len()
            )));
        }
        if let Some(bad) = file.columns.iter().find(|c| c.len() != 2 * file.d) {
            return Err(Error::Format(format!(
                "column has {} numbers, expected 2d = {}",
                bad.len(),
                2 * file.d
            )));
        }
        Frame::new(file.d, file.n, file.columns.concat())
    }
}

impl Frame {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&FrameFile::from(self)).expect("frame serializes")
    }

    pub fn from_json(text: &str) -> Result<Frame> {
        let file: FrameFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Frame::try_from(file)
    }

    /// CSV with `2d` rows and `N` columns; rows alternate real and imaginary
    /// parts of each coordinate.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in 0..2 * self.d {
            let line: Vec<String> = (0..self.n).map(|k| self.column(k)[row].to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Frame> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Format(format!("bad number {t:?}: {e}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        if rows.is_empty() || !rows.len().is_multiple_of(2) {
            return Err(Error::Format(format!(
                "expected an even, nonzero number of rows, found {}",
                rows.len()
            )));
        }
        let d = rows.len() / 2;
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Format("ragged CSV rows".into()));
        }
        let mut data = Vec::with_capacity(2 * d * n);
        for k in 0..n {
            for row in &rows {
                data.push(row[k]);
            }
        }
        Frame::new(d, n, data)
    }
}

/// Configurations with closed-form constructions, used as fixtures.
pub mod known {
    use super::Frame;

    /// The 4-element SIC in `C^2`, obtained from a regular tetrahedron on the
    /// Bloch sphere. All pairwise overlaps are `1/sqrt(3)`.
    pub fn tetrahedral_sic() -> Frame {
        let third = 1.0_f64 / 3.0;
        let theta = (-third).acos();
        let mut columns = vec![vec![(1.0, 0.0), (0.0, 0.0)]];
        for m in 0..3 {
            let phi = 2.0 * std::f64::consts::PI * m as f64 / 3.0;
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            columns.push(vec![(c, 0.0), (s * phi.cos(), s * phi.sin())]);
        }
        Frame::from_columns(&columns).expect("valid SIC columns")
    }

    /// `d + 1` vertices of the regular simplex, embedded in `C^d` with real
    /// coordinates. Pairwise overlaps are `1/d`.
    pub fn simplex(d: usize) -> Frame {
        // Center the standard basis of R^{d+1} and express it in an orthonormal
        // basis of the hyperplane orthogonal to the all-ones vector.
        let m = d + 1;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
        for i in 0..d {
            // Helmert basis vector i.
            let mut v = vec![0.0; m];
            let scale = 1.0 / (((i + 1) * (i + 2)) as f64).sqrt();
            for vj in v.iter_mut().take(i + 1) {
                *vj = scale;
            }
            v[i + 1] = -((i + 1) as f64) * scale;
            basis.push(v);
        }
        let norm = ((m - 1) as f64 / m as f64).sqrt();
        let columns: Vec<Vec<(f64, f64)>> = (0..m)
            .map(|k| basis.iter().map(|b| (b[k] / norm, 0.0)).collect::<Vec<_>>())
            .collect();
        Frame::from_columns(&columns).expect("valid simplex columns")
    }

    /// Two mutually unbiased bases of `C^2` plus the third one, `3 * 2` lines
    /// with overlaps in `{0, 1/sqrt(2)}`.
    pub fn qubit_mubs() -> Frame {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Frame::from_columns(&[
            vec![(1.0, 0.0), (0.0, 0.0)],
            vec![(0.0, 0.0), (1.0, 0.0)],
            vec![(h, 0.0), (h, 0.0)],
            vec![(h, 0.0), (-h, 0.0)],
            vec![(h, 0.0), (0.0, h)],
            vec![(h, 0.0), (0.0, -h)],
        ])
        .expect("valid MUB columns")
    }
}

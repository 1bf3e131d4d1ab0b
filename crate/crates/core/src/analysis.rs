//! Coherence lower bounds, structural certificates and the Naimark complement.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{cluster_values, coherence, normalize_columns, offdiag_magnitudes, Frame};
use crate::linalg::{frame_matrix, hermitian_eigen_desc, matrix_to_frame, max_abs_diff, C64};

/// Default tolerance for certificates.
pub const DEFAULT_CERT_TOL: f64 = 1e-4;

/// `sqrt((N - d) / (d (N - 1)))` for `N > d`, zero otherwise.
pub fn welch_bound(d: usize, n: usize) -> f64 {
    if n <= d {
        return 0.0;
    }
    let (d, n) = (d as f64, n as f64);
    ((n - d) / (d * (n - 1.0))).sqrt()
}

/// `1 / sqrt(d)`, valid when `N > d^2`.
pub fn orthoplex_bound(d: usize, n: usize) -> Option<f64> {
    (n > d * d).then(|| 1.0 / (d as f64).sqrt())
}

/// `sqrt((2N - d(d+1)) / ((N - d)(d + 1)))`, valid when `N > d^2`.
pub fn levenshtein_bound(d: usize, n: usize) -> Option<f64> {
    (n > d * d).then(|| {
        let (df, nf) = (d as f64, n as f64);
        ((2.0 * nf - df * (df + 1.0)) / ((nf - df) * (df + 1.0))).sqrt()
    })
}

/// Largest possible complex equiangular set, `d^2`.
pub fn gerzon_complex(d: usize) -> usize {
    d * d
}

/// Real-field Gerzon value `d(d+1)/2`, for reference only.
pub fn gerzon_real(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Quaternionic Gerzon value `2d^2 - d`, for reference only.
pub fn gerzon_quaternionic(d: usize) -> usize {
    2 * d * d - d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub welch: f64,
    pub orthoplex: Option<f64>,
    pub levenshtein: Option<f64>,
    pub gerzon_max: usize,
    pub best_applicable: f64,
}

pub fn bounds_report(d: usize, n: usize) -> BoundsReport {
    let welch = welch_bound(d, n);
    let orthoplex = orthoplex_bound(d, n);
    let levenshtein = levenshtein_bound(d, n);
    let best_applicable = [Some(welch), orthoplex, levenshtein]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);
    BoundsReport {
        d,
        n,
        welch,
        orthoplex,
        levenshtein,
        gerzon_max: gerzon_complex(d),
        best_applicable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    WelchEquality,
    OrthoplexEquality,
    LevenshteinEquality,
    OneDistance,
    TightFrame,
    Etf,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub tolerance: f64,
    /// Supporting scalars such as the common angle or the frame-operator
    /// deviation.
    pub witness: BTreeMap<String, f64>,
}

impl Certificate {
    fn new(kind: CertificateKind, tolerance: f64, witness: &[(&str, f64)]) -> Self {
        Certificate {
            kind,
            tolerance,
            witness: witness.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn holds(&self) -> bool {
        self.kind != CertificateKind::None
    }
}

/// Largest entry of `|Phi Phi^* - (N/d) I|`.
pub fn frame_operator_deviation(frame: &Frame) -> f64 {
    let m = frame_matrix(frame);
    let s = &m * m.adjoint();
    let c = frame.n() as f64 / frame.d() as f64;
    let target = DMatrix::from_fn(frame.d(), frame.d(), |i, j| {
        if i == j {
            C64::new(c, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    max_abs_diff(&s, &target)
}

/// Whether `Phi Phi^* = (N/d) I` up to `tol` in every entry.
pub fn check_tight(frame: &Frame, tol: f64) -> (bool, f64) {
    let dev = frame_operator_deviation(frame);
    (dev <= tol, dev)
}

/// Exactly one angle cluster at `tol`.
pub fn one_distance_report(frame: &Frame, tol: f64) -> Certificate {
    let clusters = cluster_values(&offdiag_magnitudes(frame), tol);
    let count = clusters.len() as f64;
    match clusters.as_slice() {
        [c] => Certificate::new(
            CertificateKind::OneDistance,
            tol,
            &[("value", c.value), ("spread", c.max - c.min), ("clusters", 1.0)],
        ),
        _ => {
            let spread = clusters.last().map_or(0.0, |l| l.max) - clusters.first().map_or(0.0, |f| f.min);
            Certificate::new(CertificateKind::None, tol, &[("clusters", count), ("spread", spread)])
        }
    }
}

pub fn tight_certificate(frame: &Frame, tol: f64) -> Certificate {
    let (tight, dev) = check_tight(frame, tol);
    let kind = if tight {
        CertificateKind::TightFrame
    } else {
        CertificateKind::None
    };
    Certificate::new(
        kind,
        tol,
        &[("deviation", dev), ("constant", frame.n() as f64 / frame.d() as f64)],
    )
}

/// Equiangular, tight, and the common angle sits at the Welch bound.
pub fn check_etf(frame: &Frame, tol: f64) -> Certificate {
    let one = one_distance_report(frame, tol);
    let (tight, dev) = check_tight(frame, tol);
    let welch = welch_bound(frame.d(), frame.n());
    let angle = one.witness.get("value").copied();
    let etf = one.holds() && tight && angle.is_some_and(|a| (a - welch).abs() <= tol);
    let mut witness = vec![("deviation", dev), ("welch", welch)];
    if let Some(a) = angle {
        witness.push(("value", a));
    }
    Certificate::new(
        if etf {
            CertificateKind::Etf
        } else {
            CertificateKind::None
        },
        tol,
        &witness,
    )
}

/// Numerical equality with each applicable lower bound. Levenshtein's
/// structural condition (tight with angles in `{0, mu}`) is reported in the
/// witness as `tight_two_angle`, never as a certificate by itself.
pub fn bound_equalities(frame: &Frame, tol: f64) -> Vec<Certificate> {
    let mu = coherence(frame);
    let b = bounds_report(frame.d(), frame.n());
    let mut out = Vec::new();
    if frame.n() > frame.d() && (mu - b.welch).abs() <= tol {
        out.push(Certificate::new(
            CertificateKind::WelchEquality,
            tol,
            &[("coherence", mu), ("bound", b.welch)],
        ));
    }
    if let Some(o) = b.orthoplex {
        if (mu - o).abs() <= tol {
            out.push(Certificate::new(
                CertificateKind::OrthoplexEquality,
                tol,
                &[
                    ("coherence", mu),
                    ("bound", o),
                    (
                        "count_condition",
                        f64::from(u8::from(frame.n() < 2 * frame.d() * frame.d())),
                    ),
                ],
            ));
        }
    }
    if let Some(l) = b.levenshtein {
        if (mu - l).abs() <= tol {
            let clusters = cluster_values(&offdiag_magnitudes(frame), tol);
            let two_angle =
                clusters.len() == 2 && clusters[0].value.abs() <= tol && (clusters[1].value - mu).abs() <= tol;
            let structured = two_angle && check_tight(frame, tol).0;
            out.push(Certificate::new(
                CertificateKind::LevenshteinEquality,
                tol,
                &[
                    ("coherence", mu),
                    ("bound", l),
                    ("tight_two_angle", f64::from(u8::from(structured))),
                ],
            ));
        }
    }
    out
}

/// Tight-frame complement in dimension `N - d`.
///
/// The rows of `sqrt(d/N) Phi` are orthonormal; the complement's rows span
/// their orthogonal complement in `C^N`, found as the unit-eigenvalue
/// eigenspace of `I - (d/N) Phi^* Phi`. Columns are then normalized.
pub fn naimark_complement(frame: &Frame, tol: f64) -> Result<Frame> {
    let (d, n) = (frame.d(), frame.n());
    if n <= d {
        return Err(Error::InvalidConfig(format!(
            "Naimark complement needs N > d, got d={d}, N={n}"
        )));
    }
    let (tight, deviation) = check_tight(frame, tol);
    if !tight {
        return Err(Error::NotTight { deviation, tol });
    }
    let m = frame_matrix(frame);
    let scale = d as f64 / n as f64;
    let proj = DMatrix::<C64>::identity(n, n) - (m.adjoint() * &m) * C64::new(scale, 0.0);
    let (_, vectors) = hermitian_eigen_desc(&proj);
    let rows = vectors.columns(0, n - d).adjoint();
    normalize_columns(&matrix_to_frame(&rows)?)
}

fn is_prime_power(mut d: usize) -> bool {
    if d < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= d {
        if d.is_multiple_of(p) {
            while d.is_multiple_of(p) {
                d /= p;
            }
            return d == 1;
        }
        p += 1;
    }
    true
}

/// Conjectured optimum `1/sqrt(d+1)` for `N = d^2 - j`, `j = 0..=d-2`
/// (a SIC with up to `d - 2` vectors removed).
pub fn conjecture1_target(d: usize, n: usize) -> Option<f64> {
    (d >= 2 && n + d >= d * d + 2 && n <= d * d).then(|| 1.0 / ((d + 1) as f64).sqrt())
}

/// Optimum `1/sqrt(d)` for `d^2 + 1 <= N <= d(d+1)` when `d` is a prime power
/// (a complete set of mutually unbiased bases with up to `d - 1` vectors
/// removed).
pub fn mub_removal_target(d: usize, n: usize) -> Option<f64> {
    (d >= 2 && is_prime_power(d) && n > d * d && n <= d * (d + 1)).then(|| 1.0 / (d as f64).sqrt())
}

/// Everything `certify` reports about one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub coherence: f64,
    pub bounds: BoundsReport,
    /// `coherence - best_applicable`.
    pub bound_gap: f64,
    pub tight: Certificate,
    pub etf: Certificate,
    pub one_distance: Certificate,
    pub bound_equalities: Vec<Certificate>,
    pub conjecture1_target: Option<f64>,
    pub conjecture1_gap: Option<f64>,
    pub mub_removal_target: Option<f64>,
    pub mub_removal_gap: Option<f64>,
}

/// Runs every detector on a normalized frame.
pub fn certify(frame: &Frame, tol: f64) -> CertifyReport {
    let (d, n) = (frame.d(), frame.n());
    let mu = coherence(frame);
    let bounds = bounds_report(d, n);
    let conj = conjecture1_target(d, n);
    let mub = mub_removal_target(d, n);
    CertifyReport {
        d,
        n,
        coherence: mu,
        bound_gap: mu - bounds.best_applicable,
        bounds,
        tight: tight_certificate(frame, tol),
        etf: check_etf(frame, tol),
        one_distance: one_distance_report(frame, tol),
        bound_equalities: bound_equalities(frame, tol),
        conjecture1_target: conj,
        conjecture1_gap: conj.map(|t| mu - t),
        mub_removal_target: mub,
        mub_removal_gap: mub.map(|t| mu - t),
    }
}

//! Alternating projection on the Gram matrix.
//!
//! Starting from the Gram matrix of a random frame, alternate between
//!
//! * the structural set: unit diagonal, off-diagonal magnitudes clipped to
//!   `mu_target` with phases kept;
//! * the spectral set: positive semidefinite matrices of rank at most `d`,
//!   reached by keeping the top `d` eigenpairs with negative values zeroed.
//!
//! The frame is read off the spectral iterate as `Lambda^{1/2} U^*`.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::welch_bound;
use crate::error::{Error, Result};
use crate::frames::{coherence, normalize_columns, Frame};
use crate::linalg::{frame_matrix, hermitian_eigen_desc, C64};
use crate::solver::{child_seed, pick_best, random_frame, run_indexed, MethodConfig, RestartSummary, SolveResult};

/// How often (in iterations) the current iterate is factored and scored.
const SCORE_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltProjConfig {
    pub max_iters: usize,
    /// Off-diagonal clip level.
    pub mu_target: f64,
    /// Stop once successive spectral iterates differ by less than this in
    /// Frobenius norm.
    pub tol: f64,
}

impl AltProjConfig {
    /// 5000 iterations aimed at the Welch bound. When the bound is zero
    /// (`N <= d`) a tiny positive clip level is used instead.
    pub fn new(d: usize, n: usize) -> Self {
        AltProjConfig {
            max_iters: 5000,
            mu_target: welch_bound(d, n).max(1e-9),
            tol: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.mu_target > 0.0 && self.mu_target < 1.0) || !(self.tol >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alternating projection config out of range: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Unit diagonal, off-diagonal entries clipped to modulus `mu`.
pub fn structural_projection(g: &DMatrix<C64>, mu: f64) -> DMatrix<C64> {
    let n = g.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            let z = g[(i, j)];
            let a = z.norm();
            if a > mu {
                z * (mu / a)
            } else {
                z
            }
        }
    })
}

/// Eigenvalues (clamped at zero) and eigenvectors of the rank-`d` truncation.
fn truncate(g: &DMatrix<C64>, d: usize) -> (Vec<f64>, DMatrix<C64>) {
    let (values, vectors) = hermitian_eigen_desc(g);
    let keep = d.min(values.len());
    let lambda = values[..keep].iter().map(|v| v.max(0.0)).collect();
    (lambda, vectors.columns(0, keep).into_owned())
}

fn assemble(lambda: &[f64], u: &DMatrix<C64>) -> DMatrix<C64> {
    let n = u.nrows();
    let mut scaled = u.clone();
    for (c, &l) in lambda.iter().enumerate() {
        scaled.column_mut(c).scale_mut(l);
    }
    let mut out = &scaled * u.adjoint();
    // Exact Hermitian symmetry.
    for i in 0..n {
        out[(i, i)].im = 0.0;
        for j in 0..i {
            out[(i, j)] = out[(j, i)].conj();
        }
    }
    out
}

/// Nearest positive semidefinite matrix of rank at most `d`.
pub fn spectral_projection(g: &DMatrix<C64>, d: usize) -> DMatrix<C64> {
    let (lambda, u) = truncate(g, d);
    assemble(&lambda, &u)
}

/// `d x N` frame with Gram matrix `U diag(lambda) U^*`, normalized.
fn factor(lambda: &[f64], u: &DMatrix<C64>) -> Result<Frame> {
    let d = lambda.len();
    let n = u.nrows();
    let mut data = Vec::with_capacity(2 * d * n);
    for k in 0..n {
        for (i, &l) in lambda.iter().enumerate() {
            let z = u[(k, i)].conj() * l.sqrt();
            data.push(z.re);
            data.push(z.im);
        }
    }
    normalize_columns(&Frame::new(d, n, data)?)
}

fn gram(frame: &Frame) -> DMatrix<C64> {
    let m = frame_matrix(frame);
    m.adjoint() * m
}

/// One alternating-projection run from a random start drawn from `rng`.
pub fn alternating_projection<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    cfg: &AltProjConfig,
    rng: &mut R,
) -> Result<SolveResult> {
    run_single(d, n, cfg, rng, 0, 0)
}

fn run_single<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    cfg: &AltProjConfig,
    rng: &mut R,
    index: usize,
    seed: u64,
) -> Result<SolveResult> {
    if d == 0 || n < d {
        return Err(Error::InvalidConfig(format!(
            "alternating projection needs 1 <= d <= N, got d={d}, N={n}"
        )));
    }
    cfg.validate()?;
    let clock = Instant::now();
    let start = random_frame(d, n, rng);
    let mut best_coherence = coherence(&start);
    let mut best = start.clone();
    let mut g = gram(&start);
    let mut iterations = 0;

    for it in 1..=cfg.max_iters {
        iterations = it;
        let h = structural_projection(&g, cfg.mu_target);
        let (lambda, u) = truncate(&h, d);
        let next = assemble(&lambda, &u);
        let change = (&next - &g).norm();
        g = next;
        let converged = change < cfg.tol;
        if it % SCORE_EVERY == 0 || converged || it == cfg.max_iters {
            if let Ok(frame) = factor(&lambda, &u) {
                let c = coherence(&frame);
                if c < best_coherence {
                    best_coherence = c;
                    best = frame;
                }
            }
        }
        if converged {
            break;
        }
    }

    Ok(SolveResult {
        best_frame: best,
        best_coherence,
        best_restart: index,
        per_restart: vec![RestartSummary {
            index,
            seed,
            final_coherence: Some(best_coherence),
            iterations,
            stages: Vec::new(),
            error: None,
        }],
        config_echo: MethodConfig::Altproj(*cfg),
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

/// Independent alternating-projection runs with seeds derived as in the
/// multistart solver; the lowest coherence wins.
pub fn alternating_projection_multistart(
    d: usize,
    n: usize,
    cfg: &AltProjConfig,
    restarts: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<SolveResult> {
    if restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    let clock = Instant::now();
    let outcomes = run_indexed(restarts, threads, |i| {
        let s = child_seed(seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        match run_single(d, n, cfg, &mut rng, i, s) {
            Ok(mut r) => (r.per_restart.remove(0), Some(r.best_frame)),
            Err(e) => (
                RestartSummary {
                    index: i,
                    seed: s,
                    final_coherence: None,
                    iterations: 0,
                    stages: Vec::new(),
                    error: Some(e.to_string()),
                },
                None,
            ),
        }
    });
    let (per_restart, best_frame, best_coherence, best_restart) = pick_best(outcomes)?;
    Ok(SolveResult {
        best_frame,
        best_coherence,
        best_restart,
        per_restart,
        config_echo: MethodConfig::Altproj(*cfg),
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

//! Trust-region minimization with a Steihaug-Toint conjugate-gradient inner
//! solver.
//!
//! The inner solver approximately minimizes the quadratic model
//! `m(p) = f + g^T p + p^T B p / 2` over `|p| <= radius`, touching `B` only
//! through Hessian-vector products. It stops on a small residual, at the
//! boundary, or on the boundary along a direction of non-positive curvature.
//! The outer loop is the usual ratio test with radius shrink/growth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radii below this end the run.
pub const MIN_RADIUS: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustRegionConfig {
    /// Initial radius.
    pub delta0: f64,
    pub delta_max: f64,
    /// Steps with gain ratio above this are accepted.
    pub eta: f64,
    pub shrink: f64,
    pub grow: f64,
    /// Stop once the gradient norm is at or below this.
    pub grad_tol: f64,
    pub max_outer: usize,
    /// Forcing constant `c` in `eps_k = min(c, sqrt|g|) |g|`.
    pub cg_force_c: f64,
    pub max_cg: usize,
}

impl TrustRegionConfig {
    /// Defaults for a problem with `dim` unknowns.
    pub fn for_dim(dim: usize) -> Self {
        TrustRegionConfig {
            delta0: 0.1 * (dim as f64).sqrt(),
            delta_max: 1e3,
            eta: 0.05,
            shrink: 0.25,
            grow: 2.0,
            grad_tol: 1e-10,
            max_outer: 200,
            cg_force_c: 0.5,
            max_cg: 2 * dim.max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta0 > 0.0
            && self.delta0 <= self.delta_max
            && (0.0..0.25).contains(&self.eta)
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.grow > 1.0
            && self.grad_tol >= 0.0
            && self.cg_force_c > 0.0
            && self.max_cg >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "trust-region config out of range: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgExit {
    SmallResidual,
    NegativeCurvature,
    BoundaryHit,
    ZeroGradient,
    /// `max_cg` reached; the interior iterate is returned.
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgTrace {
    pub iterations: usize,
    pub exit_reason: CgExit,
    pub step_norm: f64,
    /// `m(p) - m(0)`, accumulated along the CG path.
    pub model_change: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| yi + alpha * xi).collect()
}

/// Both roots of `|z + tau d|^2 = radius^2`, smaller first.
fn boundary_roots(z: &[f64], d: &[f64], radius: f64) -> (f64, f64) {
    let a = dot(d, d);
    let b = 2.0 * dot(z, d);
    let c = dot(z, z) - radius * radius;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let q = -0.5 * (b + b.signum() * disc);
    if q == 0.0 {
        let t = (-c / a).max(0.0).sqrt();
        return (-t, t);
    }
    let (r1, r2) = (q / a, c / q);
    (r1.min(r2), r1.max(r2))
}

/// Steihaug-Toint CG for the trust-region subproblem.
///
/// `grad` is the model gradient and `hvp` applies the model Hessian. `eps_k`
/// is the residual tolerance; `max_cg` caps the number of CG iterations.
pub fn steihaug_cg<H>(grad: &[f64], mut hvp: H, radius: f64, eps_k: f64, max_cg: usize) -> (Vec<f64>, CgTrace)
where
    H: FnMut(&[f64]) -> Vec<f64>,
{
    let n = grad.len();
    let mut z = vec![0.0; n];
    let mut r = grad.to_vec();
    let mut dir: Vec<f64> = r.iter().map(|v| -v).collect();
    let mut rr = dot(&r, &r);
    let mut model = 0.0;

    if rr.sqrt() < eps_k {
        return (
            z,
            CgTrace {
                iterations: 0,
                exit_reason: CgExit::ZeroGradient,
                step_norm: 0.0,
                model_change: 0.0,
            },
        );
    }

    for j in 0..max_cg {
        let bd = hvp(&dir);
        let dbd = dot(&dir, &bd);
        let rd = dot(&r, &dir);

        if !(dbd > 0.0) {
            // Non-positive (or non-finite) curvature: go to the boundary,
            // picking whichever root has the lower model value.
            let curv = if dbd.is_finite() { dbd } else { 0.0 };
            let (t1, t2) = boundary_roots(&z, &dir, radius);
            let change = |t: f64| t * rd + 0.5 * t * t * curv;
            let tau = if change(t1) < change(t2) { t1 } else { t2 };
            let p = axpy(tau, &dir, &z);
            return (
                p.clone(),
                CgTrace {
                    iterations: j + 1,
                    exit_reason: CgExit::NegativeCurvature,
                    step_norm: norm(&p),
                    model_change: model + change(tau),
                },
            );
        }

        let alpha = rr / dbd;
        let z_next = axpy(alpha, &dir, &z);
        if norm(&z_next) >= radius {
            let (_, tau) = boundary_roots(&z, &dir, radius);
            let p = axpy(tau, &dir, &z);
            let change = tau * rd + 0.5 * tau * tau * dbd;
            return (
                p.clone(),
                CgTrace {
                    iterations: j + 1,
                    exit_reason: CgExit::BoundaryHit,
                    step_norm: norm(&p),
                    model_change: model + change,
                },
            );
        }

        model += alpha * rd + 0.5 * alpha * alpha * dbd;
        let r_next = axpy(alpha, &bd, &r);
        let rr_next = dot(&r_next, &r_next);
        z = z_next;
        if rr_next.sqrt() < eps_k {
            return (
                z.clone(),
                CgTrace {
                    iterations: j + 1,
                    exit_reason: CgExit::SmallResidual,
                    step_norm: norm(&z),
                    model_change: model,
                },
            );
        }
        let beta = rr_next / rr;
        dir = r_next.iter().zip(&dir).map(|(ri, di)| -ri + beta * di).collect();
        r = r_next;
        rr = rr_next;
    }

    let step_norm = norm(&z);
    (
        z,
        CgTrace {
            iterations: max_cg,
            exit_reason: CgExit::MaxIterations,
            step_norm,
            model_change: model,
        },
    )
}

/// A smooth objective the trust-region loop can minimize.
pub trait TrustRegionProblem {
    /// Value and gradient, or `None` if the point is infeasible or the result
    /// is not finite.
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)>;

    /// Hessian at `x` applied to `v`.
    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64>;
}

/// Closure-backed problem, handy for tests and small experiments.
pub struct FnProblem<F, H> {
    pub f_and_grad: F,
    pub hvp: H,
}

impl<F, H> TrustRegionProblem for FnProblem<F, H>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
    H: Fn(&[f64], &[f64]) -> Vec<f64>,
{
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (f, g) = (self.f_and_grad)(x);
        (f.is_finite() && g.iter().all(|v| v.is_finite())).then_some((f, g))
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        (self.hvp)(x, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustRegionStatus {
    Converged,
    MaxIterations,
    RadiusUnderflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub iteration: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub radius: f64,
    /// Gain ratio of the trial step; `None` when the trial point failed to evaluate.
    pub rho: Option<f64>,
    pub accepted: bool,
    pub cg: CgTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub status: TrustRegionStatus,
    pub history: Vec<OuterRecord>,
}

impl TrustRegionOutcome {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }
}

pub fn trust_region_minimize<P: TrustRegionProblem>(
    problem: &P,
    x0: &[f64],
    cfg: &TrustRegionConfig,
) -> Result<TrustRegionOutcome> {
    cfg.validate()?;
    let (mut f, mut g) = problem
        .eval(x0)
        .ok_or_else(|| Error::InvalidConfig("objective is not finite at the starting point".into()))?;
    let mut x = x0.to_vec();
    let mut radius = cfg.delta0;
    let mut history = Vec::new();
    let mut status = TrustRegionStatus::MaxIterations;

    for iteration in 0..cfg.max_outer {
        let gnorm = norm(&g);
        if gnorm <= cfg.grad_tol {
            status = TrustRegionStatus::Converged;
            break;
        }
        let eps_k = cfg.cg_force_c.min(gnorm.sqrt()) * gnorm;
        let (step, cg) = steihaug_cg(&g, |v| problem.hvp(&x, v), radius, eps_k, cfg.max_cg);
        let predicted = -cg.model_change;

        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let (rho, evaluated) = match problem.eval(&trial) {
            Some((ft, gt)) => {
                let actual = f - ft;
                let rho = if predicted > 0.0 {
                    actual / predicted
                } else if actual > 0.0 {
                    1.0
                } else {
                    -1.0
                };
                (Some(rho), Some((ft, gt)))
            }
            None => (None, None),
        };

        let ratio = rho.unwrap_or(f64::NEG_INFINITY);
        let accepted = ratio > cfg.eta;
        history.push(OuterRecord {
            iteration,
            f,
            grad_norm: gnorm,
            radius,
            rho,
            accepted,
            cg,
        });

        if ratio < 0.25 {
            radius *= cfg.shrink;
        } else if ratio > 0.75 && matches!(cg.exit_reason, CgExit::BoundaryHit | CgExit::NegativeCurvature) {
            radius = (cfg.grow * radius).min(cfg.delta_max);
        }
        if accepted {
            if let Some((ft, gt)) = evaluated {
                x = trial;
                f = ft;
                g = gt;
            }
        }
        if radius < MIN_RADIUS {
            status = TrustRegionStatus::RadiusUnderflow;
            break;
        }
    }

    let grad_norm = norm(&g);
    if status == TrustRegionStatus::MaxIterations && grad_norm <= cfg.grad_tol {
        status = TrustRegionStatus::Converged;
    }
    Ok(TrustRegionOutcome {
        x,
        f,
        grad_norm,
        status,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity(v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    #[test]
    fn zero_gradient_returns_zero_step() {
        let (p, t) = steihaug_cg(&[0.0; 4], identity, 1.0, 1e-8, 10);
        assert_eq!(p, vec![0.0; 4]);
        assert_eq!(t.exit_reason, CgExit::ZeroGradient);
        assert_eq!(t.iterations, 0);
    }

    #[test]
    fn identity_hessian_gives_newton_step() {
        let g = [1.0, -2.0, 0.5];
        let r = 10.0 * norm(&g);
        let (p, t) = steihaug_cg(&g, identity, r, 1e-12, 10);
        assert_eq!(t.exit_reason, CgExit::SmallResidual);
        for (pi, gi) in p.iter().zip(&g) {
            assert_abs_diff_eq!(*pi, -gi, epsilon = 1e-8);
        }
    }

    #[test]
    fn identity_hessian_small_radius_hits_boundary() {
        let g = [1.0, -2.0, 0.5];
        let r = 0.5 * norm(&g);
        let (p, t) = steihaug_cg(&g, identity, r, 1e-12, 10);
        assert_eq!(t.exit_reason, CgExit::BoundaryHit);
        assert!((norm(&p) - r).abs() <= 1e-10 * r);
        for (pi, gi) in p.iter().zip(&g) {
            assert_abs_diff_eq!(*pi, -0.5 * gi, epsilon = 1e-12);
        }
    }

    #[test]
    fn indefinite_diagonal_exits_on_boundary() {
        let hvp = |v: &[f64]| vec![v[0], -v[1]];
        for radius in [0.01, 0.3, 1.0, 5.0, 100.0] {
            let (p, t) = steihaug_cg(&[1.0, 0.1], hvp, radius, 1e-10, 10);
            assert!(matches!(t.exit_reason, CgExit::NegativeCurvature | CgExit::BoundaryHit));
            assert!((norm(&p) - radius).abs() <= 1e-10 * radius);
            assert!(t.model_change <= 0.0);
        }
    }

    #[test]
    fn negative_curvature_at_start_picks_descent_root() {
        // B = -I: the first direction is -g and the model keeps decreasing.
        let g = [0.6, 0.8];
        let (p, t) = steihaug_cg(&g, |v: &[f64]| v.iter().map(|x| -x).collect(), 2.0, 1e-10, 5);
        assert_eq!(t.exit_reason, CgExit::NegativeCurvature);
        assert_abs_diff_eq!(p[0], -1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], -1.6, epsilon = 1e-12);
    }

    #[test]
    fn max_cg_is_flagged() {
        let hvp = |v: &[f64]| vec![v[0], 10.0 * v[1], 100.0 * v[2]];
        let (p, t) = steihaug_cg(&[1.0, 1.0, 1.0], hvp, 1e3, 1e-14, 1);
        assert_eq!(t.exit_reason, CgExit::MaxIterations);
        assert!(norm(&p) > 0.0);
    }

    #[test]
    fn sphere_converges_fast() {
        let problem = FnProblem {
            f_and_grad: |x: &[f64]| (dot(x, x), x.iter().map(|v| 2.0 * v).collect()),
            hvp: |_: &[f64], v: &[f64]| v.iter().map(|x| 2.0 * x).collect(),
        };
        let x0: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let mut cfg = TrustRegionConfig::for_dim(10);
        cfg.grad_tol = 1e-10;
        let out = trust_region_minimize(&problem, &x0, &cfg).unwrap();
        assert_eq!(out.status, TrustRegionStatus::Converged);
        assert!(out.grad_norm <= 1e-10);
        assert!(out.iterations() <= 10);
        assert!(out.x.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn stationary_start_takes_no_steps() {
        let problem = FnProblem {
            f_and_grad: |x: &[f64]| (dot(x, x), x.iter().map(|v| 2.0 * v).collect()),
            hvp: |_: &[f64], v: &[f64]| v.iter().map(|x| 2.0 * x).collect(),
        };
        let out = trust_region_minimize(&problem, &[0.0; 3], &TrustRegionConfig::for_dim(3)).unwrap();
        assert_eq!(out.iterations(), 0);
        assert_eq!(out.x, vec![0.0; 3]);
        assert_eq!(out.status, TrustRegionStatus::Converged);
    }

    #[test]
    fn non_finite_trial_is_rejected() {
        // log barrier: undefined for x <= 0, minimum at x = 1.
        let problem = FnProblem {
            f_and_grad: |x: &[f64]| {
                if x[0] <= 0.0 {
                    (f64::NAN, vec![f64::NAN])
                } else {
                    (x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]])
                }
            },
            hvp: |x: &[f64], v: &[f64]| vec![v[0] / (x[0] * x[0])],
        };
        let mut cfg = TrustRegionConfig::for_dim(1);
        cfg.delta0 = 50.0;
        let out = trust_region_minimize(&problem, &[20.0], &cfg).unwrap();
        assert!(out.history.iter().any(|h| h.rho.is_none() || !h.accepted));
        assert_abs_diff_eq!(out.x[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn bad_config_is_rejected() {
        let mut cfg = TrustRegionConfig::for_dim(4);
        cfg.eta = 0.3;
        assert!(cfg.validate().is_err());
        let mut cfg = TrustRegionConfig::for_dim(4);
        cfg.delta0 = 2e3;
        assert!(cfg.validate().is_err());
    }
}

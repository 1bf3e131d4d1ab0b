//! Log-sum-exp smooth maximum of the squared off-diagonal Gram magnitudes.
//!
//! For a raw point `v in R^{2dN}` the columns are normalized, the squared
//! overlaps `x_i = |<u_j, u_k>|^2` (`j < k`, row-major) are formed and
//!
//! ```text
//! F(x) = s + delta * ln sum_i exp((x_i - s) / delta),   s = max_i x_i
//! ```
//!
//! is evaluated together with its exact gradient with respect to `v`. The
//! shift by `s` is an identity, so the gradient of `F` in `x` is the softmax
//! weight vector. `s <= F <= s + delta * ln n` always holds.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{norm, ZERO_COLUMN_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothObjective {
    pub delta: f64,
    pub d: usize,
    pub n: usize,
}

impl SmoothObjective {
    pub fn new(d: usize, n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
        }
        if d == 0 || n < 2 {
            return Err(Error::InvalidConfig(format!(
                "objective needs d >= 1 and N >= 2, got d={d}, N={n}"
            )));
        }
        Ok(SmoothObjective { delta, d, n })
    }

    /// Length of the raw parameter vector, `2dN`.
    pub fn dim(&self) -> usize {
        2 * self.d * self.n
    }

    /// Number of smoothed terms, `N(N-1)/2`.
    pub fn num_terms(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    /// `max_i x_i`, the largest squared overlap.
    pub s: f64,
    pub grad: Vec<f64>,
    pub softmax_weights: Vec<f64>,
}

/// How the trust-region model obtains Hessian-vector products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianMode {
    /// Forward-mode directional derivative of the analytic gradient.
    #[default]
    Exact,
    /// Central differences of the analytic gradient.
    FiniteDifference,
}

/// Stabilized softmax `exp((x_j - s)/delta) / sum_i exp((x_i - s)/delta)`.
pub fn lse_partials(x: &[f64], delta: f64) -> Vec<f64> {
    let s = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|&xi| ((xi - s) / delta).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|ei| ei / z).collect()
}

/// Shifted log-sum-exp `s + delta * ln sum_i exp((x_i - s)/delta)`.
pub fn smooth_max(x: &[f64], delta: f64) -> f64 {
    let s = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = x.iter().map(|&xi| ((xi - s) / delta).exp()).sum();
    s + delta * z.ln()
}

/// Minimal real-number interface so the gradient kernel can run on plain
/// floats and on forward-mode duals.
pub(crate) trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn cst(v: f64) -> Self;
    fn val(self) -> f64;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn scale(self, k: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// Value and first-order tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual {
    v: f64,
    t: f64,
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            t: self.t + o.t,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            t: self.t - o.t,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            t: self.t * o.v + self.v * o.t,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual {
            v: q,
            t: (self.t - q * o.t) / o.v,
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual { v: -self.v, t: -self.t }
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        self.v += o.v;
        self.t += o.t;
    }
}

impl Scalar for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual { v, t: 0.0 }
    }
    #[inline]
    fn val(self) -> f64 {
        self.v
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual { v: e, t: e * self.t }
    }
    #[inline]
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        Dual {
            v: r,
            t: self.t / (2.0 * r),
        }
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        Dual {
            v: self.v * k,
            t: self.t * k,
        }
    }
}

struct Kernel<T> {
    /// Squared overlaps, row-major upper triangle.
    x: Vec<T>,
    /// Softmax weights over `x`.
    w: Vec<T>,
    /// Sum of the unnormalized weights `exp((x_i - s)/delta)`.
    z: f64,
    s: f64,
    grad: Vec<T>,
}

/// Shared evaluation path. Every reduction runs in a fixed order so identical
/// inputs give bit-identical outputs.
fn kernel<T: Scalar>(point: &[T], d: usize, n: usize, delta: f64) -> Result<Kernel<T>> {
    let w2 = 2 * d;
    // Normalized columns and the original norms.
    let mut u: Vec<T> = Vec::with_capacity(point.len());
    let mut norms: Vec<T> = Vec::with_capacity(n);
    for (index, col) in point.chunks_exact(w2).enumerate() {
        let mut sq = T::cst(0.0);
        for &c in col {
            sq += c * c;
        }
        let nv = sq.val().sqrt();
        if !(nv >= ZERO_COLUMN_TOL) || !nv.is_finite() {
            return Err(Error::ZeroColumn { index, norm: nv });
        }
        let nrm = sq.sqrt();
        norms.push(nrm);
        for &c in col {
            u.push(c / nrm);
        }
    }

    let pairs = n * (n - 1) / 2;
    let mut g_re: Vec<T> = Vec::with_capacity(pairs);
    let mut g_im: Vec<T> = Vec::with_capacity(pairs);
    let mut x: Vec<T> = Vec::with_capacity(pairs);
    for j in 0..n {
        let uj = &u[w2 * j..w2 * (j + 1)];
        for k in j + 1..n {
            let uk = &u[w2 * k..w2 * (k + 1)];
            let mut re = T::cst(0.0);
            let mut im = T::cst(0.0);
            for (a, b) in uj.chunks_exact(2).zip(uk.chunks_exact(2)) {
                re += a[0] * b[0] + a[1] * b[1];
                im += a[0] * b[1] - a[1] * b[0];
            }
            x.push(re * re + im * im);
            g_re.push(re);
            g_im.push(im);
        }
    }

    let s = x.iter().map(|v| v.val()).fold(f64::NEG_INFINITY, f64::max);
    let inv_delta = 1.0 / delta;
    let e: Vec<T> = x.iter().map(|&xi| (xi - T::cst(s)).scale(inv_delta).exp()).collect();
    let mut zt = T::cst(0.0);
    for &ei in &e {
        zt += ei;
    }
    let w: Vec<T> = e.iter().map(|&ei| ei / zt).collect();

    // Gradient with respect to the normalized columns (as real vectors):
    // d x_jk / d u_k = 2 g_jk u_j,  d x_jk / d u_j = 2 conj(g_jk) u_k.
    let mut gu: Vec<T> = vec![T::cst(0.0); point.len()];
    let mut p = 0;
    for j in 0..n {
        for k in j + 1..n {
            let c = w[p].scale(2.0);
            let (gr, gi) = (g_re[p] * c, g_im[p] * c);
            p += 1;
            let (lo, hi) = gu.split_at_mut(w2 * k);
            let gj = &mut lo[w2 * j..w2 * (j + 1)];
            let gk = &mut hi[..w2];
            let uj = &u[w2 * j..w2 * (j + 1)];
            let uk = &u[w2 * k..w2 * (k + 1)];
            for t in 0..d {
                let (ajr, aji) = (uj[2 * t], uj[2 * t + 1]);
                let (akr, aki) = (uk[2 * t], uk[2 * t + 1]);
                // g * u_j
                gk[2 * t] += gr * ajr - gi * aji;
                gk[2 * t + 1] += gr * aji + gi * ajr;
                // conj(g) * u_k
                gj[2 * t] += gr * akr + gi * aki;
                gj[2 * t + 1] += gr * aki - gi * akr;
            }
        }
    }

    // Chain rule through u = v / |v|: remove the radial part and rescale.
    let mut grad = gu;
    for k in 0..n {
        let uk = &u[w2 * k..w2 * (k + 1)];
        let gk = &mut grad[w2 * k..w2 * (k + 1)];
        let mut radial = T::cst(0.0);
        for (a, b) in uk.iter().zip(gk.iter()) {
            radial += *a * *b;
        }
        let nk = norms[k];
        for (g, a) in gk.iter_mut().zip(uk) {
            *g = (*g - radial * *a) / nk;
        }
    }

    Ok(Kernel {
        x,
        w,
        z: zt.val(),
        s,
        grad,
    })
}

/// Smoothed maximum squared overlap and its gradient in raw coordinates.
pub fn eval_objective(point: &[f64], obj: &SmoothObjective) -> Result<ObjectiveEval> {
    obj.check_len(point.len())?;
    let k = kernel(point, obj.d, obj.n, obj.delta)?;
    let value = k.s + obj.delta * k.z.ln();
    debug_assert!(
        k.s <= value && value <= k.s + obj.delta * (k.x.len() as f64).ln() + 1e-15,
        "log-sum-exp sandwich violated: s={} value={}",
        k.s,
        value
    );
    Ok(ObjectiveEval {
        value,
        s: k.s,
        grad: k.grad,
        softmax_weights: k.w,
    })
}

/// Squared off-diagonal overlaps of the column-normalized point.
pub fn squared_overlaps(point: &[f64], obj: &SmoothObjective) -> Result<Vec<f64>> {
    obj.check_len(point.len())?;
    Ok(kernel(point, obj.d, obj.n, obj.delta)?.x)
}

/// Exact Hessian-vector product: the directional derivative of the gradient
/// along `direction`, computed in forward mode.
pub fn exact_hessian_vector_product(point: &[f64], direction: &[f64], obj: &SmoothObjective) -> Result<Vec<f64>> {
    obj.check_len(point.len())?;
    obj.check_len(direction.len())?;
    let duals: Vec<Dual> = point.iter().zip(direction).map(|(&v, &t)| Dual { v, t }).collect();
    let k = kernel(&duals, obj.d, obj.n, obj.delta)?;
    Ok(k.grad.into_iter().map(|g| g.t).collect())
}

/// Base step for central differences of a gradient, `eps^(1/3)`.
pub fn fd_base_step() -> f64 {
    f64::EPSILON.cbrt()
}

/// Central-difference Hessian-vector product of an arbitrary gradient map.
///
/// The step is `h0 * (1 + |point|) / |direction|`.
pub fn fd_hessian_vector_product<G>(grad: G, point: &[f64], direction: &[f64], h0: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if point.len() != direction.len() {
        return Err(Error::DimensionMismatch {
            expected: point.len(),
            found: direction.len(),
        });
    }
    let dnorm = norm(direction);
    if dnorm == 0.0 {
        return Ok(vec![0.0; point.len()]);
    }
    let h = h0 * (1.0 + norm(point)) / dnorm.max(1e-300);
    let plus: Vec<f64> = point.iter().zip(direction).map(|(p, v)| p + h * v).collect();
    let minus: Vec<f64> = point.iter().zip(direction).map(|(p, v)| p - h * v).collect();
    let gp = grad(&plus)?;
    let gm = grad(&minus)?;
    Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Finite-difference Hessian-vector product of the smoothed objective.
///
/// `step` is the base step `h0`; pass [`fd_base_step`] for the default.
pub fn hessian_vector_product(point: &[f64], direction: &[f64], obj: &SmoothObjective, step: f64) -> Result<Vec<f64>> {
    obj.check_len(point.len())?;
    fd_hessian_vector_product(|p| Ok(eval_objective(p, obj)?.grad), point, direction, step)
}

/// One-sided fallback used when a central perturbation lands on a zero column.
pub fn hessian_vector_product_forward(
    point: &[f64],
    direction: &[f64],
    obj: &SmoothObjective,
    step: f64,
) -> Result<Vec<f64>> {
    obj.check_len(point.len())?;
    let dnorm = norm(direction);
    if dnorm == 0.0 {
        return Ok(vec![0.0; point.len()]);
    }
    let h = step * (1.0 + norm(point)) / dnorm;
    let plus: Vec<f64> = point.iter().zip(direction).map(|(p, v)| p + h * v).collect();
    let g0 = eval_objective(point, obj)?.grad;
    let gp = eval_objective(&plus, obj)?.grad;
    Ok(gp.iter().zip(&g0).map(|(a, b)| (a - b) / h).collect())
}

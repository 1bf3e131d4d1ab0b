//! Small dense complex helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix};

use crate::frames::Frame;

pub type C64 = Complex<f64>;

/// `d x N` complex matrix whose columns are the frame vectors.
pub fn frame_matrix(frame: &Frame) -> DMatrix<C64> {
    DMatrix::from_fn(frame.d(), frame.n(), |i, k| {
        let c = frame.column(k);
        C64::new(c[2 * i], c[2 * i + 1])
    })
}

/// Inverse of [`frame_matrix`].
pub fn matrix_to_frame(m: &DMatrix<C64>) -> crate::Result<Frame> {
    let mut data = Vec::with_capacity(2 * m.nrows() * m.ncols());
    for k in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, k)];
            data.push(z.re);
            data.push(z.im);
        }
    }
    Frame::new(m.nrows(), m.ncols(), data)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in descending
/// order. Each eigenvector is rotated so its first largest-magnitude entry is
/// real and positive, which makes the factorization reproducible.
pub fn hermitian_eigen_desc(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    // Symmetrize to kill rounding asymmetry before handing to the solver.
    let h = DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let mut pivot = 0;
        let mut best = -1.0;
        for r in 0..n {
            let a = v[r].norm();
            if a > best + 1e-12 {
                best = a;
                pivot = r;
            }
        }
        let phase = if best > 0.0 {
            v[pivot].conj() / best
        } else {
            C64::new(1.0, 0.0)
        };
        for r in 0..n {
            vectors[(r, col)] = v[r] * phase;
        }
    }
    (values, vectors)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};

/// Relative step used by every central finite difference in the crate.
pub const FD_REL_STEP: f64 = 1e-5;

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_REL_THRESHOLD: f64 = 1e-10;

pub fn fd_step(x: f64) -> f64 {
    FD_REL_STEP * (1.0 + x.abs())
}

/// Central-difference Jacobian of `f` at `x`, with `h_i = 1e-5 (1 + |x_i|)`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, codim: usize) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(codim, n);
    let mut xp = x.clone();
    for i in 0..n {
        let h = fd_step(x[i]);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        jac.set_column(i, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(f: F, x: &DVector<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Max-norm of a vector; zero for empty vectors.
pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_mat(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Max-norm distance, or infinity when the lengths differ.
pub fn max_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_diff_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Numerical rank via singular values with a relative threshold.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_REL_THRESHOLD * largest).count()
}

/// Concatenates blocks into one vector.
pub fn concat(blocks: &[DVector<f64>]) -> DVector<f64> {
    let n = blocks.iter().map(|b| b.len()).sum();
    let mut out = DVector::zeros(n);
    let mut off = 0;
    for b in blocks {
        out.rows_mut(off, b.len()).copy_from(b);
        off += b.len();
    }
    out
}

/// Strictly increasing `r`-subsets of `0..n`, in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, n, r, &mut cur, &mut out);
    out
}

/// Determinant of the submatrix with the given rows and columns.
pub fn minor(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    if k == 0 {
        return 1.0;
    }
    let sub = DMatrix::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
    match k {
        1 => sub[(0, 0)],
        2 => sub[(0, 0)] * sub[(1, 1)] - sub[(0, 1)] * sub[(1, 0)],
        _ => sub.determinant(),
    }
}

/// `n x n` block-diagonal complex structure `[[0, -1], [1, 0]]` on consecutive pairs.
pub fn complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(n, n);
    for p in 0..n / 2 {
        j[(2 * p + 1, 2 * p)] = 1.0;
        j[(2 * p, 2 * p + 1)] = -1.0;
    }
    j
}

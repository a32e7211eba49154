//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, shifted inverse iteration for the eigenvectors.
//!
//! Every radial operator in this crate (the interleaved Dirac matrix, the
//! radial Dirichlet Laplacian, the field preconditioner) is tridiagonal, so
//! a window of `k` eigenpairs costs `O(k n)` instead of a dense `O(n³)` solve.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn scale(&self) -> f64 {
        let (lo, hi) = self.spectral_bounds();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.sqrt() * self.scale();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.dim());
        let (mut lo, mut hi) = self.spectral_bounds();
        let pad = 1e-12 * self.scale() + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        self.bisect(k, lo, hi)
    }

    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        // invariant: count_below(lo) <= k < count_below(hi)
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Indices `k` (0-based, ascending) and values of all eigenvalues in
    /// `[lo, hi)`.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<(usize, f64)> {
        let first = self.count_below(lo);
        let last = self.count_below(hi);
        (first..last).map(|k| (k, self.bisect(k, lo, hi))).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Unit eigenvector for the (already accurate) eigenvalue `lambda`,
    /// orthogonalized against `deflate`. Returns the vector and the residual
    /// norm `‖T x − λ x‖`.
    pub fn eigenvector(&self, lambda: f64, deflate: &[&[f64]]) -> (Vec<f64>, f64) {
        let n = self.dim();
        let scale = self.scale();
        // perturb the shift slightly so the factorization stays nonsingular
        let shift = lambda + 4.0 * f64::EPSILON * scale;
        let lu = TridiagLu::factor(&self.diag, &self.off, shift, scale);
        // deterministic start vector with components along every eigenvector
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75).fract())
            .collect();
        normalize(&mut x);
        let mut residual = f64::INFINITY;
        for _ in 0..4 {
            x = lu.solve(&x);
            for d in deflate {
                let c = dot(&x, d);
                for (xi, di) in x.iter_mut().zip(d.iter()) {
                    *xi -= c * di;
                }
            }
            normalize(&mut x);
            let tx = self.matvec(&x);
            residual = tx
                .iter()
                .zip(&x)
                .map(|(t, xi)| (t - lambda * xi).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= 1e-11 * scale {
                break;
            }
        }
        fix_sign(&mut x);
        (x, residual)
    }

    /// Eigenpairs in `[lo, hi)`; fails if any residual exceeds `tol * scale`.
    pub fn eigenpairs_in(&self, lo: f64, hi: f64, tol: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        let values = self.eigenvalues_in(lo, hi);
        let scale = self.scale();
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(values.len());
        let mut residuals = Vec::with_capacity(values.len());
        let mut failed = false;
        for &(_, lambda) in &values {
            // deflate against numerically clustered neighbours only
            let cluster: Vec<&[f64]> = out
                .iter()
                .filter(|(mu, _)| (lambda - mu).abs() < 1e-7 * scale)
                .map(|(_, v)| v.as_slice())
                .collect();
            let (vec, res) = self.eigenvector(lambda, &cluster);
            residuals.push(res);
            if res > tol * scale {
                failed = true;
            }
            out.push((lambda, vec));
        }
        if failed {
            return Err(Error::EigenNonConvergence { residuals });
        }
        Ok(out)
    }
}

/// Gaussian elimination with partial pivoting for `T − σ I`.
struct TridiagLu {
    // U has three diagonals: u0 (main), u1, u2 (super)
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, scale: f64) -> Self {
        let n = diag.len();
        let tiny = f64::EPSILON * scale;
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        // current row i: (a, b, c) at columns (i, i+1, i+2)
        let mut a = diag[0] - shift;
        let mut b = if n > 1 { off[0] } else { 0.0 };
        let mut c = 0.0;
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a.abs() < tiny { tiny } else { a };
                break;
            }
            // next row (l, d, e) at columns (i, i+1, i+2)
            let l = off[i];
            let d = diag[i + 1] - shift;
            let e = if i + 2 < n { off[i + 1] } else { 0.0 };
            if l.abs() > a.abs() {
                swapped[i] = true;
                u0[i] = l;
                u1[i] = d;
                u2[i] = e;
                let m = a / l;
                mult[i] = m;
                a = b - m * d;
                b = c - m * e;
            } else {
                let piv = if a.abs() < tiny { tiny } else { a };
                u0[i] = piv;
                u1[i] = b;
                u2[i] = c;
                let m = l / piv;
                mult[i] = m;
                a = d - m * b;
                b = e - m * c;
            }
            c = 0.0;
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.mult[i] * y[i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
        // rescale to avoid overflow across iterations
        let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > 0.0 && norm.is_finite() {
            x.iter_mut().for_each(|v| *v /= norm);
        }
        x
    }
}

/// Solves `T x = b` for a symmetric tridiagonal `T` (used as a preconditioner).
pub fn solve(t: &SymTridiagonal, rhs: &[f64]) -> Vec<f64> {
    let n = t.dim();
    // Thomas algorithm; callers pass diagonally dominant SPD matrices
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = t.diag[0];
    c[0] = if n > 1 { t.off[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        let e = t.off[i - 1];
        denom = t.diag[i] - e * c[i - 1];
        if i + 1 < n {
            c[i] = t.off[i] / denom;
        }
        d[i] = (rhs[i] - e * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Makes the largest-magnitude component positive.
fn fix_sign(x: &mut [f64]) {
    let mut best = 0.0f64;
    for &v in x.iter() {
        if v.abs() > best.abs() * (1.0 + 1e-12) {
            best = v;
        }
    }
    if best < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_tridiag(n: usize, seed: u64) -> SymTridiagonal {
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let diag = (0..n).map(|_| 3.0 * next()).collect();
        let off = (0..n - 1).map(|_| next()).collect();
        SymTridiagonal::new(diag, off)
    }

    fn dense(t: &SymTridiagonal) -> DMatrix<f64> {
        let n = t.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                t.diag[i]
            } else if j == i + 1 {
                t.off[i]
            } else if i == j + 1 {
                t.off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_solver() {
        for seed in 0..5 {
            let t = random_tridiag(60, seed);
            let mut ev: Vec<f64> = dense(&t)
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (k, e) in ev.iter().enumerate() {
                assert!((t.eigenvalue(k) - e).abs() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn eigenpairs_are_orthonormal_with_small_residuals() {
        let t = random_tridiag(200, 7);
        let pairs = t.eigenpairs_in(-10.0, 10.0, 1e-10).unwrap();
        assert_eq!(pairs.len(), 200);
        for (i, (_, a)) in pairs.iter().enumerate() {
            for (j, (_, b)) in pairs.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - expect).abs() < 1e-8, "({i},{j})");
            }
        }
    }

    #[test]
    fn window_counting() {
        // 1D Dirichlet Laplacian: 2 - 2cos(kπ/(n+1))
        let n = 50;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]);
        let inside = t.eigenvalues_in(0.0, 0.9);
        let expected = (1..=n)
            .filter(|k| {
                2.0 - 2.0 * (*k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() < 0.9
            })
            .count();
        assert_eq!(inside.len(), expected);
        for (k, lam) in inside {
            let exact =
                2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((lam - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn thomas_solve() {
        let n = 30;
        let t = SymTridiagonal::new(vec![4.0; n], vec![-1.0; n - 1]);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = solve(&t, &b);
        let r = t.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }
}

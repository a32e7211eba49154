//! Discrete radial Dirac operator with a scalar potential.
//!
//! In the spin-orbit `-1` sector the spinor reduces to two radial profiles
//! `(v, u)` obeying
//!
//! ```text
//!   (m + gφ) v + (u' + 2u/r) = λ v
//!   -v'        - (m + gφ) u  = λ u
//! ```
//!
//! `u` lives on staggered nodes and `v` on primal nodes. The flux-form
//! divergence `(r² u)' / r²` (staggered → primal) and the difference `v'`
//! (primal → staggered) are exact negative adjoints under the grid weights,
//! so the operator is symmetric and, after the similarity `W^{1/2} H W^{-1/2}`,
//! becomes a symmetric tridiagonal matrix in the interleaved ordering
//! `(v_0, u_0, v_1, u_1, …)`. Boundary closure: `v(r_max) = 0`.
//!
//! The sector operator factors as `H = J L` with `J = diag(1, -1)` and
//! `L = σ·∇ + (m + gφ)`; the supercharge `Q = [[0, L*], [L, 0]]` carries the
//! `±` paired spectrum and its positive half is `|σ(H)|`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::{NodeFamily, RadialGrid};
use crate::tridiag::{dot, SymTridiagonal};

/// Relative eigenvector residual accepted from inverse iteration.
const EIGEN_TOL: f64 = 1e-12;

/// Simplicity threshold (relative to `m`) below which eigenvalue derivatives
/// are refused.
pub const SIMPLICITY_GAP: f64 = 1e-6;

/// A scalar field sampled at the primal nodes, vanishing at `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len(NodeFamily::Primal);
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("phi", "field values must be finite"));
        }
        if values[grid.n()] != 0.0 {
            return Err(invalid("phi", "field must vanish at r_max"));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the primal nodes; the last node is pinned to zero.
    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        let mut values = grid.sample(NodeFamily::Primal, f);
        values[grid.n()] = 0.0;
        Self { grid, values }
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n() + 1],
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_interior(grid: RadialGrid, interior: &[f64]) -> Self {
        debug_assert_eq!(interior.len(), grid.n());
        let mut values = interior.to_vec();
        values.push(0.0);
        Self { grid, values }
    }

    /// Values at nodes `0..n` (the boundary node is fixed at zero).
    pub fn interior(&self) -> &[f64] {
        &self.values[..self.grid.n()]
    }

    /// Average of the two neighbouring primal values at staggered node `j`.
    pub fn staggered(&self, j: usize) -> f64 {
        0.5 * (self.values[j] + self.values[j + 1])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &RadialField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + t * b)
                .collect(),
        })
    }

    /// Discrete `L²(ℝ³)` norm.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        self.grid
            .integrate(NodeFamily::Primal, &sq)
            .expect("length checked at construction")
            .sqrt()
    }
}

/// Radial profiles `(u, v)` of a spinor in the ansatz sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSpinor {
    grid: RadialGrid,
    /// `n` values at staggered nodes.
    pub u: Vec<f64>,
    /// `n + 1` values at primal nodes, `v[n] = 0`.
    pub v: Vec<f64>,
}

impl RadialSpinor {
    pub fn new(grid: RadialGrid, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len(NodeFamily::Staggered) {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                actual: u.len(),
            });
        }
        if v.len() != grid.len(NodeFamily::Primal) {
            return Err(Error::LengthMismatch {
                expected: grid.n() + 1,
                actual: v.len(),
            });
        }
        Ok(Self { grid, u, v })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// `4π ∫ (u² + v²) r² dr`.
    pub fn norm_sq(&self) -> f64 {
        let u2: Vec<f64> = self.u.iter().map(|x| x * x).collect();
        let v2: Vec<f64> = self.v.iter().map(|x| x * x).collect();
        self.grid.integrate(NodeFamily::Staggered, &u2).unwrap()
            + self.grid.integrate(NodeFamily::Primal, &v2).unwrap()
    }

    /// Grid inner product matching [`RadialSpinor::norm_sq`].
    pub fn inner(&self, other: &RadialSpinor) -> f64 {
        let uu: Vec<f64> = self.u.iter().zip(&other.u).map(|(a, b)| a * b).collect();
        let vv: Vec<f64> = self.v.iter().zip(&other.v).map(|(a, b)| a * b).collect();
        self.grid.integrate(NodeFamily::Staggered, &uu).unwrap()
            + self.grid.integrate(NodeFamily::Primal, &vv).unwrap()
    }

    /// `u` carried to primal node `j` by averaging; `u` is odd at the origin
    /// and extrapolated to zero past `r_max`.
    pub fn u_at_primal(&self, j: usize) -> f64 {
        let n = self.grid.n();
        if j == 0 {
            0.0
        } else if j == n {
            0.5 * self.u[n - 1]
        } else {
            0.5 * (self.u[j - 1] + self.u[j])
        }
    }
}

/// The scalar density `v² − u²` at primal nodes (`ψ*βψ` for the ansatz).
/// The value at `r_max` is truncated to zero.
pub fn density(psi: &RadialSpinor) -> RadialField {
    let n = psi.grid.n();
    let mut values: Vec<f64> = (0..=n)
        .map(|j| {
            let u = psi.u_at_primal(j);
            psi.v[j] * psi.v[j] - u * u
        })
        .collect();
    values[n] = 0.0;
    RadialField {
        grid: psi.grid,
        values,
    }
}

/// The assembled sector Hamiltonian of one field.
#[derive(Debug, Clone)]
pub struct DiracOperator {
    grid: RadialGrid,
    g: f64,
    m: f64,
    /// `m + gφ` at primal nodes `0..n`.
    mu_primal: Vec<f64>,
    /// `m + gφ` at staggered nodes.
    mu_staggered: Vec<f64>,
    /// `W^{1/2} H W^{-1/2}` in interleaved ordering.
    matrix: SymTridiagonal,
}

/// Assembles the discrete sector Hamiltonian for `H_φ = H₀ + gβφ`.
pub fn assemble_hamiltonian(phi: &RadialField, g: f64, m: f64) -> Result<DiracOperator> {
    if !(m.is_finite() && m > 0.0) {
        return Err(invalid("m", format!("mass must be positive, got {m}")));
    }
    if !g.is_finite() {
        return Err(invalid("g", "coupling must be finite"));
    }
    let grid = *phi.grid();
    let n = grid.n();
    let mu_primal: Vec<f64> = (0..n).map(|j| m + g * phi.values[j]).collect();
    let mu_staggered: Vec<f64> = (0..n).map(|j| m + g * phi.staggered(j)).collect();
    let h = grid.h();
    let mut diag = Vec::with_capacity(2 * n);
    let mut off = Vec::with_capacity(2 * n - 1);
    for j in 0..n {
        diag.push(mu_primal[j]);
        diag.push(-mu_staggered[j]);
        let rs = grid.staggered(j);
        off.push(rs / (h * grid.primal_weight(j)).sqrt());
        if j + 1 < n {
            off.push(-rs / (h * grid.primal_weight(j + 1)).sqrt());
        }
    }
    Ok(DiracOperator {
        grid,
        g,
        m,
        mu_primal,
        mu_staggered,
        matrix: SymTridiagonal::new(diag, off),
    })
}

impl DiracOperator {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn coupling(&self) -> f64 {
        self.g
    }

    /// Symmetrized interleaved matrix.
    pub fn matrix(&self) -> &SymTridiagonal {
        &self.matrix
    }

    /// Effective mass `m + gφ` at primal nodes `0..n`.
    pub fn local_mass(&self) -> &[f64] {
        &self.mu_primal
    }

    /// Applies the (unsymmetrized) operator to a spinor.
    pub fn apply(&self, psi: &RadialSpinor) -> Result<RadialSpinor> {
        if psi.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n();
        let h = self.grid.h();
        let mut hv = vec![0.0; n + 1];
        let mut hu = vec![0.0; n];
        for j in 0..n {
            let flux_out = self.grid.staggered(j).powi(2) * psi.u[j];
            let flux_in = if j == 0 {
                0.0
            } else {
                self.grid.staggered(j - 1).powi(2) * psi.u[j - 1]
            };
            hv[j] =
                self.mu_primal[j] * psi.v[j] + (flux_out - flux_in) / self.grid.primal_weight(j);
            let v_next = if j + 1 < n { psi.v[j + 1] } else { 0.0 };
            hu[j] = -(v_next - psi.v[j]) / h - self.mu_staggered[j] * psi.u[j];
        }
        Ok(RadialSpinor {
            grid: self.grid,
            u: hu,
            v: hv,
        })
    }

    /// Maps a unit vector of the symmetrized matrix to a normalized spinor.
    fn to_spinor(&self, x: &[f64]) -> RadialSpinor {
        let n = self.grid.n();
        let four_pi = 4.0 * PI;
        let mut v = vec![0.0; n + 1];
        let mut u = vec![0.0; n];
        for j in 0..n {
            v[j] = x[2 * j] / (four_pi * self.grid.primal_weight(j)).sqrt();
            u[j] = x[2 * j + 1] / (four_pi * self.grid.staggered_weight(j)).sqrt();
        }
        RadialSpinor {
            grid: self.grid,
            u,
            v,
        }
    }

    /// The supersymmetric partner form of the operator.
    pub fn supercharge(&self) -> Supercharge {
        let t = &self.matrix;
        let dim = t.dim();
        // L = J T, J = +1 on v rows, -1 on u rows
        let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut q = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
        for i in 0..dim {
            let mut set = |row: usize, col: usize, val: f64| {
                // L occupies the lower-left block, L^T the upper-right
                q[(dim + row, col)] = val;
                q[(col, dim + row)] = val;
            };
            set(i, i, sign(i) * t.diag()[i]);
            if i + 1 < dim {
                set(i, i + 1, sign(i) * t.off()[i]);
                set(i + 1, i, sign(i + 1) * t.off()[i]);
            }
        }
        Supercharge { matrix: q }
    }
}

/// `Q = [[0, L*], [L, 0]]` assembled densely from the sector stencils.
#[derive(Debug, Clone)]
pub struct Supercharge {
    matrix: DMatrix<f64>,
}

impl Supercharge {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Full sorted spectrum from a dense symmetric eigensolver.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Largest distance from `-λ` to the spectrum over eigenvalues `λ` in
    /// `(lo, hi)`.
    pub fn pairing_defect(spectrum: &[f64], lo: f64, hi: f64) -> f64 {
        spectrum
            .iter()
            .filter(|&&l| l > lo && l < hi)
            .map(|&l| {
                spectrum
                    .iter()
                    .map(|&mu| (l + mu).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

/// Default spectral window `(-m(1 - 1e-6), m(1 - 1e-6))`.
pub fn default_window(m: f64) -> (f64, f64) {
    let edge = m * (1.0 - 1e-6);
    (-edge, edge)
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    m: f64,
    window: (f64, f64),
    eigenvalues: Vec<f64>,
    spinors: Vec<RadialSpinor>,
    vectors: Vec<Vec<f64>>,
    separations: Vec<f64>,
    zero_gap: f64,
}

/// All eigenpairs of `op` with eigenvalue in `[lo, hi)`, sorted ascending.
pub fn eigen_solve(op: &DiracOperator, window: (f64, f64)) -> Result<SpectralResult> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(invalid("window", format!("need lo < hi, got ({lo}, {hi})")));
    }
    let t = &op.matrix;
    let dim = t.dim();
    let first = t.count_below(lo);
    let pairs = t.eigenpairs_in(lo, hi, EIGEN_TOL)?;

    let mut separations = Vec::with_capacity(pairs.len());
    for (i, (lambda, _)) in pairs.iter().enumerate() {
        let k = first + i;
        let below = if i > 0 {
            pairs[i - 1].0
        } else if k > 0 {
            t.eigenvalue(k - 1)
        } else {
            f64::NEG_INFINITY
        };
        let above = if i + 1 < pairs.len() {
            pairs[i + 1].0
        } else if k + 1 < dim {
            t.eigenvalue(k + 1)
        } else {
            f64::INFINITY
        };
        separations.push((lambda - below).min(above - lambda));
    }

    let k0 = t.count_below(0.0);
    let mut zero_gap = f64::INFINITY;
    if k0 < dim {
        zero_gap = zero_gap.min(t.eigenvalue(k0).abs());
    }
    if k0 > 0 {
        zero_gap = zero_gap.min(t.eigenvalue(k0 - 1).abs());
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    // ties within 1e-10 are ordered by the first significant component
    order.sort_by(|&a, &b| {
        let (la, va) = &pairs[a];
        let (lb, vb) = &pairs[b];
        if (la - lb).abs() <= 1e-10 {
            first_significant(va).cmp(&first_significant(vb))
        } else {
            la.total_cmp(lb)
        }
    });

    let mut eigenvalues = Vec::with_capacity(pairs.len());
    let mut spinors = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    let mut seps = Vec::with_capacity(pairs.len());
    for idx in order {
        let (lambda, x) = &pairs[idx];
        eigenvalues.push(*lambda);
        spinors.push(op.to_spinor(x));
        vectors.push(x.clone());
        seps.push(separations[idx]);
    }
    Ok(SpectralResult {
        m: op.m,
        window,
        eigenvalues,
        spinors,
        vectors,
        separations: seps,
        zero_gap,
    })
}

fn first_significant(x: &[f64]) -> usize {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter().position(|v| v.abs() >= 1e-3 * max).unwrap_or(0)
}

impl SpectralResult {
    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn spinors(&self) -> &[RadialSpinor] {
        &self.spinors
    }

    /// Distance from each eigenvalue to its nearest neighbour in the full
    /// discrete spectrum.
    pub fn separations(&self) -> &[f64] {
        &self.separations
    }

    /// Distance of 0 to the discrete spectrum.
    pub fn zero_gap(&self) -> f64 {
        self.zero_gap
    }

    fn ladder_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.eigenvalues.len()).filter(move |&i| {
            let l = self.eigenvalues[i];
            l > 0.0 && l < self.m
        })
    }

    /// Bound-state ladder `λ¹₊ ≤ λ²₊ ≤ …` in `(0, m)`.
    pub fn ladder(&self) -> Vec<f64> {
        self.ladder_indices().map(|i| self.eigenvalues[i]).collect()
    }

    /// Level `k ≥ 1` of the ladder with its spinor and separation.
    pub fn level(&self, k: usize) -> Option<(f64, &RadialSpinor, f64)> {
        let i = self.ladder_indices().nth(k.checked_sub(1)?)?;
        Some((self.eigenvalues[i], &self.spinors[i], self.separations[i]))
    }

    /// `max |G − I|` for the Gram matrix of the returned eigenvectors.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.spinors.iter().enumerate() {
            for (j, b) in self.spinors.iter().enumerate().skip(i) {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - expect).abs());
            }
        }
        worst
    }

    /// Residual norms `‖Hψ − λψ‖` of the symmetrized eigenvectors.
    pub fn residuals(&self, op: &DiracOperator) -> Vec<f64> {
        self.vectors
            .iter()
            .zip(&self.eigenvalues)
            .map(|(x, &l)| {
                let tx = op.matrix.matvec(x);
                tx.iter()
                    .zip(x)
                    .map(|(a, b)| (a - l * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

/// Derivative of ladder level `k` along `direction`,
/// `g · 4π ∫ δφ (v² − u²) r² dr`, evaluated with the same quadrature that
/// defines the discrete operator (so it is the exact discrete derivative).
pub fn hellmann_feynman(
    spectrum: &SpectralResult,
    level: usize,
    direction: &RadialField,
    g: f64,
) -> Result<f64> {
    let available = spectrum.ladder().len();
    let (lambda, psi, separation) = spectrum
        .level(level)
        .ok_or(Error::MissingLevel { level, available })?;
    if *direction.grid() != psi.grid {
        return Err(Error::GridMismatch);
    }
    let threshold = SIMPLICITY_GAP * spectrum.m;
    if separation <= threshold {
        return Err(Error::DegenerateEigenvalue {
            lambda,
            separation,
            threshold,
        });
    }
    Ok(g * density_pairing(psi, direction.values()))
}

/// `4π [Σ w_j δφ_j v_j² − Σ s_j δφ̄_j u_j²]`.
pub(crate) fn density_pairing(psi: &RadialSpinor, dphi: &[f64]) -> f64 {
    let grid = psi.grid;
    let n = grid.n();
    let mut acc = 0.0;
    for j in 0..n {
        acc += grid.primal_weight(j) * dphi[j] * psi.v[j] * psi.v[j];
        acc -= grid.staggered_weight(j) * 0.5 * (dphi[j] + dphi[j + 1]) * psi.u[j] * psi.u[j];
    }
    4.0 * PI * acc
}

/// Gradient of `λ` with respect to the nodal field values `φ_0..φ_{n-1}`
/// (per unit coupling).
pub(crate) fn density_gradient(psi: &RadialSpinor) -> Vec<f64> {
    let grid = psi.grid;
    let n = grid.n();
    let four_pi = 4.0 * PI;
    let mut out = vec![0.0; n];
    for j in 0..n {
        out[j] += four_pi * grid.primal_weight(j) * psi.v[j] * psi.v[j];
        let su = four_pi * grid.staggered_weight(j) * 0.5 * psi.u[j] * psi.u[j];
        out[j] -= su;
        if j + 1 < n {
            out[j + 1] -= su;
        }
    }
    out
}

/// Finite-volume radial Dirichlet Laplacian `-(r² v')'/r²` on `[0, r_max]`
/// with `v(r_max) = 0`, symmetrized by the primal weights.
pub fn radial_dirichlet_laplacian(grid: &RadialGrid) -> SymTridiagonal {
    let n = grid.n();
    let h = grid.h();
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n - 1);
    for j in 0..n {
        let out = grid.staggered(j).powi(2);
        let inn = if j == 0 {
            0.0
        } else {
            grid.staggered(j - 1).powi(2)
        };
        diag.push((out + inn) / (h * grid.primal_weight(j)));
        if j + 1 < n {
            off.push(-out / (h * (grid.primal_weight(j) * grid.primal_weight(j + 1)).sqrt()));
        }
    }
    SymTridiagonal::new(diag, off)
}

/// `k`-th (1-based) Dirichlet eigenvalue of `-Δ` on the unit ball among
/// radial modes, `C^k_1 = (kπ)²`, computed on an `n`-cell grid.
pub fn unit_ball_dirichlet_eigenvalue(n: usize, k: usize) -> Result<f64> {
    let grid = RadialGrid::new(1.0, n)?;
    if k == 0 || k > n {
        return Err(invalid("k", format!("level must be in 1..={n}")));
    }
    Ok(radial_dirichlet_laplacian(&grid).eigenvalue(k - 1))
}

/// Normalized symmetrized vector → Gram check helper for tests.
#[doc(hidden)]
pub fn vector_inner(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b)
}

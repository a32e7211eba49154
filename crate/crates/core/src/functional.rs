//! Radial field energy `4π ∫ (s φ'² + ω W(φ) + b φ²) r² dr`.
//!
//! The field is piecewise linear between primal nodes. Each cell contributes
//! its exact `r²` volume times the squared slope plus the cell mean of the
//! potential along the linear interpolant (three-point Gauss rule, exact for
//! the quartic). Because the potential mean is exact, Jensen's inequality
//! gives the cellwise bound `s a² + ω W̄ ≥ 2√(sω)|a|√W̄ ≥ √(sω)|Δ𝒲|/h`, so the
//! discrete energy dominates the discrete total variation of `𝒲∘φ`.

use std::f64::consts::PI;

use crate::grid::RadialGrid;
use crate::potentials::PotentialSpec;
use crate::tridiag::SymTridiagonal;

const GAUSS3_NODES: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEnergy {
    /// Coefficient `s` of `φ'²`.
    pub stiffness: f64,
    /// Coefficient `ω` of `W(φ)`.
    pub well_weight: f64,
    pub potential: PotentialSpec,
}

/// Separate contributions to the field energy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    pub gradient: f64,
    pub well: f64,
    pub mass: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.gradient + self.well + self.mass
    }
}

impl FieldEnergy {
    /// `φ'²/2 + U(φ)`.
    pub fn soliton(potential: PotentialSpec) -> Self {
        Self {
            stiffness: 0.5,
            well_weight: 1.0,
            potential,
        }
    }

    /// `ε φ'² + W(φ)/ε + b φ²`.
    pub fn diffuse(potential: PotentialSpec, eps: f64) -> Self {
        Self {
            stiffness: eps,
            well_weight: 1.0 / eps,
            potential,
        }
    }

    fn local(&self, t: f64) -> (f64, f64) {
        let p = &self.potential;
        (
            self.well_weight * p.w(t) + p.b * t * t,
            self.well_weight * p.dw(t) + 2.0 * p.b * t,
        )
    }

    pub fn parts(&self, grid: &RadialGrid, phi: &[f64]) -> EnergyParts {
        let h = grid.h();
        let p = &self.potential;
        let mut parts = EnergyParts::default();
        for c in 0..grid.n() {
            let cw = grid.cell_weight(c);
            let d = phi[c + 1] - phi[c];
            parts.gradient += cw * self.stiffness * (d / h).powi(2);
            for (q, wq) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                let t = phi[c] + q * d;
                parts.well += cw * wq * self.well_weight * p.w(t);
                parts.mass += cw * wq * p.b * t * t;
            }
        }
        parts.gradient *= 4.0 * PI;
        parts.well *= 4.0 * PI;
        parts.mass *= 4.0 * PI;
        parts
    }

    pub fn energy(&self, grid: &RadialGrid, phi: &[f64]) -> f64 {
        self.parts(grid, phi).total()
    }

    /// Energy and its gradient with respect to `φ_0..φ_{n-1}`.
    pub fn energy_and_gradient(&self, grid: &RadialGrid, phi: &[f64]) -> (f64, Vec<f64>) {
        let n = grid.n();
        let h = grid.h();
        let mut e = 0.0;
        let mut grad = vec![0.0; n + 1];
        for c in 0..n {
            let cw = grid.cell_weight(c);
            let d = phi[c + 1] - phi[c];
            e += cw * self.stiffness * (d / h).powi(2);
            let gs = 2.0 * cw * self.stiffness * d / (h * h);
            grad[c] -= gs;
            grad[c + 1] += gs;
            for (q, wq) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                let (f, df) = self.local(phi[c] + q * d);
                e += cw * wq * f;
                grad[c] += cw * wq * df * (1.0 - q);
                grad[c + 1] += cw * wq * df * q;
            }
        }
        grad.truncate(n);
        for g in &mut grad {
            *g *= 4.0 * PI;
        }
        (4.0 * PI * e, grad)
    }

    /// Discrete `√(sω) · 4π ∫ |(𝒲∘φ)'| r² dr`, a lower bound for
    /// [`FieldEnergy::energy`].
    pub fn interface_variation(&self, grid: &RadialGrid, phi: &[f64]) -> f64 {
        let h = grid.h();
        let p = &self.potential;
        let scale = (self.stiffness * self.well_weight).sqrt();
        let tv: f64 = (0..grid.n())
            .map(|c| {
                grid.cell_weight(c)
                    * (p.interface_primitive(phi[c + 1]) - p.interface_primitive(phi[c])).abs()
                    / h
            })
            .sum();
        4.0 * PI * scale * tv
    }

    /// `2s K + c M` on the free nodes, `K` the stiffness and `M` the lumped
    /// mass matrix.
    pub fn preconditioner(&self, grid: &RadialGrid, mass_shift: f64) -> SymTridiagonal {
        let n = grid.n();
        let h = grid.h();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for c in 0..n {
            let cw = 4.0 * PI * grid.cell_weight(c);
            let k = 2.0 * self.stiffness * cw / (h * h);
            diag[c] += k + 0.5 * mass_shift * cw;
            if c + 1 < n {
                diag[c + 1] += k + 0.5 * mass_shift * cw;
                off[c] -= k;
            }
        }
        SymTridiagonal::new(diag, off)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_field(grid: &RadialGrid) -> Vec<f64> {
        let mut phi: Vec<f64> = grid
            .primal_nodes()
            .map(|r| -(1.0 - (3.0 * (r - 1.5)).tanh()) / 2.0 * 1.1)
            .collect();
        *phi.last_mut().unwrap() = 0.0;
        phi
    }

    #[test]
    fn gradient_matches_differences() {
        let grid = make_grid(4.0, 80).unwrap();
        let fe = FieldEnergy::diffuse(PotentialSpec::new(1.3, 0.02).unwrap(), 0.2);
        let phi = sample_field(&grid);
        let (_, g) = fe.energy_and_gradient(&grid, &phi);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dir: Vec<f64> = (0..=80)
            .map(|j| {
                if j < 80 {
                    rng.gen_range(-1.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let t = 1e-5;
        let shifted =
            |s: f64| -> Vec<f64> { phi.iter().zip(&dir).map(|(a, b)| a + s * b).collect() };
        let fd = (fe.energy(&grid, &shifted(t)) - fe.energy(&grid, &shifted(-t))) / (2.0 * t);
        let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - an).abs() < 1e-7 * an.abs().max(1.0), "{fd} {an}");
    }

    #[test]
    fn linear_field_gradient_energy_is_exact() {
        // φ = r on [0, 2]: 4π ∫ s r² dr = 4π s 8/3
        let grid = make_grid(2.0, 40).unwrap();
        let fe = FieldEnergy::soliton(PotentialSpec::new(1.0, 0.0).unwrap());
        let phi: Vec<f64> = grid.primal_nodes().collect();
        let parts = fe.parts(&grid, &phi);
        assert!((parts.gradient - 4.0 * PI * 0.5 * 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn energy_dominates_interface_variation() {
        let grid = make_grid(3.0, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for eps in [0.4, 0.1, 0.02] {
            let fe = FieldEnergy::diffuse(PotentialSpec::new(1.0, 0.0).unwrap(), eps);
            for _ in 0..50 {
                let phi: Vec<f64> = (0..=60).map(|_| rng.gen_range(-1.5..0.5)).collect();
                let e = fe.energy(&grid, &phi);
                let tv = fe.interface_variation(&grid, &phi);
                assert!(e >= tv - 1e-12 * e.max(1.0), "{e} < {tv}");
            }
        }
    }

    #[test]
    fn scaling_in_eps() {
        let grid = make_grid(3.0, 60).unwrap();
        let phi = sample_field(&grid);
        let spec = PotentialSpec::new(1.0, 0.0).unwrap();
        let a = FieldEnergy::diffuse(spec, 0.2).parts(&grid, &phi);
        let b = FieldEnergy::diffuse(spec, 0.1).parts(&grid, &phi);
        assert!((b.well - 2.0 * a.well).abs() < 1e-12 * a.well);
        assert!((2.0 * b.gradient - a.gradient).abs() < 1e-12 * a.gradient);
    }

    #[test]
    fn preconditioner_is_positive_definite() {
        let grid = make_grid(3.0, 60).unwrap();
        let fe = FieldEnergy::soliton(PotentialSpec::default());
        let p = fe.preconditioner(&grid, 1.0);
        let (lo, _) = p.spectral_bounds();
        assert!(p.count_below(0.0) == 0, "{lo}");
    }
}

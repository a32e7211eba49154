//! Soliton bag energy minimization over radial fields.
//!
//! The energy of a field is the sum of the occupied ladder levels plus the
//! field energy. Levels missing from `(0, m)` count as `m`, so the free field
//! has energy `N m`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dirac::{
    assemble_hamiltonian, density_gradient, eigen_solve, DiracOperator, RadialField, RadialSpinor,
    SpectralResult, SIMPLICITY_GAP,
};
use crate::error::{invalid, Error, Result};
use crate::functional::{EnergyParts, FieldEnergy};
use crate::grid::RadialGrid;
use crate::optim::{minimize as descend, DescentOptions};
use crate::potentials::PotentialSpec;

/// Quark content and couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub g: f64,
    pub m: f64,
    /// Ladder index occupied by each quark, ascending.
    pub levels: Vec<usize>,
}

impl ModelParams {
    /// `quarks` quarks in the lowest level.
    pub fn ground(quarks: usize, g: f64, m: f64) -> Self {
        Self {
            g,
            m,
            levels: vec![1; quarks],
        }
    }

    pub fn quarks(&self) -> usize {
        self.levels.len()
    }

    pub fn max_level(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(invalid("N", "need at least one quark"));
        }
        if self.levels.contains(&0) {
            return Err(invalid("levels", "ladder indices start at 1"));
        }
        if self.levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("levels", "ladder indices must be ascending"));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(invalid("m", format!("must be positive, got {}", self.m)));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(invalid("g", format!("must be positive, got {}", self.g)));
        }
        Ok(())
    }
}

/// Quark levels plus a field energy, evaluated on one grid.
#[derive(Debug, Clone)]
pub struct QuarkFunctional {
    pub model: ModelParams,
    pub field: FieldEnergy,
    pub grid: RadialGrid,
}

/// Everything computed at one field.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub energy: f64,
    pub level_sum: f64,
    pub field: EnergyParts,
    /// Occupied level energies; `m` for levels absent from `(0, m)`.
    pub lambdas: Vec<f64>,
    pub spectrum: SpectralResult,
    pub operator: DiracOperator,
}

impl Evaluation {
    /// Spinor of quark `i`, `None` for a missing level.
    pub fn spinor(&self, model: &ModelParams, i: usize) -> Option<&RadialSpinor> {
        self.spectrum.level(model.levels[i]).map(|(_, psi, _)| psi)
    }

    pub fn all_bound(&self, model: &ModelParams) -> bool {
        model
            .levels
            .iter()
            .all(|&k| self.spectrum.level(k).is_some())
    }
}

impl QuarkFunctional {
    pub fn new(model: ModelParams, field: FieldEnergy, grid: RadialGrid) -> Result<Self> {
        model.validate()?;
        field.potential.validate()?;
        Ok(Self { model, field, grid })
    }

    fn window(&self) -> (f64, f64) {
        (0.0, self.model.m * (1.0 - 1e-6))
    }

    pub fn evaluate(&self, phi: &RadialField) -> Result<Evaluation> {
        if *phi.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let op = assemble_hamiltonian(phi, self.model.g, self.model.m)?;
        let spectrum = eigen_solve(&op, self.window())?;
        let lambdas: Vec<f64> = self
            .model
            .levels
            .iter()
            .map(|&k| spectrum.level(k).map_or(self.model.m, |(l, _, _)| l))
            .collect();
        let level_sum: f64 = lambdas.iter().sum();
        let field = self.field.parts(&self.grid, phi.values());
        Ok(Evaluation {
            energy: level_sum + field.total(),
            level_sum,
            field,
            lambdas,
            spectrum,
            operator: op,
        })
    }

    pub fn energy(&self, phi: &RadialField) -> Result<f64> {
        Ok(self.evaluate(phi)?.energy)
    }

    /// Gradient with respect to the free nodal values `φ_0..φ_{n-1}`.
    pub fn gradient_at(&self, phi: &RadialField, eval: &Evaluation) -> Result<Vec<f64>> {
        let (_, mut grad) = self.field.energy_and_gradient(&self.grid, phi.values());
        let threshold = SIMPLICITY_GAP * self.model.m;
        for &k in &self.model.levels {
            let Some((lambda, psi, separation)) = eval.spectrum.level(k) else {
                continue;
            };
            if separation <= threshold {
                return Err(Error::DegenerateEigenvalue {
                    lambda,
                    separation,
                    threshold,
                });
            }
            for (g, d) in grad.iter_mut().zip(density_gradient(psi)) {
                *g += self.model.g * d;
            }
        }
        Ok(grad)
    }

    pub fn value_and_gradient(&self, interior: &[f64]) -> Result<(f64, Vec<f64>)> {
        let phi = RadialField::from_interior(self.grid, interior);
        let eval = self.evaluate(&phi)?;
        let grad = self.gradient_at(&phi, &eval)?;
        Ok((eval.energy, grad))
    }

    /// Discrete `L²` norm of the field equation, `√(Σ ∇E_j² / (4π w_j))`.
    pub fn residual_norm(&self, grad: &[f64]) -> f64 {
        grad.iter()
            .enumerate()
            .map(|(j, g)| g * g / (4.0 * PI * self.grid.primal_weight(j)))
            .sum::<f64>()
            .sqrt()
    }

    /// Runs the descent from `phi0`, reporting each accepted iterate.
    pub fn descend(
        &self,
        phi0: &RadialField,
        opts: &DescentOptions,
        mass_shift: f64,
        observer: impl FnMut(&[f64], f64),
    ) -> Result<(RadialField, crate::optim::DescentOutcome)> {
        let precond = self.field.preconditioner(&self.grid, mass_shift);
        let out = descend(
            |x| self.value_and_gradient(x),
            |g| self.residual_norm(g),
            &precond,
            phi0.interior().to_vec(),
            opts,
            observer,
        )?;
        Ok((RadialField::from_interior(self.grid, &out.x), out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonConfig {
    pub model: ModelParams,
    pub potential: PotentialSpec,
    pub grid: RadialGrid,
    pub controls: DescentOptions,
}

impl SolitonConfig {
    pub fn functional(&self) -> Result<QuarkFunctional> {
        if !(self.controls.tol > 0.0) {
            return Err(invalid("tol", "tolerance must be positive"));
        }
        QuarkFunctional::new(
            self.model.clone(),
            FieldEnergy::soliton(self.potential),
            self.grid,
        )
    }

    /// `−(m/g)(1 − tanh((r − 2/m)/(0.5/m)))/2`.
    pub fn initial_guess(&self) -> RadialField {
        let (m, g) = (self.model.m, self.model.g);
        RadialField::from_fn(self.grid, |r| {
            -(m / g) * (1.0 - ((r - 2.0 / m) / (0.5 / m)).tanh()) / 2.0
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolitonReport {
    pub phi: RadialField,
    /// Occupied level energies (`m` for missing levels).
    pub lambdas: Vec<f64>,
    pub spinors: Vec<Option<RadialSpinor>>,
    pub energy: f64,
    pub history: Vec<f64>,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Every occupied level lies in `(0, m)`.
    pub all_bound: bool,
}

/// Soliton energy of `phi`.
pub fn energy(cfg: &SolitonConfig, phi: &RadialField) -> Result<f64> {
    cfg.functional()?.energy(phi)
}

/// Energy gradient as a nodal field (zero at `r_max`).
pub fn gradient(cfg: &SolitonConfig, phi: &RadialField) -> Result<RadialField> {
    let f = cfg.functional()?;
    let eval = f.evaluate(phi)?;
    let g = f.gradient_at(phi, &eval)?;
    Ok(RadialField::from_interior(cfg.grid, &g))
}

pub fn minimize(cfg: &SolitonConfig) -> Result<SolitonReport> {
    minimize_from(cfg, &cfg.initial_guess())
}

pub fn minimize_from(cfg: &SolitonConfig, phi0: &RadialField) -> Result<SolitonReport> {
    let f = cfg.functional()?;
    let shift = cfg.model.m * cfg.model.m;
    let (phi, out) = f.descend(phi0, &cfg.controls, shift, |_, _| {})?;
    let eval = f.evaluate(&phi)?;
    let spinors = (0..cfg.model.quarks())
        .map(|i| eval.spinor(&cfg.model, i).cloned())
        .collect();
    Ok(SolitonReport {
        all_bound: eval.all_bound(&cfg.model),
        lambdas: eval.lambdas.clone(),
        spinors,
        energy: eval.energy,
        history: out.history,
        el_residual: out.residual,
        iterations: out.iterations,
        converged: out.converged,
        phi,
    })
}

/// Field-equation residual and eigen-residuals `‖Hψ_i − λ_iψ_i‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElResidual {
    pub field: f64,
    pub eigen: Vec<f64>,
}

/// Recomputes the stationarity residuals from scratch at the report's field.
pub fn el_residual(cfg: &SolitonConfig, report: &SolitonReport) -> Result<ElResidual> {
    let f = cfg.functional()?;
    let eval = f.evaluate(&report.phi)?;
    let grad = f.gradient_at(&report.phi, &eval)?;
    let mut eigen = Vec::new();
    for (i, &k) in cfg.model.levels.iter().enumerate() {
        if let Some((lambda, psi, _)) = eval.spectrum.level(k) {
            let hpsi = eval.operator.apply(psi)?;
            let r = RadialSpinor::new(
                cfg.grid,
                hpsi.u
                    .iter()
                    .zip(&psi.u)
                    .map(|(a, b)| a - lambda * b)
                    .collect(),
                hpsi.v
                    .iter()
                    .zip(&psi.v)
                    .map(|(a, b)| a - lambda * b)
                    .collect(),
            )?;
            eigen.push(r.norm_sq().sqrt());
        } else {
            debug_assert!(report.lambdas[i] == cfg.model.m);
            eigen.push(0.0);
        }
    }
    Ok(ElResidual {
        field: f.residual_norm(&grad),
        eigen,
    })
}

/// Piecewise-linear test field: `−m/g` on `[0, R]`, zero beyond `R2`.
pub fn ramp_field(grid: RadialGrid, m: f64, g: f64, r_inner: f64, r_outer: f64) -> RadialField {
    RadialField::from_fn(grid, |r| {
        if r <= r_inner {
            -m / g
        } else if r >= r_outer {
            0.0
        } else {
            -m / g * (r_outer - r) / (r_outer - r_inner)
        }
    })
}

/// Upper bound `f(R)` on the minimal soliton energy from the ramp test field
/// with outer radius `(1 + √3) R`, using the radial Dirichlet constants
/// `C^k = (kπ)²` of the unit ball.
pub fn ramp_bound(model: &ModelParams, potential: &PotentialSpec, radius: f64) -> f64 {
    let (m, g) = (model.m, model.g);
    let s3 = 3f64.sqrt();
    let levels: f64 = model.levels.iter().map(|&k| k as f64 * PI / radius).sum();
    let grad = 4.0 * m * m * (3.0 + 2.0 * s3) * PI / (6.0 * g * g) * radius;
    let pot = 4.0 * (1.0 + s3).powi(3) * PI / 3.0 * potential.sup_u(-m / g, 0.0) * radius.powi(3);
    levels + grad + pot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(g: f64, kappa: f64, n: usize) -> SolitonConfig {
        SolitonConfig {
            model: ModelParams::ground(1, g, 1.0),
            potential: PotentialSpec::new(kappa, 0.01).unwrap(),
            grid: make_grid(20.0, n).unwrap(),
            controls: DescentOptions::default(),
        }
    }

    #[test]
    fn free_field_energy_is_quark_mass() {
        let cfg = config(2.0, 1.0, 400);
        let e = energy(&cfg, &RadialField::zeros(cfg.grid)).unwrap();
        assert_eq!(e, 1.0);
        let mut cfg3 = cfg.clone();
        cfg3.model = ModelParams::ground(3, 2.0, 1.0);
        assert_eq!(energy(&cfg3, &RadialField::zeros(cfg.grid)).unwrap(), 3.0);
        // missing level → field gradient only, which vanishes at φ = 0
        let g = gradient(&cfg, &RadialField::zeros(cfg.grid)).unwrap();
        assert!(g.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let cfg = config(6.0, 0.1, 400);
        let phi = cfg.initial_guess();
        let f = cfg.functional().unwrap();
        let eval = f.evaluate(&phi).unwrap();
        assert!(eval.all_bound(&cfg.model));
        let grad = f.gradient_at(&phi, &eval).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let c: f64 = rng.gen_range(1.0..4.0);
            let amp: f64 = rng.gen_range(-0.05..0.05);
            let dir = RadialField::from_fn(cfg.grid, |r| amp * (-(r - c).powi(2)).exp());
            let t = 1e-4;
            let ep = f.energy(&phi.axpy(t, &dir).unwrap()).unwrap();
            let em = f.energy(&phi.axpy(-t, &dir).unwrap()).unwrap();
            let fd = (ep - em) / (2.0 * t);
            let an: f64 = grad.iter().zip(dir.values()).map(|(a, b)| a * b).sum();
            assert!((fd - an).abs() <= 1e-4 * an.abs(), "{fd} {an}");
        }
    }

    #[test]
    fn stronger_potential_never_lowers_energy() {
        let cfg = config(6.0, 0.1, 300);
        let phi = cfg.initial_guess();
        let e1 = energy(&cfg, &phi).unwrap();
        let mut strong = cfg.clone();
        strong.potential = PotentialSpec::new(0.2, 0.02).unwrap();
        assert!(energy(&strong, &phi).unwrap() >= e1);
    }

    #[test]
    fn weak_coupling_collapses_to_free_field() {
        let mut cfg = config(0.1, 1.0, 300);
        cfg.controls.max_iter = 500;
        let rep = minimize(&cfg).unwrap();
        assert!((rep.energy - 1.0).abs() < 1e-2, "{}", rep.energy);
        assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ramp_bound_is_above_ramp_energy() {
        let cfg = config(10.0, 0.1, 800);
        for r in [0.5, 1.0, 2.0, 3.0] {
            let phi = ramp_field(cfg.grid, 1.0, 10.0, r, (1.0 + 3f64.sqrt()) * r);
            let e = energy(&cfg, &phi).unwrap();
            assert!(e <= ramp_bound(&cfg.model, &cfg.potential, r) + 1e-2);
        }
    }

    #[test]
    fn invalid_models() {
        assert!(ModelParams::ground(0, 1.0, 1.0).validate().is_err());
        let mut m = ModelParams::ground(2, 1.0, 1.0);
        m.levels = vec![2, 1];
        assert!(m.validate().is_err());
        m.levels = vec![0, 1];
        assert!(m.validate().is_err());
        assert!(ModelParams::ground(1, -1.0, 1.0).validate().is_err());
    }
}

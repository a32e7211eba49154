//! Uniform radial meshes on `[0, r_max]`.
//!
//! Two node families share one spacing `h = r_max / n`:
//!
//! * primal nodes `r_j = j h`, `j = 0..=n`, carrying the scalar field and the
//!   `v` spinor component;
//! * staggered nodes `r_{j+1/2} = (j + 1/2) h`, `j = 0..n`, carrying `u`.
//!
//! Primal weights are the exact volumes `∫ r² dr` of the dual cells
//! `[r_{j-1/2}, r_{j+1/2}] ∩ [0, r_max]`; staggered weights are the midpoint
//! rule `h r_{j+1/2}²`. The pairing of the two is what makes the discrete
//! radial derivatives adjoint to each other (see [`crate::dirac`]).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

pub const MIN_NODES: usize = 16;

/// Which node family a sample vector lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFamily {
    /// `n + 1` samples at `r_j = j h`.
    Primal,
    /// `n` samples at `r_{j+1/2}`.
    Staggered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
    h: f64,
}

/// Builds a uniform grid with `n` cells on `[0, r_max]`.
pub fn make_grid(r_max: f64, n: usize) -> Result<RadialGrid> {
    RadialGrid::new(r_max, n)
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(invalid("r_max", format!("must be positive, got {r_max}")));
        }
        if n < MIN_NODES {
            return Err(invalid(
                "n",
                format!("need at least {MIN_NODES} cells, got {n}"),
            ));
        }
        Ok(Self {
            r_max,
            n,
            h: r_max / n as f64,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of cells; there are `n + 1` primal and `n` staggered nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn primal(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn staggered(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }

    pub fn len(&self, family: NodeFamily) -> usize {
        match family {
            NodeFamily::Primal => self.n + 1,
            NodeFamily::Staggered => self.n,
        }
    }

    pub fn primal_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|j| self.primal(j))
    }

    pub fn staggered_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.staggered(j))
    }

    /// `∫ r² dr` over the dual cell of primal node `j`.
    pub fn primal_weight(&self, j: usize) -> f64 {
        let h = self.h;
        if j == 0 {
            (0.5 * h).powi(3) / 3.0
        } else if j == self.n {
            let lo = self.staggered(self.n - 1);
            (self.r_max.powi(3) - lo.powi(3)) / 3.0
        } else {
            let r = self.primal(j);
            h * (r * r + h * h / 12.0)
        }
    }

    /// Midpoint weight `h r_{j+1/2}²`.
    pub fn staggered_weight(&self, j: usize) -> f64 {
        let r = self.staggered(j);
        self.h * r * r
    }

    /// Exact `∫ r² dr` over the cell `[r_j, r_{j+1}]`.
    pub fn cell_weight(&self, j: usize) -> f64 {
        let r = self.staggered(j);
        self.h * (r * r + self.h * self.h / 12.0)
    }

    pub fn weights(&self, family: NodeFamily) -> Vec<f64> {
        match family {
            NodeFamily::Primal => (0..=self.n).map(|j| self.primal_weight(j)).collect(),
            NodeFamily::Staggered => (0..self.n).map(|j| self.staggered_weight(j)).collect(),
        }
    }

    /// `4π Σ w_j f_j`, the integral over the ball `B(0, r_max)` of a radial
    /// function sampled on the given node family.
    pub fn integrate(&self, family: NodeFamily, samples: &[f64]) -> Result<f64> {
        let expected = self.len(family);
        if samples.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: samples.len(),
            });
        }
        let sum: f64 = match family {
            NodeFamily::Primal => samples
                .iter()
                .enumerate()
                .map(|(j, f)| self.primal_weight(j) * f)
                .sum(),
            NodeFamily::Staggered => samples
                .iter()
                .enumerate()
                .map(|(j, f)| self.staggered_weight(j) * f)
                .sum(),
        };
        Ok(4.0 * PI * sum)
    }

    /// Samples `f` on the requested node family.
    pub fn sample(&self, family: NodeFamily, f: impl Fn(f64) -> f64) -> Vec<f64> {
        match family {
            NodeFamily::Primal => self.primal_nodes().map(f).collect(),
            NodeFamily::Staggered => self.staggered_nodes().map(f).collect(),
        }
    }
}

/// Free-function form of [`RadialGrid::integrate`].
pub fn integrate(grid: &RadialGrid, family: NodeFamily, samples: &[f64]) -> Result<f64> {
    grid.integrate(family, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_nodes() {
        let g = make_grid(1.0, 16).unwrap();
        assert_eq!(g.h(), 0.0625);
        assert_eq!(g.primal(8), 0.5);
        assert_eq!(g.staggered(0), 0.03125);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(0.0, 100).is_err());
        assert!(make_grid(-1.0, 100).is_err());
        assert!(make_grid(1.0, 15).is_err());
        assert!(make_grid(f64::NAN, 100).is_err());
    }

    #[test]
    fn primal_weights_reproduce_ball_volume() {
        let g = make_grid(10.0, 1000).unwrap();
        let total: f64 = g.weights(NodeFamily::Primal).iter().sum();
        assert!((total - 1000.0 / 3.0).abs() / (1000.0 / 3.0) < 1e-12);
        let cells: f64 = (0..g.n()).map(|j| g.cell_weight(j)).sum();
        assert!((cells - 1000.0 / 3.0).abs() / (1000.0 / 3.0) < 1e-12);
    }

    #[test]
    fn staggered_midpoint_rule_error_is_second_order() {
        let g = make_grid(10.0, 1000).unwrap();
        let total: f64 = g.weights(NodeFamily::Staggered).iter().sum();
        // midpoint defect of ∫ r² dr is h² r_max / 12
        let defect = g.h() * g.h() * g.r_max() / 12.0;
        assert!((1000.0 / 3.0 - total - defect).abs() < 1e-9);
    }

    #[test]
    fn weights_are_positive() {
        let g = make_grid(3.0, 64).unwrap();
        assert!(g.weights(NodeFamily::Primal).iter().all(|&w| w > 0.0));
        assert!(g.weights(NodeFamily::Staggered).iter().all(|&w| w > 0.0));
    }

    #[test]
    fn unit_ball_volume() {
        let g = make_grid(2.0, 400).unwrap();
        let f = g.sample(NodeFamily::Primal, |r| if r <= 1.0 { 1.0 } else { 0.0 });
        let vol = g.integrate(NodeFamily::Primal, &f).unwrap();
        let exact = 4.0 * PI / 3.0;
        // indicator jump costs at most one dual cell
        assert!((vol - exact).abs() < 4.0 * PI * g.h());
    }

    #[test]
    fn zero_integrand() {
        let g = make_grid(2.0, 64).unwrap();
        assert_eq!(
            g.integrate(NodeFamily::Primal, &vec![0.0; 65]).unwrap(),
            0.0
        );
        assert_eq!(
            g.integrate(NodeFamily::Staggered, &vec![0.0; 64]).unwrap(),
            0.0
        );
    }

    #[test]
    fn length_mismatch() {
        let g = make_grid(2.0, 64).unwrap();
        assert_eq!(
            g.integrate(NodeFamily::Primal, &[1.0; 64]),
            Err(Error::LengthMismatch {
                expected: 65,
                actual: 64
            })
        );
        assert!(g.integrate(NodeFamily::Staggered, &[1.0; 65]).is_err());
    }

    fn sinc_integral(family: NodeFamily, n: usize) -> f64 {
        let g = make_grid(1.0, n).unwrap();
        let f = g.sample(family, |r| if r == 0.0 { PI } else { (PI * r).sin() / r });
        g.integrate(family, &f).unwrap()
    }

    #[test]
    fn sinc_against_antiderivative() {
        // ∫₀¹ sin(πr) r dr = 1/π
        let exact = 4.0 * PI / PI;
        for family in [NodeFamily::Primal, NodeFamily::Staggered] {
            let got = sinc_integral(family, 2000);
            assert!((got - exact).abs() < 1e-6, "{family:?}: {got}");
        }
    }

    #[test]
    fn empirical_order_at_least_quadratic() {
        let exact = 4.0;
        for family in [NodeFamily::Primal, NodeFamily::Staggered] {
            let errs: Vec<f64> = [250, 500, 1000, 2000]
                .iter()
                .map(|&n| (sinc_integral(family, n) - exact).abs())
                .collect();
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order >= 1.9, "{family:?}: order {order}");
            }
        }
    }
}

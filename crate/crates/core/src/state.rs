use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Whether the power nonlinearity is switched on. The linear mode exists
/// for closed-form oracle runs; the focusing sign is not representable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coupling {
    Defocusing,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub p: f64,
    pub coupling: Coupling,
}

impl ProblemSpec {
    pub fn new(p: f64) -> Result<ProblemSpec> {
        ProblemSpec::with_coupling(p, Coupling::Defocusing)
    }

    pub fn with_coupling(p: f64, coupling: Coupling) -> Result<ProblemSpec> {
        if !(3.0..=5.0).contains(&p) {
            return Err(Error::ExponentOutOfRange(p));
        }
        Ok(ProblemSpec { p, coupling })
    }

    pub fn s_p(&self) -> f64 {
        1.5 - 2.0 / (self.p - 1.0)
    }

    pub fn lambda(&self) -> f64 {
        match self.coupling {
            Coupling::Defocusing => 1.0,
            Coupling::Linear => 0.0,
        }
    }

    pub fn is_cubic(&self) -> bool {
        self.p == 3.0
    }

    /// |u|^q with a fast path for the integer exponents that dominate runs.
    pub fn abs_pow(&self, u: f64, q: f64) -> f64 {
        let a = u.abs();
        if q == q.trunc() && q.abs() < 32.0 {
            a.powi(q as i32)
        } else {
            a.powf(q)
        }
    }

    /// |u|^{p+1} without the coupling factor.
    pub fn pow_p1(&self, u: f64) -> f64 {
        if self.is_cubic() {
            let u2 = u * u;
            u2 * u2
        } else {
            self.abs_pow(u, self.p + 1.0)
        }
    }

    /// Right-hand side term λ|u|^{p-1}u.
    pub fn force(&self, u: f64) -> f64 {
        if self.coupling == Coupling::Linear {
            return 0.0;
        }
        if self.is_cubic() {
            u * u * u
        } else {
            self.abs_pow(u, self.p - 1.0) * u
        }
    }

    /// Potential energy density λ|u|^{p+1}/(p+1).
    pub fn potential(&self, u: f64) -> f64 {
        self.lambda() * self.pow_p1(u) / (self.p + 1.0)
    }
}

/// Solution snapshot (u, ∂ₜu) on a grid. Radial states store u itself,
/// not w = ru; the solver converts internally.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub grid: Grid,
    pub problem: ProblemSpec,
    pub t: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

impl SimState {
    pub fn new(grid: Grid, problem: ProblemSpec, t: f64, u: Vec<f64>, ut: Vec<f64>) -> Result<SimState> {
        if u.len() != grid.len() || ut.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field length {} / {} does not match grid size {}",
                u.len(),
                ut.len(),
                grid.len()
            )));
        }
        let state = SimState { grid, problem, t, u, ut };
        state.check_finite()?;
        Ok(state)
    }

    pub fn zeros(grid: Grid, problem: ProblemSpec, t: f64) -> SimState {
        let n = grid.len();
        SimState { grid, problem, t, u: vec![0.0; n], ut: vec![0.0; n] }
    }

    /// Samples a closed-form field pair given as functions of (rho, z).
    pub fn from_fn(
        grid: Grid,
        problem: ProblemSpec,
        t: f64,
        f: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<SimState> {
        let n = grid.len();
        let mut u = Vec::with_capacity(n);
        let mut ut = Vec::with_capacity(n);
        match grid {
            Grid::Radial { n_r, .. } => {
                for i in 0..n_r {
                    let (a, b) = f(grid.r_node(i), 0.0);
                    u.push(a);
                    ut.push(b);
                }
            }
            Grid::Axisym { n_rho, n_z, .. } => {
                for j in 0..n_z {
                    let z = grid.z_node(j);
                    for i in 0..n_rho {
                        let (a, b) = f(grid.rho_node(i), z);
                        u.push(a);
                        ut.push(b);
                    }
                }
            }
        }
        SimState::new(grid, problem, t, u, ut)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.u.iter().chain(self.ut.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { t: self.t })
        }
    }

    /// Storage size of the two fields in bytes.
    pub fn bytes(&self) -> usize {
        2 * self.grid.len() * std::mem::size_of::<f64>()
    }
}

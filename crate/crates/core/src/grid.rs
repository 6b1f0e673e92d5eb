use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Radial1D,
    Axisym2D,
}

/// Cell-centered grid. Radial nodes sit at `(i + 1/2) dr`; axisymmetric
/// nodes at `((i + 1/2) drho, -z_max + (j + 1/2) dz)` with `rho` varying fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    Radial { r_max: f64, n_r: usize },
    Axisym { rho_max: f64, z_max: f64, n_rho: usize, n_z: usize },
}

impl Grid {
    pub fn radial(r_max: f64, n_r: usize) -> Result<Grid> {
        if !(r_max > 0.0 && r_max.is_finite()) || n_r < 8 {
            return Err(Error::InvalidParameter(format!(
                "radial grid needs r_max > 0 and n_r >= 8 (got {r_max}, {n_r})"
            )));
        }
        Ok(Grid::Radial { r_max, n_r })
    }

    pub fn axisym(rho_max: f64, z_max: f64, n_rho: usize, n_z: usize) -> Result<Grid> {
        if !(rho_max > 0.0 && z_max > 0.0 && rho_max.is_finite() && z_max.is_finite()) {
            return Err(Error::InvalidParameter("axisym extents must be positive".into()));
        }
        if n_rho < 8 || n_z < 8 || n_z % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "axisym grid needs n_rho >= 8 and even n_z >= 8 (got {n_rho}, {n_z})"
            )));
        }
        Ok(Grid::Axisym { rho_max, z_max, n_rho, n_z })
    }

    pub fn backend(&self) -> Backend {
        match self {
            Grid::Radial { .. } => Backend::Radial1D,
            Grid::Axisym { .. } => Backend::Axisym2D,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Grid::Radial { n_r, .. } => n_r,
            Grid::Axisym { n_rho, n_z, .. } => n_rho * n_z,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest spacing; the shell profiles use it as their radial step.
    pub fn h(&self) -> f64 {
        match *self {
            Grid::Radial { r_max, n_r } => r_max / n_r as f64,
            Grid::Axisym { .. } => self.drho().min(self.dz()),
        }
    }

    pub fn dr(&self) -> f64 {
        match *self {
            Grid::Radial { r_max, n_r } => r_max / n_r as f64,
            Grid::Axisym { .. } => self.h(),
        }
    }

    pub fn drho(&self) -> f64 {
        match *self {
            Grid::Radial { r_max, n_r } => r_max / n_r as f64,
            Grid::Axisym { rho_max, n_rho, .. } => rho_max / n_rho as f64,
        }
    }

    pub fn dz(&self) -> f64 {
        match *self {
            Grid::Radial { r_max, n_r } => r_max / n_r as f64,
            Grid::Axisym { z_max, n_z, .. } => 2.0 * z_max / n_z as f64,
        }
    }

    /// Radius of the largest centered ball contained in the domain.
    pub fn radius(&self) -> f64 {
        match *self {
            Grid::Radial { r_max, .. } => r_max,
            Grid::Axisym { rho_max, z_max, .. } => rho_max.min(z_max),
        }
    }

    pub fn r_node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr()
    }

    pub fn rho_node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.drho()
    }

    pub fn z_node(&self, j: usize) -> f64 {
        match *self {
            Grid::Radial { .. } => 0.0,
            Grid::Axisym { z_max, .. } => -z_max + (j as f64 + 0.5) * self.dz(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match *self {
            Grid::Radial { n_r, .. } => (n_r, 1),
            Grid::Axisym { n_rho, n_z, .. } => (n_rho, n_z),
        }
    }

    /// Largest stable step for the leapfrog update at the given Courant fraction.
    pub fn dt_for(&self, cfl: f64) -> f64 {
        match self {
            Grid::Radial { .. } => cfl * self.dr(),
            Grid::Axisym { .. } => cfl * self.drho().min(self.dz()) / std::f64::consts::SQRT_2,
        }
    }

    /// Grid with every spacing halved over the same extent.
    pub fn refined(&self) -> Grid {
        match *self {
            Grid::Radial { r_max, n_r } => Grid::Radial { r_max, n_r: 2 * n_r },
            Grid::Axisym { rho_max, z_max, n_rho, n_z } => Grid::Axisym {
                rho_max,
                z_max,
                n_rho: 2 * n_rho,
                n_z: 2 * n_z,
            },
        }
    }
}

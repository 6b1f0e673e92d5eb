//! Derivative fields and point sampling of a single state.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::SimState;

/// Fourth-order centered first derivative of `f` sampled at `(i + 1/2) h`.
/// Below index 0 the field is continued with the given parity (+1 even,
/// -1 odd) about the origin; beyond the last node it is zero.
pub fn d1_centered(f: &[f64], h: f64, parity: f64, out: &mut [f64]) {
    let n = f.len();
    let at = |k: isize| -> f64 {
        if k < 0 {
            parity * f[(-k - 1) as usize]
        } else if (k as usize) < n {
            f[k as usize]
        } else {
            0.0
        }
    };
    let c = 1.0 / (12.0 * h);
    for i in 0..n {
        let k = i as isize;
        if i >= 2 && i + 2 < n {
            out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * c;
        } else {
            out[i] = (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) * c;
        }
    }
}

/// Same stencil on a strided column, zero beyond both ends.
fn d1_column(f: &[f64], start: usize, stride: usize, n: usize, h: f64, out: &mut [f64]) {
    let at = |k: isize| -> f64 {
        if k < 0 || k as usize >= n {
            0.0
        } else {
            f[start + k as usize * stride]
        }
    };
    let c = 1.0 / (12.0 * h);
    for j in 0..n {
        let k = j as isize;
        out[start + j * stride] = (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) * c;
    }
}

/// Spatial derivative fields of one state.
#[derive(Clone, Debug)]
pub enum Derivs {
    /// `ur = ∂ᵣu` and `wr = ∂ᵣ(ru)`.
    Radial { ur: Vec<f64>, wr: Vec<f64> },
    /// Cylindrical `u_rho`, `u_z`.
    Axisym { urho: Vec<f64>, uz: Vec<f64> },
}

impl Derivs {
    pub fn of(state: &SimState) -> Derivs {
        match state.grid {
            Grid::Radial { n_r, .. } => {
                let dr = state.grid.dr();
                let mut ur = vec![0.0; n_r];
                d1_centered(&state.u, dr, 1.0, &mut ur);
                let w: Vec<f64> = (0..n_r).map(|i| state.grid.r_node(i) * state.u[i]).collect();
                let mut wr = vec![0.0; n_r];
                d1_centered(&w, dr, -1.0, &mut wr);
                Derivs::Radial { ur, wr }
            }
            Grid::Axisym { n_rho, n_z, .. } => {
                let (drho, dz) = (state.grid.drho(), state.grid.dz());
                let mut urho = vec![0.0; n_rho * n_z];
                for (row, out) in state.u.chunks(n_rho).zip(urho.chunks_mut(n_rho)) {
                    d1_centered(row, drho, 1.0, out);
                }
                let mut uz = vec![0.0; n_rho * n_z];
                for i in 0..n_rho {
                    d1_column(&state.u, i, n_rho, n_z, dz, &mut uz);
                }
                Derivs::Axisym { urho, uz }
            }
        }
    }
}

/// Values and spherical derivatives at one spacetime point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointSample {
    pub r: f64,
    pub u: f64,
    pub ut: f64,
    pub ur: f64,
    /// ∂_θ u (not divided by r).
    pub uth: f64,
    /// ∂ᵣ(ru) = r·𝐋u.
    pub wr: f64,
}

impl PointSample {
    pub fn blend(a: &PointSample, b: &PointSample, alpha: f64) -> PointSample {
        let m = |x: f64, y: f64| (1.0 - alpha) * x + alpha * y;
        PointSample {
            r: a.r,
            u: m(a.u, b.u),
            ut: m(a.ut, b.ut),
            ur: m(a.ur, b.ur),
            uth: m(a.uth, b.uth),
            wr: m(a.wr, b.wr),
        }
    }

    pub fn l(&self) -> f64 {
        self.wr / self.r
    }

    pub fn l_plus(&self) -> f64 {
        (self.wr + self.r * self.ut) / self.r
    }

    pub fn l_minus(&self) -> f64 {
        (self.wr - self.r * self.ut) / self.r
    }

    /// |∇̸u|².
    pub fn slashed_sq(&self) -> f64 {
        let a = self.uth / self.r;
        a * a
    }
}

/// A state together with its derivative fields, ready for point queries.
pub struct StateSampler<'a> {
    pub state: &'a SimState,
    pub derivs: Derivs,
}

/// Linear-interpolation stencil along one axis of a cell-centered grid:
/// lower index (may be -1 or n-1) and weight of the upper neighbour.
fn bracket(s: f64) -> (isize, f64) {
    let i0 = s.floor();
    (i0 as isize, s - i0)
}

impl<'a> StateSampler<'a> {
    pub fn new(state: &'a SimState) -> StateSampler<'a> {
        StateSampler { state, derivs: Derivs::of(state) }
    }

    /// Samples at radius `r` and polar angle `theta` (ignored for radial grids).
    pub fn sample(&self, r: f64, theta: f64) -> Result<PointSample> {
        let grid = self.state.grid;
        match (&self.derivs, grid) {
            (Derivs::Radial { ur, wr }, Grid::Radial { r_max, n_r }) => {
                if !(0.0..=r_max).contains(&r) {
                    return Err(Error::OutsideGrid { rho: r, z: 0.0 });
                }
                let (i0, a) = bracket(r / grid.dr() - 0.5);
                let pick = |f: &[f64], parity: f64| -> f64 {
                    let at = |k: isize| -> f64 {
                        if k < 0 {
                            parity * f[(-k - 1) as usize]
                        } else if (k as usize) < n_r {
                            f[k as usize]
                        } else {
                            0.0
                        }
                    };
                    (1.0 - a) * at(i0) + a * at(i0 + 1)
                };
                Ok(PointSample {
                    r,
                    u: pick(&self.state.u, 1.0),
                    ut: pick(&self.state.ut, 1.0),
                    ur: pick(ur, -1.0),
                    uth: 0.0,
                    wr: pick(wr, 1.0),
                })
            }
            (Derivs::Axisym { urho, uz }, Grid::Axisym { rho_max, z_max, n_rho, n_z }) => {
                let (st, ct) = theta.sin_cos();
                let rho = r * st;
                let z = r * ct;
                if !(rho >= -1e-14 && rho <= rho_max && z.abs() <= z_max) {
                    return Err(Error::OutsideGrid { rho, z });
                }
                let rho = rho.max(0.0);
                let (i0, a) = bracket(rho / grid.drho() - 0.5);
                let (j0, b) = bracket((z + z_max) / grid.dz() - 0.5);
                let pick = |f: &[f64], parity: f64| -> f64 {
                    let at = |i: isize, j: isize| -> f64 {
                        if j < 0 || j as usize >= n_z || i as usize >= n_rho && i >= 0 {
                            return 0.0;
                        }
                        let row = j as usize * n_rho;
                        if i < 0 {
                            parity * f[row + (-i - 1) as usize]
                        } else {
                            f[row + i as usize]
                        }
                    };
                    (1.0 - b) * ((1.0 - a) * at(i0, j0) + a * at(i0 + 1, j0))
                        + b * ((1.0 - a) * at(i0, j0 + 1) + a * at(i0 + 1, j0 + 1))
                };
                let u = pick(&self.state.u, 1.0);
                let ut = pick(&self.state.ut, 1.0);
                let ur_c = pick(urho, -1.0);
                let uz_c = pick(uz, 1.0);
                let ur = ur_c * st + uz_c * ct;
                Ok(PointSample {
                    r,
                    u,
                    ut,
                    ur,
                    uth: r * (ur_c * ct - uz_c * st),
                    wr: u + r * ur,
                })
            }
            _ => Err(Error::Backend("derivative fields do not match grid".into())),
        }
    }

    /// Value at the spatial origin by even extrapolation, (9 u₀ − u₁)/8 on
    /// the nearest two nodes (averaged over the two rows straddling z = 0).
    pub fn origin_value(&self) -> f64 {
        let u = &self.state.u;
        match self.state.grid {
            Grid::Radial { .. } => (9.0 * u[0] - u[1]) / 8.0,
            Grid::Axisym { n_rho, n_z, .. } => {
                let row_even = |j: usize| (9.0 * u[j * n_rho] - u[j * n_rho + 1]) / 8.0;
                let (lo, hi) = (n_z / 2 - 1, n_z / 2);
                let (lo2, hi2) = (n_z / 2 - 2, n_z / 2 + 1);
                // Same even extrapolation along z.
                (9.0 * (row_even(lo) + row_even(hi)) - (row_even(lo2) + row_even(hi2))) / 16.0
            }
        }
    }
}

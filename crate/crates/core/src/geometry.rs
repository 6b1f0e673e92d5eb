//! Pointwise densities, sphere-integrated profiles and annulus energies.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::GaussLegendre;
use crate::state::{ProblemSpec, SimState};
use crate::stencil::{d1_centered, Derivs, PointSample, StateSampler};

/// Points of the polar rule used on spheres.
pub const THETA_POINTS: usize = 64;

/// Total energy by the midpoint rule on grid cells.
pub fn total_energy(state: &SimState) -> f64 {
    energy_of(&state.grid, &state.problem, &state.u, &state.ut)
}

pub fn energy_of(grid: &Grid, problem: &ProblemSpec, u: &[f64], ut: &[f64]) -> f64 {
    match *grid {
        Grid::Radial { n_r, .. } => {
            let dr = grid.dr();
            let mut ur = vec![0.0; n_r];
            d1_centered(u, dr, 1.0, &mut ur);
            let mut s = 0.0;
            for i in 0..n_r {
                let r = grid.r_node(i);
                s += r * r * (0.5 * ur[i] * ur[i] + 0.5 * ut[i] * ut[i] + problem.potential(u[i]));
            }
            4.0 * PI * dr * s
        }
        Grid::Axisym { n_rho, n_z, .. } => {
            let (drho, dz) = (grid.drho(), grid.dz());
            let rows: Vec<f64> = (0..n_z)
                .into_par_iter()
                .map(|j| {
                    let row = &u[j * n_rho..(j + 1) * n_rho];
                    let mut urho = vec![0.0; n_rho];
                    d1_centered(row, drho, 1.0, &mut urho);
                    let at = |jj: isize, i: usize| -> f64 {
                        if jj < 0 || jj as usize >= n_z {
                            0.0
                        } else {
                            u[jj as usize * n_rho + i]
                        }
                    };
                    let jj = j as isize;
                    let mut s = 0.0;
                    for i in 0..n_rho {
                        let uz = (at(jj - 2, i) - 8.0 * at(jj - 1, i) + 8.0 * at(jj + 1, i) - at(jj + 2, i))
                            / (12.0 * dz);
                        let v = ut[j * n_rho + i];
                        s += grid.rho_node(i)
                            * (0.5 * (urho[i] * urho[i] + uz * uz) + 0.5 * v * v + problem.potential(row[i]));
                    }
                    s
                })
                .collect();
            2.0 * PI * drho * dz * rows.iter().sum::<f64>()
        }
    }
}

/// Sphere integrals at one radius r, each carrying the r² area factor
/// except `u2`: e.g. `lp2 = ∫_{S²} |𝐋₊u|² r² dΩ`, `u2 = ∫_{S²} u² dΩ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShellSample {
    pub lp2: f64,
    pub lm2: f64,
    /// |∇̸u|².
    pub ang: f64,
    /// |u|^{p+1} without the coupling factor.
    pub pot: f64,
    pub ur2: f64,
    pub ut2: f64,
    pub u2: f64,
    /// ∂ᵣu ∂ₜu.
    pub urut: f64,
    /// |u|^{2(p−1)}.
    pub st: f64,
}

impl ShellSample {
    pub fn lerp(a: &ShellSample, b: &ShellSample, alpha: f64) -> ShellSample {
        let m = |x: f64, y: f64| x + alpha * (y - x);
        ShellSample {
            lp2: m(a.lp2, b.lp2),
            lm2: m(a.lm2, b.lm2),
            ang: m(a.ang, b.ang),
            pot: m(a.pot, b.pot),
            ur2: m(a.ur2, b.ur2),
            ut2: m(a.ut2, b.ut2),
            u2: m(a.u2, b.u2),
            urut: m(a.urut, b.urut),
            st: m(a.st, b.st),
        }
    }

    fn add_point(&mut self, w: f64, s: &PointSample, problem: &ProblemSpec) {
        let r2 = s.r * s.r;
        let lp = s.wr + s.r * s.ut;
        let lm = s.wr - s.r * s.ut;
        self.lp2 += w * lp * lp;
        self.lm2 += w * lm * lm;
        self.ang += w * s.uth * s.uth;
        self.pot += w * r2 * problem.pow_p1(s.u);
        self.ur2 += w * r2 * s.ur * s.ur;
        self.ut2 += w * r2 * s.ut * s.ut;
        self.u2 += w * s.u * s.u;
        self.urut += w * r2 * s.ur * s.ut;
        self.st += w * r2 * problem.abs_pow(s.u, 2.0 * (problem.p - 1.0));
    }

    /// Inward energy density integrated over the sphere.
    pub fn inward(&self, problem: &ProblemSpec) -> f64 {
        0.25 * self.lp2 + 0.25 * self.ang + 0.5 * problem.lambda() * self.pot / (problem.p + 1.0)
    }

    pub fn outward(&self, problem: &ProblemSpec) -> f64 {
        0.25 * self.lm2 + 0.25 * self.ang + 0.5 * problem.lambda() * self.pot / (problem.p + 1.0)
    }

    pub fn full(&self, problem: &ProblemSpec) -> f64 {
        0.5 * (self.ur2 + self.ang + self.ut2) + problem.lambda() * self.pot / (problem.p + 1.0)
    }

    /// Morawetz density times r²: ((p−1)/(2(p+1)))|u|^{p+1} + ½|∇̸u|².
    pub fn morawetz(&self, problem: &ProblemSpec) -> f64 {
        let p = problem.p;
        problem.lambda() * (p - 1.0) / (2.0 * (p + 1.0)) * self.pot + 0.5 * self.ang
    }
}

/// Radial profile of sphere integrals at nodes `(k + 1/2) h`, with the
/// origin value of u.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellProfile {
    pub t: f64,
    pub h: f64,
    pub origin_u: f64,
    pub nodes: Vec<ShellSample>,
}

impl ShellProfile {
    pub fn radius(&self) -> f64 {
        self.nodes.len() as f64 * self.h
    }

    /// Linear interpolation between nodes (extrapolation inside the first cell).
    pub fn at(&self, r: f64) -> ShellSample {
        let n = self.nodes.len();
        let s = r / self.h - 0.5;
        if s >= (n - 1) as f64 {
            return if s <= n as f64 - 0.5 { self.nodes[n - 1] } else { ShellSample::default() };
        }
        let k = s.floor().max(0.0) as usize;
        let k = k.min(n - 2);
        ShellSample::lerp(&self.nodes[k], &self.nodes[k + 1], s - k as f64)
    }

    /// ∫_a^b f(r, g(r)) dr by the midpoint rule on profile cells; a cell
    /// partly inside [a, b] contributes its overlap length times the
    /// integrand at the overlap midpoint.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64, &ShellSample) -> f64) -> f64 {
        let h = self.h;
        let b = b.min(self.radius());
        if !(b > a) {
            return 0.0;
        }
        let a = a.max(0.0);
        let k0 = (a / h).floor() as usize;
        let k1 = ((b / h).ceil() as usize).min(self.nodes.len());
        let mut s = 0.0;
        for k in k0..k1 {
            let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
            let (ca, cb) = (lo.max(a), hi.min(b));
            if cb <= ca {
                continue;
            }
            if ca == lo && cb == hi {
                s += h * f((k as f64 + 0.5) * h, &self.nodes[k]);
            } else {
                let m = 0.5 * (ca + cb);
                s += (cb - ca) * f(m, &self.at(m));
            }
        }
        s
    }

    pub fn blend(a: &ShellProfile, b: &ShellProfile, alpha: f64) -> ShellProfile {
        ShellProfile {
            t: a.t + alpha * (b.t - a.t),
            h: a.h,
            origin_u: a.origin_u + alpha * (b.origin_u - a.origin_u),
            nodes: a.nodes.iter().zip(&b.nodes).map(|(x, y)| ShellSample::lerp(x, y, alpha)).collect(),
        }
    }
}

/// Builds the shell profile of a state. Radial states use the cell values
/// directly; axisymmetric states are resampled on spheres with a
/// Gauss–Legendre rule in cos θ.
pub fn shell_profile(state: &SimState) -> ShellProfile {
    let sampler = StateSampler::new(state);
    let problem = state.problem;
    let h = state.grid.h();
    let nodes = match (&sampler.derivs, state.grid) {
        (Derivs::Radial { ur, wr }, Grid::Radial { n_r, .. }) => (0..n_r)
            .map(|i| {
                let r = state.grid.r_node(i);
                let s = PointSample { r, u: state.u[i], ut: state.ut[i], ur: ur[i], uth: 0.0, wr: wr[i] };
                let mut g = ShellSample::default();
                g.add_point(4.0 * PI, &s, &problem);
                g
            })
            .collect(),
        (Derivs::Axisym { .. }, Grid::Axisym { .. }) => {
            let rule = GaussLegendre::new(THETA_POINTS);
            let angles: Vec<(f64, f64)> =
                rule.nodes.iter().zip(&rule.weights).map(|(c, w)| (c.acos(), 2.0 * PI * w)).collect();
            let n = (state.grid.radius() / h).floor() as usize;
            (0..n)
                .into_par_iter()
                .map(|k| {
                    let r = (k as f64 + 0.5) * h;
                    let mut g = ShellSample::default();
                    for &(theta, w) in &angles {
                        let s = sampler.sample(r, theta).expect("sphere inside grid");
                        g.add_point(w, &s, &problem);
                    }
                    g
                })
                .collect()
        }
        _ => unreachable!("derivative fields match the grid"),
    };
    ShellProfile { t: state.t, h, origin_u: sampler.origin_value(), nodes }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusEnergies {
    pub full: f64,
    pub inward: f64,
    pub outward: f64,
}

/// (E, E₋, E₊) over r₁ < |x| < r₂.
pub fn energies(state: &SimState, r1: f64, r2: f64) -> Result<AnnulusEnergies> {
    if !(r1 >= 0.0 && r2 > r1 && r2 <= state.grid.radius() + 1e-12) {
        return Err(Error::InvalidParameter(format!("invalid annulus ({r1}, {r2})")));
    }
    Ok(profile_energies(&shell_profile(state), &state.problem, r1, r2))
}

pub fn profile_energies(profile: &ShellProfile, problem: &ProblemSpec, r1: f64, r2: f64) -> AnnulusEnergies {
    AnnulusEnergies {
        full: profile.integrate(r1, r2, |_, g| g.full(problem)),
        inward: profile.integrate(r1, r2, |_, g| g.inward(problem)),
        outward: profile.integrate(r1, r2, |_, g| g.outward(problem)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityKind {
    Full,
    Inward,
    Outward,
    Potential,
    Angular,
}

fn node_samples(state: &SimState) -> Vec<PointSample> {
    let sampler = StateSampler::new(state);
    let grid = state.grid;
    match (&sampler.derivs, grid) {
        (Derivs::Radial { ur, wr }, Grid::Radial { n_r, .. }) => (0..n_r)
            .map(|i| PointSample { r: grid.r_node(i), u: state.u[i], ut: state.ut[i], ur: ur[i], uth: 0.0, wr: wr[i] })
            .collect(),
        (Derivs::Axisym { urho, uz }, Grid::Axisym { n_rho, n_z, .. }) => {
            let mut out = Vec::with_capacity(n_rho * n_z);
            for j in 0..n_z {
                let z = grid.z_node(j);
                for i in 0..n_rho {
                    let rho = grid.rho_node(i);
                    let k = j * n_rho + i;
                    let r = (rho * rho + z * z).sqrt();
                    let (st, ct) = (rho / r, z / r);
                    let ur = urho[k] * st + uz[k] * ct;
                    let u = state.u[k];
                    out.push(PointSample {
                        r,
                        u,
                        ut: state.ut[k],
                        ur,
                        uth: r * (urho[k] * ct - uz[k] * st),
                        wr: u + r * ur,
                    });
                }
            }
            out
        }
        _ => unreachable!("derivative fields match the grid"),
    }
}

/// 𝐋u at the grid nodes.
pub fn apply_l(state: &SimState) -> Vec<f64> {
    node_samples(state).iter().map(|s| s.l()).collect()
}

/// (𝐋₊u, 𝐋₋u) at the grid nodes.
pub fn apply_lpm(state: &SimState) -> (Vec<f64>, Vec<f64>) {
    let s = node_samples(state);
    (s.iter().map(|s| s.l_plus()).collect(), s.iter().map(|s| s.l_minus()).collect())
}

/// |∇̸u|² at the grid nodes.
pub fn slashed_grad_sq(state: &SimState) -> Vec<f64> {
    node_samples(state).iter().map(|s| s.slashed_sq()).collect()
}

/// |∂ᵣu|² at the grid nodes.
pub fn radial_grad_sq(state: &SimState) -> Vec<f64> {
    node_samples(state).iter().map(|s| s.ur * s.ur).collect()
}

/// Energy density of the given kind at the grid nodes.
pub fn density(state: &SimState, kind: DensityKind) -> Vec<f64> {
    let pr = state.problem;
    let q = pr.lambda() * 1.0 / (pr.p + 1.0);
    node_samples(state)
        .iter()
        .map(|s| {
            let pot = q * pr.pow_p1(s.u);
            match kind {
                DensityKind::Full => 0.5 * (s.ur * s.ur + s.slashed_sq() + s.ut * s.ut) + pot,
                DensityKind::Inward => 0.25 * s.l_plus().powi(2) + 0.25 * s.slashed_sq() + 0.5 * pot,
                DensityKind::Outward => 0.25 * s.l_minus().powi(2) + 0.25 * s.slashed_sq() + 0.5 * pot,
                DensityKind::Potential => pot,
                DensityKind::Angular => s.slashed_sq(),
            }
        })
        .collect()
}

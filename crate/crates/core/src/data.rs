//! Initial data families, weighted energy functionals and the smooth cutoff.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Relative amplitude below which data are hard-truncated to zero.
pub const TRUNCATION: f64 = 1e-12;

/// Data and their cylindrical gradient at one point (ρ, z).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DataSample {
    pub u0: f64,
    pub u0_rho: f64,
    pub u0_z: f64,
    pub u1: f64,
}

/// Axisymmetric initial data (u₀, u₁) given in closed form.
pub trait InitialData: Send + Sync + std::fmt::Debug {
    fn sample(&self, rho: f64, z: f64) -> DataSample;
    /// Both u₀ and u₁ vanish for |x| > support_radius.
    fn support_radius(&self) -> f64;
    fn is_radial(&self) -> bool;
    /// Radii where the data are not smooth enough for a single quadrature cell.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngularProfile {
    Monopole,
    ZTilt,
}

/// A·exp(−|x − z₀e_z|²/σ²) (monopole) or A(1 + z/2)·exp(−|x|²/σ²) (z-tilt), u₁ = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub width: f64,
    pub offset: f64,
    pub profile: AngularProfile,
    cut: f64,
}

fn bisect(lo: f64, hi: f64, f: impl Fn(f64) -> bool) -> f64 {
    // f(lo) false, f(hi) true.
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

pub fn gaussian_data(amplitude: f64, width: f64, offset: f64, profile: AngularProfile) -> Result<Gaussian> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) || !(width > 0.0 && width.is_finite()) || !offset.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gaussian needs A >= 0 and sigma > 0 (got A = {amplitude}, sigma = {width})"
        )));
    }
    if profile == AngularProfile::ZTilt && offset != 0.0 {
        return Err(Error::InvalidParameter("z-tilt profile is centered at the origin".into()));
    }
    let s2 = width * width;
    let cut = match profile {
        AngularProfile::Monopole => width * (1.0 / TRUNCATION).ln().sqrt(),
        AngularProfile::ZTilt => {
            // Peak of (1 + z/2)e^{-z²/σ²} on the axis.
            let zp = -1.0 + (1.0 + 0.5 * s2).sqrt();
            let peak = (1.0 + 0.5 * zp) * (-zp * zp / s2).exp();
            let env = |r: f64| (1.0 + 0.5 * r) * (-r * r / s2).exp();
            bisect(zp.max(0.0), 100.0 * width + 10.0, |r| env(r) < TRUNCATION * peak)
        }
    };
    Ok(Gaussian { amplitude, width, offset, profile, cut })
}

impl InitialData for Gaussian {
    fn sample(&self, rho: f64, z: f64) -> DataSample {
        let s2 = self.width * self.width;
        match self.profile {
            AngularProfile::Monopole => {
                let dz = z - self.offset;
                let d2 = rho * rho + dz * dz;
                if d2 > self.cut * self.cut || self.amplitude == 0.0 {
                    return DataSample::default();
                }
                let g = self.amplitude * (-d2 / s2).exp();
                DataSample { u0: g, u0_rho: -2.0 * rho / s2 * g, u0_z: -2.0 * dz / s2 * g, u1: 0.0 }
            }
            AngularProfile::ZTilt => {
                let d2 = rho * rho + z * z;
                if d2 > self.cut * self.cut || self.amplitude == 0.0 {
                    return DataSample::default();
                }
                let e = self.amplitude * (-d2 / s2).exp();
                let a = 1.0 + 0.5 * z;
                DataSample {
                    u0: a * e,
                    u0_rho: -2.0 * rho / s2 * a * e,
                    u0_z: (0.5 - 2.0 * z / s2 * a) * e,
                    u1: 0.0,
                }
            }
        }
    }

    fn support_radius(&self) -> f64 {
        self.cut + self.offset.abs()
    }

    fn is_radial(&self) -> bool {
        self.profile == AngularProfile::Monopole && self.offset == 0.0
    }
}

/// exp(−1/s) for s > 0, else 0, and its derivative.
fn mollifier(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0)
    } else {
        let e = (-1.0 / s).exp();
        (e, e / (s * s))
    }
}

/// Radial transition φ(ρ) with φ = 0 for ρ ≤ 1/2 and φ = 1 for ρ ≥ 1, and φ'.
pub fn cutoff_profile(rho: f64) -> (f64, f64) {
    let x = 2.0 * rho - 1.0;
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, da) = mollifier(x);
    let (b, db) = mollifier(1.0 - x);
    let s = a + b;
    let phi = a / s;
    let dphi = (da * b + a * db) / (s * s);
    (phi, 2.0 * dphi)
}

/// (𝐏ᵣu₀, 𝐏ᵣu₁) with (𝐏ᵣf)(x) = φ(x/r) f(x).
#[derive(Clone, Debug)]
pub struct Cutoff {
    pub inner: Arc<dyn InitialData>,
    pub r: f64,
}

pub fn cutoff_data(data: Arc<dyn InitialData>, r: f64) -> Result<Cutoff> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("cutoff radius must be positive (got {r})")));
    }
    Ok(Cutoff { inner: data, r })
}

impl InitialData for Cutoff {
    fn sample(&self, rho: f64, z: f64) -> DataSample {
        let d = (rho * rho + z * z).sqrt();
        let (phi, dphi) = cutoff_profile(d / self.r);
        if phi == 0.0 {
            return DataSample::default();
        }
        let s = self.inner.sample(rho, z);
        let g = dphi / self.r;
        let (er, ez) = if d > 0.0 { (rho / d, z / d) } else { (0.0, 0.0) };
        DataSample {
            u0: phi * s.u0,
            u0_rho: phi * s.u0_rho + g * er * s.u0,
            u0_z: phi * s.u0_z + g * ez * s.u0,
            u1: phi * s.u1,
        }
    }

    fn support_radius(&self) -> f64 {
        self.inner.support_radius()
    }

    fn is_radial(&self) -> bool {
        self.inner.is_radial()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.inner.breakpoints();
        b.push(0.5 * self.r);
        b.push(self.r);
        b
    }
}

/// Data values in spherical components at (r, θ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataPoint {
    pub r: f64,
    pub cos_theta: f64,
    pub u0: f64,
    pub u1: f64,
    /// ∂ᵣu₀.
    pub ur: f64,
    /// |∇̸u₀|.
    pub slashed: f64,
}

impl DataPoint {
    /// 𝐋u₀ = ∂ᵣu₀ + u₀/r.
    pub fn l(&self) -> f64 {
        self.ur + self.u0 / self.r
    }
    pub fn l_plus(&self) -> f64 {
        self.l() + self.u1
    }
    pub fn l_minus(&self) -> f64 {
        self.l() - self.u1
    }
    pub fn grad_sq(&self) -> f64 {
        self.ur * self.ur + self.slashed * self.slashed
    }
}

/// Quadrature of densities of the data over spherical shells.
#[derive(Clone, Debug)]
pub struct DataQuadrature {
    rule: GaussLegendre,
    pub r_cells: usize,
    pub theta_cells: usize,
    pub tol: f64,
}

impl Default for DataQuadrature {
    fn default() -> Self {
        DataQuadrature { rule: GaussLegendre::new(8), r_cells: 48, theta_cells: 8, tol: 1e-8 }
    }
}

impl DataQuadrature {
    fn eval(
        &self,
        data: &dyn InitialData,
        r_a: f64,
        r_b: f64,
        r_cells: usize,
        theta_cells: usize,
        f: &dyn Fn(&DataPoint) -> f64,
    ) -> f64 {
        let mut breaks = vec![r_a];
        let mut bp: Vec<f64> = data.breakpoints().into_iter().filter(|&b| b > r_a && b < r_b).collect();
        bp.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.extend(bp);
        breaks.push(r_b);
        let mut rs = self.rule.composite(&breaks, r_cells);
        if r_a == 0.0 {
            // Weights like |x|^κ are not smooth at the origin: grade the first cell.
            let first = (breaks[1] - breaks[0]) / r_cells as f64;
            rs.retain(|&(r, _)| r > first);
            let edges: Vec<f64> = (0..=40).rev().map(|k| first * 0.5f64.powi(k)).collect();
            let mut graded = vec![0.0];
            graded.extend(edges);
            rs.extend(self.rule.composite(&graded, 1));
        }
        let cs: Vec<(f64, f64)> = if data.is_radial() {
            vec![(0.0, 2.0)]
        } else {
            let edges: Vec<f64> = (0..=theta_cells).map(|k| -1.0 + 2.0 * k as f64 / theta_cells as f64).collect();
            self.rule.composite(&edges, 1)
        };
        let mut total = 0.0;
        for &(r, wr) in &rs {
            let mut shell = 0.0;
            for &(c, wc) in &cs {
                shell += wc * f(&point(data, r, c));
            }
            total += wr * r * r * shell;
        }
        2.0 * PI * total
    }

    /// ∫_{r_a<|x|<r_b} f dx, checked against a doubled-resolution evaluation.
    pub fn integrate(
        &self,
        data: &dyn InitialData,
        r_a: f64,
        r_b: f64,
        f: &dyn Fn(&DataPoint) -> f64,
    ) -> Result<f64> {
        let coarse = self.eval(data, r_a, r_b, self.r_cells, self.theta_cells, f);
        let fine = self.eval(data, r_a, r_b, 2 * self.r_cells, 2 * self.theta_cells, f);
        let scale = fine.abs().max(coarse.abs());
        let change = (fine - coarse).abs();
        if scale > 0.0 && change > self.tol * scale && change > 1e-300 {
            return Err(Error::Quadrature { change: change / scale, tol: self.tol });
        }
        Ok(fine)
    }

    /// ∫_{|x|=R} f dσ.
    pub fn sphere(&self, data: &dyn InitialData, radius: f64, f: &dyn Fn(&DataPoint) -> f64) -> f64 {
        let cs: Vec<(f64, f64)> = if data.is_radial() {
            vec![(0.0, 2.0)]
        } else {
            let n = 2 * self.theta_cells;
            let edges: Vec<f64> = (0..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
            self.rule.composite(&edges, 1)
        };
        let s: f64 = cs.iter().map(|&(c, w)| w * f(&point(data, radius, c))).sum();
        2.0 * PI * radius * radius * s
    }
}

/// Data at (r, cos θ) in spherical components.
pub fn point(data: &dyn InitialData, r: f64, cos_theta: f64) -> DataPoint {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let s = data.sample(r * sin_theta, r * cos_theta);
    DataPoint {
        r,
        cos_theta,
        u0: s.u0,
        u1: s.u1,
        ur: s.u0_rho * sin_theta + s.u0_z * cos_theta,
        slashed: s.u0_rho * cos_theta - s.u0_z * sin_theta,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnergyReport {
    pub energy: f64,
    pub e_kappa: f64,
    pub k: f64,
    pub e_10: f64,
    pub kappa: f64,
}

pub fn weighted_energies(data: &dyn InitialData, p: f64, kappa: f64) -> Result<WeightedEnergyReport> {
    weighted_energies_with(&DataQuadrature::default(), data, p, kappa)
}

pub fn weighted_energies_with(
    q: &DataQuadrature,
    data: &dyn InitialData,
    p: f64,
    kappa: f64,
) -> Result<WeightedEnergyReport> {
    if !(3.0..=5.0).contains(&p) {
        return Err(Error::ExponentOutOfRange(p));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa must be >= 0 (got {kappa})")));
    }
    let r0 = data.support_radius();
    let pot = move |u: f64| u.abs().powf(p + 1.0);
    let full = move |d: &DataPoint| 0.5 * d.grad_sq() + 0.5 * d.u1 * d.u1 + pot(d.u0) / (p + 1.0);
    let energy = q.integrate(data, 0.0, r0, &full)?;
    let e_kappa = q.integrate(data, 0.0, r0, &|d| (1.0 + d.r.powf(kappa)) * full(d))?;
    let k = q.integrate(data, 0.0, r0, &|d| d.r.powf(kappa) * inward_density(d, p))?;
    let e_10 = q.integrate(data, 0.0, r0, &|d| {
        d.r * (0.5 * d.grad_sq() + 0.5 * d.u1 * d.u1 + 0.25 * d.u0.powi(4))
    })?;
    Ok(WeightedEnergyReport { energy, e_kappa, k, e_10, kappa })
}

/// e₋ = ¼|𝐋₊u|² + ¼|∇̸u|² + |u|^{p+1}/(2(p+1)).
pub fn inward_density(d: &DataPoint, p: f64) -> f64 {
    let lp = d.l_plus();
    0.25 * lp * lp + 0.25 * d.slashed * d.slashed + d.u0.abs().powf(p + 1.0) / (2.0 * (p + 1.0))
}

/// e₊ = ¼|𝐋₋u|² + ¼|∇̸u|² + |u|^{p+1}/(2(p+1)).
pub fn outward_density(d: &DataPoint, p: f64) -> f64 {
    let lm = d.l_minus();
    0.25 * lm * lm + 0.25 * d.slashed * d.slashed + d.u0.abs().powf(p + 1.0) / (2.0 * (p + 1.0))
}

/// K₁ = ∫ a(|x|) e₋(x, 0) dx for a weight a.
pub fn inward_weighted(data: &dyn InitialData, p: f64, a: &dyn Fn(f64) -> f64) -> Result<f64> {
    let q = DataQuadrature::default();
    q.integrate(data, 0.0, data.support_radius(), &|d| a(d.r) * inward_density(d, p))
}

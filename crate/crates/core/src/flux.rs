//! Surface fluxes through slices, cylinders and light cones, the Morawetz
//! integral, the origin measure μ and the balance ledgers of polygonal regions.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{shell_profile, AnnulusEnergies, ShellProfile, ShellSample};
use crate::region::{RegionSpec, SegmentKind};
use crate::state::{ProblemSpec, SimState};
use crate::trace::{locate_uniform, SpacetimeTrace};

/// Time series of shell profiles, the input of every flux computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShellTrace {
    pub problem: ProblemSpec,
    pub h: f64,
    pub profiles: Vec<ShellProfile>,
}

impl ShellTrace {
    pub fn new(problem: ProblemSpec, h: f64) -> ShellTrace {
        ShellTrace { problem, h, profiles: Vec::new() }
    }

    pub fn from_trace(trace: &SpacetimeTrace) -> ShellTrace {
        let first = &trace.states[0];
        let profiles = trace.states.par_iter().map(shell_profile).collect();
        ShellTrace { problem: first.problem, h: first.grid.h(), profiles }
    }

    /// Appends the profile of the next stored state.
    pub fn push(&mut self, state: &SimState) {
        self.profiles.push(shell_profile(state));
    }

    pub fn t_first(&self) -> f64 {
        self.profiles[0].t
    }

    pub fn t_last(&self) -> f64 {
        self.profiles[self.profiles.len() - 1].t
    }

    pub fn times(&self) -> Vec<f64> {
        self.profiles.iter().map(|p| p.t).collect()
    }

    pub fn radius(&self) -> f64 {
        self.profiles[0].radius()
    }

    fn check_window(&self, t1: f64, t2: f64) -> Result<()> {
        locate_uniform(t1, self.t_first(), self.t_last(), self.profiles.len())?;
        locate_uniform(t2, self.t_first(), self.t_last(), self.profiles.len())?;
        Ok(())
    }

    /// f(t) with three-point Lagrange interpolation in time between stored
    /// profiles (linear when only two are stored).
    pub fn eval_at(&self, t: f64, f: &dyn Fn(&ShellProfile, f64) -> f64) -> Result<f64> {
        let n = self.profiles.len();
        let (j, a) = locate_uniform(t, self.t_first(), self.t_last(), n)?;
        let lo = f(&self.profiles[j], t);
        if a == 0.0 {
            return Ok(lo);
        }
        let hi = f(&self.profiles[j + 1], t);
        if n < 3 {
            return Ok(lo + a * (hi - lo));
        }
        // Nodes at offsets 0, 1, 2 (or −1, 0, 1 at the end of the trace).
        let (k, x) = if j + 2 < n { (j, a) } else { (j - 1, a + 1.0) };
        let (f0, f1, f2) = if k == j { (lo, hi, f(&self.profiles[j + 2], t)) } else { (f(&self.profiles[k], t), lo, hi) };
        Ok(f0 * (x - 1.0) * (x - 2.0) / 2.0 - f1 * x * (x - 2.0) + f2 * x * (x - 1.0) / 2.0)
    }

    /// Profile interpolated to time `t`.
    pub fn profile_at(&self, t: f64) -> Result<ShellProfile> {
        let (j, a) = locate_uniform(t, self.t_first(), self.t_last(), self.profiles.len())?;
        if a == 0.0 {
            return Ok(self.profiles[j].clone());
        }
        Ok(ShellProfile::blend(&self.profiles[j], &self.profiles[j + 1], a))
    }

    /// Trapezoid nodes on [ta, tb]: the endpoints and every stored time inside.
    fn nodes(&self, ta: f64, tb: f64, extra: &[f64]) -> Vec<f64> {
        let mut ts = vec![ta];
        let eps = 1e-9 * (tb - ta).abs().max(1.0);
        ts.extend(self.profiles.iter().map(|p| p.t).filter(|&t| t > ta + eps && t < tb - eps));
        ts.extend(extra.iter().copied().filter(|&t| t > ta + eps && t < tb - eps));
        ts.push(tb);
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() <= eps);
        ts
    }

    /// ∫_{ta}^{tb} f(t) dt by the trapezoid rule on the stored times.
    pub fn integrate_time(&self, ta: f64, tb: f64, f: &dyn Fn(&ShellProfile, f64) -> f64) -> Result<f64> {
        if tb <= ta {
            return Ok(0.0);
        }
        self.check_window(ta, tb)?;
        let ts = self.nodes(ta, tb, &[]);
        let vals: Vec<f64> = ts.iter().map(|&t| self.eval_at(t, f)).collect::<Result<_>>()?;
        Ok(trapezoid(&ts, &vals))
    }

    /// Cumulative ∫_{ta}^{t} f at each node t of [ta, tb].
    pub fn cumulative(
        &self,
        ta: f64,
        tb: f64,
        f: &dyn Fn(&ShellProfile, f64) -> f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_window(ta, tb)?;
        let ts = self.nodes(ta, tb, &[]);
        let vals: Vec<f64> = ts.iter().map(|&t| self.eval_at(t, f)).collect::<Result<_>>()?;
        let mut acc = vec![0.0; ts.len()];
        for i in 1..ts.len() {
            acc[i] = acc[i - 1] + 0.5 * (ts[i] - ts[i - 1]) * (vals[i] + vals[i - 1]);
        }
        Ok((ts, acc))
    }

    /// (E, E₋, E₊) over the annulus a < |x| < b at time t.
    pub fn slice_energies(&self, t: f64, a: f64, b: f64) -> Result<AnnulusEnergies> {
        let pr = self.problem;
        Ok(AnnulusEnergies {
            full: self.eval_at(t, &|p, _| p.integrate(a, b, |_, g| g.full(&pr)))?,
            inward: self.eval_at(t, &|p, _| p.integrate(a, b, |_, g| g.inward(&pr)))?,
            outward: self.eval_at(t, &|p, _| p.integrate(a, b, |_, g| g.outward(&pr)))?,
        })
    }
}

pub fn trapezoid(ts: &[f64], vals: &[f64]) -> f64 {
    ts.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Light-cone fluxes. The subscript names the energy (− inward, + outward),
/// the superscript the cone (− backward |x| + t = s, + forward t − |x| = τ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// Q₋⁻: inward energy through a backward cone.
    InwardBackward,
    /// Q₊⁻: outward energy through a backward cone.
    OutwardBackward,
    /// Q₋⁺: inward energy through a forward cone.
    InwardForward,
    /// Q₊⁺: outward energy through a forward cone.
    OutwardForward,
}

impl ConeKind {
    pub fn is_backward(self) -> bool {
        matches!(self, ConeKind::InwardBackward | ConeKind::OutwardBackward)
    }
}

/// Per unit time, sphere-integrated cone integrand with the cone's dS and
/// prefactor folded in.
fn cone_integrand(kind: ConeKind, g: &ShellSample, pr: &ProblemSpec) -> f64 {
    let pot = pr.lambda() * g.pot / (pr.p + 1.0);
    match kind {
        ConeKind::InwardBackward | ConeKind::OutwardForward => pot + 0.5 * g.ang,
        ConeKind::OutwardBackward => 0.5 * g.lm2,
        ConeKind::InwardForward => 0.5 * g.lp2,
    }
}

/// Tip truncation radius in units of the profile spacing.
pub const TIP_CELLS: f64 = 2.0;

/// Q over the part of the cone with apex parameter `apex` (s or τ) between
/// t₁ and t₂; the piece within `TIP_CELLS·h` of the tip is dropped.
pub fn cone_flux(trace: &ShellTrace, kind: ConeKind, apex: f64, t1: f64, t2: f64) -> Result<f64> {
    if t2 < t1 {
        return Err(Error::InvalidParameter(format!("cone window [{t1}, {t2}] reversed")));
    }
    let tip = TIP_CELLS * trace.h;
    let (ta, tb) = if kind.is_backward() {
        if t2 > apex + 1e-12 {
            return Err(Error::InvalidParameter(format!("backward cone needs t2 <= s ({t2} > {apex})")));
        }
        (t1, t2.min(apex - tip))
    } else {
        if t1 < apex - 1e-12 {
            return Err(Error::InvalidParameter(format!("forward cone needs t1 >= tau ({t1} < {apex})")));
        }
        (t1.max(apex + tip), t2)
    };
    let radius = |t: f64| if kind.is_backward() { apex - t } else { t - apex };
    let rmax = radius(ta).max(radius(tb));
    if rmax > trace.radius() + 1e-9 {
        return Err(Error::OutsideGrid { rho: rmax, z: 0.0 });
    }
    if tb <= ta {
        return Ok(0.0);
    }
    let pr = trace.problem;
    trace.integrate_time(ta, tb, &|p, t| cone_integrand(kind, &p.at(radius(t)), &pr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergySide {
    Inward,
    Outward,
}

/// Cylinder integrand with outward normal pointing away from the axis.
fn cylinder_integrand(side: EnergySide, g: &ShellSample, pr: &ProblemSpec) -> f64 {
    let half_pot = 0.5 * pr.lambda() * g.pot / (pr.p + 1.0);
    match side {
        EnergySide::Inward => -0.25 * g.lp2 + 0.25 * g.ang + half_pot,
        EnergySide::Outward => 0.25 * g.lm2 - 0.25 * g.ang - half_pot,
    }
}

/// Flux through {|x| = r₀, t₁ < t < t₂}; `outward` selects the normal
/// pointing away from the axis, otherwise the value is negated.
pub fn cylinder_flux(trace: &ShellTrace, r0: f64, t1: f64, t2: f64, side: EnergySide, outward: bool) -> Result<f64> {
    let limit = TIP_CELLS * trace.h;
    if r0 < limit - 1e-12 {
        return Err(Error::BelowResolution { r: r0, limit });
    }
    if r0 > trace.radius() {
        return Err(Error::OutsideGrid { rho: r0, z: 0.0 });
    }
    let pr = trace.problem;
    let v = trace.integrate_time(t1, t2, &|p, _| cylinder_integrand(side, &p.at(r0), &pr))?;
    Ok(if outward { v } else { -v })
}

/// 𝓜 over the region, by slicing in t and integrating the profile over the
/// radial sections; the trapezoid nodes include every vertex time.
pub fn morawetz_integral(trace: &ShellTrace, region: &RegionSpec) -> Result<f64> {
    let pr = trace.problem;
    region_integral(trace, region, &|r, g| g.morawetz(&pr) / r)
}

/// ∫∫_Ω f(r, g(r, t)) dr dt for a region of the (r, t) half-plane.
pub fn region_integral(trace: &ShellTrace, region: &RegionSpec, f: &dyn Fn(f64, &ShellSample) -> f64) -> Result<f64> {
    region_integral_t(trace, region, &|r, _, g| f(r, g))
}

/// As [`region_integral`] with the integrand also depending on t.
pub fn region_integral_t(
    trace: &ShellTrace,
    region: &RegionSpec,
    f: &dyn Fn(f64, f64, &ShellSample) -> f64,
) -> Result<f64> {
    let (lo, hi) = region.t_range();
    trace.check_window(lo, hi)?;
    if region.r_max() > trace.radius() + 1e-9 {
        return Err(Error::OutsideGrid { rho: region.r_max(), z: 0.0 });
    }
    let ts = trace.nodes(lo, hi, &region.vertex_times());
    let eps = 1e-9 * (hi - lo).max(1.0);
    let vals: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let ts_slice = if t >= hi - eps { hi - eps } else { t };
            let intervals = region.slice_at(ts_slice);
            trace.eval_at(t, &|p, t| intervals.iter().map(|&(a, b)| p.integrate(a, b, |r, g| f(r, t, g))).sum())
        })
        .collect::<Result<_>>()?;
    Ok(trapezoid(&ts, &vals))
}

/// Cumulative measure t ↦ μ([t₁, t]) by two estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub times: Vec<f64>,
    /// π⁻¹ ∫ of the origin density |u(0, t)|²·π, i.e. ∫|u(0,t)|² dt.
    pub p_origin: Vec<f64>,
    pub p_cylinder: Vec<f64>,
    pub radii: [f64; 3],
    /// |Δ| / max over the two totals at t₂.
    pub discrepancy: f64,
}

impl MuEstimate {
    pub fn total_origin(&self) -> f64 {
        *self.p_origin.last().unwrap()
    }
    pub fn total_cylinder(&self) -> f64 {
        *self.p_cylinder.last().unwrap()
    }
}

/// μ([t₁, t₂]) from the origin values only.
pub fn mu_origin(trace: &ShellTrace, t1: f64, t2: f64) -> Result<f64> {
    trace.integrate_time(t1, t2, &|p, _| p.origin_u * p.origin_u)
}

/// ∫ a(t) dμ(t) over [t₁, t₂] with the origin density.
pub fn mu_weighted(trace: &ShellTrace, t1: f64, t2: f64, a: &dyn Fn(f64) -> f64) -> Result<f64> {
    trace.integrate_time(t1, t2, &|p, t| a(t) * p.origin_u * p.origin_u)
}

pub fn estimate_mu(trace: &ShellTrace, t1: f64, t2: f64) -> Result<MuEstimate> {
    let (times, p_origin) = trace.cumulative(t1, t2, &|p, _| p.origin_u * p.origin_u)?;
    let pr = trace.problem;
    let r = 4.0 * trace.h;
    let radii = [r, 2.0 * r, 4.0 * r];
    let mut cyl = Vec::new();
    for &rk in &radii {
        let (_, c) = trace.cumulative(t1, t2, &|p, _| -cylinder_integrand(EnergySide::Inward, &p.at(rk), &pr) / PI)?;
        cyl.push(c);
    }
    let p_cylinder: Vec<f64> = (0..times.len())
        .map(|i| {
            let d1 = 2.0 * cyl[0][i] - cyl[1][i];
            let d2 = 2.0 * cyl[1][i] - cyl[2][i];
            (4.0 * d1 - d2) / 3.0
        })
        .collect();
    let (a, b) = (*p_origin.last().unwrap(), *p_cylinder.last().unwrap());
    let scale = a.abs().max(b.abs());
    let discrepancy = if scale > 0.0 { (a - b).abs() / scale } else { 0.0 };
    Ok(MuEstimate { times, p_origin, p_cylinder, radii, discrepancy })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub segment_id: usize,
    pub kind: SegmentKind,
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub value: f64,
}

/// Balance of Σ segment fluxes + μ term + Morawetz term, which vanishes for
/// exact solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxLedger {
    pub side: EnergySide,
    pub entries: Vec<LedgerEntry>,
    /// +πμ on the axis for the inward energy, −πμ for the outward energy.
    pub mu_term: f64,
    /// +𝓜(Ω) for the inward energy, −𝓜(Ω) for the outward energy.
    pub morawetz_term: f64,
    pub residual: f64,
    /// Profile spacing of the trace the ledger was computed on.
    pub h: f64,
}

impl FluxLedger {
    pub fn segment_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.value).sum()
    }
}

/// Flux of the chosen energy through one directed segment (outward normal).
pub fn segment_flux(trace: &ShellTrace, kind: SegmentKind, a: (f64, f64), b: (f64, f64), side: EnergySide) -> Result<f64> {
    use SegmentKind::*;
    let (t1, t2) = (a.1.min(b.1), a.1.max(b.1));
    let (r1, r2) = (a.0.min(b.0), a.0.max(b.0));
    let slice = |t: f64| -> Result<f64> {
        let e = trace.slice_energies(t, r1, r2)?;
        Ok(match side {
            EnergySide::Inward => e.inward,
            EnergySide::Outward => e.outward,
        })
    };
    let cone = |backward: bool| -> Result<f64> {
        let (kind, apex) = match (backward, side) {
            (true, EnergySide::Inward) => (ConeKind::InwardBackward, a.0 + a.1),
            (true, EnergySide::Outward) => (ConeKind::OutwardBackward, a.0 + a.1),
            (false, EnergySide::Inward) => (ConeKind::InwardForward, a.1 - a.0),
            (false, EnergySide::Outward) => (ConeKind::OutwardForward, a.1 - a.0),
        };
        cone_flux(trace, kind, apex, t1, t2)
    };
    match kind {
        TimeSliceUp => slice(a.1),
        TimeSliceDown => Ok(-slice(a.1)?),
        CylinderOutward => cylinder_flux(trace, a.0, t1, t2, side, true),
        CylinderInward => cylinder_flux(trace, a.0, t1, t2, side, false),
        BackwardConeUp => cone(true),
        BackwardConeDown => Ok(-cone(true)?),
        ForwardConeUp => cone(false),
        ForwardConeDown => Ok(-cone(false)?),
        TAxis => Ok(0.0),
    }
}

pub fn flux_balance(trace: &ShellTrace, region: &RegionSpec, side: EnergySide) -> Result<FluxLedger> {
    let entries: Vec<LedgerEntry> = region
        .segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(LedgerEntry { segment_id: i, kind: s.kind, a: s.a, b: s.b, value: segment_flux(trace, s.kind, s.a, s.b, side)? })
        })
        .collect::<Result<_>>()?;
    let mut mu = 0.0;
    for s in region.segments.iter().filter(|s| s.kind == SegmentKind::TAxis) {
        let (t1, t2) = s.t_range();
        mu += PI * mu_origin(trace, t1, t2)?;
    }
    let m = morawetz_integral(trace, region)?;
    let (mu_term, morawetz_term) = match side {
        EnergySide::Inward => (mu, m),
        EnergySide::Outward => (-mu, -m),
    };
    let residual = entries.iter().map(|e| e.value).sum::<f64>() + mu_term + morawetz_term;
    Ok(FluxLedger { side, entries, mu_term, morawetz_term, residual, h: trace.h })
}

/// Classical energy flux (e, −∂ₜu∇u) through one directed segment.
pub fn classical_segment_flux(trace: &ShellTrace, kind: SegmentKind, a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    use SegmentKind::*;
    let pr = trace.problem;
    let (t1, t2) = (a.1.min(b.1), a.1.max(b.1));
    let (r1, r2) = (a.0.min(b.0), a.0.max(b.0));
    let cyl = |r0: f64| trace.integrate_time(t1, t2, &|p, _| -p.at(r0).urut);
    let tip = TIP_CELLS * trace.h;
    let cone = |backward: bool| -> Result<f64> {
        let apex = if backward { a.0 + a.1 } else { a.1 - a.0 };
        let (ta, tb) = if backward { (t1, t2.min(apex - tip)) } else { (t1.max(apex + tip), t2) };
        if tb <= ta {
            return Ok(0.0);
        }
        trace.integrate_time(ta, tb, &|p, t| {
            if backward {
                let g = p.at(apex - t);
                g.full(&pr) - g.urut
            } else {
                let g = p.at(t - apex);
                g.full(&pr) + g.urut
            }
        })
    };
    match kind {
        TimeSliceUp => Ok(trace.slice_energies(a.1, r1, r2)?.full),
        TimeSliceDown => Ok(-trace.slice_energies(a.1, r1, r2)?.full),
        CylinderOutward => cyl(a.0),
        CylinderInward => Ok(-cyl(a.0)?),
        BackwardConeUp => cone(true),
        BackwardConeDown => Ok(-cone(true)?),
        ForwardConeUp => cone(false),
        ForwardConeDown => Ok(-cone(false)?),
        TAxis => Ok(0.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyClosure {
    /// Σ inward segments + Σ outward segments.
    pub split_sum: f64,
    /// μ and 𝓜 terms of the two ledgers added (zero by construction).
    pub cancelled_terms: f64,
    /// Σ of the classical energy fluxes over the same boundary.
    pub classical_sum: f64,
    /// split_sum − classical_sum.
    pub residual: f64,
}

/// Adds the inward and outward ledgers of a region and compares with the
/// classical energy balance on the same boundary.
pub fn full_energy_closure(trace: &ShellTrace, region: &RegionSpec) -> Result<EnergyClosure> {
    let inward = flux_balance(trace, region, EnergySide::Inward)?;
    let outward = flux_balance(trace, region, EnergySide::Outward)?;
    let split_sum = inward.segment_sum() + outward.segment_sum();
    let cancelled_terms = inward.mu_term + outward.mu_term + inward.morawetz_term + outward.morawetz_term;
    let classical_sum = region
        .segments
        .iter()
        .map(|s| classical_segment_flux(trace, s.kind, s.a, s.b))
        .sum::<Result<f64>>()?;
    Ok(EnergyClosure { split_sum, cancelled_terms, classical_sum, residual: split_sum - classical_sum })
}

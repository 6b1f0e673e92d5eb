//! Aggregate checks over a shell trace: Morawetz bounds, weighted Morawetz,
//! decay fits, inner-cone trends, scattering-norm accumulators and the
//! measure/flux bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{self, ConeKind, ShellTrace};
use crate::region::RegionSpec;

/// Relative slack allowed for discretization error in bound checks.
pub const BOUND_TOL: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
    pub provenance: String,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, provenance: impl Into<String>) -> BoundCheck {
        BoundCheck::with_tol(name, lhs, rhs, BOUND_TOL, provenance)
    }

    pub fn with_tol(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64, provenance: impl Into<String>) -> BoundCheck {
        let margin = rhs - lhs;
        let pass = lhs.is_finite() && rhs.is_finite() && margin >= -tol * rhs.abs();
        BoundCheck { name: name.into(), lhs, rhs, margin, tol, pass, provenance: provenance.into() }
    }
}

/// Total energy of the first profile of the trace.
pub fn trace_energy(trace: &ShellTrace) -> f64 {
    let pr = trace.problem;
    let p = &trace.profiles[0];
    p.integrate(0.0, p.radius(), |_, g| g.full(&pr))
}

fn window(trace: &ShellTrace) -> RegionSpec {
    RegionSpec::slab(trace.t_first(), trace.t_last(), trace.radius()).expect("trace window is a valid slab")
}

/// Windowed left side of the global Morawetz inequality at radius R, checked
/// against 2E.
pub fn morawetz_bound_check(trace: &ShellTrace, radius: f64, energy: f64) -> Result<BoundCheck> {
    let lhs = morawetz_lhs(trace, radius, trace.t_first(), trace.t_last())?;
    Ok(BoundCheck::new(format!("morawetz_R{radius}"), lhs, 2.0 * energy, "global Morawetz inequality, <= 2E"))
}

pub fn morawetz_lhs(trace: &ShellTrace, radius: f64, t1: f64, t2: f64) -> Result<f64> {
    if !(radius > 0.0 && radius < trace.radius()) {
        return Err(Error::OutsideGrid { rho: radius, z: 0.0 });
    }
    let pr = trace.problem;
    let (p, lam) = (pr.p, pr.lambda());
    let inner = trace.integrate_time(t1, t2, &|prof, _| {
        prof.integrate(0.0, radius, |_, g| {
            0.5 * (g.ur2 + g.ang) + 0.5 * g.ut2 + lam * (p - 2.0) / (p + 1.0) * g.pot
        })
    })? / radius;
    let sphere = 0.5 * trace.integrate_time(t1, t2, &|prof, _| prof.at(radius).u2)?;
    let outer = trace.integrate_time(t1, t2, &|prof, _| {
        prof.integrate(radius, prof.radius(), |r, g| (lam * (p - 1.0) / (p + 1.0) * g.pot + g.ang) / r)
    })?;
    Ok(inner + sphere + outer)
}

/// π∫t^κ dμ + ∫∫(|x|+t)^κ[((p−1−2γ)/(2(p+1)))|u|^{p+1} + ((1−γ)/2)|∇̸u|²]/|x|
/// over the window, against K₁ = ∫|x|^κ e₋(x, 0) dx.
pub fn weighted_morawetz_check(trace: &ShellTrace, kappa: f64, gamma: f64, k1: f64) -> Result<BoundCheck> {
    let pr = trace.problem;
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!("kappa must lie in (0, 1) (got {kappa})")));
    }
    if pr.p >= 5.0 {
        return Err(Error::InvalidParameter("weighted Morawetz needs p < 5".into()));
    }
    let lhs = weighted_morawetz_lhs(trace, &|r| r.powf(kappa), gamma)?;
    Ok(BoundCheck::new(format!("weighted_morawetz_kappa{kappa}"), lhs, k1, "weighted Morawetz, a(r) = r^kappa, <= K1"))
}

pub fn weighted_morawetz_lhs(trace: &ShellTrace, a: &dyn Fn(f64) -> f64, gamma: f64) -> Result<f64> {
    let pr = trace.problem;
    let p = pr.p;
    let c1 = pr.lambda() * (p - 1.0 - 2.0 * gamma) / (2.0 * (p + 1.0));
    let c2 = 0.5 * (1.0 - gamma);
    let (t1, t2) = (trace.t_first(), trace.t_last());
    let mu = PI * flux::mu_weighted(trace, t1, t2, a)?;
    let bulk = flux::region_integral_t(trace, &window(trace), &|r, t, g| a(r + t) * (c1 * g.pot + c2 * g.ang) / r)?;
    Ok(mu + bulk)
}

/// p = 3, γ = 1, a(r) = r: π∫t dμ + ∫∫(t/|x|)(¼|u|⁴ + ½|∇̸u|²) ≤ K₁.
pub fn weighted_morawetz_p3(trace: &ShellTrace, k1: f64) -> Result<BoundCheck> {
    let pr = trace.problem;
    if pr.p != 3.0 {
        return Err(Error::InvalidParameter(format!("the gamma = 1 variant needs p = 3 (got {})", pr.p)));
    }
    let (t1, t2) = (trace.t_first(), trace.t_last());
    let mu = PI * flux::mu_weighted(trace, t1, t2, &|t| t)?;
    let lam = pr.lambda();
    let bulk = flux::region_integral_t(trace, &window(trace), &|r, t, g| t / r * (0.25 * lam * g.pot + 0.5 * g.ang))?;
    Ok(BoundCheck::new("weighted_morawetz_p3", mu + bulk, k1, "p = 3, gamma = 1 weighted Morawetz, <= K1"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t0: f64,
    pub t1: f64,
    /// E₋ ≈ C t^(−α).
    pub alpha: f64,
    pub amplitude: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub samples: usize,
    pub skipped: usize,
    /// sup over the window of t^κ E₋(t).
    pub sup_weighted: f64,
    pub kappa: f64,
}

/// Least-squares fit of log E₋ against log t on [t0, t1].
pub fn decay_fit(times: &[f64], values: &[f64], t0: f64, t1: f64, kappa: f64) -> Result<DecayFit> {
    if t0 < 1.0 || t1 <= t0 {
        return Err(Error::InvalidParameter(format!("decay window [{t0}, {t1}] must satisfy 1 <= t0 < t1")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut skipped = 0;
    let mut sup_weighted: f64 = 0.0;
    for (&t, &e) in times.iter().zip(values) {
        if t < t0 || t > t1 {
            continue;
        }
        sup_weighted = sup_weighted.max(t.powf(kappa) * e);
        if e > 0.0 {
            xs.push(t.ln());
            ys.push(e.ln());
        } else {
            skipped += 1;
        }
    }
    if xs.len() < 10 {
        return Err(Error::InvalidParameter(format!("decay fit needs >= 10 positive samples (got {})", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit {
        t0,
        t1,
        alpha: -slope,
        amplitude: icpt.exp(),
        residual,
        samples: xs.len(),
        skipped,
        sup_weighted,
        kappa,
    })
}

/// sup_{[t0, T]} t^κ E₋(t) for each window end T, normalized by K.
pub fn weighted_sup_series(times: &[f64], values: &[f64], kappa: f64, t0: f64, ends: &[f64], k: f64) -> Vec<f64> {
    ends.iter()
        .map(|&end| {
            let sup = times
                .iter()
                .zip(values)
                .filter(|(t, _)| **t >= t0 && **t <= end + 1e-12)
                .map(|(t, e)| t.powf(kappa) * e)
                .fold(0.0, f64::max);
            if k > 0.0 {
                sup / k
            } else {
                sup
            }
        })
        .collect()
}

/// First-quarter versus last-quarter means of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub first_quarter_mean: f64,
    pub last_quarter_mean: f64,
    pub ratio: f64,
    pub conclusive: bool,
    pub pass: bool,
}

pub fn quarter_trend(values: &[f64], required_ratio: f64) -> TrendCheck {
    let n = values.len();
    let q = n / 4;
    if q < 2 {
        return TrendCheck { first_quarter_mean: 0.0, last_quarter_mean: 0.0, ratio: f64::NAN, conclusive: false, pass: false };
    }
    let first = values[..q].iter().sum::<f64>() / q as f64;
    let last = values[n - q..].iter().sum::<f64>() / q as f64;
    let ratio = if first > 0.0 { last / first } else if last > 0.0 { f64::INFINITY } else { 0.0 };
    TrendCheck { first_quarter_mean: first, last_quarter_mean: last, ratio, conclusive: true, pass: last <= required_ratio * first }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerConeSeries {
    pub c: f64,
    pub times: Vec<f64>,
    pub inward: Vec<f64>,
    pub outward: Vec<f64>,
    pub trend: TrendCheck,
}

/// E∓(t; 0, c t) at the stored times with c t ≥ 4h.
pub fn inner_cone_energy(trace: &ShellTrace, c: f64) -> Result<InnerConeSeries> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("c must lie in (0, 1) (got {c})")));
    }
    let pr = trace.problem;
    let mut times = Vec::new();
    let mut inward = Vec::new();
    let mut outward = Vec::new();
    for p in &trace.profiles {
        let r = c * p.t;
        if r < 4.0 * trace.h {
            continue;
        }
        times.push(p.t);
        inward.push(p.integrate(0.0, r, |_, g| g.inward(&pr)));
        outward.push(p.integrate(0.0, r, |_, g| g.outward(&pr)));
    }
    let trend = quarter_trend(&inward, 0.5);
    Ok(InnerConeSeries { c, times, inward, outward, trend })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub full: Vec<f64>,
    pub inward: Vec<f64>,
    pub outward: Vec<f64>,
}

/// E, E₋, E₊ over all space at every stored time.
pub fn energy_series(trace: &ShellTrace) -> EnergySeries {
    let pr = trace.problem;
    let mut s = EnergySeries { times: vec![], full: vec![], inward: vec![], outward: vec![] };
    for p in &trace.profiles {
        let r = p.radius();
        s.times.push(p.t);
        s.full.push(p.integrate(0.0, r, |_, g| g.full(&pr)));
        s.inward.push(p.integrate(0.0, r, |_, g| g.inward(&pr)));
        s.outward.push(p.integrate(0.0, r, |_, g| g.outward(&pr)));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monotonicity {
    /// Largest increase of E₋ between consecutive samples.
    pub max_inward_increase: f64,
    /// Largest decrease of E₊ between consecutive samples.
    pub max_outward_decrease: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn monotonicity(series: &EnergySeries, tol: f64) -> Monotonicity {
    let up = series.inward.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let down = series.outward.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    Monotonicity { max_inward_increase: up, max_outward_decrease: down, tol, pass: up <= tol && down <= tol }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringNorms {
    pub q: f64,
    /// q exceeds (p+1)/κ for the κ supplied.
    pub q_in_regime: bool,
    pub times: Vec<f64>,
    /// ‖u(t)‖_{L^{p+1}}.
    pub lp1_norm: Vec<f64>,
    /// ∫∫|u|^{2(p−1)} over each stored interval divided by its length
    /// (first entry 0).
    pub st_rate: Vec<f64>,
    /// ‖u‖_{L^q L^{p+1}} over the window.
    pub lq_lp1: f64,
    /// ‖u‖_{L^{2(p−1)}_{t,x}} over the window.
    pub st_norm: f64,
}

impl ScatteringNorms {
    /// ∫_a^b ‖u(t)‖_{p+1}^q dt.
    pub fn lq_increment(&self, a: f64, b: f64) -> f64 {
        let (ts, vs): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.lp1_norm)
            .filter(|(t, _)| **t >= a - 1e-12 && **t <= b + 1e-12)
            .map(|(t, n)| (*t, n.powf(self.q)))
            .unzip();
        flux::trapezoid(&ts, &vs)
    }

    /// ∫_a^b ∫|u|^{2(p−1)} dx dt, each stored interval counted by its overlap
    /// with [a, b].
    pub fn st_increment(&self, a: f64, b: f64) -> f64 {
        let mut s = 0.0;
        for i in 1..self.times.len() {
            let overlap = self.times[i].min(b) - self.times[i - 1].max(a);
            if overlap > 0.0 {
                s += self.st_rate[i] * overlap;
            }
        }
        s
    }
}

pub fn scattering_norms(trace: &ShellTrace, q: f64, kappa: f64) -> Result<ScatteringNorms> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must be >= 1 (got {q})")));
    }
    let pr = trace.problem;
    let p = pr.p;
    let times = trace.times();
    let lp1: Vec<f64> = trace
        .profiles
        .iter()
        .map(|prof| prof.integrate(0.0, prof.radius(), |_, g| g.pot).powf(1.0 / (p + 1.0)))
        .collect();
    let st_density: Vec<f64> =
        trace.profiles.iter().map(|prof| prof.integrate(0.0, prof.radius(), |_, g| g.st)).collect();
    let mut st_rate = vec![0.0; times.len()];
    for i in 1..times.len() {
        st_rate[i] = 0.5 * (st_density[i] + st_density[i - 1]);
    }
    let lq = flux::trapezoid(&times, &lp1.iter().map(|n| n.powf(q)).collect::<Vec<_>>());
    let st = flux::trapezoid(&times, &st_density);
    Ok(ScatteringNorms {
        q,
        q_in_regime: kappa > 0.0 && q > (p + 1.0) / kappa,
        times,
        lp1_norm: lp1,
        st_rate,
        lq_lp1: lq.powf(1.0 / q),
        st_norm: st.powf(1.0 / (2.0 * (p - 1.0))),
    })
}

/// Q₋⁻(s; t_first, s) and Q₊⁻(s; t_first, s) for s in the window.
pub fn backward_fluxes(trace: &ShellTrace, samples: usize) -> Result<Vec<(f64, f64, f64)>> {
    let (t1, t2) = (trace.t_first(), trace.t_last());
    (1..=samples)
        .map(|i| {
            let s = t1 + (t2 - t1) * i as f64 / samples as f64;
            Ok((
                s,
                flux::cone_flux(trace, ConeKind::InwardBackward, s, t1, s)?,
                flux::cone_flux(trace, ConeKind::OutwardBackward, s, t1, s)?,
            ))
        })
        .collect()
}

/// Least-squares slope of Q₋⁻(s) over the last half of the window, with the
/// noise allowance `tol · max Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxDecayTrend {
    pub s: Vec<f64>,
    pub q: Vec<f64>,
    pub slope: f64,
    pub pass: bool,
}

pub fn flux_decay_trend(trace: &ShellTrace, samples: usize, tol: f64) -> Result<FluxDecayTrend> {
    let all = backward_fluxes(trace, samples)?;
    let t_mid = 0.5 * (trace.t_first() + trace.t_last());
    let (s, q): (Vec<f64>, Vec<f64>) = all.iter().filter(|x| x.0 >= t_mid).map(|x| (x.0, x.1)).unzip();
    let n = s.len() as f64;
    let ms = s.iter().sum::<f64>() / n;
    let mq = q.iter().sum::<f64>() / n;
    let sxx: f64 = s.iter().map(|x| (x - ms).powi(2)).sum();
    let sxy: f64 = s.iter().zip(&q).map(|(x, y)| (x - ms) * (y - mq)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let qmax = q.iter().cloned().fold(0.0, f64::max);
    let span = s.last().copied().unwrap_or(0.0) - s.first().copied().unwrap_or(0.0);
    let pass = slope * span <= tol * qmax;
    Ok(FluxDecayTrend { s, q, slope, pass })
}

/// ∫_{r₁}^{r₂} Q₋⁻(t₀+r; t₀, t₀+r) dr against r₂·𝓜(cone shell).
pub fn lift_of_r_check(trace: &ShellTrace, t0: f64, r1: f64, r2: f64, points: usize, slack: f64) -> Result<BoundCheck> {
    let rs: Vec<f64> = (0..points).map(|i| r1 + (r2 - r1) * i as f64 / (points - 1) as f64).collect();
    let qs: Vec<f64> = rs
        .iter()
        .map(|&r| flux::cone_flux(trace, ConeKind::InwardBackward, t0 + r, t0, t0 + r))
        .collect::<Result<_>>()?;
    let lhs = flux::trapezoid(&rs, &qs);
    let shell = RegionSpec::cone_shell(t0, r1, r2)?;
    let rhs = r2 * flux::morawetz_integral(trace, &shell)?;
    Ok(BoundCheck::with_tol(format!("lift_of_r_t{t0}_r{r1}-{r2}"), lhs, rhs, slack, "lift-of-r inequality"))
}

/// πμ(window) ≤ E, every sampled Q ≤ E, forward pairs Q₋⁺ + Q₊⁺ ≤ E, and
/// the windowed identity E₋(t₀) = πμ([t₀,T]) + 𝓜(ℝ³×[t₀,T]) + E₋(T).
pub fn measure_and_flux_bounds(trace: &ShellTrace, energy: f64, samples: usize) -> Result<Vec<BoundCheck>> {
    let (t1, t2) = (trace.t_first(), trace.t_last());
    let mut out = Vec::new();
    let mu = PI * flux::mu_origin(trace, t1, t2)?;
    out.push(BoundCheck::new("pi_mu_window", mu, energy, "pi mu(R) <= E"));
    let mut worst_backward: f64 = 0.0;
    for (_, qm, qp) in backward_fluxes(trace, samples)? {
        worst_backward = worst_backward.max(qm).max(qp);
    }
    out.push(BoundCheck::new("q_backward_max", worst_backward, energy, "every Q bounded by E"));
    let mut worst_forward: f64 = 0.0;
    for i in 0..samples {
        let tau = t1 + (t2 - t1) * i as f64 / samples as f64;
        let a = flux::cone_flux(trace, ConeKind::InwardForward, tau, tau, t2)?;
        let b = flux::cone_flux(trace, ConeKind::OutwardForward, tau, tau, t2)?;
        worst_forward = worst_forward.max(a + b);
    }
    out.push(BoundCheck::new("q_forward_pair_max", worst_forward, energy, "Q-^+(tau) + Q+^+(tau) <= E"));
    let slab = window(trace);
    let m = flux::morawetz_integral(trace, &slab)?;
    let e_first = trace.slice_energies(t1, 0.0, trace.radius())?.inward;
    let e_last = trace.slice_energies(t2, 0.0, trace.radius())?.inward;
    let defect = (e_first - (mu + m + e_last)).abs();
    out.push(BoundCheck::new("inward_representation_defect", defect, BOUND_TOL * energy, "E-(t0) = pi mu + M + E-(T), windowed"));
    Ok(out)
}

/// Two-sided budget πμ([−T, T]) + 𝓜(ℝ³×[−T, T]) + E₋(T) + E₊(−T) = E from a
/// forward trace and the trace of the time-reversed data (u₀, −u₁); the
/// negative-time half of u is read off the reversed evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedBudget {
    pub pi_mu: f64,
    pub morawetz: f64,
    pub tails: f64,
    pub energy: f64,
    pub residual: f64,
}

pub fn two_sided_budget(forward: &ShellTrace, backward: &ShellTrace) -> Result<TwoSidedBudget> {
    let mut pi_mu = 0.0;
    let mut morawetz = 0.0;
    let mut tails = 0.0;
    for tr in [forward, backward] {
        let (t1, t2) = (tr.t_first(), tr.t_last());
        pi_mu += PI * flux::mu_origin(tr, t1, t2)?;
        morawetz += flux::morawetz_integral(tr, &window(tr))?;
        tails += tr.slice_energies(t2, 0.0, tr.radius())?.inward;
    }
    let energy = trace_energy(forward);
    Ok(TwoSidedBudget { pi_mu, morawetz, tails, energy, residual: pi_mu + morawetz + tails - energy })
}

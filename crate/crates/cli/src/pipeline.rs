//! A single run: evolve, stream the shell trace, compute every diagnostic and
//! write the artifact directory.

use std::fs;
use std::path::Path;

use conewave::analysis::*;
use conewave::data::{weighted_energies, InitialData};
use conewave::flux::{estimate_mu, flux_balance, full_energy_closure, EnergyClosure, EnergySide, FluxLedger, MuEstimate, ShellTrace};
use conewave::region::{RegionSpec, SegmentKind};
use conewave::solver::{evolve_with, EnergyDriftReport};
use conewave::{Backend, Coupling, Error};
use serde::{Deserialize, Serialize};

use crate::config::{Plan, RunConfig, TimeReversed};
use crate::output::{sha256_hex, write_csv, write_json, Manifest};
use crate::CliError;

/// Cone-law and slab residual tolerance, relative to the reference energy.
pub const BALANCE_TOL: f64 = 1e-2;
pub const MU_AGREEMENT: f64 = 0.05;
/// Monotonicity allowance for E₋ and E₊, relative to E.
pub const MONO_TOL: f64 = 1e-4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionLedger {
    pub region_id: usize,
    pub vertices: Vec<(f64, f64)>,
    pub cone: bool,
    /// E₋ on the lowest slice of a cone, E otherwise; residuals are judged
    /// against it.
    pub reference: f64,
    pub inward: FluxLedger,
    pub outward: FluxLedger,
    pub closure: EnergyClosure,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuSummary {
    pub total_origin: f64,
    pub total_cylinder: f64,
    pub discrepancy: f64,
    pub radii: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub config_sha256: String,
    pub backend: Backend,
    pub p: f64,
    pub coupling: Coupling,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub stored_profiles: usize,
    pub energy: f64,
    pub energy_drift: f64,
    pub quadrature_drift: f64,
    /// max over stored times of |E₋ + E₊ − E| / E.
    pub decomposition_defect: f64,
    pub monotonicity: Monotonicity,
    pub mu: MuSummary,
    pub inner_cone: TrendCheck,
    pub decay_fit: Option<DecayFit>,
    pub weighted_energy_k: Option<f64>,
    pub lq_lp1: f64,
    pub st_norm: f64,
    pub q_in_regime: bool,
    pub max_cone_residual: Option<f64>,
    pub slab_residual: f64,
    pub two_sided: Option<TwoSidedBudget>,
    pub checks: Vec<BoundCheck>,
    pub notes: Vec<String>,
    pub pass: bool,
}

fn stream(plan: &Plan, data: &dyn InitialData) -> Result<(ShellTrace, EnergyDriftReport), CliError> {
    let mut trace = ShellTrace::new(plan.problem, plan.grid.h());
    let rep = evolve_with(data, plan.problem, plan.grid, &plan.solver, |s| {
        trace.push(s);
        Ok(())
    })?;
    Ok((trace, rep))
}

fn ledger(trace: &ShellTrace, id: usize, region: &RegionSpec, energy: f64) -> Result<RegionLedger, Error> {
    let (t0, _) = region.t_range();
    let kinds: Vec<SegmentKind> = region.segments.iter().map(|s| s.kind).collect();
    let is_cone = kinds == [SegmentKind::TimeSliceDown, SegmentKind::BackwardConeUp, SegmentKind::TAxis];
    let reference = if is_cone { trace.slice_energies(t0, 0.0, region.r_max())?.inward } else { energy };
    Ok(RegionLedger {
        region_id: id,
        vertices: region.vertices.clone(),
        cone: is_cone,
        reference,
        inward: flux_balance(trace, region, EnergySide::Inward)?,
        outward: flux_balance(trace, region, EnergySide::Outward)?,
        closure: full_energy_closure(trace, region)?,
    })
}

/// Runs one configuration and writes its artifacts into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let plan = cfg.plan()?;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let (trace, drift) = stream(&plan, &*plan.data)?;
    let dg = &cfg.diagnostics;
    let pr = plan.problem;
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    let series = energy_series(&trace);
    let energy = series.full[0];
    let decomposition_defect = (0..series.times.len())
        .map(|i| (series.inward[i] + series.outward[i] - series.full[i]).abs() / energy.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let decomposition_tol = match plan.grid.backend() {
        Backend::Radial1D => 1e-5,
        Backend::Axisym2D => 1e-3,
    };
    checks.push(BoundCheck::with_tol("decomposition", decomposition_defect, decomposition_tol, 0.0, "E- + E+ = E at every stored time"));
    let mono = monotonicity(&series, MONO_TOL * energy);
    checks.push(BoundCheck::with_tol("inward_energy_nonincreasing", mono.max_inward_increase, mono.tol, 0.0, "E-(t) nonincreasing"));
    checks.push(BoundCheck::with_tol("outward_energy_nondecreasing", mono.max_outward_decrease, mono.tol, 0.0, "E+(t) nondecreasing"));

    let inner: Vec<f64> = trace
        .profiles
        .iter()
        .map(|p| p.integrate(0.0, dg.inner_c * p.t, |_, g| g.inward(&pr)))
        .collect();
    let rows: Vec<[f64; 5]> =
        (0..series.times.len()).map(|i| [series.times[i], series.full[i], series.inward[i], series.outward[i], inner[i]]).collect();
    write_csv(&out.join("energy.csv"), &["t", "E", "E_minus", "E_plus", "E_minus_inner_c"], &rows)?;

    let (t1, t2) = (trace.t_first(), trace.t_last());
    let mu: MuEstimate = estimate_mu(&trace, t1, t2)?;
    let rows: Vec<[f64; 3]> = (0..mu.times.len()).map(|i| [mu.times[i], mu.p_origin[i], mu.p_cylinder[i]]).collect();
    write_csv(&out.join("mu.csv"), &["t", "P_origin", "P_cylinder"], &rows)?;
    let origin_dip = mu.p_origin.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    checks.push(BoundCheck::with_tol("mu_estimator_agreement", mu.discrepancy, MU_AGREEMENT, 0.0, "origin and cylinder estimates of mu agree"));
    checks.push(BoundCheck::with_tol("mu_nondecreasing", origin_dip, 0.0, 0.0, "P(t) = mu([t1, t]) nondecreasing"));

    let norms = scattering_norms(&trace, dg.q, dg.kappa)?;
    let rows: Vec<[f64; 3]> = (0..norms.times.len())
        .map(|i| {
            let dt = if i == 0 { 0.0 } else { norms.times[i] - norms.times[i - 1] };
            [norms.times[i], norms.lp1_norm[i], norms.st_rate[i] * dt]
        })
        .collect();
    write_csv(&out.join("norms.csv"), &["t", "Lp1_norm", "st_norm_increment"], &rows)?;

    let mut ledgers = Vec::new();
    if dg.ledgers {
        for (id, region) in plan.regions.iter().enumerate() {
            ledgers.push(ledger(&trace, id, region, energy)?);
        }
        let slab = RegionSpec::slab(t1, t2, trace.radius())?;
        ledgers.push(ledger(&trace, plan.regions.len(), &slab, energy)?);
    }
    let mut max_cone_residual: Option<f64> = None;
    for l in &ledgers {
        let rel = l.inward.residual.abs().max(l.outward.residual.abs()) / l.reference.max(f64::MIN_POSITIVE);
        checks.push(BoundCheck::with_tol(format!("balance_region_{}", l.region_id), rel, BALANCE_TOL, 0.0, "flux ledger residual / reference energy"));
        if l.cone {
            max_cone_residual = Some(max_cone_residual.unwrap_or(0.0).max(rel));
        }
    }
    let slab_residual = ledgers.last().map(|l| l.inward.residual.abs() / energy.max(f64::MIN_POSITIVE)).unwrap_or(0.0);
    write_json(&out.join("ledgers.json"), &ledgers)?;
    let mut writer = csv::Writer::from_path(out.join("ledgers.csv")).map_err(|e| CliError::Io(e.to_string()))?;
    writer
        .write_record(["region_id", "segment_id", "type", "value", "mu_term", "morawetz_term", "residual"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    for l in &ledgers {
        for side in [&l.inward, &l.outward] {
            let tag = format!("{}-{:?}", l.region_id, side.side).to_lowercase();
            for e in &side.entries {
                writer
                    .write_record([
                        tag.clone(),
                        e.segment_id.to_string(),
                        format!("{:?}", e.kind),
                        e.value.to_string(),
                        side.mu_term.to_string(),
                        side.morawetz_term.to_string(),
                        side.residual.to_string(),
                    ])
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
        }
    }
    writer.flush().map_err(|e| CliError::Io(e.to_string()))?;

    let defocusing = pr.coupling == Coupling::Defocusing;
    if dg.morawetz && defocusing {
        for &r in &dg.morawetz_radii {
            checks.push(morawetz_bound_check(&trace, r, energy)?);
        }
    }
    checks.extend(measure_and_flux_bounds(&trace, energy, dg.flux_samples)?);

    let mut weighted_energy_k = None;
    if dg.weighted_morawetz && defocusing {
        if dg.kappa < 1.0 && pr.p < 5.0 {
            let k = weighted_energies(&*plan.data, pr.p, dg.kappa)?.k;
            weighted_energy_k = Some(k);
            checks.push(weighted_morawetz_check(&trace, dg.kappa, dg.kappa, k)?);
        } else {
            notes.push(format!("weighted Morawetz with kappa = {} skipped: needs kappa < 1 and p < 5", dg.kappa));
        }
        if pr.p == 3.0 {
            let k1 = weighted_energies(&*plan.data, 3.0, 1.0)?.k;
            checks.push(weighted_morawetz_p3(&trace, k1)?);
        }
    }

    let inner_cone = inner_cone_energy(&trace, dg.inner_c)?.trend;
    if !inner_cone.conclusive {
        notes.push("inner-cone trend inconclusive: fewer than 8 usable samples".into());
    }
    let decay_fit = match decay_fit(&series.times, &series.inward, dg.decay_t0.max(1.0), t2, dg.kappa) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("decay fit skipped: {e}"));
            None
        }
    };

    let two_sided = if dg.two_sided {
        let (back, _) = stream(&plan, &TimeReversed(plan.data.clone()))?;
        let b = two_sided_budget(&trace, &back)?;
        checks.push(BoundCheck::with_tol("two_sided_budget", b.residual.abs(), BALANCE_TOL * energy, 0.0, "pi mu + M + tails = E over [-T, T]"));
        Some(b)
    } else {
        None
    };

    let pass = checks.iter().all(|c| c.pass);
    let report = RunReport {
        config_sha256: sha256_hex(cfg.canonical_json().as_bytes()),
        backend: plan.grid.backend(),
        p: pr.p,
        coupling: pr.coupling,
        h: plan.grid.h(),
        dt: drift.dt,
        steps: plan.solver.steps(&plan.grid).0,
        stored_profiles: trace.profiles.len(),
        energy,
        energy_drift: drift.max_rel_drift,
        quadrature_drift: drift.quadrature_drift,
        decomposition_defect,
        monotonicity: mono,
        mu: MuSummary { total_origin: mu.total_origin(), total_cylinder: mu.total_cylinder(), discrepancy: mu.discrepancy, radii: mu.radii },
        inner_cone,
        decay_fit,
        weighted_energy_k,
        lq_lp1: norms.lq_lp1,
        st_norm: norms.st_norm,
        q_in_regime: norms.q_in_regime,
        max_cone_residual,
        slab_residual,
        two_sided,
        checks,
        notes,
        pass,
    };
    write_json(&out.join("report.json"), &report)?;
    Manifest::new(cfg).write(out, &["energy.csv", "mu.csv", "norms.csv", "ledgers.json", "ledgers.csv", "report.json"])?;
    Ok(report)
}

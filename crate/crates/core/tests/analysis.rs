use conewave::analysis::*;
use conewave::data::{gaussian_data, weighted_energies, AngularProfile, InitialData};
use conewave::flux::ShellTrace;
use conewave::grid::Grid;
use conewave::solver::{evolve_with, SolverConfig};
use conewave::state::Coupling;
use conewave::{Error, ProblemSpec, SimState};
use proptest::prelude::*;

fn run(pr: ProblemSpec, n: usize, t_end: f64) -> ShellTrace {
    let d = gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap();
    let g = Grid::radial(d.support_radius() + t_end, n).unwrap();
    let mut st = ShellTrace::new(pr, g.h());
    evolve_with(&d, pr, g, &SolverConfig::new(0.5, t_end, 4), |s| {
        st.push(s);
        Ok(())
    })
    .unwrap();
    st
}

fn cubic_run() -> ShellTrace {
    run(ProblemSpec::new(3.0).unwrap(), 1024, 8.0)
}

#[test]
fn decay_fit_recovers_a_power_law() {
    let ts: Vec<f64> = (0..200).map(|i| 1.0 + 0.1 * i as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|t| 2.5 * t.powf(-0.8)).collect();
    let f = decay_fit(&ts, &vs, 2.0, 20.0, 0.75).unwrap();
    assert!((f.alpha - 0.8).abs() < 1e-12 && (f.amplitude - 2.5).abs() < 1e-11, "{f:?}");
    assert!(f.residual < 1e-12);
    let flat = decay_fit(&ts, &vec![0.3; ts.len()], 2.0, 20.0, 0.75).unwrap();
    assert!(flat.alpha.abs() < 1e-12);
    assert!(decay_fit(&ts, &vs, 0.5, 20.0, 0.75).is_err());
    assert!(decay_fit(&ts[..5], &vs[..5], 1.0, 2.0, 0.75).is_err());
    // t^{-1}: the weighted sup with κ = 1 is flat.
    let inv: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
    let sup = weighted_sup_series(&ts, &inv, 1.0, 5.0, &[10.0, 15.0, 20.0], 2.0);
    assert!(sup.iter().all(|s| (s - 0.5).abs() < 1e-12), "{sup:?}");
}

#[test]
fn quarter_trend_reports_inconclusive_short_series() {
    assert!(!quarter_trend(&[1.0, 0.5, 0.2], 0.5).conclusive);
    let t = quarter_trend(&[4.0, 4.0, 3.0, 2.0, 1.0, 1.0, 1.0, 1.0], 0.5);
    assert!(t.conclusive && t.pass && (t.ratio - 0.25).abs() < 1e-15);
    assert!(!quarter_trend(&[1.0; 8], 0.5).pass);
}

#[test]
fn zero_trace_bounds_are_trivial() {
    let g = Grid::radial(6.0, 128).unwrap();
    let pr = ProblemSpec::new(3.0).unwrap();
    let mut st = ShellTrace::new(pr, g.h());
    for k in 0..41 {
        st.push(&SimState::zeros(g, pr, 0.05 * k as f64));
    }
    let checks = [
        morawetz_bound_check(&st, 1.0, 0.0).unwrap(),
        weighted_morawetz_check(&st, 0.75, 0.75, 0.0).unwrap(),
        weighted_morawetz_p3(&st, 0.0).unwrap(),
        lift_of_r_check(&st, 0.0, 0.5, 1.0, 5, 0.02).unwrap(),
    ];
    for c in checks.iter().chain(&measure_and_flux_bounds(&st, 0.0, 4).unwrap()) {
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0), "{}", c.name);
        assert!(c.pass, "{}", c.name);
    }
    let b = two_sided_budget(&st, &st).unwrap();
    assert_eq!(b.residual, 0.0);
}

#[test]
fn bound_check_tolerance() {
    assert!(BoundCheck::new("a", 1.005, 1.0, "").pass);
    assert!(!BoundCheck::new("a", 1.02, 1.0, "").pass);
    assert!(!BoundCheck::new("a", f64::NAN, 1.0, "").pass);
    let c = BoundCheck::with_tol("b", 1.5, 1.0, 0.6, "x");
    assert!(c.pass && (c.margin + 0.5).abs() < 1e-15);
}

#[test]
fn morawetz_lhs_grows_with_the_window_and_respects_the_bound() {
    let st = cubic_run();
    let e = trace_energy(&st);
    let mut last = 0.0;
    for t2 in [1.0, 2.0, 4.0, 8.0] {
        let m = morawetz_lhs(&st, 1.0, 0.0, t2).unwrap();
        assert!(m >= last);
        last = m;
    }
    for r in [0.5, 1.0, 2.0] {
        let c = morawetz_bound_check(&st, r, e).unwrap();
        assert!(c.pass && c.lhs > 0.0, "{c:?}");
    }
    assert!(matches!(morawetz_lhs(&st, st.radius() + 1.0, 0.0, 1.0), Err(Error::OutsideGrid { .. })));
    assert!(morawetz_lhs(&st, 0.0, 0.0, 1.0).is_err());
}

#[test]
fn weighted_morawetz_checks_and_their_parameter_guards() {
    let st = cubic_run();
    let d = gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap();
    let k = weighted_energies(&d, 3.0, 0.75).unwrap().k;
    let k1 = weighted_energies(&d, 3.0, 1.0).unwrap().k;
    assert!(weighted_morawetz_check(&st, 0.75, 0.75, k).unwrap().pass);
    assert!(weighted_morawetz_p3(&st, k1).unwrap().pass);
    assert!(weighted_morawetz_check(&st, 1.0, 0.75, k).is_err());
    assert!(weighted_morawetz_check(&st, 0.0, 0.75, k).is_err());
    let quartic = run(ProblemSpec::new(4.0).unwrap(), 256, 2.0);
    assert!(weighted_morawetz_p3(&quartic, k1).is_err());
    let quintic = run(ProblemSpec::new(5.0).unwrap(), 256, 2.0);
    assert!(weighted_morawetz_check(&quintic, 0.75, 0.75, k).is_err());
}

#[test]
fn windows_are_additive() {
    let st = cubic_run();
    let a = morawetz_lhs(&st, 1.0, 0.0, 3.0).unwrap();
    let b = morawetz_lhs(&st, 1.0, 3.0, 8.0).unwrap();
    let c = morawetz_lhs(&st, 1.0, 0.0, 8.0).unwrap();
    assert!((a + b - c).abs() < 1e-6 * c, "{a} + {b} vs {c}");
    let n = scattering_norms(&st, 10.0, 0.75).unwrap();
    let (x, y, z) = (n.st_increment(0.0, 3.0), n.st_increment(3.0, 8.0), n.st_increment(0.0, 8.0));
    assert!((x + y - z).abs() < 1e-12 * z);
}

#[test]
fn scattering_norms_are_bounded_and_their_tails_decay() {
    let st = cubic_run();
    let e = trace_energy(&st);
    let pr = st.problem;
    let n = scattering_norms(&st, 10.0, 0.75).unwrap();
    assert!(n.q_in_regime);
    assert!(!scattering_norms(&st, 4.0, 0.75).unwrap().q_in_regime);
    assert!(scattering_norms(&st, 0.5, 0.75).is_err());
    for v in &n.lp1_norm {
        assert!(v.powf(pr.p + 1.0) <= (pr.p + 1.0) * e * 1.001);
    }
    let tails: Vec<f64> = [(0.0, 2.0), (2.0, 4.0), (4.0, 6.0), (6.0, 8.0)].iter().map(|&(a, b)| n.st_increment(a, b)).collect();
    for w in tails.windows(2) {
        assert!(w[1] < w[0], "{tails:?}");
    }
    let lq: Vec<f64> = [(2.0, 4.0), (6.0, 8.0)].iter().map(|&(a, b)| n.lq_increment(a, b)).collect();
    assert!(lq[1] < lq[0], "{lq:?}");
}

#[test]
fn energy_series_is_monotone_and_conserves() {
    let st = cubic_run();
    let s = energy_series(&st);
    let e = s.full[0];
    let m = monotonicity(&s, 1e-4 * e);
    assert!(m.pass, "{m:?}");
    for i in 0..s.times.len() {
        assert!((s.inward[i] + s.outward[i] - s.full[i]).abs() < 1e-5 * e);
        assert!((s.full[i] - e).abs() < 1e-3 * e);
    }
    assert!(s.inward.last().unwrap() < &(0.5 * s.inward[0]));
}

#[test]
fn inner_cone_energy_decays_for_free_waves() {
    let lin = ProblemSpec::with_coupling(3.0, Coupling::Linear).unwrap();
    let st = run(lin, 1024, 8.0);
    let ic = inner_cone_energy(&st, 0.5).unwrap();
    assert!(ic.times.iter().all(|&t| 0.5 * t >= 4.0 * st.h));
    assert!(ic.trend.conclusive && ic.trend.pass, "{:?}", ic.trend);
    assert!(inner_cone_energy(&st, 1.5).is_err());
}

#[test]
fn flux_bounds_and_budget_on_a_monopole() {
    let st = cubic_run();
    let e = trace_energy(&st);
    for c in measure_and_flux_bounds(&st, e, 16).unwrap() {
        assert!(c.pass, "{c:?}");
    }
    let lift = lift_of_r_check(&st, 0.5, 0.5, 2.0, 16, 0.02).unwrap();
    assert!(lift.pass, "{lift:?}");
    assert!(flux_decay_trend(&st, 16, 1e-2).unwrap().pass);
    // u₁ = 0, so the time-reversed evolution coincides with the forward one.
    let b = two_sided_budget(&st, &st).unwrap();
    assert!(b.residual.abs() < 1e-2 * e, "{b:?}");
    let q = backward_fluxes(&st, 8).unwrap();
    assert_eq!(q.len(), 8);
    assert!(q.iter().all(|x| x.1 >= 0.0 && x.2 >= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decay_fit_is_scale_invariant(alpha in 0.1f64..3.0, c in 0.01f64..100.0) {
        let ts: Vec<f64> = (0..64).map(|i| 1.0 + 0.25 * i as f64).collect();
        let vs: Vec<f64> = ts.iter().map(|t| c * t.powf(-alpha)).collect();
        let f = decay_fit(&ts, &vs, 1.0, 20.0, 0.5).unwrap();
        prop_assert!((f.alpha - alpha).abs() < 1e-9);
        prop_assert!((f.amplitude / c - 1.0).abs() < 1e-9);
    }
}

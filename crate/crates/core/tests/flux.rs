use std::f64::consts::{PI, SQRT_2};

use conewave::data::{gaussian_data, AngularProfile, InitialData};
use conewave::flux::*;
use conewave::grid::Grid;
use conewave::region::{RegionSpec, SegmentKind};
use conewave::solver::{evolve, evolve_with, SolverConfig};
use conewave::stencil::PointSample;
use conewave::trace::SpacetimeTrace;
use conewave::{Error, ProblemSpec, SimState};

fn cubic() -> ProblemSpec {
    ProblemSpec::new(3.0).unwrap()
}

fn radial_run(n: usize, t_end: f64) -> (SpacetimeTrace, ShellTrace) {
    let d = gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap();
    let g = Grid::radial(d.support_radius() + t_end, n).unwrap();
    let (tr, _) = evolve(&d, cubic(), g, &SolverConfig::new(0.5, t_end, 1)).unwrap();
    let st = ShellTrace::from_trace(&tr);
    (tr, st)
}

fn tilt_run() -> (SpacetimeTrace, ShellTrace) {
    let d = gaussian_data(1.0, 1.0, 0.0, AngularProfile::ZTilt).unwrap();
    let t_end = 2.0;
    let ext = d.support_radius() + t_end;
    let g = Grid::axisym(ext, ext, 128, 256).unwrap();
    let (tr, _) = evolve(&d, cubic(), g, &SolverConfig::new(0.5, t_end, 2)).unwrap();
    let st = ShellTrace::from_trace(&tr);
    (tr, st)
}

/// Midpoint sum over t ∈ [t1, t2] and θ of `f(sample)` on the sphere of radius
/// `radius(t)`, with area element radius² sinθ dθ dφ.
fn brute_sphere_time(
    tr: &SpacetimeTrace,
    t1: f64,
    t2: f64,
    radius: impl Fn(f64) -> f64,
    f: impl Fn(&PointSample) -> f64,
) -> f64 {
    let (nt, nth) = (600, 48);
    let axisym = matches!(tr.states[0].grid, Grid::Axisym { .. });
    let dt = (t2 - t1) / nt as f64;
    let mut total = 0.0;
    for i in 0..nt {
        let t = t1 + (i as f64 + 0.5) * dt;
        let r = radius(t);
        let sphere = if axisym {
            let dth = PI / nth as f64;
            (0..nth)
                .map(|k| {
                    let th = (k as f64 + 0.5) * dth;
                    2.0 * PI * th.sin() * dth * f(&tr.interpolate(r, th, t).unwrap())
                })
                .sum::<f64>()
        } else {
            4.0 * PI * f(&tr.interpolate(r, 0.0, t).unwrap())
        };
        total += r * r * sphere * dt;
    }
    total
}

fn pot(pr: ProblemSpec) -> impl Fn(&PointSample) -> f64 {
    move |s: &PointSample| s.u.abs().powf(pr.p + 1.0) / (pr.p + 1.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn zero_trace_gives_zero_everything() {
    let g = Grid::radial(6.0, 64).unwrap();
    let states: Vec<SimState> = (0..11).map(|k| SimState::zeros(g, cubic(), 0.1 * k as f64)).collect();
    let st = ShellTrace::from_trace(&SpacetimeTrace::new(states, 1, 0.1).unwrap());
    for kind in [ConeKind::InwardBackward, ConeKind::OutwardBackward] {
        assert_eq!(cone_flux(&st, kind, 1.0, 0.0, 1.0).unwrap(), 0.0);
    }
    assert_eq!(cylinder_flux(&st, 1.0, 0.0, 1.0, EnergySide::Inward, true).unwrap(), 0.0);
    for region in [RegionSpec::cone(0.0, 1.0).unwrap(), RegionSpec::slab(0.0, 1.0, 5.0).unwrap()] {
        for side in [EnergySide::Inward, EnergySide::Outward] {
            let l = flux_balance(&st, &region, side).unwrap();
            assert!(l.entries.iter().all(|e| e.value == 0.0));
            assert_eq!((l.mu_term, l.morawetz_term, l.residual), (0.0, 0.0, 0.0));
        }
        assert_eq!(full_energy_closure(&st, &region).unwrap().residual, 0.0);
    }
    let mu = estimate_mu(&st, 0.0, 1.0).unwrap();
    assert_eq!((mu.total_origin(), mu.total_cylinder(), mu.discrepancy), (0.0, 0.0, 0.0));
}

#[test]
fn cone_fluxes_match_brute_force_radial() {
    let (tr, st) = radial_run(512, 3.0);
    let pr = cubic();
    let (s, t1, t2) = (3.0, 0.5, 2.5);
    let q = cone_flux(&st, ConeKind::InwardBackward, s, t1, t2).unwrap();
    let oracle = brute_sphere_time(&tr, t1, t2, |t| s - t, pot(pr));
    assert!(rel(q, oracle) < 0.02, "{q} vs {oracle}");

    // The 1/(2√2) prefactor against the cone's √2 dt: ½|𝐋₋u|².
    let q = cone_flux(&st, ConeKind::OutwardBackward, s, t1, t2).unwrap();
    let oracle = brute_sphere_time(&tr, t1, t2, |t| s - t, |p| {
        let cone_area = SQRT_2;
        cone_area / (2.0 * SQRT_2) * p.l_minus().powi(2)
    });
    assert!(rel(q, oracle) < 0.02, "{q} vs {oracle}");

    let tau = 0.5;
    let q = cone_flux(&st, ConeKind::InwardForward, tau, 1.0, 3.0).unwrap();
    let oracle = brute_sphere_time(&tr, 1.0, 3.0, |t| t - tau, |p| 0.5 * p.l_plus().powi(2));
    assert!(rel(q, oracle) < 0.02, "{q} vs {oracle}");
}

#[test]
fn cone_and_cylinder_fluxes_match_brute_force_axisym() {
    let (tr, st) = tilt_run();
    let pr = cubic();
    let angular = |p: &PointSample| p.slashed_sq();
    let q = cone_flux(&st, ConeKind::InwardBackward, 2.5, 0.0, 2.0).unwrap();
    let oracle = brute_sphere_time(&tr, 0.0, 2.0, |t| 2.5 - t, |p| pot(pr)(p) + 0.5 * angular(p));
    assert!(rel(q, oracle) < 0.02, "{q} vs {oracle}");
    let q = cone_flux(&st, ConeKind::OutwardForward, 0.0, 0.5, 2.0).unwrap();
    let oracle = brute_sphere_time(&tr, 0.5, 2.0, |t| t, |p| pot(pr)(p) + 0.5 * angular(p));
    assert!(rel(q, oracle) < 0.02, "{q} vs {oracle}");
    let c = cylinder_flux(&st, 1.0, 0.0, 1.0, EnergySide::Outward, true).unwrap();
    let oracle = brute_sphere_time(&tr, 0.0, 1.0, |_| 1.0, |p| {
        0.25 * p.l_minus().powi(2) - 0.25 * angular(p) - 0.5 * pot(pr)(p)
    });
    assert!(rel(c, oracle) < 0.02, "{c} vs {oracle}");
}

#[test]
fn cylinder_and_morawetz_match_brute_force_radial() {
    let (tr, st) = radial_run(512, 3.0);
    let pr = cubic();
    let c = cylinder_flux(&st, 1.0, 0.0, 1.0, EnergySide::Inward, true).unwrap();
    let oracle = brute_sphere_time(&tr, 0.0, 1.0, |_| 1.0, |p| -0.25 * p.l_plus().powi(2) + 0.5 * pot(pr)(p));
    assert!(rel(c, oracle) < 0.02, "{c} vs {oracle}");
    let flipped = cylinder_flux(&st, 1.0, 0.0, 1.0, EnergySide::Inward, false).unwrap();
    assert_eq!(flipped, -c);

    // 𝓜(ℝ³ × [0, 1]) by a double Riemann sum in (r, t).
    let m = morawetz_integral(&st, &RegionSpec::slab(0.0, 1.0, st.radius()).unwrap()).unwrap();
    let (nt, nr) = (200, 2000);
    let rmax = st.radius() - 0.01;
    let mut oracle = 0.0;
    for i in 0..nt {
        let t = (i as f64 + 0.5) / nt as f64;
        for k in 0..nr {
            let r = (k as f64 + 0.5) * rmax / nr as f64;
            let u = tr.interpolate(r, 0.0, t).unwrap().u;
            oracle += 4.0 * PI * r * r * (pr.p - 1.0) / (2.0 * (pr.p + 1.0)) * u.abs().powf(pr.p + 1.0) / r * rmax / nr as f64 / nt as f64;
        }
    }
    assert!(rel(m, oracle) < 0.02, "{m} vs {oracle}");
}

#[test]
fn segment_reversal_negates_entries() {
    let (_, st) = radial_run(256, 3.0);
    let region = RegionSpec::cone_shell(0.0, 1.0, 2.5).unwrap();
    for side in [EnergySide::Inward, EnergySide::Outward] {
        for s in &region.segments {
            let fwd = segment_flux(&st, s.kind, s.a, s.b, side).unwrap();
            let r = s.reversed();
            let back = segment_flux(&st, r.kind, r.a, r.b, side).unwrap();
            assert_eq!(back, -fwd, "{:?}", s.kind);
        }
    }
}

fn regions(radius: f64) -> Vec<(&'static str, RegionSpec)> {
    vec![
        ("cone", RegionSpec::cone(1.0, 2.0).unwrap()),
        ("truncated", RegionSpec::truncated_cone(5.0, 1.0, 3.0).unwrap()),
        ("shell", RegionSpec::cone_shell(0.5, 1.0, 3.0).unwrap()),
        ("slab", RegionSpec::slab(0.5, 4.0, radius).unwrap()),
        ("rectangle", RegionSpec::rectangle(1.0, 2.5, 0.5, 3.0).unwrap()),
        ("forward", conewave::region::validate_region(&[(0.0, 1.0), (2.0, 3.0), (0.0, 3.0)]).unwrap()),
        ("mixed", conewave::region::validate_region(&[(0.0, 0.5), (2.0, 0.5), (3.0, 1.5), (3.0, 2.5), (1.0, 4.5), (0.0, 4.5)]).unwrap()),
    ]
}

#[test]
fn balances_close_and_converge_for_every_region_type() {
    let t_end = 4.5;
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut energy = 0.0;
    for n in [512, 1024, 2048] {
        let d = gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap();
        let g = Grid::radial(d.support_radius() + t_end, n).unwrap();
        let mut st = ShellTrace::new(cubic(), g.h());
        evolve_with(&d, cubic(), g, &SolverConfig::new(0.5, t_end, 1), |s| {
            st.push(s);
            Ok(())
        })
        .unwrap();
        energy = st.slice_energies(0.0, 0.0, st.radius()).unwrap().full;
        let mut row = Vec::new();
        for (_, region) in regions(st.radius()) {
            for side in [EnergySide::Inward, EnergySide::Outward] {
                row.push(flux_balance(&st, &region, side).unwrap().residual.abs());
            }
            row.push(full_energy_closure(&st, &region).unwrap().residual.abs());
        }
        table.push(row);
    }
    let names: Vec<&str> = regions(10.0).iter().map(|r| r.0).collect();
    let mut resolved = 0;
    for (j, ((a, b), c)) in table[0].iter().zip(&table[1]).zip(&table[2]).enumerate() {
        let name = names[j / 3];
        assert!(*c < 1e-2 * energy, "{name} column {j}: {c}");
        if *a > 1e-5 * energy {
            let q = (a / c).log2() / 2.0;
            assert!(q >= 1.0, "{name} column {j}: {a} {b} {c}");
            resolved += 1;
        }
    }
    assert!(resolved >= 6, "{table:?}");
}

#[test]
fn cone_law_budget_has_the_expected_pieces() {
    let (_, st) = radial_run(1024, 3.0);
    let l = flux_balance(&st, &RegionSpec::cone(0.5, 2.0).unwrap(), EnergySide::Inward).unwrap();
    let kinds: Vec<SegmentKind> = l.entries.iter().map(|e| e.kind).collect();
    assert_eq!(kinds, vec![SegmentKind::TimeSliceDown, SegmentKind::BackwardConeUp, SegmentKind::TAxis]);
    // E₋(t₀; 0, r₀) = πμ + Q₋⁻ + 𝓜.
    let e_minus = -l.entries[0].value;
    let q = l.entries[1].value;
    assert!(e_minus > 0.0 && q > 0.0 && l.mu_term > 0.0 && l.morawetz_term > 0.0);
    assert!((e_minus - (l.mu_term + q + l.morawetz_term)).abs() < 1e-2 * e_minus);
    assert!((l.residual - (l.segment_sum() + l.mu_term + l.morawetz_term)).abs() < 1e-15);
}

#[test]
fn mu_estimators_agree_and_grow() {
    let (_, st) = radial_run(2048, 3.0);
    let mu = estimate_mu(&st, 0.0, 3.0).unwrap();
    assert!(mu.discrepancy < 0.05, "{}", mu.discrepancy);
    for w in mu.p_origin.windows(2) {
        assert!(w[1] >= w[0]);
    }
    let scale = mu.total_cylinder();
    for w in mu.p_cylinder.windows(2) {
        assert!(w[1] >= w[0] - 1e-4 * scale);
    }
    let e = st.slice_energies(0.0, 0.0, st.radius()).unwrap().full;
    assert!(PI * mu.total_origin() <= e);
    assert_eq!(mu.radii, [4.0 * st.h, 8.0 * st.h, 16.0 * st.h]);
    // Additive over adjacent windows.
    let a = mu_origin(&st, 0.0, 1.3).unwrap() + mu_origin(&st, 1.3, 3.0).unwrap();
    assert!((a - mu_origin(&st, 0.0, 3.0).unwrap()).abs() < 1e-3 * a);
}

#[test]
fn window_and_resolution_errors() {
    let (_, st) = radial_run(256, 2.0);
    assert!(matches!(cylinder_flux(&st, 0.5 * st.h, 0.0, 1.0, EnergySide::Inward, true), Err(Error::BelowResolution { .. })));
    assert!(matches!(cone_flux(&st, ConeKind::InwardBackward, 3.0, 0.0, 2.5), Err(Error::OutsideWindow { .. })));
    assert!(cone_flux(&st, ConeKind::InwardBackward, 1.0, 0.0, 1.5).is_err());
    assert!(cone_flux(&st, ConeKind::InwardForward, 1.0, 0.5, 1.5).is_err());
    assert!(flux_balance(&st, &RegionSpec::cone(1.0, 2.0).unwrap(), EnergySide::Inward).is_err());
    assert!(morawetz_integral(&st, &RegionSpec::slab(0.0, 1.0, st.radius() + 1.0).unwrap()).is_err());
}

#[test]
fn axisym_cone_law_closes() {
    let (_, st) = tilt_run();
    for (t0, r0) in [(0.0, 2.0), (0.5, 1.5)] {
        let l = flux_balance(&st, &RegionSpec::cone(t0, r0).unwrap(), EnergySide::Inward).unwrap();
        let e_minus = st.slice_energies(t0, 0.0, r0).unwrap().inward;
        assert!(l.residual.abs() < 1e-2 * e_minus, "t0={t0} r0={r0}: {} of {e_minus}", l.residual);
        assert!(l.entries.iter().all(|e| e.value.is_finite()));
    }
}

#[test]
fn shell_trace_matches_streamed_pushes() {
    let d = gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap();
    let g = Grid::radial(d.support_radius() + 1.0, 256).unwrap();
    let cfg = SolverConfig::new(0.5, 1.0, 2);
    let (tr, _) = evolve(&d, cubic(), g, &cfg).unwrap();
    let mut st = ShellTrace::new(cubic(), g.h());
    evolve_with(&d, cubic(), g, &cfg, |s| {
        st.push(s);
        Ok(())
    })
    .unwrap();
    let full = ShellTrace::from_trace(&tr);
    assert_eq!(full.times(), st.times());
    let a = cone_flux(&full, ConeKind::InwardBackward, 1.5, 0.0, 1.0).unwrap();
    assert_eq!(a, cone_flux(&st, ConeKind::InwardBackward, 1.5, 0.0, 1.0).unwrap());
    assert_eq!(st.times().len(), tr.len());
}

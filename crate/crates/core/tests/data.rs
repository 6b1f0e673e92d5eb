use std::f64::consts::PI;
use std::sync::Arc;

use conewave::data::*;
use proptest::prelude::*;

fn families() -> Vec<(&'static str, Arc<dyn InitialData>)> {
    let mono: Arc<dyn InitialData> = Arc::new(gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap());
    let tilt: Arc<dyn InitialData> = Arc::new(gaussian_data(1.0, 1.0, 0.0, AngularProfile::ZTilt).unwrap());
    vec![
        ("monopole", mono.clone()),
        ("narrow", Arc::new(gaussian_data(2.0, 0.5, 0.0, AngularProfile::Monopole).unwrap())),
        ("offset", Arc::new(gaussian_data(0.7, 0.8, 0.6, AngularProfile::Monopole).unwrap())),
        ("z-tilt", tilt.clone()),
        ("cutoff-monopole", Arc::new(cutoff_data(mono, 1.0).unwrap())),
        ("cutoff-z-tilt", Arc::new(cutoff_data(tilt, 0.8).unwrap())),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Simpson's rule with n (even) panels; test-side oracle.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn l_and_radial_derivative_have_equal_norms() {
    let q = DataQuadrature::default();
    for (name, d) in families() {
        let r0 = d.support_radius();
        let lu = q.integrate(&*d, 0.0, r0, &|p| p.l() * p.l()).unwrap();
        let ur = q.integrate(&*d, 0.0, r0, &|p| p.ur * p.ur).unwrap();
        assert!(rel(lu, ur) < 1e-6, "{name}: {lu} vs {ur}");
    }
}

#[test]
fn annulus_identities_carry_the_sphere_term() {
    let q = DataQuadrature::default();
    for (name, d) in families() {
        let r0 = d.support_radius();
        for big_r in [0.5, 1.0, 2.0] {
            let sphere = q.sphere(&*d, big_r, &|p| p.u0 * p.u0) / big_r;
            let l_in = q.integrate(&*d, 0.0, big_r, &|p| p.l() * p.l()).unwrap();
            let r_in = q.integrate(&*d, 0.0, big_r, &|p| p.ur * p.ur).unwrap();
            let l_out = q.integrate(&*d, big_r, r0, &|p| p.l() * p.l()).unwrap();
            let r_out = q.integrate(&*d, big_r, r0, &|p| p.ur * p.ur).unwrap();
            let scale = l_in + l_out;
            assert!((l_in - r_in - sphere).abs() / scale < 1e-6, "{name} R={big_r} inner");
            assert!((l_out - r_out + sphere).abs() / scale < 1e-6, "{name} R={big_r} outer");
        }
    }
}

#[test]
fn weighted_split_is_dominated_by_weighted_energy() {
    let q = DataQuadrature::default();
    let p = 3.0;
    for (name, d) in families() {
        let r0 = d.support_radius();
        for kappa in [0.5, 0.75, 1.0] {
            let split = q
                .integrate(&*d, 0.0, r0, &|x| {
                    x.r.powf(kappa)
                        * (0.25 * x.l_plus().powi(2)
                            + 0.25 * x.l_minus().powi(2)
                            + 0.5 * x.slashed.powi(2)
                            + x.u0.abs().powf(p + 1.0) / (p + 1.0))
                })
                .unwrap();
            let full = q
                .integrate(&*d, 0.0, r0, &|x| {
                    x.r.powf(kappa) * (0.5 * x.grad_sq() + 0.5 * x.u1 * x.u1 + x.u0.abs().powf(p + 1.0) / (p + 1.0))
                })
                .unwrap();
            assert!(split <= full * (1.0 + 1e-6), "{name} kappa={kappa}: {split} > {full}");
        }
    }
}

#[test]
fn radial_gaussian_energy_matches_closed_form() {
    let d = gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap();
    let rep = weighted_energies(&d, 3.0, 0.0).unwrap();
    let oracle = simpson(0.0, 8.0, 4000, |r| {
        4.0 * PI * r * r * (0.5 * 4.0 * r * r * (-2.0 * r * r).exp() + 0.25 * (-4.0 * r * r).exp())
    });
    assert!(rel(rep.energy, oracle) < 1e-8, "{} vs {oracle}", rep.energy);
    assert!((rep.energy - 3.1267).abs() < 1e-3);
    assert!(rel(rep.e_kappa, 2.0 * rep.energy) < 1e-10);

    let one = weighted_energies(&d, 3.0, 1.0).unwrap();
    assert!(rel(one.e_kappa, oracle + PI + PI / 32.0) < 1e-8);
    assert!((one.e_kappa - 6.366).abs() < 1e-3);
    assert!(rel(one.e_10, PI + PI / 32.0) < 1e-8, "{} {}", one.e_10, PI + PI / 32.0);
}

#[test]
fn weighted_report_invariants() {
    for (name, d) in families() {
        for p in [3.0, 4.0, 5.0] {
            for kappa in [0.0, 0.75, 1.0] {
                let w = weighted_energies(&*d, p, kappa).unwrap();
                assert!(w.energy >= 0.0 && w.k >= 0.0 && w.e_10 >= 0.0, "{name}");
                assert!(w.energy <= w.e_kappa * (1.0 + 1e-10), "{name}");
                assert!(w.k <= w.e_kappa * (1.0 + 1e-10), "{name}");
            }
        }
    }
}

#[test]
fn zero_data_has_zero_functionals() {
    let d = gaussian_data(0.0, 1.0, 0.0, AngularProfile::Monopole).unwrap();
    let w = weighted_energies(&d, 3.0, 0.75).unwrap();
    assert_eq!((w.energy, w.e_kappa, w.k, w.e_10), (0.0, 0.0, 0.0, 0.0));
    let c = cutoff_data(Arc::new(d), 1.0).unwrap();
    assert_eq!(c.sample(0.3, 0.9), DataSample::default());
}

#[test]
fn z_tilt_angular_gradient_is_closed_form() {
    let d = gaussian_data(1.0, 1.0, 0.0, AngularProfile::ZTilt).unwrap();
    for &r in &[0.1, 0.5, 1.0, 2.0] {
        for &c in &[-0.9, -0.3, 0.0, 0.4, 1.0] {
            let x = point(&d, r, c);
            let sin2 = 1.0 - c * c;
            let expect = 0.25 * sin2 * (-2.0 * r * r).exp();
            assert!((x.slashed * x.slashed - expect).abs() < 1e-14, "r={r} c={c}");
        }
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(gaussian_data(1.0, 0.0, 0.0, AngularProfile::Monopole).is_err());
    assert!(gaussian_data(-1.0, 1.0, 0.0, AngularProfile::Monopole).is_err());
    assert!(gaussian_data(1.0, 1.0, 0.5, AngularProfile::ZTilt).is_err());
    let d: Arc<dyn InitialData> = Arc::new(gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap());
    assert!(cutoff_data(d.clone(), 0.0).is_err());
    assert!(weighted_energies(&*d, 2.0, 0.5).is_err());
    assert!(weighted_energies(&*d, 3.0, -0.5).is_err());
}

#[test]
fn support_radius_bounds_the_data() {
    for (name, d) in families() {
        let r0 = d.support_radius();
        let peak = (0..200)
            .flat_map(|i| (0..20).map(move |k| (i, k)))
            .map(|(i, k)| {
                let r = r0 * i as f64 / 200.0;
                let c = -1.0 + 2.0 * k as f64 / 19.0;
                point(&*d, r, c).u0.abs()
            })
            .fold(0.0, f64::max);
        for &c in &[-1.0, 0.0, 1.0] {
            let x = point(&*d, r0 * 1.0001, c);
            assert_eq!((x.u0, x.u1), (0.0, 0.0), "{name}");
            let y = point(&*d, r0 * 0.999, c);
            assert!(y.u0.abs() <= 1e-10 * peak, "{name}: data not small near the support edge");
        }
    }
}

#[test]
fn cutoff_profile_is_a_smooth_transition() {
    assert_eq!(cutoff_profile(0.5), (0.0, 0.0));
    assert_eq!(cutoff_profile(0.2).0, 0.0);
    assert_eq!(cutoff_profile(1.0).0, 1.0);
    assert_eq!(cutoff_profile(3.0), (1.0, 0.0));
    let mut last = 0.0;
    for i in 0..=100 {
        let x = 0.5 + 0.5 * i as f64 / 100.0;
        let (phi, dphi) = cutoff_profile(x);
        assert!(phi >= last && (0.0..=1.0).contains(&phi));
        last = phi;
        let h = 1e-6;
        let fd = (cutoff_profile(x + h).0 - cutoff_profile(x - h).0) / (2.0 * h);
        assert!((fd - dphi).abs() < 1e-6, "x={x}");
    }
}

#[test]
fn cutoff_vanishes_inside_and_matches_outside() {
    let g: Arc<dyn InitialData> = Arc::new(gaussian_data(1.0, 1.0, 0.0, AngularProfile::ZTilt).unwrap());
    let c = cutoff_data(g.clone(), 1.5).unwrap();
    for &(rho, z) in &[(0.1, 0.2), (0.5, -0.4), (0.0, 0.74)] {
        assert_eq!(c.sample(rho, z), DataSample::default());
    }
    for &(rho, z) in &[(1.5, 0.0), (1.2, 1.0), (0.0, -2.0)] {
        assert_eq!(c.sample(rho, z), g.sample(rho, z));
    }
}

#[test]
fn cutoff_energy_loss_is_controlled_and_vanishes_as_r_shrinks() {
    let g: Arc<dyn InitialData> = Arc::new(gaussian_data(1.0, 1.0, 0.0, AngularProfile::Monopole).unwrap());
    let q = DataQuadrature::default();
    let base = weighted_energies(&*g, 3.0, 1.0).unwrap();
    let c1 = weighted_energies(&cutoff_data(g.clone(), 1.0).unwrap(), 3.0, 1.0).unwrap();
    let hardy = q.integrate(&*g, 0.5, 1.0, &|x| x.u0 * x.u0 / (x.r * x.r)).unwrap();
    // |∇(φu)|² ≤ 2φ²|∇u|² + 2|∇φ|²u² with |∇φ| ≤ max φ' / r ≤ 2 max φ'/|x| on the transition.
    let max_dphi = (0..1000).map(|i| cutoff_profile(0.5 + 0.5 * i as f64 / 1000.0).1).fold(0.0, f64::max);
    let c_bound = (2.0 * max_dphi).powi(2);
    assert!(c1.energy <= 2.0 * base.energy + c_bound * hardy);

    let mut prev = f64::INFINITY;
    for r in [0.4, 0.2, 0.1, 0.05] {
        let c = weighted_energies(&cutoff_data(g.clone(), r).unwrap(), 3.0, 1.0).unwrap();
        let gap = (c.e_10 - base.e_10).abs();
        assert!(gap < 0.35 * prev, "r={r}: {gap} vs {prev}");
        prev = gap;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pointwise_split_sums_to_energy_density(
        amp in 0.1f64..2.0, width in 0.3f64..2.0, r in 0.01f64..3.0, c in -1.0f64..1.0, tilt in any::<bool>(), p in 3.0f64..5.0,
    ) {
        let profile = if tilt { AngularProfile::ZTilt } else { AngularProfile::Monopole };
        let d = gaussian_data(amp, width, 0.0, profile).unwrap();
        let x = point(&d, r, c);
        let sum = inward_density(&x, p) + outward_density(&x, p);
        let l_form = 0.5 * x.l() * x.l() + 0.5 * x.u1 * x.u1 + 0.5 * x.slashed * x.slashed + x.u0.abs().powf(p + 1.0) / (p + 1.0);
        prop_assert!((sum - l_form).abs() <= 1e-12 * (1.0 + l_form));
    }

    #[test]
    fn spherical_gradient_matches_cylindrical(amp in 0.1f64..2.0, width in 0.3f64..2.0, r in 0.01f64..3.0, c in -1.0f64..1.0) {
        let d = gaussian_data(amp, width, 0.0, AngularProfile::ZTilt).unwrap();
        let x = point(&d, r, c);
        let s = (1.0 - c * c).sqrt();
        let raw = d.sample(r * s, r * c);
        let cyl = raw.u0_rho * raw.u0_rho + raw.u0_z * raw.u0_z;
        prop_assert!((x.grad_sq() - cyl).abs() <= 1e-12 * (1.0 + cyl));
    }
}

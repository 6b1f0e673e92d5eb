use conewave::region::{region_from_segments, validate_region, RegionSpec, SegmentKind};
use proptest::prelude::*;
use SegmentKind::*;

fn kinds(r: &RegionSpec) -> Vec<SegmentKind> {
    r.segments.iter().map(|s| s.kind).collect()
}

#[test]
fn cone_region_types() {
    let c = validate_region(&[(0.0, 1.0), (2.0, 1.0), (0.0, 3.0)]).unwrap();
    assert_eq!(kinds(&c), vec![TimeSliceDown, BackwardConeUp, TAxis]);
    assert!(c.check_declared(&[TimeSliceDown, BackwardConeUp, TAxis]).is_ok());
    assert!(c.check_declared(&[TimeSliceUp, BackwardConeUp, TAxis]).is_err());
}

#[test]
fn rectangle_types() {
    let r = validate_region(&[(1.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0)]).unwrap();
    assert_eq!(kinds(&r), vec![TimeSliceDown, CylinderOutward, TimeSliceUp, CylinderInward]);
    let s = RegionSpec::slab(0.0, 1.0, 3.0).unwrap();
    assert_eq!(kinds(&s), vec![TimeSliceDown, CylinderOutward, TimeSliceUp, TAxis]);
}

#[test]
fn forward_cone_and_shell_types() {
    let f = validate_region(&[(0.0, 0.0), (2.0, 2.0), (0.0, 2.0)]).unwrap();
    assert_eq!(kinds(&f), vec![ForwardConeDown, TimeSliceUp, TAxis]);
    let s = RegionSpec::cone_shell(0.0, 1.0, 2.0).unwrap();
    assert_eq!(kinds(&s), vec![TimeSliceDown, BackwardConeUp, TAxis, BackwardConeDown]);
    let t = RegionSpec::truncated_cone(5.0, 1.0, 3.0).unwrap();
    assert_eq!(kinds(&t), vec![TimeSliceDown, BackwardConeUp, TimeSliceUp, TAxis]);
}

#[test]
fn malformed_polygons_are_rejected() {
    assert!(validate_region(&[(0.0, 0.0), (1.0, 0.0)]).is_err());
    assert!(validate_region(&[(0.0, 0.0), (2.0, 0.0), (0.0, 1.0)]).is_err(), "slope 1/2");
    assert!(validate_region(&[(-1.0, 0.0), (1.0, 0.0), (1.0, 1.0)]).is_err());
    assert!(validate_region(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).is_err(), "zero area");
    // Bow tie made of two cones.
    assert!(validate_region(&[(1.0, 0.0), (3.0, 2.0), (3.0, 0.0), (1.0, 2.0)]).is_err());
    assert!(validate_region(&[(0.0, 0.0), (f64::NAN, 0.0), (0.0, 1.0)]).is_err());
    let open = region_from_segments(&[((0.0, 0.0), (1.0, 0.0)), ((1.0, 0.0), (0.0, 1.0)), ((0.0, 1.0), (0.0, 0.5))]);
    assert!(open.is_err());
    let closed = region_from_segments(&[((0.0, 0.0), (1.0, 0.0)), ((1.0, 0.0), (0.0, 1.0)), ((0.0, 1.0), (0.0, 0.0))]);
    assert!(closed.is_ok());
}

#[test]
fn collinear_vertices_are_merged() {
    let r = validate_region(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 1.0), (0.0, 2.0), (0.0, 1.0)]).unwrap();
    assert_eq!(r.vertices, vec![(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)]);
}

#[test]
fn slices_and_containment() {
    let c = RegionSpec::cone(1.0, 2.0).unwrap();
    assert_eq!(c.slice_at(1.0), vec![(0.0, 2.0)]);
    let s = c.slice_at(2.0);
    assert_eq!(s.len(), 1);
    assert!((s[0].1 - 1.0).abs() < 1e-15);
    assert!(c.slice_at(3.5).is_empty());
    assert!(c.contains(0.5, 1.5) && !c.contains(1.9, 1.5));
    let sh = RegionSpec::cone_shell(0.0, 1.0, 2.0).unwrap();
    let s = sh.slice_at(0.5);
    assert!((s[0].0 - 0.5).abs() < 1e-15 && (s[0].1 - 1.5).abs() < 1e-15);
    assert_eq!(sh.slice_at(1.5).len(), 1);
    assert_eq!(c.t_range(), (1.0, 3.0));
    assert_eq!(c.r_max(), 2.0);
    assert_eq!(c.vertex_times(), vec![1.0, 3.0]);
}

fn area(v: &[(f64, f64)]) -> f64 {
    0.5 * (0..v.len()).map(|i| v[i].0 * v[(i + 1) % v.len()].1 - v[(i + 1) % v.len()].0 * v[i].1).sum::<f64>()
}

fn any_region() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (0usize..5, 0.0f64..3.0, 0.5f64..3.0, 0.5f64..3.0).prop_map(|(k, t0, a, b)| {
        let r = match k {
            0 => RegionSpec::cone(t0, a),
            1 => RegionSpec::truncated_cone(t0 + a + b, t0, t0 + a),
            2 => RegionSpec::cone_shell(t0, a, a + b),
            3 => RegionSpec::slab(t0, t0 + a, b),
            _ => RegionSpec::rectangle(a, a + b, t0, t0 + a),
        };
        r.unwrap().vertices
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalization_is_idempotent(v in any_region()) {
        let once = validate_region(&v).unwrap();
        let twice = validate_region(&once.vertices).unwrap();
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn orientation_and_start_do_not_matter(v in any_region(), shift in 0usize..6) {
        let base = validate_region(&v).unwrap();
        let mut rev = v.clone();
        rev.reverse();
        let k = shift % v.len();
        rev.rotate_left(k);
        prop_assert_eq!(validate_region(&rev).unwrap(), base);
    }

    #[test]
    fn reversal_flips_kind(v in any_region()) {
        let r = validate_region(&v).unwrap();
        for s in &r.segments {
            let back = s.reversed();
            prop_assert_eq!(back.kind, s.kind.flipped());
            prop_assert_eq!(back.reversed(), *s);
        }
    }

    #[test]
    fn region_is_counter_clockwise_and_slices_cover_its_area(v in any_region()) {
        let r = validate_region(&v).unwrap();
        let a = area(&r.vertices);
        prop_assert!(a > 0.0);
        let (lo, hi) = r.t_range();
        let n = 4000;
        let dt = (hi - lo) / n as f64;
        let swept: f64 = (0..n)
            .map(|i| r.slice_at(lo + (i as f64 + 0.5) * dt).iter().map(|(x, y)| y - x).sum::<f64>() * dt)
            .sum();
        prop_assert!((swept - a).abs() < 1e-6 * a.max(1.0));
    }
}

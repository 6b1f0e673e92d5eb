//! Polygonal regions in the (r, t) half-plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary piece type, named by the direction of the outward normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    TimeSliceUp,
    TimeSliceDown,
    CylinderOutward,
    CylinderInward,
    BackwardConeUp,
    BackwardConeDown,
    ForwardConeUp,
    ForwardConeDown,
    TAxis,
}

impl SegmentKind {
    pub fn flipped(self) -> SegmentKind {
        use SegmentKind::*;
        match self {
            TimeSliceUp => TimeSliceDown,
            TimeSliceDown => TimeSliceUp,
            CylinderOutward => CylinderInward,
            CylinderInward => CylinderOutward,
            BackwardConeUp => BackwardConeDown,
            BackwardConeDown => BackwardConeUp,
            ForwardConeUp => ForwardConeDown,
            ForwardConeDown => ForwardConeUp,
            TAxis => TAxis,
        }
    }

    pub fn name(self) -> &'static str {
        use SegmentKind::*;
        match self {
            TimeSliceUp => "TimeSliceUp",
            TimeSliceDown => "TimeSliceDown",
            CylinderOutward => "CylinderOutward",
            CylinderInward => "CylinderInward",
            BackwardConeUp => "BackwardConeUp",
            BackwardConeDown => "BackwardConeDown",
            ForwardConeUp => "ForwardConeUp",
            ForwardConeDown => "ForwardConeDown",
            TAxis => "TAxis",
        }
    }
}

/// Directed boundary segment from `a` to `b`, points given as (r, t).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Segment {
    pub fn reversed(&self) -> Segment {
        Segment { kind: self.kind.flipped(), a: self.b, b: self.a }
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.a.1.min(self.b.1), self.a.1.max(self.b.1))
    }

    pub fn r_range(&self) -> (f64, f64) {
        (self.a.0.min(self.b.0), self.a.0.max(self.b.0))
    }
}

/// Normalized polygon: counter-clockwise in (r, t) so the region lies to the
/// left of each segment, starting at the lowest-then-innermost vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub vertices: Vec<(f64, f64)>,
    pub segments: Vec<Segment>,
}

fn tol_for(vertices: &[(f64, f64)]) -> f64 {
    let scale = vertices.iter().fold(1.0f64, |m, v| m.max(v.0.abs()).max(v.1.abs()));
    1e-9 * scale
}

fn classify(a: (f64, f64), b: (f64, f64), tol: f64) -> Result<SegmentKind> {
    use SegmentKind::*;
    let (dr, dt) = (b.0 - a.0, b.1 - a.1);
    if dt.abs() <= tol {
        return Ok(if dr > 0.0 { TimeSliceDown } else { TimeSliceUp });
    }
    if dr.abs() <= tol {
        if a.0.abs() <= tol && b.0.abs() <= tol {
            return if dt < 0.0 {
                Ok(TAxis)
            } else {
                Err(Error::Region("axis segment with region at r < 0".into()))
            };
        }
        return Ok(if dt > 0.0 { CylinderOutward } else { CylinderInward });
    }
    if (dr.abs() - dt.abs()).abs() > tol.max(1e-9 * dr.abs().max(dt.abs())) {
        return Err(Error::Region(format!("segment slope dt/dr = {} not in {{0, inf, +-1}}", dt / dr)));
    }
    Ok(match (dr > 0.0, dt > 0.0) {
        (false, true) => BackwardConeUp,
        (true, false) => BackwardConeDown,
        (false, false) => ForwardConeUp,
        (true, true) => ForwardConeDown,
    })
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segments_touch(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64), tol: f64) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    // Cross products carry units of length squared; tol is 1e-9 of the scale.
    let eps = tol * tol * 1e9;
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)) {
        return true;
    }
    let on = |a: (f64, f64), b: (f64, f64), p: (f64, f64), d: f64| {
        d.abs() <= eps
            && p.0 >= a.0.min(b.0) - tol
            && p.0 <= a.0.max(b.0) + tol
            && p.1 >= a.1.min(b.1) - tol
            && p.1 <= a.1.max(b.1) + tol
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Validates and normalizes a raw vertex list.
pub fn validate_region(raw: &[(f64, f64)]) -> Result<RegionSpec> {
    if raw.iter().any(|v| !v.0.is_finite() || !v.1.is_finite()) {
        return Err(Error::Region("non-finite vertex".into()));
    }
    let tol = tol_for(raw);
    let mut v: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
    for &p in raw {
        if p.0 < -tol {
            return Err(Error::Region(format!("vertex at r = {} < 0", p.0)));
        }
        let p = (p.0.max(0.0), p.1);
        if v.last().is_none_or(|q: &(f64, f64)| (q.0 - p.0).abs() > tol || (q.1 - p.1).abs() > tol) {
            v.push(p);
        }
    }
    while v.len() > 1 {
        let (f, l) = (v[0], v[v.len() - 1]);
        if (f.0 - l.0).abs() <= tol && (f.1 - l.1).abs() <= tol {
            v.pop();
        } else {
            break;
        }
    }
    if v.len() < 3 {
        return Err(Error::Region("open or degenerate polygon (fewer than 3 vertices)".into()));
    }
    // Merge collinear neighbours so each segment is a maximal straight piece.
    let mut changed = true;
    while changed && v.len() >= 3 {
        changed = false;
        let n = v.len();
        for i in 0..n {
            let (p, q, r) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            let c = cross(p, q, r);
            let dot = (q.0 - p.0) * (r.0 - q.0) + (q.1 - p.1) * (r.1 - q.1);
            if c.abs() <= tol * tol.max(1.0) && dot > 0.0 {
                v.remove(i);
                changed = true;
                break;
            }
        }
    }
    if v.len() < 3 {
        return Err(Error::Region("degenerate polygon".into()));
    }
    let area2: f64 = (0..v.len())
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    if area2.abs() <= tol * tol {
        return Err(Error::Region("polygon has zero area".into()));
    }
    if area2 < 0.0 {
        v.reverse();
    }
    let start = (0..v.len())
        .min_by(|&i, &j| {
            let (a, b) = (v[i], v[j]);
            a.1.partial_cmp(&b.1).unwrap().then(a.0.partial_cmp(&b.0).unwrap())
        })
        .unwrap();
    v.rotate_left(start);
    let n = v.len();
    let mut segments = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        segments.push(Segment { kind: classify(a, b, tol)?, a, b });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (s, t) = (&segments[i], &segments[j]);
            if segments_touch(s.a, s.b, t.a, t.b, tol) {
                return Err(Error::Region(format!("segments {i} and {j} intersect")));
            }
        }
    }
    Ok(RegionSpec { vertices: v, segments })
}

/// Builds a region from directed segments that must chain end to start.
pub fn region_from_segments(segs: &[((f64, f64), (f64, f64))]) -> Result<RegionSpec> {
    if segs.is_empty() {
        return Err(Error::Region("no segments".into()));
    }
    let tol = tol_for(&segs.iter().flat_map(|s| [s.0, s.1]).collect::<Vec<_>>());
    let close = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).abs() <= tol && (p.1 - q.1).abs() <= tol;
    for i in 0..segs.len() {
        let next = &segs[(i + 1) % segs.len()];
        if !close(segs[i].1, next.0) {
            return Err(Error::Region(format!("open polygon: segment {i} does not meet its successor")));
        }
    }
    validate_region(&segs.iter().map(|s| s.0).collect::<Vec<_>>())
}

impl RegionSpec {
    /// Checks the normalized segment types against a declared list.
    pub fn check_declared(&self, kinds: &[SegmentKind]) -> Result<()> {
        let got: Vec<SegmentKind> = self.segments.iter().map(|s| s.kind).collect();
        if got != kinds {
            return Err(Error::Region(format!("declared types {kinds:?} do not match {got:?}")));
        }
        Ok(())
    }

    /// {t ≥ t0, |x| + t ≤ t0 + r0}.
    pub fn cone(t0: f64, r0: f64) -> Result<RegionSpec> {
        validate_region(&[(0.0, t0), (r0, t0), (0.0, t0 + r0)])
    }

    /// {t1 ≤ t ≤ t2, |x| + t ≤ s}, a backward cone truncated below and above.
    pub fn truncated_cone(s: f64, t1: f64, t2: f64) -> Result<RegionSpec> {
        validate_region(&[(0.0, t1), (s - t1, t1), (s - t2, t2), (0.0, t2)])
    }

    /// {t ≥ t0, t0 + r1 ≤ t + |x| ≤ t0 + r2}.
    pub fn cone_shell(t0: f64, r1: f64, r2: f64) -> Result<RegionSpec> {
        if r1 <= 0.0 {
            return RegionSpec::cone(t0, r2);
        }
        validate_region(&[(r1, t0), (r2, t0), (0.0, t0 + r2), (0.0, t0 + r1)])
    }

    /// {|x| < radius, t1 ≤ t ≤ t2}.
    pub fn slab(t1: f64, t2: f64, radius: f64) -> Result<RegionSpec> {
        validate_region(&[(0.0, t1), (radius, t1), (radius, t2), (0.0, t2)])
    }

    /// {r1 < |x| < r2, t1 ≤ t ≤ t2}.
    pub fn rectangle(r1: f64, r2: f64, t1: f64, t2: f64) -> Result<RegionSpec> {
        validate_region(&[(r1, t1), (r2, t1), (r2, t2), (r1, t2)])
    }

    pub fn t_range(&self) -> (f64, f64) {
        let lo = self.vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let hi = self.vertices.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn r_max(&self) -> f64 {
        self.vertices.iter().map(|v| v.0).fold(0.0, f64::max)
    }

    pub fn vertex_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.vertices.iter().map(|v| v.1).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        ts
    }

    /// Radial intervals of the horizontal section at time `t`.
    pub fn slice_at(&self, t: f64) -> Vec<(f64, f64)> {
        let mut xs = Vec::new();
        for s in &self.segments {
            let (a, b) = (s.a, s.b);
            if a.1 == b.1 {
                continue;
            }
            let (lo, hi) = if a.1 < b.1 { (a, b) } else { (b, a) };
            if t >= lo.1 && t < hi.1 {
                xs.push(lo.0 + (t - lo.1) * (hi.0 - lo.0) / (hi.1 - lo.1));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.chunks_exact(2).map(|c| (c[0], c[1])).collect()
    }

    pub fn contains(&self, r: f64, t: f64) -> bool {
        self.slice_at(t).iter().any(|&(a, b)| r >= a && r < b)
    }
}

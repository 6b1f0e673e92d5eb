use crate::error::{Error, Result};
use crate::state::SimState;
use crate::stencil::{PointSample, StateSampler};

/// Time-ordered states at uniform spacing `stride * dt`.
#[derive(Clone, Debug)]
pub struct SpacetimeTrace {
    pub states: Vec<SimState>,
    pub stride: usize,
    pub dt: f64,
}

impl SpacetimeTrace {
    pub fn new(states: Vec<SimState>, stride: usize, dt: f64) -> Result<SpacetimeTrace> {
        if states.is_empty() {
            return Err(Error::InvalidParameter("empty trace".into()));
        }
        let spacing = stride as f64 * dt;
        for pair in states.windows(2) {
            let gap = pair[1].t - pair[0].t;
            if !(gap > 0.0) || (gap - spacing).abs() > 1e-9 * spacing.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "trace times not uniformly spaced by {spacing}"
                )));
            }
        }
        Ok(SpacetimeTrace { states, stride, dt })
    }

    pub fn t_first(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_last(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the stored state at or before `t` and the linear weight of
    /// its successor.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        locate_uniform(t, self.t_first(), self.t_last(), self.len())
    }

    pub fn sampler_at(&self, t: f64) -> Result<TimeSampler<'_>> {
        let (j, alpha) = self.locate(t)?;
        let lo = StateSampler::new(&self.states[j]);
        let hi = if alpha > 0.0 { Some(StateSampler::new(&self.states[j + 1])) } else { None };
        Ok(TimeSampler { lo, hi, alpha })
    }

    /// Interpolated sample at (r, θ, t). Builds derivative fields for the two
    /// bracketing states on every call; use [`SpacetimeTrace::sampler_at`]
    /// for many points at one time.
    pub fn interpolate(&self, r: f64, theta: f64, t: f64) -> Result<PointSample> {
        self.sampler_at(t)?.sample(r, theta)
    }
}

pub(crate) fn locate_uniform(t: f64, first: f64, last: f64, n: usize) -> Result<(usize, f64)> {
    let slack = 1e-9 * (last - first).abs().max(1.0);
    if !(t >= first - slack && t <= last + slack) {
        return Err(Error::OutsideWindow { t, first, last });
    }
    if n == 1 {
        return Ok((0, 0.0));
    }
    let spacing = (last - first) / (n - 1) as f64;
    let s = ((t - first) / spacing).clamp(0.0, (n - 1) as f64);
    let mut j = s.floor() as usize;
    if j >= n - 1 {
        j = n - 2;
    }
    let alpha = s - j as f64;
    if alpha < 1e-12 {
        return Ok((j, 0.0));
    }
    if alpha > 1.0 - 1e-12 {
        return Ok(if j + 1 == n - 1 { (j, 1.0) } else { (j + 1, 0.0) });
    }
    Ok((j, alpha))
}

pub struct TimeSampler<'a> {
    lo: StateSampler<'a>,
    hi: Option<StateSampler<'a>>,
    alpha: f64,
}

impl TimeSampler<'_> {
    pub fn sample(&self, r: f64, theta: f64) -> Result<PointSample> {
        let a = self.lo.sample(r, theta)?;
        match &self.hi {
            Some(hi) => Ok(PointSample::blend(&a, &hi.sample(r, theta)?, self.alpha)),
            None => Ok(a),
        }
    }
}

//! Leapfrog evolution in the radial and axisymmetric formulations.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::InitialData;
use crate::error::{Error, Result};
use crate::geometry;
use crate::grid::Grid;
use crate::state::{ProblemSpec, SimState};
use crate::trace::SpacetimeTrace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub store_stride: usize,
    /// Energies are recorded every `energy_stride` steps (and at the first
    /// and last steps).
    pub energy_stride: usize,
    /// Steps between evaluations of the (costlier) quadrature energy.
    pub quadrature_stride: usize,
    /// Upper bound on stored-trace memory, checked before stepping.
    pub memory_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { cfl: 0.5, t_end: 1.0, store_stride: 1, energy_stride: 8, quadrature_stride: 64, memory_budget: 2 << 30 }
    }
}

impl SolverConfig {
    pub fn new(cfl: f64, t_end: f64, store_stride: usize) -> SolverConfig {
        SolverConfig { cfl, t_end, store_stride, ..SolverConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::InvalidParameter(format!("cfl must lie in (0, 0.9] (got {})", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be >= 0 (got {})", self.t_end)));
        }
        if self.store_stride == 0 || self.energy_stride == 0 || self.quadrature_stride == 0 {
            return Err(Error::InvalidParameter("strides must be >= 1".into()));
        }
        Ok(())
    }

    /// Step count (a multiple of the store stride) and step size.
    pub fn steps(&self, grid: &Grid) -> (usize, f64) {
        let dt_max = grid.dt_for(self.cfl);
        let k = self.store_stride;
        if self.t_end == 0.0 {
            return (0, dt_max);
        }
        let blocks = (self.t_end / (k as f64 * dt_max) - 1e-12).ceil().max(1.0) as usize;
        let n = blocks * k;
        (n, self.t_end / n as f64)
    }
}

/// Energy history of a run. `energy` is the leapfrog discrete energy at the
/// half steps, which the scheme conserves up to the nonlinear O(dt²) term;
/// `quadrature_energy` is the cell-quadrature energy of the synchronous
/// states, which in addition carries an O(h²) diagnostic offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyDriftReport {
    pub grid: Grid,
    pub dt: f64,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// max |E(t) − E(t_first)| / E(t_first) over the discrete energy.
    pub max_rel_drift: f64,
    pub quadrature_times: Vec<f64>,
    pub quadrature_energy: Vec<f64>,
    pub quadrature_drift: f64,
}

fn rel_drift(series: &[f64]) -> f64 {
    let Some(&e0) = series.first() else { return 0.0 };
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    series.iter().map(|e| (e - e0).abs() / scale).fold(0.0, f64::max)
}

pub fn initial_state(data: &dyn InitialData, problem: ProblemSpec, grid: Grid) -> Result<SimState> {
    SimState::from_fn(grid, problem, 0.0, |rho, z| {
        let s = data.sample(rho, z);
        (s.u0, s.u1)
    })
}

/// Causal sizing check: the data support grown by T must fit in the grid.
pub fn check_causal(data: &dyn InitialData, grid: &Grid, t_end: f64) -> Result<()> {
    let needed = data.support_radius() + t_end;
    let have = match *grid {
        Grid::Radial { r_max, .. } => r_max,
        Grid::Axisym { rho_max, z_max, .. } => rho_max.min(z_max),
    };
    if have < needed {
        return Err(Error::CausalMargin { needed, have });
    }
    Ok(())
}

enum Fields {
    /// w = ru and v = r ∂ₜu at the cell centers.
    Radial { w: Vec<f64>, v: Vec<f64>, r: Vec<f64> },
    Axisym { u: Vec<f64>, v: Vec<f64>, cp: Vec<f64>, cm: Vec<f64> },
}

/// Velocity-Verlet form of the leapfrog scheme with the acceleration cached
/// between steps; positions agree with the three-level leapfrog recurrence.
pub struct Stepper {
    grid: Grid,
    problem: ProblemSpec,
    fields: Fields,
    acc: Vec<f64>,
    old: Vec<f64>,
    /// Keep the previous level during the next step for [`Stepper::discrete_energy`].
    pub track_energy: bool,
    pub t: f64,
}

impl Stepper {
    pub fn new(state: &SimState) -> Stepper {
        let grid = state.grid;
        let fields = match grid {
            Grid::Radial { n_r, .. } => {
                let r: Vec<f64> = (0..n_r).map(|i| grid.r_node(i)).collect();
                Fields::Radial {
                    w: state.u.iter().zip(&r).map(|(u, r)| u * r).collect(),
                    v: state.ut.iter().zip(&r).map(|(v, r)| v * r).collect(),
                    r,
                }
            }
            Grid::Axisym { n_rho, .. } => {
                let drho = grid.drho();
                let h2 = drho * drho;
                let cp = (0..n_rho).map(|i| (i as f64 + 1.0) / ((i as f64 + 0.5) * h2)).collect();
                let cm = (0..n_rho).map(|i| i as f64 / ((i as f64 + 0.5) * h2)).collect();
                Fields::Axisym { u: state.u.clone(), v: state.ut.clone(), cp, cm }
            }
        };
        let mut s = Stepper {
            grid,
            problem: state.problem,
            fields,
            acc: vec![0.0; grid.len()],
            old: vec![0.0; grid.len()],
            track_energy: true,
            t: state.t,
        };
        s.update_acc();
        s
    }

    fn update_acc(&mut self) {
        let problem = self.problem;
        match (&self.fields, self.grid) {
            (Fields::Radial { w, r, .. }, Grid::Radial { n_r, .. }) => {
                let dr = self.grid.dr();
                let c = 1.0 / (dr * dr);
                let acc = &mut self.acc;
                for i in 0..n_r {
                    let left = if i == 0 { -w[0] } else { w[i - 1] };
                    let right = if i + 1 < n_r { w[i + 1] } else { 0.0 };
                    acc[i] = (left - 2.0 * w[i] + right) * c - r[i] * problem.force(w[i] / r[i]);
                }
            }
            (Fields::Axisym { u, cp, cm, .. }, Grid::Axisym { n_rho, n_z, .. }) => {
                let dz = self.grid.dz();
                let cz = 1.0 / (dz * dz);
                let u = u.as_slice();
                let zero = vec![0.0; n_rho];
                let cubic = problem.is_cubic() && problem.lambda() == 1.0;
                let row = |j: usize, out: &mut [f64]| {
                    let here = &u[j * n_rho..(j + 1) * n_rho];
                    let below = if j > 0 { &u[(j - 1) * n_rho..j * n_rho] } else { &zero[..] };
                    let above = if j + 1 < n_z { &u[(j + 1) * n_rho..(j + 2) * n_rho] } else { &zero[..] };
                    for i in 0..n_rho {
                        let c = here[i];
                        let right = if i + 1 < n_rho { here[i + 1] } else { 0.0 };
                        let left = if i > 0 { here[i - 1] } else { c };
                        let f = if cubic { c * c * c } else { problem.force(c) };
                        out[i] = cp[i] * (right - c) - cm[i] * (c - left) + (above[i] - 2.0 * c + below[i]) * cz - f;
                    }
                };
                if n_rho * n_z >= 1 << 16 {
                    self.acc.par_chunks_mut(n_rho).enumerate().for_each(|(j, out)| row(j, out));
                } else {
                    self.acc.chunks_mut(n_rho).enumerate().for_each(|(j, out)| row(j, out));
                }
            }
            _ => unreachable!("fields always match the grid"),
        }
    }

    fn positions_velocities(&mut self) -> (&mut Vec<f64>, &mut Vec<f64>) {
        match &mut self.fields {
            Fields::Radial { w, v, .. } => (w, v),
            Fields::Axisym { u, v, .. } => (u, v),
        }
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        let limit = self.grid.dt_for(1.0);
        if dt > limit {
            return Err(Error::Cfl { dt, limit });
        }
        let half = 0.5 * dt;
        let acc = std::mem::take(&mut self.acc);
        let mut old = std::mem::take(&mut self.old);
        {
            let track = self.track_energy;
            let (x, v) = self.positions_velocities();
            if track {
                for (((x, v), a), o) in x.iter_mut().zip(v.iter_mut()).zip(&acc).zip(old.iter_mut()) {
                    *o = *x;
                    *v += half * a;
                    *x += dt * *v;
                }
            } else {
                for ((x, v), a) in x.iter_mut().zip(v.iter_mut()).zip(&acc) {
                    *v += half * a;
                    *x += dt * *v;
                }
            }
        }
        self.acc = acc;
        self.old = old;
        self.update_acc();
        let acc = std::mem::take(&mut self.acc);
        let mut finite = true;
        {
            let (x, v) = self.positions_velocities();
            for ((x, v), a) in x.iter().zip(v.iter_mut()).zip(&acc) {
                *v += half * a;
                finite &= x.is_finite() && v.is_finite();
            }
        }
        self.acc = acc;
        self.t += dt;
        if !finite {
            return Err(Error::NonFinite { t: self.t });
        }
        Ok(())
    }

    pub fn state(&self) -> SimState {
        let (u, ut) = match &self.fields {
            Fields::Radial { w, v, r } => (
                w.iter().zip(r).map(|(w, r)| w / r).collect(),
                v.iter().zip(r).map(|(v, r)| v / r).collect(),
            ),
            Fields::Axisym { u, v, .. } => (u.clone(), v.clone()),
        };
        SimState { grid: self.grid, problem: self.problem, t: self.t, u, ut }
    }

    /// Leapfrog discrete energy between the previous and the current level:
    /// ½|Δx/dt|² + ½B(xⁿ, xⁿ⁺¹) + mean potential, with B the quadratic form
    /// of the scheme's own Laplacian. Meaningful after at least one step.
    pub fn discrete_energy(&self, dt: f64) -> f64 {
        let problem = self.problem;
        let (a, b) = (&self.old, match &self.fields {
            Fields::Radial { w, .. } => w,
            Fields::Axisym { u, .. } => u,
        });
        match (&self.fields, self.grid) {
            (Fields::Radial { r, .. }, Grid::Radial { n_r, .. }) => {
                let dr = self.grid.dr();
                let mut grad = 2.0 * a[0] * b[0] + a[n_r - 1] * b[n_r - 1];
                for i in 0..n_r - 1 {
                    grad += (a[i + 1] - a[i]) * (b[i + 1] - b[i]);
                }
                let mut e = 0.5 * grad / (dr * dr);
                for i in 0..n_r {
                    let v = (b[i] - a[i]) / dt;
                    let pot = problem.potential(a[i] / r[i]) + problem.potential(b[i] / r[i]);
                    e += 0.5 * v * v + 0.5 * r[i] * r[i] * pot;
                }
                4.0 * PI * dr * e
            }
            (Fields::Axisym { .. }, Grid::Axisym { n_rho, n_z, .. }) => {
                let (drho, dz) = (self.grid.drho(), self.grid.dz());
                let rows: Vec<f64> = (0..n_z)
                    .into_par_iter()
                    .map(|j| {
                        let base = j * n_rho;
                        let mut s = 0.0;
                        for i in 0..n_rho {
                            let k = base + i;
                            let rho = self.grid.rho_node(i);
                            let rho_face = (i as f64 + 1.0) * drho;
                            let (ra, rb) = if i + 1 < n_rho { (a[k + 1], b[k + 1]) } else { (0.0, 0.0) };
                            let g_rho = rho_face * (ra - a[k]) * (rb - b[k]) / (drho * drho);
                            let (za, zb) = if j + 1 < n_z { (a[k + n_rho], b[k + n_rho]) } else { (0.0, 0.0) };
                            let mut g_z = rho * (za - a[k]) * (zb - b[k]);
                            if j == 0 {
                                g_z += rho * a[k] * b[k];
                            }
                            let v = (b[k] - a[k]) / dt;
                            s += 0.5 * g_rho
                                + 0.5 * g_z / (dz * dz)
                                + rho * (0.5 * v * v + 0.5 * (problem.potential(a[k]) + problem.potential(b[k])));
                        }
                        s
                    })
                    .collect();
                2.0 * PI * drho * dz * rows.iter().sum::<f64>()
            }
            _ => unreachable!("fields always match the grid"),
        }
    }

    /// Total energy of the current fields (see [`geometry::total_energy`]).
    pub fn energy(&self) -> f64 {
        match &self.fields {
            Fields::Radial { .. } => geometry::total_energy(&self.state()),
            Fields::Axisym { u, v, .. } => geometry::energy_of(&self.grid, &self.problem, u, v),
        }
    }
}

/// One leapfrog step of a radial state.
pub fn step_radial(state: &SimState, dt: f64) -> Result<SimState> {
    if !matches!(state.grid, Grid::Radial { .. }) {
        return Err(Error::Backend("step_radial needs a radial grid".into()));
    }
    let mut s = Stepper::new(state);
    s.step(dt)?;
    Ok(s.state())
}

/// One leapfrog step of an axisymmetric state.
pub fn step_axisym(state: &SimState, dt: f64) -> Result<SimState> {
    if !matches!(state.grid, Grid::Axisym { .. }) {
        return Err(Error::Backend("step_axisym needs an axisymmetric grid".into()));
    }
    let mut s = Stepper::new(state);
    s.step(dt)?;
    Ok(s.state())
}

/// Evolves from `start`, handing every stored state (every `store_stride`
/// steps, including the first) to `observe`.
pub fn evolve_state_with(
    start: &SimState,
    config: &SolverConfig,
    mut observe: impl FnMut(&SimState) -> Result<()>,
) -> Result<EnergyDriftReport> {
    config.validate()?;
    let grid = start.grid;
    let (n_steps, dt) = config.steps(&grid);
    start.check_finite()?;
    let mut stepper = Stepper::new(start);
    let t0 = start.t;
    let (mut times, mut energy) = (Vec::with_capacity(n_steps), Vec::with_capacity(n_steps));
    let mut quadrature_times = vec![t0];
    let mut quadrature_energy = vec![stepper.energy()];
    observe(start)?;
    for n in 1..=n_steps {
        stepper.track_energy = n % config.energy_stride == 0 || n == n_steps || n == 1;
        stepper.step(dt)?;
        stepper.t = t0 + n as f64 * dt;
        if stepper.track_energy {
            times.push(t0 + (n as f64 - 0.5) * dt);
            energy.push(stepper.discrete_energy(dt));
        }
        if n % config.store_stride == 0 {
            observe(&stepper.state())?;
        }
        if n % config.quadrature_stride == 0 || n == n_steps {
            quadrature_times.push(stepper.t);
            quadrature_energy.push(stepper.energy());
        }
    }
    Ok(EnergyDriftReport {
        grid,
        dt,
        max_rel_drift: rel_drift(&energy),
        times,
        energy,
        quadrature_drift: rel_drift(&quadrature_energy),
        quadrature_times,
        quadrature_energy,
    })
}

/// Streaming evolution from initial data.
pub fn evolve_with(
    data: &dyn InitialData,
    problem: ProblemSpec,
    grid: Grid,
    config: &SolverConfig,
    observe: impl FnMut(&SimState) -> Result<()>,
) -> Result<EnergyDriftReport> {
    config.validate()?;
    check_causal(data, &grid, config.t_end)?;
    let start = initial_state(data, problem, grid)?;
    evolve_state_with(&start, config, observe)
}

/// Bytes needed to store a full trace for this run.
pub fn trace_bytes(grid: &Grid, config: &SolverConfig) -> usize {
    let (n_steps, _) = config.steps(grid);
    (n_steps / config.store_stride + 1) * 2 * grid.len() * std::mem::size_of::<f64>()
}

/// Evolution keeping every stored state in memory.
pub fn evolve(
    data: &dyn InitialData,
    problem: ProblemSpec,
    grid: Grid,
    config: &SolverConfig,
) -> Result<(SpacetimeTrace, EnergyDriftReport)> {
    config.validate()?;
    let needed = trace_bytes(&grid, config);
    if needed > config.memory_budget {
        return Err(Error::Memory { needed, budget: config.memory_budget });
    }
    let mut states = Vec::new();
    let report = evolve_with(data, problem, grid, config, |s| {
        states.push(s.clone());
        Ok(())
    })?;
    let trace = SpacetimeTrace::new(states, config.store_stride, report.dt)?;
    Ok((trace, report))
}

/// Full-trace evolution from an arbitrary state (used for reversal tests).
pub fn evolve_state(start: &SimState, config: &SolverConfig) -> Result<(SpacetimeTrace, EnergyDriftReport)> {
    let mut states = Vec::new();
    let report = evolve_state_with(start, config, |s| {
        states.push(s.clone());
        Ok(())
    })?;
    let trace = SpacetimeTrace::new(states, config.store_stride, report.dt)?;
    Ok((trace, report))
}

//! Run configuration: TOML on disk, validated against the solver and
//! diagnostic preconditions before anything is allocated.

use std::path::PathBuf;
use std::sync::Arc;

use conewave::data::{cutoff_data, gaussian_data, AngularProfile, DataSample, InitialData};
use conewave::geometry::ShellSample;
use conewave::region::{validate_region, RegionSpec};
use conewave::solver::{check_causal, SolverConfig};
use conewave::{Coupling, Grid, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub data: DataConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Recorded in the manifest; no diagnostic currently draws random numbers.
    #[serde(default)]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("conewave-out")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingName {
    Defocusing,
    Linear,
    Focusing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    #[serde(default = "defocusing")]
    pub coupling: CouplingName,
}

fn defocusing() -> CouplingName {
    CouplingName::Defocusing
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    CutoffGaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Monopole,
    ZTilt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub family: Family,
    #[serde(default = "monopole")]
    pub profile: Profile,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub offset: f64,
    /// Radius inside which the cutoff family is zeroed.
    #[serde(default)]
    pub cutoff_radius: Option<f64>,
}

fn monopole() -> Profile {
    Profile::Monopole
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendName {
    Radial,
    Axisym,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub backend: BackendName,
    #[serde(default)]
    pub n_r: Option<usize>,
    #[serde(default)]
    pub n_rho: Option<usize>,
    #[serde(default)]
    pub n_z: Option<usize>,
    /// Defaults to the causal size: data support radius + t_end.
    #[serde(default)]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub store_stride: usize,
    pub memory_budget_mb: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { cfl: 0.5, t_end: 10.0, store_stride: 4, memory_budget_mb: 2048 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub kappa: f64,
    /// Inner-cone aperture c in E₋(t; 0, c t).
    pub inner_c: f64,
    /// Time exponent of the L^q_t L^{p+1}_x norm.
    pub q: f64,
    /// Backward cone regions as (t0, r0).
    pub cones: Vec<[f64; 2]>,
    /// Extra polygons in the (r, t) half-plane.
    pub regions: Vec<Vec<[f64; 2]>>,
    pub morawetz_radii: Vec<f64>,
    pub flux_samples: usize,
    /// Start of the decay-fit window; the window ends at t_end.
    pub decay_t0: f64,
    pub ledgers: bool,
    pub morawetz: bool,
    pub weighted_morawetz: bool,
    /// Also evolve the time-reversed data for the two-sided budget.
    pub two_sided: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            kappa: 0.75,
            inner_c: 0.5,
            q: 10.0,
            cones: vec![[0.0, 2.0]],
            regions: Vec::new(),
            morawetz_radii: vec![0.5, 1.0, 2.0],
            flux_samples: 16,
            decay_t0: 2.0,
            ledgers: true,
            morawetz: true,
            weighted_morawetz: true,
            two_sided: false,
        }
    }
}

/// Data with u₁ negated, i.e. the trace of u(−t).
#[derive(Debug)]
pub struct TimeReversed(pub Arc<dyn InitialData>);

impl InitialData for TimeReversed {
    fn sample(&self, rho: f64, z: f64) -> DataSample {
        let s = self.0.sample(rho, z);
        DataSample { u1: -s.u1, ..s }
    }

    fn support_radius(&self) -> f64 {
        self.0.support_radius()
    }

    fn is_radial(&self) -> bool {
        self.0.is_radial()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.0.breakpoints()
    }
}

/// Everything a run needs, checked.
#[derive(Clone, Debug)]
pub struct Plan {
    pub problem: ProblemSpec,
    pub data: Arc<dyn InitialData>,
    pub grid: Grid,
    pub solver: SolverConfig,
    pub regions: Vec<RegionSpec>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, CliError> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    /// Copy with every grid dimension multiplied by 2^level.
    pub fn refined(&self, level: u32) -> RunConfig {
        let mut c = self.clone();
        let k = 1usize << level;
        c.grid.n_r = c.grid.n_r.map(|n| n * k);
        c.grid.n_rho = c.grid.n_rho.map(|n| n * k);
        c.grid.n_z = c.grid.n_z.map(|n| n * k);
        c
    }

    /// Hash input: the configuration without its output location.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        serde_json::to_string(&c).expect("config serializes")
    }

    pub fn data(&self) -> Result<Arc<dyn InitialData>, CliError> {
        let d = &self.data;
        let profile = match d.profile {
            Profile::Monopole => AngularProfile::Monopole,
            Profile::ZTilt => AngularProfile::ZTilt,
        };
        let base: Arc<dyn InitialData> = Arc::new(gaussian_data(d.amplitude, d.width, d.offset, profile).map_err(|e| bad(e.to_string()))?);
        match (d.family, d.cutoff_radius) {
            (Family::Gaussian, None) => Ok(base),
            (Family::Gaussian, Some(_)) => Err(bad("cutoff_radius only applies to the cutoff-gaussian family")),
            (Family::CutoffGaussian, Some(r)) => Ok(Arc::new(cutoff_data(base, r).map_err(|e| bad(e.to_string()))?)),
            (Family::CutoffGaussian, None) => Err(bad("cutoff-gaussian needs cutoff_radius")),
        }
    }

    pub fn plan(&self) -> Result<Plan, CliError> {
        let coupling = match self.problem.coupling {
            CouplingName::Defocusing => Coupling::Defocusing,
            CouplingName::Linear => Coupling::Linear,
            CouplingName::Focusing => return Err(bad("the focusing equation is out of scope; use defocusing or linear")),
        };
        let problem = ProblemSpec::with_coupling(self.problem.p, coupling).map_err(|e| bad(e.to_string()))?;
        let data = self.data()?;
        let t = &self.time;
        if !(t.t_end > 0.0 && t.t_end.is_finite()) {
            return Err(bad(format!("t_end must be positive (got {})", t.t_end)));
        }
        let radius = self.grid.radius.unwrap_or(data.support_radius() + t.t_end);
        let g = &self.grid;
        let grid = match g.backend {
            BackendName::Radial => {
                if g.n_rho.is_some() || g.n_z.is_some() {
                    return Err(bad("radial grids take n_r only"));
                }
                Grid::radial(radius, g.n_r.ok_or_else(|| bad("radial grid needs n_r"))?)
            }
            BackendName::Axisym => {
                if g.n_r.is_some() {
                    return Err(bad("axisym grids take n_rho and n_z"));
                }
                let n_rho = g.n_rho.ok_or_else(|| bad("axisym grid needs n_rho"))?;
                Grid::axisym(radius, radius, n_rho, g.n_z.unwrap_or(2 * n_rho))
            }
        }
        .map_err(|e| bad(e.to_string()))?;
        if !data.is_radial() && g.backend == BackendName::Radial {
            return Err(bad("the radial backend needs radial data (profile = \"monopole\")"));
        }
        check_causal(&*data, &grid, t.t_end).map_err(|e| bad(e.to_string()))?;
        let solver = SolverConfig {
            memory_budget: t.memory_budget_mb << 20,
            ..SolverConfig::new(t.cfl, t.t_end, t.store_stride)
        };
        solver.validate().map_err(|e| bad(e.to_string()))?;
        let dg = &self.diagnostics;
        if !(dg.inner_c > 0.0 && dg.inner_c < 1.0) {
            return Err(bad(format!("inner_c must lie in (0, 1) (got {})", dg.inner_c)));
        }
        if !(dg.kappa > 0.0 && dg.kappa.is_finite()) || !(dg.q >= 1.0 && dg.q.is_finite()) {
            return Err(bad("kappa must be positive and q at least 1"));
        }
        if dg.flux_samples < 2 {
            return Err(bad("flux_samples must be at least 2"));
        }
        if dg.morawetz_radii.iter().any(|&r| !(r > 0.0 && r < radius)) {
            return Err(bad("morawetz_radii must lie inside the grid"));
        }
        let mut regions = Vec::new();
        for &[t0, r0] in &dg.cones {
            regions.push(RegionSpec::cone(t0, r0).map_err(|e| bad(e.to_string()))?);
        }
        for poly in &dg.regions {
            let v: Vec<(f64, f64)> = poly.iter().map(|&[r, t]| (r, t)).collect();
            regions.push(validate_region(&v).map_err(|e| bad(e.to_string()))?);
        }
        for r in &regions {
            let (lo, hi) = r.t_range();
            if lo < 0.0 || hi > t.t_end + 1e-12 || r.r_max() >= radius {
                return Err(bad(format!("region {:?} leaves the computed window", r.vertices)));
            }
        }
        let plan = Plan { problem, data, grid, solver, regions };
        let needed = plan.trace_bytes() * if dg.two_sided { 2 } else { 1 };
        if needed > plan.solver.memory_budget {
            return Err(bad(format!("estimated memory {needed} bytes exceeds budget {} bytes", plan.solver.memory_budget)));
        }
        Ok(plan)
    }
}

impl Plan {
    /// Pre-flight estimate of the stored shell trace.
    pub fn trace_bytes(&self) -> usize {
        let (steps, _) = self.solver.steps(&self.grid);
        let profiles = steps / self.solver.store_stride + 1;
        let shells = (self.grid.radius() / self.grid.h()).ceil() as usize + 2;
        profiles * shells * std::mem::size_of::<ShellSample>()
    }
}

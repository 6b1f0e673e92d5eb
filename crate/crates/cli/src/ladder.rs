//! Refinement ladders: the same configuration at h, h/2, h/4, … and the
//! observed convergence orders.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{sha256_hex, write_json};
use crate::pipeline::{run, RunReport};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: u32,
    pub h: f64,
    pub energy_drift: f64,
    pub max_cone_residual: Option<f64>,
    pub slab_residual: f64,
    pub mu_discrepancy: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub quantity: String,
    pub values: Vec<f64>,
    /// log2 of successive ratios; NaN where a value is exactly zero.
    pub orders: Vec<f64>,
    pub required: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub config_sha256: String,
    pub levels: Vec<LevelSummary>,
    pub orders: Vec<OrderCheck>,
    pub pass: bool,
}

pub const DRIFT_ORDER: f64 = 1.8;
pub const RESIDUAL_ORDER: f64 = 1.0;

pub fn order_check(quantity: &str, values: Vec<f64>, required: Option<f64>) -> OrderCheck {
    let orders: Vec<f64> =
        values.windows(2).map(|w| if w[0] > 0.0 && w[1] > 0.0 { (w[0] / w[1]).log2() } else { f64::NAN }).collect();
    let pass = match required {
        Some(q) => orders.iter().filter(|o| !o.is_nan()).all(|&o| o >= q),
        None => true,
    };
    OrderCheck { quantity: quantity.into(), values, orders, required, pass }
}

/// Runs every level (concurrently, within the global thread pool) into
/// `out/level_k` and writes `convergence.json` and `convergence.csv`.
pub fn ladder(cfg: &RunConfig, levels: u32, out: &Path) -> Result<LadderReport, CliError> {
    if levels < 2 {
        return Err(CliError::Config(format!("a ladder needs at least 2 levels (got {levels})")));
    }
    let configs: Vec<RunConfig> = (0..levels).map(|k| cfg.refined(k)).collect();
    let plans = configs.iter().map(|c| c.plan()).collect::<Result<Vec<_>, _>>()?;
    let budget = plans[0].solver.memory_budget;
    let needed: usize = plans.iter().map(|p| p.trace_bytes()).sum::<usize>() * if cfg.diagnostics.two_sided { 2 } else { 1 };
    if needed > budget {
        return Err(CliError::Config(format!("concurrent ladder levels need an estimated {needed} bytes, budget is {budget}")));
    }
    let reports: Vec<RunReport> = configs
        .par_iter()
        .enumerate()
        .map(|(k, c)| run(c, &out.join(format!("level_{k}"))))
        .collect::<Result<_, _>>()?;
    let levels: Vec<LevelSummary> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| LevelSummary {
            level: k as u32,
            h: r.h,
            energy_drift: r.energy_drift,
            max_cone_residual: r.max_cone_residual,
            slab_residual: r.slab_residual,
            mu_discrepancy: r.mu.discrepancy,
            pass: r.pass,
        })
        .collect();
    let mut orders = vec![order_check("energy_drift", levels.iter().map(|l| l.energy_drift).collect(), Some(DRIFT_ORDER))];
    if levels.iter().all(|l| l.max_cone_residual.is_some()) {
        let v = levels.iter().map(|l| l.max_cone_residual.unwrap_or(0.0)).collect();
        orders.push(order_check("cone_residual", v, Some(RESIDUAL_ORDER)));
    }
    orders.push(order_check("slab_residual", levels.iter().map(|l| l.slab_residual).collect(), None));
    orders.push(order_check("mu_discrepancy", levels.iter().map(|l| l.mu_discrepancy).collect(), None));
    let pass = orders.iter().all(|o| o.pass) && levels.iter().all(|l| l.pass);
    let report = LadderReport { config_sha256: sha256_hex(cfg.canonical_json().as_bytes()), levels, orders, pass };
    write_json(&out.join("convergence.json"), &report)?;
    let path = out.join("convergence.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_record(["quantity", "level", "h", "value", "order"]).map_err(|e| CliError::Io(e.to_string()))?;
    for o in &report.orders {
        for (k, v) in o.values.iter().enumerate() {
            let order = if k == 0 { String::new() } else { o.orders[k - 1].to_string() };
            let h = report.levels[k].h.to_string();
            w.write_record([o.quantity.clone(), k.to_string(), h, v.to_string(), order]).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(report)
}

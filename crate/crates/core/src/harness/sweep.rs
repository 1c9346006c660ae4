//! Monte-Carlo sweeps over one scenario parameter.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sea_surface::SeaStateLevel;

use super::config::ScenarioConfig;
use super::interval::{run_coherence_interval, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    /// Receiver mast height `h_r^0`, meters.
    Hr0,
    /// RIS element count.
    N,
    /// Maximum transmit power, watts.
    Pmax,
    /// Sea state.
    Sea,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Hr0 => "hr0",
            SweepVariable::N => "n",
            SweepVariable::Pmax => "pmax",
            SweepVariable::Sea => "sea",
        }
    }

    /// Parses one list entry for this variable.
    pub fn parse_value(self, text: &str) -> Result<SweepValue> {
        let text = text.trim();
        match self {
            SweepVariable::Sea => Ok(SweepValue::Sea(text.parse()?)),
            _ => text
                .parse::<f64>()
                .map(SweepValue::Number)
                .map_err(|_| Error::Config(format!("{}: cannot parse value {text:?}", self.name()))),
        }
    }

    /// Parses a comma-separated list such as `2,5,10`.
    pub fn parse_list(self, list: &str) -> Result<Vec<SweepValue>> {
        let values = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| self.parse_value(s))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        Ok(values)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hr0" => Ok(SweepVariable::Hr0),
            "n" => Ok(SweepVariable::N),
            "pmax" => Ok(SweepVariable::Pmax),
            "sea" => Ok(SweepVariable::Sea),
            other => Err(Error::Config(format!("unknown sweep variable {other:?} (expected hr0, n, pmax or sea)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Sea(SeaStateLevel),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Display of f64 is the shortest string that parses back exactly
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Sea(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<SweepValue>,
    pub trials: usize,
}

/// Aggregates for one `(value, sea state)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub sweep_var: SweepVariable,
    pub value: SweepValue,
    pub sea_state: SeaStateLevel,
    #[serde(with = "nan_as_null")]
    pub mean_rate_ris: f64,
    #[serde(with = "nan_as_null")]
    pub std_rate_ris: f64,
    #[serde(with = "nan_as_null")]
    pub mean_rate_noris: f64,
    #[serde(with = "nan_as_null")]
    pub std_rate_noris: f64,
    /// Mean over trials with at least one IoT; NaN when there were none.
    #[serde(with = "nan_as_null")]
    pub mean_los_prob: f64,
    #[serde(with = "nan_as_null")]
    pub mean_tx_power_w: f64,
    /// Trials that completed.
    pub trials: usize,
    pub seed: u64,
    /// First error among failed trials.
    pub error: Option<String>,
    pub records: Vec<TrialRecord>,
}

/// JSON has no NaN; empty statistics travel as `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_some(x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub seed: u64,
    pub cells: Vec<CellResult>,
}

impl SweepTable {
    pub fn failed_cells(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.error.is_some())
    }
}

/// Config for one cell: `cfg` with the swept value applied.
pub fn apply_value(cfg: &ScenarioConfig, variable: SweepVariable, value: SweepValue) -> Result<ScenarioConfig> {
    let mut out = cfg.clone();
    match (variable, value) {
        (SweepVariable::Hr0, SweepValue::Number(h)) => out.geometry.rx_mast_height = h,
        (SweepVariable::N, SweepValue::Number(n)) => {
            if !(n >= 1.0) || n.fract() != 0.0 || n > u32::MAX as f64 {
                return Err(Error::Config(format!("RIS element count must be a positive integer, got {n}")));
            }
            out.radio.ris_elements = n as usize;
        }
        (SweepVariable::Pmax, SweepValue::Number(p)) => out.energy.p_max = p,
        (SweepVariable::Sea, SweepValue::Sea(level)) => out.sea_states = vec![level],
        (var, val) => return Err(Error::Config(format!("value {val} does not fit sweep variable {var}"))),
    }
    out.validate()?;
    Ok(out)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn mean_of(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Runs `spec.trials` intervals per cell. Trials run in parallel; results are
/// gathered in trial order and reduced sequentially, so the table depends
/// only on the config and seed. A failing trial marks its cell but does not
/// stop the sweep.
pub fn run_sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<SweepTable> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if spec.trials == 0 {
        return Err(Error::Config("sweep needs at least one trial".into()));
    }
    let mut cells = Vec::new();
    for &value in &spec.values {
        let cell_cfg = apply_value(cfg, spec.variable, value)?;
        for &level in &cell_cfg.sea_states {
            cells.push((value, level, cell_cfg.clone()));
        }
    }
    let jobs: Vec<(usize, u64)> =
        (0..cells.len()).flat_map(|c| (0..spec.trials as u64).map(move |t| (c, t))).collect();
    let work = || -> Vec<Result<TrialRecord>> {
        jobs.par_iter()
            .map(|&(c, t)| run_coherence_interval(&cells[c].2, cells[c].1, t))
            .collect()
    };
    let results = match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut results = results.into_iter();
    let table = cells
        .iter()
        .map(|(value, level, _)| {
            let mut records = Vec::with_capacity(spec.trials);
            let mut error = None;
            for r in results.by_ref().take(spec.trials) {
                match r {
                    Ok(rec) => records.push(rec),
                    Err(e) => {
                        error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            let ris: Vec<f64> = records.iter().map(|r| r.rate_with_ris).collect();
            let noris: Vec<f64> = records.iter().map(|r| r.rate_without_ris).collect();
            let (mean_rate_ris, std_rate_ris) = mean_std(&ris);
            let (mean_rate_noris, std_rate_noris) = mean_std(&noris);
            CellResult {
                sweep_var: spec.variable,
                value: *value,
                sea_state: *level,
                mean_rate_ris,
                std_rate_ris,
                mean_rate_noris,
                std_rate_noris,
                mean_los_prob: mean_of(records.iter().filter_map(TrialRecord::los_fraction)),
                mean_tx_power_w: mean_of(records.iter().filter_map(TrialRecord::mean_tx_power)),
                trials: records.len(),
                seed: cfg.seed,
                error,
                records,
            }
        })
        .collect();
    Ok(SweepTable { variable: spec.variable, seed: cfg.seed, cells: table })
}

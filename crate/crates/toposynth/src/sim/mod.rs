//! Netlist emission and the evaluator abstraction.
//!
//! Three evaluator backends share one result contract: a closed-form
//! ring-oscillator model, a linear AC small-signal solver, and an adapter
//! that drives an external simulator process through testbench templates.
//! A small job pool runs terminal evaluations with bounded parallelism.

mod emit;
mod external;
mod mna;
mod pool;
mod ro;

pub use emit::{emit_netlist, EmitError};
pub use external::{evaluate_external, ExternalEngine, ENGINE_ENV_VAR};
pub use mna::{evaluate_mna_ac, AcAnalysis, MnaError};
pub use pool::{evaluate_pool, evaluate_pool_instrumented};
pub use ro::evaluate_analytic_ro;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::CircuitGraph;

/// One measured quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    #[serde(default)]
    pub unit: String,
}

/// Outcome of evaluating one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub sim_valid: bool,
    pub measurements: BTreeMap<String, Measurement>,
    #[serde(default)]
    pub diagnostics: String,
}

impl SimResult {
    pub fn valid(measurements: impl IntoIterator<Item = (String, f64)>) -> SimResult {
        let mut map = BTreeMap::new();
        let mut ok = true;
        for (k, v) in measurements {
            if !v.is_finite() {
                ok = false;
                continue;
            }
            map.insert(k, Measurement { value: v, unit: String::new() });
        }
        SimResult {
            sim_valid: ok,
            measurements: map,
            diagnostics: if ok { String::new() } else { "non-finite measurement".into() },
        }
    }

    pub fn invalid(diagnostics: impl Into<String>) -> SimResult {
        SimResult {
            sim_valid: false,
            measurements: BTreeMap::new(),
            diagnostics: diagnostics.into(),
        }
    }

    pub fn with_unit(mut self, key: &str, unit: &str) -> SimResult {
        if let Some(m) = self.measurements.get_mut(key) {
            m.unit = unit.to_string();
        }
        self
    }

    pub fn measurement(&self, key: &str) -> Option<f64> {
        self.measurements.get(key).map(|m| m.value)
    }
}

/// Which backend evaluates a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    AnalyticRo,
    MnaAc,
    ExternalProcess,
}

/// Evaluator configuration: backend choice plus unit-device small-signal
/// parameters. Values are chosen so the bundled tasks are solvable with
/// unit-sized devices; every field can be overridden per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluatorSpec {
    pub id: String,
    pub kind: EvaluatorKind,
    /// Unit-device transconductance, siemens.
    pub gm: f64,
    /// Unit-device output resistance, ohms.
    pub ro: f64,
    /// Unit resistor, ohms.
    pub unit_r: f64,
    /// Unit capacitor, farads.
    pub unit_c: f64,
    /// Load capacitance applied at each output net, farads.
    pub c_load: f64,
    /// Single-stage inverter delay, seconds.
    pub t_inv: f64,
    /// AC sweep bounds, hertz.
    pub f_start: f64,
    pub f_stop: f64,
    /// Wall-clock bound per external evaluation, milliseconds.
    pub timeout_ms: u64,
    /// Testbench template with a `{NETLIST}` substitution token.
    pub template: Option<PathBuf>,
    /// Engine binary; falls back to the `TOPOSYNTH_ENGINE` variable.
    pub engine: Option<PathBuf>,
}

impl Default for EvaluatorSpec {
    fn default() -> Self {
        EvaluatorSpec {
            id: "default".into(),
            kind: EvaluatorKind::AnalyticRo,
            gm: 1e-3,
            ro: 100e3,
            unit_r: 10e3,
            unit_c: 1e-12,
            c_load: 1e-12,
            t_inv: 35e-12,
            f_start: 1e3,
            f_stop: 1e12,
            timeout_ms: 10_000,
            template: None,
            engine: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("external engine not configured: {0}")]
    EngineNotConfigured(String),
    #[error("emit: {0}")]
    Emit(#[from] EmitError),
}

/// A ready-to-run evaluator. Stateless and thread-safe; external
/// configuration problems surface here, at startup, not mid-training.
#[derive(Debug, Clone)]
pub enum Evaluator {
    AnalyticRo(EvaluatorSpec),
    MnaAc(EvaluatorSpec),
    External {
        spec: EvaluatorSpec,
        engine: ExternalEngine,
        required_keys: Vec<String>,
    },
}

impl Evaluator {
    pub fn from_spec(spec: &EvaluatorSpec, required_keys: &[String]) -> Result<Evaluator, SimError> {
        match spec.kind {
            EvaluatorKind::AnalyticRo => Ok(Evaluator::AnalyticRo(spec.clone())),
            EvaluatorKind::MnaAc => Ok(Evaluator::MnaAc(spec.clone())),
            EvaluatorKind::ExternalProcess => Ok(Evaluator::External {
                engine: ExternalEngine::from_spec(spec)?,
                spec: spec.clone(),
                required_keys: required_keys.to_vec(),
            }),
        }
    }

    pub fn evaluate(&self, g: &CircuitGraph) -> SimResult {
        match self {
            Evaluator::AnalyticRo(spec) => evaluate_analytic_ro(g, spec),
            Evaluator::MnaAc(spec) => evaluate_mna_ac(g, spec),
            Evaluator::External { engine, required_keys, .. } => match emit_netlist(g, "dut") {
                Ok(netlist) => evaluate_external(&netlist, engine, required_keys),
                Err(e) => SimResult::invalid(format!("netlist emission failed: {e}")),
            },
        }
    }
}

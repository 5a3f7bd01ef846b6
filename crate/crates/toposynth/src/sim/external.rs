//! External simulator adapter.
//!
//! The engine binary is configured per task or through `TOPOSYNTH_ENGINE`.
//! Each job gets its own scratch directory with the testbench written from
//! a template (`{NETLIST}` token replaced), the engine is spawned with the
//! testbench path as its argument, and stdout is scanned for `key = value`
//! measurement lines. Timeouts, nonzero exits and missing required keys
//! all map to simulation-invalid results rather than errors.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use super::{EvaluatorSpec, SimError, SimResult};

/// Environment variable naming the engine binary.
pub const ENGINE_ENV_VAR: &str = "TOPOSYNTH_ENGINE";

static JOB_SEQ: AtomicU64 = AtomicU64::new(0);

/// A validated external-engine configuration.
#[derive(Debug, Clone)]
pub struct ExternalEngine {
    pub engine: PathBuf,
    pub template: String,
    pub timeout: Duration,
}

impl ExternalEngine {
    /// Resolve and validate configuration; fails at startup, not
    /// mid-training.
    pub fn from_spec(spec: &EvaluatorSpec) -> Result<ExternalEngine, SimError> {
        let engine = match &spec.engine {
            Some(p) => p.clone(),
            None => match std::env::var_os(ENGINE_ENV_VAR) {
                Some(v) if !v.is_empty() => PathBuf::from(v),
                _ => {
                    return Err(SimError::EngineNotConfigured(format!(
                        "set `engine` in the evaluator spec or export {ENGINE_ENV_VAR}"
                    )))
                }
            },
        };
        if !engine.exists() {
            return Err(SimError::EngineNotConfigured(format!(
                "engine binary {} does not exist",
                engine.display()
            )));
        }
        let template_path = spec.template.as_ref().ok_or_else(|| {
            SimError::EngineNotConfigured("external evaluator needs a testbench template".into())
        })?;
        let template = std::fs::read_to_string(template_path).map_err(|e| {
            SimError::EngineNotConfigured(format!(
                "cannot read template {}: {e}",
                template_path.display()
            ))
        })?;
        if !template.contains("{NETLIST}") {
            return Err(SimError::EngineNotConfigured(
                "template lacks a {NETLIST} token".into(),
            ));
        }
        Ok(ExternalEngine {
            engine,
            template,
            timeout: Duration::from_millis(spec.timeout_ms),
        })
    }
}

/// Parse `key = value` measurement lines.
fn parse_measurements(stdout: &str) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for line in stdout.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            continue;
        }
        if let Ok(v) = value.parse::<f64>() {
            out.push((key.to_string(), v));
        }
    }
    out
}

fn job_dir() -> std::io::Result<PathBuf> {
    let seq = JOB_SEQ.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!(
        "toposynth-job-{}-{}",
        std::process::id(),
        seq
    ));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Run one evaluation through the engine.
pub fn evaluate_external(
    netlist: &str,
    engine: &ExternalEngine,
    required_keys: &[String],
) -> SimResult {
    let dir = match job_dir() {
        Ok(d) => d,
        Err(e) => return SimResult::invalid(format!("scratch dir: {e}")),
    };
    let result = run_in_dir(&dir, netlist, engine, required_keys);
    let _ = std::fs::remove_dir_all(&dir);
    result
}

fn run_in_dir(
    dir: &Path,
    netlist: &str,
    engine: &ExternalEngine,
    required_keys: &[String],
) -> SimResult {
    let tb = dir.join("testbench.sp");
    let contents = engine.template.replace("{NETLIST}", netlist);
    if let Err(e) = std::fs::write(&tb, contents) {
        return SimResult::invalid(format!("write testbench: {e}"));
    }
    let mut child = match Command::new(&engine.engine)
        .arg(&tb)
        .current_dir(dir)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .stdin(Stdio::null())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return SimResult::invalid(format!("spawn engine: {e}")),
    };

    let deadline = Instant::now() + engine.timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return SimResult::invalid(format!(
                        "engine timed out after {:?}",
                        engine.timeout
                    ));
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return SimResult::invalid(format!("wait on engine: {e}")),
        }
    };

    let mut stdout = String::new();
    if let Some(mut pipe) = child.stdout.take() {
        let _ = pipe.read_to_string(&mut stdout);
    }
    if !status.success() {
        return SimResult::invalid(format!("engine exit status {status}"));
    }
    let parsed = parse_measurements(&stdout);
    let mut result = SimResult::valid(parsed.into_iter());
    for key in required_keys {
        if result.measurement(key).is_none() {
            return SimResult::invalid(format!("missing measurement `{key}`"));
        }
    }
    result.diagnostics = "external".into();
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_mock(dir: &Path, name: &str, body: &str) -> PathBuf {
        use std::os::unix::fs::PermissionsExt;
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "#!/bin/sh").unwrap();
        writeln!(f, "{body}").unwrap();
        drop(f);
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    fn engine_with(dir: &Path, body: &str, timeout_ms: u64) -> ExternalEngine {
        let engine = write_mock(dir, "engine.sh", body);
        let template = dir.join("tb.sp");
        std::fs::write(&template, "* tb\n{NETLIST}\n.end\n").unwrap();
        let spec = EvaluatorSpec {
            engine: Some(engine),
            template: Some(template),
            timeout_ms,
            ..Default::default()
        };
        ExternalEngine::from_spec(&spec).unwrap()
    }

    #[test]
    fn unconfigured_engine_fails_fast() {
        let spec = EvaluatorSpec {
            engine: Some(PathBuf::from("/nonexistent/engine")),
            ..Default::default()
        };
        assert!(matches!(
            ExternalEngine::from_spec(&spec),
            Err(SimError::EngineNotConfigured(_))
        ));
    }

    #[test]
    fn mock_measurements_propagate() {
        let dir = tempfile::tempdir().unwrap();
        let engine = engine_with(
            dir.path(),
            "echo 'delay = 5.3e-10'; echo 'noise = 0.0005'",
            5_000,
        );
        let r = evaluate_external("* netlist", &engine, &["delay".into(), "noise".into()]);
        assert!(r.sim_valid, "{}", r.diagnostics);
        assert_eq!(r.measurement("delay").unwrap(), 5.3e-10);
        assert_eq!(r.measurement("noise").unwrap(), 5e-4);
    }

    #[test]
    fn timeout_marks_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let engine = engine_with(dir.path(), "sleep 5", 100);
        let r = evaluate_external("*", &engine, &[]);
        assert!(!r.sim_valid);
        assert!(r.diagnostics.contains("timed out"));
    }

    #[test]
    fn missing_required_key_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let engine = engine_with(dir.path(), "echo 'delay = 1e-9'", 5_000);
        let r = evaluate_external("*", &engine, &["noise".into()]);
        assert!(!r.sim_valid);
        assert!(r.diagnostics.contains("noise"));
    }

    #[test]
    fn nonzero_exit_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let engine = engine_with(dir.path(), "exit 3", 5_000);
        assert!(!evaluate_external("*", &engine, &[]).sim_valid);
    }
}

use std::path::{Path, PathBuf};

use alphys::active_learning::{PhaseTarget, QutritModel};
use alphys::ctqmc::Geometry;
use alphys::weak_measurement::CarrierPolicy;
use alphys::{QueryStrategy, QutritCase};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

/// Reads a JSON document; syntax errors and unknown keys report their line.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<(T, String), CliError> {
    let Some(path) = path else {
        return Ok((T::default(), String::new()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    Ok((value, text))
}

/// Line of the first occurrence of `"key"` in the config text, for
/// messages about values that parse but are out of range.
pub fn key_line(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

/// Out-of-range value; located by line when the key came from the config file.
pub fn bad_value(text: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
    if text.contains(&format!("\"{key}\"")) {
        CliError::Config(format!("line {}: {key}: {msg}", key_line(text, key)))
    } else {
        CliError::Config(format!("{key}: {msg}"))
    }
}

/// Optional `kind` tag of a config document; must name the subcommand it is
/// passed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DatasetGen,
    QutritAl,
    PhaseAl,
    PhaseSsl,
    CtqmcRun,
    CtqmcValidate,
    ReconstructDemo,
}

pub fn check_kind(text: &str, found: Option<ExperimentKind>, expected: ExperimentKind) -> Result<(), CliError> {
    match found {
        Some(k) if k != expected => Err(bad_value(text, "kind", format!("{k:?} config passed to the {expected:?} command"))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Case1,
    Case2,
    Phase,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub datasets: Option<Vec<DatasetKind>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelerKind {
    Weak,
    Noiseless,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QutritAlConfig {
    pub kind: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub case: Option<QutritCase>,
    pub model: Option<QutritModel>,
    /// Class `1..=3` against the rest; three-class when absent.
    pub one_vs_rest: Option<u8>,
    pub labeler: Option<LabelerKind>,
    pub theta_a: Option<f64>,
    pub theta_b: Option<f64>,
    /// Single-shot readouts per coupling; exact expectations when absent.
    pub shots: Option<u64>,
    pub carrier: Option<CarrierPolicy>,
    pub strategies: Option<Vec<QueryStrategy>>,
    pub budget: Option<usize>,
    pub min_fidelity: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseAlConfig {
    pub kind: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub target: Option<PhaseTarget>,
    pub k: Option<f64>,
    pub strategies: Option<Vec<QueryStrategy>>,
    pub budget: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SslPhaseConfig {
    pub kind: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub target: Option<PhaseTarget>,
    pub k: Option<f64>,
    pub strategies: Option<Vec<QueryStrategy>>,
    /// Label counts at which active learning stops and self-training runs.
    pub checkpoints: Option<Vec<usize>>,
    pub threshold: Option<f64>,
    pub max_iter: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtqmcRunConfig {
    pub kind: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub geometry: Option<Geometry>,
    pub j: Option<f64>,
    pub gamma: Option<f64>,
    pub t: Option<f64>,
    pub sweeps: Option<usize>,
    pub thermalization: Option<usize>,
    pub metropolis: Option<bool>,
    /// Independent chains, merged in chain order.
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtqmcValidateConfig {
    pub kind: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub sweeps: Option<usize>,
    pub thermalization: Option<usize>,
    /// Allowed deviation in jackknife standard errors.
    pub sigmas: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    pub kind: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    /// Real amplitudes of `|0⟩, |1⟩, |2⟩`; normalized on load.
    pub amplitudes: Option<[f64; 3]>,
    /// Coupling angles to sweep; every pair is demonstrated.
    pub theta_a: Option<Vec<f64>>,
    pub theta_b: Option<Vec<f64>>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

/// `flag`, else `config`, else `default`.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_lines() {
        let text = "{\n  \"k\": 5,\n  \"trials\": 0\n}";
        assert_eq!(key_line(text, "trials"), 3);
        assert_eq!(key_line(text, "absent"), 1);
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, "{\n  \"k\": 5,\n  \"kay\": 3\n}").unwrap();
        let err = load::<PhaseAlConfig>(Some(&p)).unwrap_err();
        let CliError::Config(msg) = err else { panic!() };
        assert!(msg.contains(":3:"), "{msg}");
        assert!(msg.contains("kay"), "{msg}");
    }
}

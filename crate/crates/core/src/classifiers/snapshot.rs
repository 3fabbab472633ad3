use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GaussianNBModel, LogisticModel, PhaseOvrModel, RbfSvmModel};
use crate::{Error, Result};

/// A fitted model in a self-describing JSON document, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSnapshot {
    Logistic(LogisticModel),
    NaiveBayes(GaussianNBModel),
    Svm(RbfSvmModel),
    PhaseOvr(PhaseOvrModel),
}

impl ModelSnapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

use serde::{Deserialize, Serialize};

use super::svm::{RbfSvmModel, SvmConfig};
use crate::datasets::{OvrBoundary, Phase};
use crate::Result;

/// Upper end of the temperature window on which the ordered-vs-rest machine
/// is trained and evaluated.
pub const ORDERED_T_MAX: f64 = 0.3;

/// Two one-vs-rest machines combined into a three-phase predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseOvrModel {
    pub svm_para: RbfSvmModel,
    pub svm_ord: RbfSvmModel,
    pub ord_t_max: f64,
}

/// Whether a sample lies in the training domain of a one-vs-rest machine.
pub fn in_domain(which: OvrBoundary, t_ratio: f64) -> bool {
    match which {
        OvrBoundary::ParaVsRest => true,
        OvrBoundary::OrderedVsRest => t_ratio <= ORDERED_T_MAX + 1e-12,
    }
}

impl PhaseOvrModel {
    pub fn fit(
        para: (&[Vec<f64>], &[bool]),
        ord: (&[Vec<f64>], &[bool]),
        cfg: &SvmConfig,
    ) -> Result<Self> {
        Ok(Self {
            svm_para: RbfSvmModel::fit(para.0, para.1, cfg)?,
            svm_ord: RbfSvmModel::fit(ord.0, ord.1, cfg)?,
            ord_t_max: ORDERED_T_MAX,
        })
    }

    /// Paramagnetic if the paramagnetic machine is positive; otherwise ordered
    /// if the ordered machine is positive inside its window; otherwise KT.
    pub fn predict(&self, gamma_ratio: f64, t_ratio: f64) -> Phase {
        let x = [gamma_ratio, t_ratio];
        let f_ord = if t_ratio <= self.ord_t_max + 1e-12 {
            Some(self.svm_ord.decision_unchecked(&x))
        } else {
            None
        };
        combine(self.svm_para.decision_unchecked(&x), f_ord)
    }

    /// Predictions on the product lattice, entry `ig * temps.len() + it`.
    pub fn predict_on_lattice(&self, gammas: &[f64], temps: &[f64]) -> Result<Vec<Phase>> {
        let fp = self.svm_para.decision_on_lattice(gammas, temps)?;
        let fo = self.svm_ord.decision_on_lattice(gammas, temps)?;
        let nt = temps.len();
        Ok((0..fp.len())
            .map(|k| {
                let t = temps[k % nt];
                combine(fp[k], (t <= self.ord_t_max + 1e-12).then_some(fo[k]))
            })
            .collect())
    }
}

pub(crate) fn combine(f_para: f64, f_ord: Option<f64>) -> Phase {
    if f_para > 0.0 {
        Phase::Paramagnetic
    } else if f_ord.is_some_and(|f| f > 0.0) {
        Phase::Ordered
    } else {
        Phase::KT
    }
}

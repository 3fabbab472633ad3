use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::argmax_lowest;
use crate::quantum::{DensityMatrix, Ket};

pub const GRID_SIDE: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QutritCase {
    /// Three-fold rotationally symmetric sectors on `[-1, 1]²`.
    #[serde(rename = "case1", alias = "case_i")]
    CaseI,
    /// Diagonal bands on `[0, π/4]²`.
    #[serde(rename = "case2", alias = "case_ii")]
    CaseII,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QutritSample {
    pub x1: f64,
    pub x2: f64,
    /// Real, nonnegative amplitudes `(c1, c2, c3)` of `|0⟩, |1⟩, |2⟩`.
    pub amplitudes: [f64; 3],
    /// Class in `1..=3`.
    pub true_class: u8,
}

impl QutritSample {
    pub fn new(x1: f64, x2: f64, amplitudes: [f64; 3]) -> Self {
        let pops = amplitudes.map(|c| c * c);
        Self {
            x1,
            x2,
            amplitudes,
            true_class: argmax_lowest(&pops) as u8 + 1,
        }
    }

    pub fn features(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn populations(&self) -> [f64; 3] {
        self.amplitudes.map(|c| c * c)
    }

    pub fn density(&self) -> DensityMatrix {
        let ket = Ket::from_real(&self.amplitudes).expect("amplitudes are normalized");
        DensityMatrix::pure(&ket)
    }
}

/// A square lattice of qutrits; sample `i1 * side + i2` sits at
/// `(axis[i1], axis[i2])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritGrid {
    pub side: usize,
    pub samples: Vec<QutritSample>,
    pub case_tag: QutritCase,
}

impl QutritGrid {
    pub fn generate(case: QutritCase) -> Self {
        match case {
            QutritCase::CaseI => gen_case1(),
            QutritCase::CaseII => gen_case2(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.features().to_vec()).collect()
    }

    /// Zero-based classes.
    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.true_class as usize - 1).collect()
    }
}

const CASE1_OFFSET: f64 = 0.32;

/// Unnormalized weights `c̃ᵢ` of Case I at `(x1, x2)`.
pub fn case1_weights(x1: f64, x2: f64) -> [f64; 3] {
    let mut w = [0.0; 3];
    for (i, wi) in w.iter_mut().enumerate() {
        let angle = CASE1_OFFSET + 2.0 * PI * i as f64 / 3.0;
        let (s, c) = angle.sin_cos();
        let r1 = c * x1 - s * x2;
        let r2 = s * x1 + c * x2;
        *wi = if r1 == 0.0 && r2 == 0.0 {
            0.5
        } else {
            // principal-branch arctangent with the sign-of-x₁ rule
            let phi = if r1 == 0.0 {
                PI / 2.0 * r2.signum()
            } else {
                (r2 / r1).atan()
            };
            if r1 >= 0.0 {
                0.5 * (1.0 + phi.sin())
            } else {
                0.5 * (1.0 - phi.sin())
            }
        };
    }
    w
}

pub fn case1_amplitudes(x1: f64, x2: f64) -> [f64; 3] {
    let w = case1_weights(x1, x2);
    let total: f64 = w.iter().sum();
    w.map(|wi| (wi / total).sqrt())
}

pub fn case2_amplitudes(x1: f64, x2: f64) -> [f64; 3] {
    let s = x1 + x2;
    let c1 = s.sin().powi(2);
    let c3 = s.cos().powi(2);
    let c2 = (1.0 - c1 * c1 - c3 * c3).abs().sqrt();
    [c1, c2, c3]
}

fn lattice(lo: f64, hi: f64, f: impl Fn(f64, f64) -> [f64; 3], case_tag: QutritCase) -> QutritGrid {
    let step = (hi - lo) / (GRID_SIDE - 1) as f64;
    let axis: Vec<f64> = (0..GRID_SIDE).map(|k| lo + k as f64 * step).collect();
    let mut samples = Vec::with_capacity(GRID_SIDE * GRID_SIDE);
    for &x1 in &axis {
        for &x2 in &axis {
            samples.push(QutritSample::new(x1, x2, f(x1, x2)));
        }
    }
    QutritGrid {
        side: GRID_SIDE,
        samples,
        case_tag,
    }
}

/// 21×21 Case I lattice on `[-1, 1]²`.
pub fn gen_case1() -> QutritGrid {
    lattice(-1.0, 1.0, case1_amplitudes, QutritCase::CaseI)
}

/// 21×21 Case II lattice on `[0, π/4]²`.
pub fn gen_case2() -> QutritGrid {
    lattice(0.0, PI / 4.0, case2_amplitudes, QutritCase::CaseII)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_normalized(grid: &QutritGrid) {
        assert_eq!(grid.samples.len(), 441);
        for s in &grid.samples {
            let norm: f64 = s.populations().iter().sum();
            assert!((norm - 1.0).abs() <= 1e-9, "{s:?}");
            assert!(s.amplitudes.iter().all(|&c| c >= 0.0));
        }
    }

    #[test]
    fn case1_is_normalized_and_covers_domain() {
        let g = gen_case1();
        assert_normalized(&g);
        assert_eq!(g.samples[0].features(), [-1.0, -1.0]);
        let last = g.samples.last().unwrap();
        assert!((last.x1 - 1.0).abs() < 1e-15 && (last.x2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn case1_weight_at_unit_x() {
        let w = case1_weights(1.0, 0.0);
        assert!((w[0] - 0.5 * (1.0 + 0.32f64.sin())).abs() < 1e-15);
    }

    #[test]
    fn case1_origin_is_maximally_ambiguous() {
        assert_eq!(case1_weights(0.0, 0.0), [0.5; 3]);
        let a = case1_amplitudes(0.0, 0.0);
        assert!(a.iter().all(|&c| (c * c - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn case1_rotation_permutes_classes() {
        let g = gen_case1();
        let (s, c) = (2.0 * PI / 3.0).sin_cos();
        let mut checked = 0;
        for smp in &g.samples {
            let (x1, x2) = (smp.x1, smp.x2);
            if x1 == 0.0 && x2 == 0.0 {
                continue;
            }
            // skip points sitting on a sector edge, where ties flip under rounding
            let pops = smp.populations();
            let mut sorted = pops;
            sorted.sort_by(f64::total_cmp);
            if sorted[2] - sorted[1] < 1e-9 {
                continue;
            }
            let rotated = QutritSample::new(c * x1 - s * x2, s * x1 + c * x2, case1_amplitudes(c * x1 - s * x2, s * x1 + c * x2));
            // rotating the lattice by +2π/3 shifts every class one step back
            let expect = (smp.true_class + 1) % 3 + 1;
            assert_eq!(rotated.true_class, expect, "at ({x1}, {x2})");
            checked += 1;
        }
        assert!(checked > 400);
    }

    #[test]
    fn case1_classes_agree_for_weights_and_amplitudes() {
        for s in &gen_case1().samples {
            let w = case1_weights(s.x1, s.x2);
            assert_eq!(argmax_lowest(&w) as u8 + 1, s.true_class);
        }
    }

    #[test]
    fn case1_classes_are_balanced() {
        let g = gen_case1();
        let mut counts = [0; 3];
        for s in &g.samples {
            counts[s.true_class as usize - 1] += 1;
        }
        assert!(counts.iter().all(|&n| n > 120), "{counts:?}");
    }

    #[test]
    fn case2_examples() {
        let g = gen_case2();
        assert_normalized(&g);
        let origin = &g.samples[0];
        assert_eq!(origin.amplitudes, [0.0, 0.0, 1.0]);
        assert_eq!(origin.true_class, 3);
        let a = case2_amplitudes(PI / 8.0, PI / 8.0);
        assert!((a[0] - 0.5).abs() < 1e-15);
        assert!((a[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((a[2] - 0.5).abs() < 1e-15);
        assert_eq!(QutritSample::new(0.0, 0.0, a).true_class, 2);
        let last = g.samples.last().unwrap();
        assert!((last.x1 - PI / 4.0).abs() < 1e-15);
    }
}

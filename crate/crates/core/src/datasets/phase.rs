use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Paramagnetic,
    KT,
    Ordered,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Paramagnetic => "paramagnetic",
            Phase::KT => "kt",
            Phase::Ordered => "ordered",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "paramagnetic" => Some(Phase::Paramagnetic),
            "kt" => Some(Phase::KT),
            "ordered" => Some(Phase::Ordered),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Phase::Paramagnetic => 0,
            Phase::KT => 1,
            Phase::Ordered => 2,
        }
    }
}

/// Which one-vs-rest discrimination a binary label refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OvrBoundary {
    /// Paramagnetic (positive) versus KT or ordered; boundary `T₂(Γ)`.
    ParaVsRest,
    /// Ordered (positive) versus KT or paramagnetic; boundary `T₁(Γ)`.
    OrderedVsRest,
}

impl OvrBoundary {
    pub fn positive(self, phase: Phase) -> bool {
        match self {
            OvrBoundary::ParaVsRest => phase == Phase::Paramagnetic,
            OvrBoundary::OrderedVsRest => phase == Phase::Ordered,
        }
    }
}

/// Constants of the KT/paramagnetic boundary `T₂/J = b (Γ/Γc) ln^ν(Γc/Γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryModel {
    pub b: f64,
    pub nu: f64,
    pub gamma_c_over_j: f64,
}

impl Default for BoundaryModel {
    fn default() -> Self {
        Self {
            b: 0.98,
            nu: 2.0 / 3.0,
            gamma_c_over_j: 1.65,
        }
    }
}

/// `(T₁/J, T₂/J)` at `Γ/Γc = gamma_ratio`; both vanish outside `(0, 1)`.
pub fn boundary_temperatures(gamma_ratio: f64, model: &BoundaryModel) -> Result<(f64, f64)> {
    if !(gamma_ratio >= 0.0) {
        return Err(invalid(format!("gamma ratio {gamma_ratio} must be nonnegative")));
    }
    if gamma_ratio == 0.0 || gamma_ratio >= 1.0 {
        return Ok((0.0, 0.0));
    }
    let t2 = model.b * gamma_ratio * (-gamma_ratio.ln()).powf(model.nu);
    Ok((4.0 / 9.0 * t2, t2))
}

fn boundary_t(gamma_ratio: f64, which: OvrBoundary, model: &BoundaryModel) -> f64 {
    let (t1, t2) = boundary_temperatures(gamma_ratio, model).unwrap_or((0.0, 0.0));
    match which {
        OvrBoundary::ParaVsRest => t2,
        OvrBoundary::OrderedVsRest => t1,
    }
}

/// Analytic phase at `(Γ/Γc, T/J)`.
pub fn true_phase(gamma_ratio: f64, t_ratio: f64, model: &BoundaryModel) -> Phase {
    if gamma_ratio >= 1.0 {
        return Phase::Paramagnetic;
    }
    let (t1, t2) = boundary_temperatures(gamma_ratio.max(0.0), model).unwrap_or((0.0, 0.0));
    if t_ratio > t2 {
        Phase::Paramagnetic
    } else if t_ratio < t1 {
        Phase::Ordered
    } else {
        Phase::KT
    }
}

/// Step of the dense sampling of the boundary curves.
pub const CURVE_STEP: f64 = 1e-3;

/// Euclidean distance in `(Γ/Γc, T/J)` to the boundary curve, represented as
/// the polyline through `(g, T(g))` at `g = 0, 10⁻³, …, 1` continued by the
/// `T = 0` ray for `g ≥ 1`.
pub fn distance_to_boundary(gamma_ratio: f64, t_ratio: f64, which: OvrBoundary, model: &BoundaryModel) -> f64 {
    let n = (1.0 / CURVE_STEP).round() as usize;
    let point = |k: usize| {
        let g = k as f64 * CURVE_STEP;
        (g, boundary_t(g, which, model))
    };
    // ray {(g, 0) : g ≥ 1}
    let mut best = if gamma_ratio >= 1.0 {
        t_ratio.abs()
    } else {
        (1.0 - gamma_ratio).hypot(t_ratio)
    };
    let mut prev = point(0);
    for k in 1..=n {
        let cur = point(k);
        best = best.min(segment_distance((gamma_ratio, t_ratio), prev, cur));
        prev = cur;
    }
    best
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - (a.0 + t * dx)).hypot(p.1 - (a.1 + t * dy))
}

/// `P_flip = ½ exp(−k d)`.
pub fn flip_probability(distance: f64, k: f64) -> f64 {
    if distance == 0.0 {
        return 0.5;
    }
    0.5 * (-k * distance).exp()
}

/// One-vs-rest label from the analytic oracle, flipped with a probability
/// that decays with the distance to the relevant boundary.
pub fn noisy_ovr_label<R: Rng + ?Sized>(
    gamma_ratio: f64,
    t_ratio: f64,
    which: OvrBoundary,
    k: f64,
    model: &BoundaryModel,
    rng: &mut R,
) -> Result<bool> {
    if !(k >= 0.0) {
        return Err(invalid(format!("noise coefficient k = {k} must be nonnegative")));
    }
    let truth = which.positive(true_phase(gamma_ratio, t_ratio, model));
    let d = distance_to_boundary(gamma_ratio, t_ratio, which, model);
    let p = flip_probability(d, k);
    Ok(if rng.gen_bool(p) { !truth } else { truth })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub gamma_ratio: f64,
    pub t_ratio: f64,
    pub true_phase: Phase,
}

impl PhaseSample {
    pub fn features(&self) -> [f64; 2] {
        [self.gamma_ratio, self.t_ratio]
    }
}

/// Rectangular `(Γ/Γc, T/J)` grid; sample `ig * temps.len() + it` sits at
/// `(gammas[ig], temps[it])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub gammas: Vec<f64>,
    pub temps: Vec<f64>,
    pub samples: Vec<PhaseSample>,
}

pub const PHASE_STEP: f64 = 0.01;

impl PhaseGrid {
    /// Grid on `[0, g_max] × [0, t_max]` with spacing 0.01.
    pub fn new(g_max: f64, t_max: f64, model: &BoundaryModel) -> Self {
        let ng = (g_max / PHASE_STEP).round() as usize + 1;
        let nt = (t_max / PHASE_STEP).round() as usize + 1;
        let gammas: Vec<f64> = (0..ng).map(|k| k as f64 / 100.0).collect();
        let temps: Vec<f64> = (0..nt).map(|k| k as f64 / 100.0).collect();
        let mut samples = Vec::with_capacity(ng * nt);
        for &g in &gammas {
            for &t in &temps {
                samples.push(PhaseSample {
                    gamma_ratio: g,
                    t_ratio: t,
                    true_phase: true_phase(g, t, model),
                });
            }
        }
        Self { gammas, temps, samples }
    }

    /// The 111 × 61 evaluation grid `[0, 1.1] × [0, 0.6]`.
    pub fn full(model: &BoundaryModel) -> Self {
        Self::new(1.1, 0.6, model)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn index(&self, ig: usize, it: usize) -> usize {
        ig * self.temps.len() + it
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.features().to_vec()).collect()
    }
}

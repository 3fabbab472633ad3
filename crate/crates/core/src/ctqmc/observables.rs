use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use super::worldline::Configuration;
use crate::error::invalid;
use crate::stats::{integrated_autocorrelation_time, jackknife};
use crate::Result;

pub const JACKKNIFE_BINS: usize = 20;

/// Observables of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Energy per site.
    pub energy: f64,
    /// Bond-averaged `∫ sᵢsⱼ dτ / β`.
    pub nn_zz: f64,
    /// Per-site magnetization `∫ sᵢ dτ / β`.
    pub m: Vec<f64>,
    /// Modulus and phase of the XY order parameter.
    pub psi0: f64,
    pub phi: f64,
}

/// `[m₁ + m₂ e^{i4π/3} + m₃ e^{−i4π/3}] / √3` of three sublattice magnetizations.
pub fn order_parameter(sub: [f64; 3]) -> Complex64 {
    let w = Complex64::from_polar(1.0, 4.0 * PI / 3.0);
    (sub[0] + sub[1] * w + sub[2] * w.conj()) / 3f64.sqrt()
}

pub fn measure(config: &Configuration, lattice: &Lattice, j: f64) -> Sample {
    let beta = config.beta;
    let n = lattice.n_sites;
    let m: Vec<f64> = config.lines.iter().map(|l| l.integral(beta) / beta).collect();
    let bond = config.bond_action(lattice, 1.0) / beta;
    let energy = (j * bond - config.n_cuts() as f64 / beta) / n as f64;
    let mut sub = [0.0; 3];
    let mut count = [0usize; 3];
    for (i, &mi) in m.iter().enumerate() {
        let c = lattice.sublattice[i] as usize;
        sub[c] += mi;
        count[c] += 1;
    }
    for c in 0..3 {
        if count[c] > 0 {
            sub[c] /= count[c] as f64;
        }
    }
    let psi = order_parameter(sub);
    Sample { energy, nn_zz: bond / lattice.bonds.len() as f64, m, psi0: psi.norm(), phi: psi.arg() }
}

/// Measurement series; merging appends, so the order of merges fixes the result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableAccumulator {
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub samples: usize,
    pub energy: Estimate,
    pub nn_zz: Estimate,
    /// Site average of `⟨mᵢ⟩`.
    pub magnetization: Estimate,
    pub m_site: Vec<Estimate>,
    /// Site average of `β⟨mᵢ²⟩`.
    pub chi: Estimate,
    pub chi_site: Vec<Estimate>,
    pub psi2: Estimate,
    pub binder: Estimate,
    /// `None` when `⟨ψ₀⁶⟩` vanishes.
    pub c6: Option<Estimate>,
    pub tau_energy: f64,
    pub tau_psi2: f64,
}

impl Observables {
    /// `(name, estimate)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(String, Estimate)> {
        let mut out = vec![
            ("energy".to_string(), self.energy),
            ("nn_zz".to_string(), self.nn_zz),
            ("magnetization".to_string(), self.magnetization),
            ("chi".to_string(), self.chi),
            ("psi2".to_string(), self.psi2),
            ("binder".to_string(), self.binder),
        ];
        if let Some(c6) = self.c6 {
            out.push(("c6".to_string(), c6));
        }
        for (i, e) in self.m_site.iter().enumerate() {
            out.push((format!("m_{i}"), *e));
        }
        for (i, e) in self.chi_site.iter().enumerate() {
            out.push((format!("chi_{i}"), *e));
        }
        out
    }
}

impl ObservableAccumulator {
    pub fn push(&mut self, s: Sample) {
        self.samples.push(s);
    }

    pub fn merge(&mut self, other: ObservableAccumulator) {
        self.samples.extend(other.samples);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Means and ratio estimators with jackknife errors over
    /// [`JACKKNIFE_BINS`] contiguous bins.
    pub fn finalize(&self, beta: f64) -> Result<Observables> {
        let n = self.samples.len();
        if n < 2 {
            return Err(invalid(format!("{n} samples; at least 2 are needed")));
        }
        let sites = self.samples[0].m.len();
        let col = |f: &dyn Fn(&Sample) -> f64| -> Vec<f64> { self.samples.iter().map(f).collect() };
        let est = |(mean, stderr): (f64, f64)| Estimate { mean, stderr };
        let plain = |xs: &[f64]| est(jackknife(&[xs], JACKKNIFE_BINS, |m| m[0]));

        let energy = col(&|s| s.energy);
        let nn = col(&|s| s.nn_zz);
        let m_avg = col(&|s| s.m.iter().sum::<f64>() / sites as f64);
        let chi_avg = col(&|s| beta * s.m.iter().map(|x| x * x).sum::<f64>() / sites as f64);
        let m_site = (0..sites).map(|i| plain(&col(&|s| s.m[i]))).collect();
        let chi_site = (0..sites).map(|i| plain(&col(&|s| beta * s.m[i] * s.m[i]))).collect();
        let p2 = col(&|s| s.psi0.powi(2));
        let p4 = col(&|s| s.psi0.powi(4));
        let p6 = col(&|s| s.psi0.powi(6));
        let p6c = col(&|s| s.psi0.powi(6) * (6.0 * s.phi).cos());

        let binder = est(jackknife(&[&p4, &p2], JACKKNIFE_BINS, |m| 1.0 - m[0] / (3.0 * m[1] * m[1])));
        let c6 = if p6.iter().all(|&v| v == 0.0) {
            None
        } else {
            Some(est(jackknife(&[&p6c, &p6], JACKKNIFE_BINS, |m| m[0] / m[1])))
        };
        Ok(Observables {
            samples: n,
            energy: plain(&energy),
            nn_zz: plain(&nn),
            magnetization: plain(&m_avg),
            m_site,
            chi: plain(&chi_avg),
            chi_site,
            psi2: plain(&p2),
            binder,
            c6,
            tau_energy: integrated_autocorrelation_time(&energy),
            tau_psi2: integrated_autocorrelation_time(&p2),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctqmc::{Geometry, Worldline};

    fn frozen(spins: &[i8], beta: f64) -> Configuration {
        Configuration { beta, lines: spins.iter().map(|&s| Worldline::uniform(s)).collect() }
    }

    fn sample(psi0: f64, phi: f64) -> Sample {
        Sample { energy: 0.0, nn_zz: 0.0, m: vec![0.0], psi0, phi }
    }

    #[test]
    fn all_up_cancels_the_order_parameter() {
        let lat = Lattice::new(Geometry::Periodic { l: 3 }).unwrap();
        let s = measure(&frozen(&[1; 9], 2.0), &lat, 1.0);
        assert!(s.m.iter().all(|&m| m == 1.0));
        assert!(s.psi0 < 1e-15);
        // every bond aligned: energy J·(3N bonds)/N
        assert!((s.energy - 3.0).abs() < 1e-12);
        assert!((s.nn_zz - 1.0).abs() < 1e-12);
    }

    #[test]
    fn up_down_down_order() {
        let lat = Lattice::new(Geometry::Periodic { l: 3 }).unwrap();
        let spins: Vec<i8> = lat.sublattice.iter().map(|&c| if c == 0 { 1 } else { -1 }).collect();
        let s = measure(&frozen(&spins, 1.0), &lat, 1.0);
        // (1 − 2 cos 4π/3)/√3 = 2/√3, on the real axis
        assert!((s.psi0 - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(s.phi.abs() < 1e-12);
        assert!(((6.0 * s.phi).cos() - 1.0).abs() < 1e-12);
        // every triangle has two anti-aligned bonds and one aligned
        assert!((s.nn_zz + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kinks_enter_the_energy() {
        let lat = Lattice::new(Geometry::Triangle).unwrap();
        let mut c = frozen(&[1, -1, -1], 2.0);
        c.lines[0].cuts = vec![0.5, 1.0];
        let s = measure(&c, &lat, 1.0);
        // site 0 is down on [0.5, 1): bonds 0-1, 0-2 aligned there
        let bond = ((-1.5 + 0.5) * 2.0 + 2.0) / 2.0;
        assert!((s.energy - (bond - 2.0 / 2.0) / 3.0).abs() < 1e-12);
        assert!((s.m[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_modulus_gives_two_thirds() {
        let acc = ObservableAccumulator { samples: (0..40).map(|k| sample(0.7, k as f64)).collect() };
        let o = acc.finalize(1.0).unwrap();
        assert!((o.binder.mean - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sixfold_order_saturates_c6() {
        let phis = [0.0, PI / 3.0, 2.0 * PI / 3.0, PI, -PI / 3.0];
        let acc = ObservableAccumulator { samples: (0..50).map(|k| sample(0.3 + 0.01 * k as f64, phis[k % 5])).collect() };
        let c6 = acc.finalize(1.0).unwrap().c6.unwrap();
        assert!((c6.mean - 1.0).abs() < 1e-12);
        let acc = ObservableAccumulator { samples: (0..50).map(|k| sample(0.5, PI / 6.0 + phis[k % 5])).collect() };
        assert!((acc.finalize(1.0).unwrap().c6.unwrap().mean + 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_sample_ratios_by_hand() {
        let acc = ObservableAccumulator { samples: vec![sample(1.0, 0.0), sample(2.0, PI / 6.0)] };
        let o = acc.finalize(1.0).unwrap();
        // ⟨ψ²⟩ = 5/2, ⟨ψ⁴⟩ = 17/2, ⟨ψ⁶⟩ = 65/2, ⟨ψ⁶cos6φ⟩ = (1 − 64)/2
        assert!((o.psi2.mean - 2.5).abs() < 1e-12);
        assert!((o.binder.mean - (1.0 - 8.5 / (3.0 * 6.25))).abs() < 1e-12);
        assert!((o.c6.unwrap().mean + 63.0 / 65.0).abs() < 1e-12);
    }

    #[test]
    fn vanishing_order_has_undefined_c6() {
        let acc = ObservableAccumulator { samples: vec![sample(0.0, 0.0); 4] };
        assert!(acc.finalize(1.0).unwrap().c6.is_none());
        assert!(ObservableAccumulator { samples: vec![sample(0.1, 0.0)] }.finalize(1.0).is_err());
    }
}

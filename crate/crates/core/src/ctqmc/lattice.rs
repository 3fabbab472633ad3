use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::Result;

/// Cluster geometry of the triangular antiferromagnet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// A single open triangle: three sites, three bonds.
    Triangle,
    /// `L × L` periodic triangular lattice; `L` must be a multiple of 3.
    Periodic { l: usize },
}

/// Model parameters: `H = J Σ⟨ij⟩ σᶻσᶻ − Γ Σ σˣ` at temperature `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub geometry: Geometry,
    pub j: f64,
    pub gamma: f64,
    pub t: f64,
}

impl LatticeSpec {
    pub fn new(geometry: Geometry, j: f64, gamma: f64, t: f64) -> Result<Self> {
        let spec = Self { geometry, j, gamma, t };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("J", self.j), ("Gamma", self.gamma), ("T", self.t)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} = {v} must be positive and finite")));
            }
        }
        if let Geometry::Periodic { l } = self.geometry {
            if l == 0 || l % 3 != 0 {
                return Err(invalid(format!("periodic size L = {l} must be a positive multiple of 3")));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.t
    }
}

/// Sites, bonds and the three-sublattice coloring of a geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub n_sites: usize,
    /// Each nearest-neighbor pair once, `(i, j)` with `i < j`.
    pub bonds: Vec<(usize, usize)>,
    /// Sublattice `0..3` of every site; neighbors never share one.
    pub sublattice: Vec<u8>,
}

impl Lattice {
    pub fn new(geometry: Geometry) -> Result<Self> {
        match geometry {
            Geometry::Triangle => Ok(Self { n_sites: 3, bonds: vec![(0, 1), (0, 2), (1, 2)], sublattice: vec![0, 1, 2] }),
            Geometry::Periodic { l } => {
                if l == 0 || l % 3 != 0 {
                    return Err(invalid(format!("periodic size L = {l} must be a positive multiple of 3")));
                }
                let site = |x: usize, y: usize| (x % l) * l + (y % l);
                let mut bonds = Vec::with_capacity(3 * l * l);
                let mut sublattice = vec![0; l * l];
                for x in 0..l {
                    for y in 0..l {
                        let i = site(x, y);
                        sublattice[i] = ((x + l - y) % 3) as u8;
                        // three forward directions; their negatives give the other three
                        for (dx, dy) in [(1, 0), (0, 1), (1, l - 1)] {
                            let j = site(x + dx, y + dy);
                            bonds.push((i.min(j), i.max(j)));
                        }
                    }
                }
                bonds.sort_unstable();
                bonds.dedup();
                Ok(Self { n_sites: l * l, bonds, sublattice })
            }
        }
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.bonds
            .iter()
            .filter_map(|&(a, b)| if a == i { Some(b) } else if b == i { Some(a) } else { None })
            .collect()
    }
}

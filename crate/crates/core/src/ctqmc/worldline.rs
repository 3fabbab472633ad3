use rand::Rng;

use super::lattice::{Lattice, LatticeSpec};
use crate::error::invalid;
use crate::Result;

/// The spin history of one site on the imaginary-time circle `[0, β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Worldline {
    /// Spin on `[0, cuts[0])`, or everywhere if there are no cuts.
    pub s0: i8,
    /// Sorted flip times in `[0, β)`; always an even number of them.
    pub cuts: Vec<f64>,
}

impl Worldline {
    pub fn uniform(s: i8) -> Self {
        Self { s0: s, cuts: Vec::new() }
    }

    /// `(start, end, spin)` for every maximal piece of `[0, β)`; the piece
    /// crossing `τ = 0` appears split at both ends.
    pub fn pieces(&self, beta: f64) -> Vec<(f64, f64, i8)> {
        let mut out = Vec::with_capacity(self.cuts.len() + 1);
        let mut start = 0.0;
        let mut s = self.s0;
        for &c in &self.cuts {
            out.push((start, c, s));
            start = c;
            s = -s;
        }
        out.push((start, beta, s));
        out
    }

    /// `∫₀^β s(τ) dτ`.
    pub fn integral(&self, beta: f64) -> f64 {
        self.pieces(beta).iter().map(|&(a, b, s)| s as f64 * (b - a)).sum()
    }
}

/// `∫₀^β sᵢ(τ) sⱼ(τ) dτ` by a merge over both cut lists.
pub fn overlap_integral(a: &Worldline, b: &Worldline, beta: f64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut sa, mut sb) = (a.s0 as f64, b.s0 as f64);
    let mut t = 0.0;
    let mut total = 0.0;
    loop {
        let na = a.cuts.get(i).copied().unwrap_or(beta);
        let nb = b.cuts.get(j).copied().unwrap_or(beta);
        let next = na.min(nb);
        total += sa * sb * (next - t);
        if next >= beta {
            return total;
        }
        t = next;
        if na == next {
            sa = -sa;
            i += 1;
        }
        if nb == next {
            sb = -sb;
            j += 1;
        }
    }
}

/// A full space-time configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub beta: f64,
    pub lines: Vec<Worldline>,
}

impl Configuration {
    /// Classical random start: each site a constant random spin.
    pub fn random<R: Rng + ?Sized>(n_sites: usize, beta: f64, rng: &mut R) -> Self {
        Self { beta, lines: (0..n_sites).map(|_| Worldline::uniform(if rng.gen() { 1 } else { -1 })).collect() }
    }

    pub fn n_cuts(&self) -> usize {
        self.lines.iter().map(|l| l.cuts.len()).sum()
    }

    /// `J Σ⟨ij⟩ ∫ sᵢsⱼ dτ`.
    pub fn bond_action(&self, lattice: &Lattice, j: f64) -> f64 {
        j * lattice
            .bonds
            .iter()
            .map(|&(a, b)| overlap_integral(&self.lines[a], &self.lines[b], self.beta))
            .sum::<f64>()
    }

    /// Checks the structural invariants: spins ±1, an even number of strictly
    /// increasing cuts inside `[0, β)` per site.
    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.lines.iter().enumerate() {
            if l.s0 != 1 && l.s0 != -1 {
                return Err(invalid(format!("site {i}: spin {} is not ±1", l.s0)));
            }
            if l.cuts.len() % 2 != 0 {
                return Err(invalid(format!("site {i}: odd number of cuts {}", l.cuts.len())));
            }
            if l.cuts.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid(format!("site {i}: cuts not strictly increasing")));
            }
            if l.cuts.first().is_some_and(|&c| c < 0.0) || l.cuts.last().is_some_and(|&c| c >= self.beta) {
                return Err(invalid(format!("site {i}: cut outside [0, β)")));
            }
        }
        Ok(())
    }
}

/// Options of one cluster sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    /// Follow the cluster assignment with an accept/reject test on the change
    /// of the bond action. The cluster move alone already samples the right
    /// weight, so this biases the chain; it exists for comparison only.
    pub metropolis: bool,
}

/// What one sweep did.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStats {
    /// New cuts proposed per site.
    pub inserted: Vec<usize>,
    pub clusters: usize,
    /// `Some(accepted)` when the Metropolis test ran.
    pub accepted: Option<bool>,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Segments of one site after cut insertion. Piece `k` spans
/// `[points[k-1], points[k])` with `points[-1] = 0` and `points[len] = β`;
/// the last piece wraps onto the first and shares its segment id.
struct SiteSegments {
    points: Vec<f64>,
    spins: Vec<i8>,
    /// Id of segment 0 in the global numbering.
    offset: usize,
}

impl SiteSegments {
    fn n_segments(&self) -> usize {
        self.points.len().max(1)
    }

    fn segment_of_piece(&self, k: usize) -> usize {
        self.offset + if k == self.points.len() { 0 } else { k }
    }
}

/// Draws the times of a rate-`rate` Poisson process on `[0, length)`.
fn poisson_times<R: Rng + ?Sized>(rate: f64, length: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let mut t = 0.0;
    loop {
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / rate;
        if t >= length {
            return out;
        }
        out.push(t);
    }
}

/// One Swendsen-Wang update of the worldline configuration.
///
/// New cuts arrive as a rate-Γ Poisson process on every site; together with
/// the existing flips they split the worldlines into segments. Overlapping
/// anti-aligned segments on neighboring sites bond with probability
/// `1 − exp(−2J t)` for overlap length `t`. Every resulting cluster is
/// flipped as a whole with probability one half, and cuts between equal
/// spins are dropped.
pub fn sw_sweep<R: Rng + ?Sized>(
    config: &mut Configuration,
    lattice: &Lattice,
    spec: &LatticeSpec,
    opts: &SweepOptions,
    rng: &mut R,
) -> SweepStats {
    let beta = config.beta;
    let mut inserted = Vec::with_capacity(config.lines.len());
    let mut sites = Vec::with_capacity(config.lines.len());
    let mut offset = 0;
    for line in &config.lines {
        let new = poisson_times(spec.gamma, beta, rng);
        inserted.push(new.len());
        let mut points: Vec<f64> = line.cuts.iter().chain(&new).copied().collect();
        points.sort_unstable_by(f64::total_cmp);
        points.dedup();
        // spin of every piece follows the old flips only
        let mut spins = Vec::with_capacity(points.len() + 1);
        let mut s = line.s0;
        let mut next_flip = 0;
        spins.push(s);
        for &p in &points {
            if line.cuts.get(next_flip) == Some(&p) {
                s = -s;
                next_flip += 1;
            }
            spins.push(s);
        }
        let seg = SiteSegments { points, spins, offset };
        offset += seg.n_segments();
        sites.push(seg);
    }

    let mut uf = UnionFind::new(offset);
    let two_j = 2.0 * spec.j;
    for &(a, b) in &lattice.bonds {
        let (sa, sb) = (&sites[a], &sites[b]);
        let (mut i, mut k) = (0, 0);
        let mut t = 0.0;
        loop {
            let na = sa.points.get(i).copied().unwrap_or(beta);
            let nb = sb.points.get(k).copied().unwrap_or(beta);
            let next = na.min(nb);
            let len = next - t;
            if len > 0.0 && sa.spins[i] != sb.spins[k] {
                let p = 1.0 - (-two_j * len).exp();
                if rng.gen::<f64>() < p {
                    uf.union(sa.segment_of_piece(i), sb.segment_of_piece(k));
                }
            }
            if next >= beta {
                break;
            }
            t = next;
            if na == next {
                i += 1;
            }
            if nb == next {
                k += 1;
            }
        }
    }

    // a random overall sign per cluster, drawn in order of first appearance;
    // bonded segments are anti-aligned and stay so
    let mut flip = vec![0i8; offset];
    let mut segment_spin = vec![0i8; offset];
    let mut clusters = 0;
    for seg in &sites {
        for k in 0..seg.n_segments() {
            let id = seg.offset + k;
            let r = uf.find(id);
            if flip[r] == 0 {
                flip[r] = if rng.gen() { 1 } else { -1 };
                clusters += 1;
            }
            segment_spin[id] = flip[r] * seg.spins[k];
        }
    }

    let old = opts.metropolis.then(|| (config.clone(), config.bond_action(lattice, spec.j)));
    for (line, seg) in config.lines.iter_mut().zip(&sites) {
        let spin = |k: usize| segment_spin[seg.segment_of_piece(k)];
        line.s0 = spin(0);
        line.cuts.clear();
        for (k, &p) in seg.points.iter().enumerate() {
            if spin(k) != spin(k + 1) {
                line.cuts.push(p);
            }
        }
    }

    let accepted = old.map(|(previous, a_old)| {
        let delta = config.bond_action(lattice, spec.j) - a_old;
        let ok = delta <= 0.0 || rng.gen::<f64>() < (-delta).exp();
        if !ok {
            *config = previous;
        }
        ok
    });
    SweepStats { inserted, clusters, accepted }
}

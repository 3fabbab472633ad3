use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryStrategy {
    Random,
    LeastConfidence,
    Margin,
    Entropy,
}

impl QueryStrategy {
    pub const ALL: [QueryStrategy; 4] = [
        QueryStrategy::Random,
        QueryStrategy::LeastConfidence,
        QueryStrategy::Margin,
        QueryStrategy::Entropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QueryStrategy::Random => "random",
            QueryStrategy::LeastConfidence => "least_confidence",
            QueryStrategy::Margin => "margin",
            QueryStrategy::Entropy => "entropy",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "random" | "rs" => Some(QueryStrategy::Random),
            "least_confidence" | "lc" => Some(QueryStrategy::LeastConfidence),
            "margin" => Some(QueryStrategy::Margin),
            "entropy" => Some(QueryStrategy::Entropy),
            _ => None,
        }
    }
}

/// `Σ −p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Uncertainty of one predictive distribution; larger means more informative.
///
/// Least confidence scores `1 − max p`, margin scores the negated gap
/// between the two largest probabilities and entropy the Shannon entropy.
pub fn distribution_score(p: &[f64], strategy: QueryStrategy) -> Result<f64> {
    if p.is_empty() {
        return Err(invalid("empty distribution"));
    }
    match strategy {
        QueryStrategy::Random => Err(invalid("random sampling has no uncertainty score")),
        QueryStrategy::LeastConfidence => Ok(1.0 - p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
        QueryStrategy::Margin => {
            let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &v in p {
                if v > a {
                    b = a;
                    a = v;
                } else if v > b {
                    b = v;
                }
            }
            if p.len() < 2 {
                b = 0.0;
            }
            Ok(-(a - b))
        }
        QueryStrategy::Entropy => Ok(shannon_entropy(p)),
    }
}

/// Key the query selection ranks by. With two classes the three uncertainty
/// measures are strictly decreasing functions of the gap `|p₁ − p₀|`, so they
/// rank by the gap itself: evaluated separately in floating point, entropy
/// flattens near ½ and `1 − max p` rounds near 1, which would break ties
/// differently per strategy.
pub fn ranking_score(p: &[f64], strategy: QueryStrategy) -> Result<f64> {
    if p.len() == 2 && strategy != QueryStrategy::Random {
        return Ok(-(p[0] - p[1]).abs());
    }
    distribution_score(p, strategy)
}

/// Committee disagreement `−Σ (V/C) ln(V/C)` over per-class vote counts.
pub fn vote_entropy(votes: &[usize], committee_size: usize) -> Result<f64> {
    if committee_size == 0 {
        return Err(invalid("committee must be nonempty"));
    }
    let total: usize = votes.iter().sum();
    if total != committee_size {
        return Err(invalid(format!("votes sum to {total}, committee has {committee_size} members")));
    }
    let frac: Vec<f64> = votes.iter().map(|&v| v as f64 / committee_size as f64).collect();
    Ok(shannon_entropy(&frac))
}

/// Position of the sample to query: a uniform draw for random sampling,
/// otherwise the highest score with ties going to the lowest position.
pub fn select_query<R: Rng + ?Sized>(scores: &[f64], rng: &mut R, strategy: QueryStrategy) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyPool);
    }
    if strategy == QueryStrategy::Random {
        return Ok(rng.gen_range(0..scores.len()));
    }
    Ok(crate::datasets::argmax_lowest(scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn certain_and_uniform_distributions() {
        let certain = [1.0, 0.0, 0.0];
        assert_eq!(distribution_score(&certain, QueryStrategy::LeastConfidence).unwrap(), 0.0);
        assert_eq!(distribution_score(&certain, QueryStrategy::Entropy).unwrap(), 0.0);
        let u = [1.0 / 3.0; 3];
        assert!((distribution_score(&u, QueryStrategy::Entropy).unwrap() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn worked_example() {
        let p = [0.5, 0.3, 0.2];
        assert!((distribution_score(&p, QueryStrategy::Margin).unwrap() + 0.2).abs() < 1e-15);
        assert!((distribution_score(&p, QueryStrategy::LeastConfidence).unwrap() - 0.5).abs() < 1e-15);
        let h = -(0.5f64 * 0.5f64.ln() + 0.3 * 0.3f64.ln() + 0.2 * 0.2f64.ln());
        assert!((distribution_score(&p, QueryStrategy::Entropy).unwrap() - h).abs() < 1e-15);
        assert!((h - 1.0297).abs() < 1e-4);
    }

    #[test]
    fn binary_rankings_coincide() {
        // least confidence rounds to zero where the entropy still separates
        let a = [1e-17, 1.0 - 1e-17];
        let b = [0.0, 1.0];
        assert_eq!(distribution_score(&a, QueryStrategy::LeastConfidence).unwrap(), 0.0);
        assert!(distribution_score(&a, QueryStrategy::Entropy).unwrap() > 0.0);
        let keys = |p: &[f64]| USAMP_KEYS.map(|s| ranking_score(p, s).unwrap());
        assert_eq!(keys(&a)[0], keys(&a)[1]);
        assert_eq!(keys(&a)[1], keys(&a)[2]);
        assert_eq!(keys(&b), [-1.0; 3]);
        // three classes keep their own scores
        let p = [0.5, 0.3, 0.2];
        assert_eq!(ranking_score(&p, QueryStrategy::Entropy).unwrap(), distribution_score(&p, QueryStrategy::Entropy).unwrap());
    }

    const USAMP_KEYS: [QueryStrategy; 3] = [QueryStrategy::LeastConfidence, QueryStrategy::Margin, QueryStrategy::Entropy];

    #[test]
    fn margin_handles_unsorted_input() {
        let p = [0.2, 0.5, 0.3];
        assert!((distribution_score(&p, QueryStrategy::Margin).unwrap() + 0.2).abs() < 1e-15);
    }

    #[test]
    fn vote_entropy_examples() {
        assert_eq!(vote_entropy(&[3, 0, 0], 3).unwrap(), 0.0);
        let v = vote_entropy(&[2, 1, 0], 3).unwrap();
        let oracle = -(2.0 / 3.0 * (2.0f64 / 3.0).ln() + 1.0 / 3.0 * (1.0f64 / 3.0).ln());
        assert!((v - oracle).abs() < 1e-15);
        assert!((v - 0.6365).abs() < 1e-4);
        assert!((vote_entropy(&[2, 2, 2, 2], 8).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(vote_entropy(&[2, 2], 3).is_err());
    }

    #[test]
    fn selection_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_query(&[0.3], &mut rng, QueryStrategy::Margin).unwrap(), 0);
        assert_eq!(select_query(&[0.1, 0.9, 0.9], &mut rng, QueryStrategy::Entropy).unwrap(), 1);
        assert_eq!(select_query(&[0.5, 0.5], &mut rng, QueryStrategy::LeastConfidence).unwrap(), 0);
        assert!(select_query(&[], &mut rng, QueryStrategy::Random).is_err());
        let picks: std::collections::HashSet<usize> =
            (0..200).map(|_| select_query(&[0.0; 5], &mut rng, QueryStrategy::Random).unwrap()).collect();
        assert_eq!(picks.len(), 5);
    }

    #[test]
    fn binary_strategies_rank_identically() {
        let ps: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 / 400.0).collect();
        let rank = |s: QueryStrategy| {
            let mut idx: Vec<usize> = (0..ps.len()).collect();
            let sc: Vec<f64> = ps.iter().map(|&p| distribution_score(&[p, 1.0 - p], s).unwrap()).collect();
            idx.sort_by(|&a, &b| sc[b].partial_cmp(&sc[a]).unwrap().then(a.cmp(&b)));
            idx[..20].to_vec()
        };
        let lc = rank(QueryStrategy::LeastConfidence);
        assert_eq!(lc, rank(QueryStrategy::Margin));
        assert_eq!(lc, rank(QueryStrategy::Entropy));
    }
}

//! Small statistics helpers shared by the experiment aggregation and the
//! Monte Carlo estimators.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Mean and population standard deviation, summed in the given order.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / n;
    (mean, var.sqrt())
}

/// Jackknife estimate and standard error of `f` applied to the bin means of
/// several parallel series.
///
/// `series[k][t]` is the value of the k-th primary quantity in measurement `t`.
/// The samples are cut into `bins` contiguous blocks (fewer if there are not
/// enough samples); `f` receives the vector of primary means.
pub fn jackknife<F>(series: &[&[f64]], bins: usize, f: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = series.first().map_or(0, |s| s.len());
    assert!(series.iter().all(|s| s.len() == n), "series lengths differ");
    let nb = bins.min(n).max(1);
    let per_bin = n / nb;
    let used = per_bin * nb;
    let k = series.len();

    // bin sums per primary quantity
    let mut bin_sums = vec![vec![0.0; nb]; k];
    for (q, s) in series.iter().enumerate() {
        for (b, chunk) in s[..used].chunks(per_bin.max(1)).enumerate().take(nb) {
            bin_sums[q][b] = compensated_sum(chunk.iter().copied());
        }
    }
    let totals: Vec<f64> = bin_sums
        .iter()
        .map(|b| compensated_sum(b.iter().copied()))
        .collect();
    let full_means: Vec<f64> = totals.iter().map(|t| t / used as f64).collect();
    let estimate = f(&full_means);
    if nb < 2 {
        return (estimate, f64::NAN);
    }

    let leave_out = (used - per_bin) as f64;
    let mut jk = Vec::with_capacity(nb);
    let mut means = vec![0.0; k];
    for b in 0..nb {
        for q in 0..k {
            means[q] = (totals[q] - bin_sums[q][b]) / leave_out;
        }
        jk.push(f(&means));
    }
    let jk_mean = compensated_sum(jk.iter().copied()) / nb as f64;
    let var = compensated_sum(jk.iter().map(|v| (v - jk_mean) * (v - jk_mean)))
        * (nb as f64 - 1.0)
        / nb as f64;
    (estimate, var.sqrt())
}

/// Integrated autocorrelation time with Sokal's self-consistent window (c = 6).
pub fn integrated_autocorrelation_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 0.5;
    }
    let (mean, _) = mean_std(xs);
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for t in 1..n / 2 {
        let c = xs[..n - t]
            .iter()
            .zip(&xs[t..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / ((n - t) as f64 * var);
        tau += c;
        if (t as f64) >= 6.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1e16, 1.0, -1e16];
        xs.extend(std::iter::repeat(1.0).take(10));
        assert_eq!(compensated_sum(xs), 11.0);
    }

    #[test]
    fn mean_std_population() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn jackknife_of_mean_matches_standard_error() {
        let xs: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let (est, err) = jackknife(&[&xs], 100, |m| m[0]);
        let (mean, std) = mean_std(&xs);
        assert!((est - mean).abs() < 1e-12);
        // for the plain mean, jackknife reduces to s / sqrt(n) with the n-1 variance
        let expect = std * (100.0f64 / 99.0).sqrt() / 10.0;
        assert!((err - expect).abs() < 1e-12, "{err} vs {expect}");
    }

    #[test]
    fn autocorrelation_of_white_noise_is_half() {
        let xs: Vec<f64> = (0..2000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        // anti-correlated sequence: clamps to the white-noise floor
        assert_eq!(integrated_autocorrelation_time(&xs), 0.5);
    }
}

use std::collections::BTreeMap;
use std::io::Write;

use super::engine::CurvePoint;
use crate::stats::mean_std;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    pub n_labels: usize,
    pub mean_accuracy: f64,
    /// Population standard deviation over the trials reaching this point.
    pub std_accuracy: f64,
    pub trials: usize,
}

/// Mean and spread of accuracy per label count, reduced over trials in the
/// order given.
pub fn aggregate_curves(curves: &[Vec<CurvePoint>]) -> Vec<AggregatePoint> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for curve in curves {
        for p in curve {
            by_n.entry(p.n_labels).or_default().push(p.accuracy);
        }
    }
    by_n.into_iter()
        .map(|(n_labels, acc)| {
            let (mean, std) = mean_std(&acc);
            AggregatePoint { n_labels, mean_accuracy: mean, std_accuracy: std, trials: acc.len() }
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(mut w: W, curves: &[Vec<CurvePoint>]) -> Result<()> {
    writeln!(w, "trial,n_labels,accuracy,mean_fidelity")?;
    for (trial, curve) in curves.iter().enumerate() {
        for p in curve {
            let fid = p.mean_fidelity.map(|f| format!("{f:.12}")).unwrap_or_default();
            writeln!(w, "{trial},{},{:.6},{fid}", p.n_labels, p.accuracy)?;
        }
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(mut w: W, points: &[AggregatePoint]) -> Result<()> {
    writeln!(w, "n_labels,mean_accuracy,std_accuracy")?;
    for p in points {
        writeln!(w, "{},{:.6},{:.6}", p.n_labels, p.mean_accuracy, p.std_accuracy)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(n: usize, a: f64) -> CurvePoint {
        CurvePoint { n_labels: n, accuracy: a, mean_fidelity: None }
    }

    #[test]
    fn aggregates_per_label_count() {
        let curves = vec![vec![pt(3, 0.5), pt(4, 0.7)], vec![pt(3, 0.7)]];
        let agg = aggregate_curves(&curves);
        assert_eq!(agg.len(), 2);
        assert!((agg[0].mean_accuracy - 0.6).abs() < 1e-15);
        assert!((agg[0].std_accuracy - 0.1).abs() < 1e-15);
        assert_eq!((agg[1].trials, agg[1].std_accuracy), (1, 0.0));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &[vec![CurvePoint { n_labels: 3, accuracy: 0.25, mean_fidelity: Some(0.5) }]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trial,n_labels,accuracy,mean_fidelity\n0,3,0.250000,0.500000000000\n");
        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &aggregate_curves(&[vec![pt(5, 1.0)]])).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n_labels,mean_accuracy,std_accuracy\n5,1.000000,0.000000\n");
    }
}

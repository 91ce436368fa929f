use serde::{Deserialize, Serialize};

use crate::score::LayerScore;

/// Box-plot summary. Quartiles interpolate linearly between order
/// statistics (Hyndman-Fan type 7); whiskers end at the most extreme data
/// within 1.5·IQR of the quartiles; everything beyond is an outlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<LayerScore>,
}

/// Type-7 quantile of ascending `sorted`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    /// `None` for an empty list.
    pub fn of(scores: &[LayerScore]) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = scores.iter().map(|s| s.mae).collect();
        v.sort_by(f64::total_cmp);
        let q1 = quantile(&v, 0.25);
        let median = quantile(&v, 0.5);
        let q3 = quantile(&v, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let whisker_low = v.iter().copied().find(|&x| x >= lo_fence).expect("q1 is inside the fence");
        let whisker_high = v.iter().rev().copied().find(|&x| x <= hi_fence).expect("q3 is inside the fence");
        let mut outliers: Vec<LayerScore> = scores.iter().filter(|s| s.mae < whisker_low || s.mae > whisker_high).cloned().collect();
        outliers.sort_by(|a, b| a.mae.total_cmp(&b.mae).then(a.key().cmp(&b.key())));
        Some(Self {
            count: scores.len(),
            median,
            q1,
            q3,
            whisker_low,
            whisker_high,
            outliers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> Vec<LayerScore> {
        v.iter()
            .enumerate()
            .map(|(i, &mae)| LayerScore {
                part: 1,
                layer: i as u32 + 1,
                mae,
                section: None,
            })
            .collect()
    }

    #[test]
    fn one_to_nine() {
        let b = BoxStats::of(&scores(&[5.0, 1.0, 9.0, 2.0, 8.0, 3.0, 7.0, 4.0, 6.0])).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (3.0, 5.0, 7.0));
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 9.0));
        assert!(b.outliers.is_empty());
    }

    #[test]
    fn constant() {
        let b = BoxStats::of(&scores(&[0.3; 7])).unwrap();
        assert_eq!((b.q1, b.median, b.q3, b.whisker_low, b.whisker_high), (0.3, 0.3, 0.3, 0.3, 0.3));
        assert!(b.outliers.is_empty());
        assert!(BoxStats::of(&[]).is_none());
    }
}

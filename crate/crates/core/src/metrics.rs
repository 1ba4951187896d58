//! SAD / MSE against a ground-truth matte.

use std::fmt;

use crate::error::{MattingError, Result};
use crate::imaging::AlphaMatte;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    /// Sum of absolute differences, alphas on the `[0, 1]` scale.
    pub sad: f64,
    /// Mean squared error over the evaluated pixels.
    pub mse: f64,
    pub pixel_count: usize,
}

impl EvalReport {
    /// SAD on the 0..255 scale used by published benchmark tables.
    pub fn sad_255(&self) -> f64 {
        self.sad * 255.0
    }

    /// Single-line `key=value` record.
    pub fn record(&self) -> String {
        format!("sad={} mse={} n={}", self.sad, self.mse, self.pixel_count)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SAD {:.4} (x255: {:.2})  MSE {:.6}  over {} pixels",
            self.sad,
            self.sad_255(),
            self.mse,
            self.pixel_count
        )
    }
}

fn check_dims(pred: &AlphaMatte, truth: &AlphaMatte) -> Result<()> {
    if pred.width != truth.width || pred.height != truth.height {
        return Err(MattingError::DimensionMismatch(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.width, pred.height, truth.width, truth.height
        )));
    }
    Ok(())
}

/// Metrics over every pixel.
pub fn evaluate(pred: &AlphaMatte, truth: &AlphaMatte) -> Result<EvalReport> {
    check_dims(pred, truth)?;
    Ok(accumulate(
        pred.alpha.iter().zip(&truth.alpha).map(|(a, b)| a - b),
    ))
}

/// Metrics restricted to pixels where `mask` is true (e.g. the unknown region).
pub fn evaluate_masked(pred: &AlphaMatte, truth: &AlphaMatte, mask: &[bool]) -> Result<EvalReport> {
    check_dims(pred, truth)?;
    if mask.len() != pred.alpha.len() {
        return Err(MattingError::DimensionMismatch(format!(
            "mask has {} entries, matte has {}",
            mask.len(),
            pred.alpha.len()
        )));
    }
    Ok(accumulate(
        pred.alpha
            .iter()
            .zip(&truth.alpha)
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|((a, b), _)| a - b),
    ))
}

fn accumulate(diffs: impl Iterator<Item = f64>) -> EvalReport {
    let (mut sad, mut sq, mut n) = (0.0, 0.0, 0usize);
    for d in diffs {
        sad += d.abs();
        sq += d * d;
        n += 1;
    }
    EvalReport {
        sad,
        mse: if n == 0 { 0.0 } else { sq / n as f64 },
        pixel_count: n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedMethod {
    pub rank: usize,
    pub method: String,
    pub report: EvalReport,
}

/// Sorts by SAD, then MSE; full ties keep input order.
pub fn compare_methods(reports: Vec<(String, EvalReport)>) -> Result<Vec<RankedMethod>> {
    if reports.is_empty() {
        return Err(MattingError::InvalidParameter("nothing to compare".into()));
    }
    let mut rows = reports;
    rows.sort_by(|a, b| {
        a.1.sad
            .total_cmp(&b.1.sad)
            .then(a.1.mse.total_cmp(&b.1.mse))
    });
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (method, report))| RankedMethod {
            rank: i + 1,
            method,
            report,
        })
        .collect())
}

pub fn format_ranking(rows: &[RankedMethod]) -> String {
    let width = rows
        .iter()
        .map(|r| r.method.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = format!(
        "{:>4}  {:<width$}  {:>12}  {:>10}  {:>12}\n",
        "rank", "method", "SAD", "SAD x255", "MSE"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>4}  {:<width$}  {:>12.4}  {:>10.2}  {:>12.6}\n",
            r.rank,
            r.method,
            r.report.sad,
            r.report.sad_255(),
            r.report.mse
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matte(v: Vec<f64>) -> AlphaMatte {
        let n = v.len();
        AlphaMatte::new(n, 1, v).unwrap()
    }

    fn report(sad: f64, mse: f64) -> EvalReport {
        EvalReport {
            sad,
            mse,
            pixel_count: 4,
        }
    }

    #[test]
    fn identical_is_zero() {
        let a = matte(vec![0.1, 0.5, 0.9]);
        let r = evaluate(&a, &a).unwrap();
        assert_eq!((r.sad, r.mse, r.pixel_count), (0.0, 0.0, 3));
    }

    #[test]
    fn single_unit_error() {
        let mut b = vec![0.0; 10];
        let a = matte(b.clone());
        b[7] = 1.0;
        let r = evaluate(&a, &matte(b)).unwrap();
        assert_eq!(r.sad, 1.0);
        assert_eq!(r.mse, 0.1);
    }

    #[test]
    fn masked_subset() {
        let a = matte(vec![0.0, 0.0, 0.0, 0.0]);
        let b = matte(vec![1.0, 0.5, 0.0, 1.0]);
        let r = evaluate_masked(&a, &b, &[false, true, true, false]).unwrap();
        assert_eq!((r.sad, r.mse, r.pixel_count), (0.5, 0.125, 2));
        assert!(evaluate_masked(&a, &b, &[true]).is_err());
    }

    #[test]
    fn mismatch_is_error() {
        let a = AlphaMatte::new(2, 2, vec![0.0; 4]).unwrap();
        let b = AlphaMatte::new(4, 1, vec![0.0; 4]).unwrap();
        assert!(matches!(
            evaluate(&a, &b),
            Err(MattingError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn record_format() {
        let r = EvalReport {
            sad: 4.0,
            mse: 1.0,
            pixel_count: 4,
        };
        assert_eq!(r.record(), "sad=4 mse=1 n=4");
    }

    #[test]
    fn ranking_order() {
        assert!(compare_methods(vec![]).is_err());
        let one = compare_methods(vec![("a".into(), report(1.0, 0.1))]).unwrap();
        assert_eq!(one.len(), 1);

        let rows = compare_methods(vec![
            ("five".into(), report(5.0, 0.01)),
            ("three".into(), report(3.0, 0.5)),
        ])
        .unwrap();
        assert_eq!(rows[0].method, "three");

        let rows = compare_methods(vec![
            ("hi".into(), report(2.0, 0.02)),
            ("lo".into(), report(2.0, 0.01)),
            ("tie-a".into(), report(9.0, 0.5)),
            ("tie-b".into(), report(9.0, 0.5)),
        ])
        .unwrap();
        let names: Vec<_> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(names, ["lo", "hi", "tie-a", "tie-b"]);
        assert_eq!(rows[3].rank, 4);
    }

    fn alphas(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0..=1.0f64, n)
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in alphas(16), b in alphas(16)) {
            let (ma, mb) = (matte(a.clone()), matte(b.clone()));
            let r1 = evaluate(&ma, &mb).unwrap();
            let r2 = evaluate(&mb, &ma).unwrap();
            prop_assert_eq!(r1, r2);
            let max_abs = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            prop_assert!(r1.mse <= max_abs + 1e-15);
            prop_assert!(max_abs <= 1.0);
            prop_assert_eq!(r1.sad == 0.0, r1.mse == 0.0);
            prop_assert_eq!(r1.sad == 0.0, a == b);
        }

        #[test]
        fn error_scaling(base in alphas(12), err in proptest::collection::vec(-0.5..0.5f64, 12), s in 0.0..2.0f64) {
            let truth = matte(vec![0.0; 12]);
            let e1 = matte(err.iter().map(|e| e * 0.5).collect());
            let e2 = matte(err.iter().map(|e| e * 0.5 * s).collect());
            let (r1, r2) = (evaluate(&e1, &truth).unwrap(), evaluate(&e2, &truth).unwrap());
            prop_assert!((r2.sad - s * r1.sad).abs() < 1e-12);
            prop_assert!((r2.mse - s * s * r1.mse).abs() < 1e-12);
            let _ = base;
        }

        #[test]
        fn sad_triangle(a in alphas(10), b in alphas(10), c in alphas(10)) {
            let (ma, mb, mc) = (matte(a), matte(b), matte(c));
            let ac = evaluate(&ma, &mc).unwrap().sad;
            let ab = evaluate(&ma, &mb).unwrap().sad;
            let bc = evaluate(&mb, &mc).unwrap().sad;
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}

//! Log-log rate fitting for the O(1/N) claims.

use crate::HarnessError;

/// Least-squares slope of `log(value)` against `log(N)`, with the smallest-N
/// pair excluded (it carries the largest pre-asymptotic bias). Requires at
/// least 3 pairs, all values strictly positive.
pub fn fit_rate(pairs: &[(u32, f64)]) -> Result<f64, HarnessError> {
    if pairs.len() < 3 {
        return Err(HarnessError::RateUndefined(format!(
            "need at least 3 sweep points, got {}",
            pairs.len()
        )));
    }
    if let Some(&(n, v)) = pairs.iter().find(|&&(_, v)| v <= 0.0 || !v.is_finite()) {
        return Err(HarnessError::RateUndefined(format!(
            "nonpositive value {v} at N = {n}"
        )));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by_key(|&(n, _)| n);
    let pts: Vec<(f64, f64)> = sorted
        .iter()
        .skip(1)
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Ok((m * sxy - sx * sy) / (m * sxx - sx * sx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_first_order_decay() {
        let pairs: Vec<(u32, f64)> = [8u32, 16, 32, 64, 128]
            .iter()
            .map(|&n| (n, 3.7 / n as f64))
            .collect();
        let s = fit_rate(&pairs).unwrap();
        assert!((s + 1.0).abs() < 1e-12, "slope {s}");
    }

    #[test]
    fn exact_second_order_decay() {
        let pairs: Vec<(u32, f64)> = [8u32, 16, 32, 64]
            .iter()
            .map(|&n| (n, 0.9 / (n as f64 * n as f64)))
            .collect();
        let s = fit_rate(&pairs).unwrap();
        assert!((s + 2.0).abs() < 1e-12, "slope {s}");
    }

    #[test]
    fn zero_values_are_rate_undefined() {
        let pairs = vec![(8u32, 0.0), (16, 0.0), (32, 0.0)];
        assert!(matches!(fit_rate(&pairs), Err(HarnessError::RateUndefined(_))));
        assert!(matches!(fit_rate(&pairs[..2]), Err(HarnessError::RateUndefined(_))));
    }
}

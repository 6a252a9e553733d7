//! Small descriptive statistics used by corpus reports.

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median with even-count midpoint averaging; 0 for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    }
}

/// Fraction of values strictly below `threshold`; 0 for an empty slice.
pub fn fraction_below(values: &[f64], threshold: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| **v < threshold).count() as f64 / values.len() as f64
}

/// Kendall's tau-b between two equally long samples.
///
/// `tau_b = (C - D) / sqrt((n0 - n1) * (n0 - n2))` where `n0 = n(n-1)/2` and
/// `n1`, `n2` count pairs tied in `x` and in `y`. Returns `None` when either
/// sample is constant (or shorter than two), where the coefficient is undefined.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "samples must have equal length");
    let n = x.len();
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            if dx == 0 {
                ties_x += 1;
            }
            if dy == 0 {
                ties_y += 1;
            }
            match dx * dy {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let n0 = (n * n.saturating_sub(1) / 2) as i64;
    let denom = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    (denom > 0.0).then(|| (concordant - discordant) as f64 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_median_fraction() {
        let totals = [2.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&totals), 2.75);
        assert_eq!(median(&totals), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(fraction_below(&totals, 2.5), 0.5);
        assert_eq!(mean(&[]), 0.0);
        assert_eq!(median(&[]), 0.0);
        assert_eq!(fraction_below(&[], 2.5), 0.0);
    }

    #[test]
    fn kendall_extremes() {
        let a = [0.7, 0.6, 0.5, 0.57, 0.34];
        assert_eq!(kendall_tau_b(&a, &a), Some(1.0));
        let reversed: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_eq!(kendall_tau_b(&a, &reversed), Some(-1.0));
        assert_eq!(kendall_tau_b(&a, &[0.5; 5]), None);
        assert_eq!(kendall_tau_b(&[1.0], &[1.0]), None);
    }

    #[test]
    fn kendall_with_ties_matches_hand_count() {
        // x = [1,2,2,3], y = [1,3,2,3]
        // pairs: (0,1)+ (0,2)+ (0,3)+ (1,2) tie-x (1,3) tie-y (2,3)+
        // C = 4, D = 0, n0 = 6, n1 = 1, n2 = 1 -> 4 / sqrt(5 * 5) = 0.8
        let tau = kendall_tau_b(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 3.0]).unwrap();
        assert!((tau - 0.8).abs() < 1e-15);
    }
}

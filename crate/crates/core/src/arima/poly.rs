/// True when `1 - c1 z - ... - cp z^p` has every root strictly outside the
/// unit circle, checked through the Levinson step-down recursion (all partial
/// autocorrelations inside (-1, 1)).
pub(crate) fn roots_outside_unit_circle(coeffs: &[f64]) -> bool {
    let mut a = coeffs.to_vec();
    while let Some(&kappa) = a.last() {
        let k = a.len();
        if !kappa.is_finite() || kappa.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - kappa * kappa;
        let next: Vec<f64> = (0..k - 1)
            .map(|j| (a[j] + kappa * a[k - 2 - j]) / denom)
            .collect();
        a = next;
    }
    true
}

pub(crate) fn is_stationary(ar: &[f64]) -> bool {
    roots_outside_unit_circle(ar)
}

/// `1 + t1 z + ... + tq z^q` has roots outside the unit circle.
pub(crate) fn is_invertible(ma: &[f64]) -> bool {
    let neg: Vec<f64> = ma.iter().map(|t| -t).collect();
    roots_outside_unit_circle(&neg)
}

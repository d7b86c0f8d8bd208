//! Lag-polynomial helpers: psi weights and root-location checks.
//!
//! AR polynomials are `1 − φ₁z − … − φ_p z^p`, MA polynomials are
//! `1 + θ₁z + … + θ_q z^q`.

/// Roots must lie outside the circle of radius `1 + ROOT_MARGIN`.
pub const ROOT_MARGIN: f64 = 1e-8;

/// Schur-Cohn step-down test: true when all roots of `1 − Σ a_i z^i` lie
/// strictly outside the circle of radius `radius`.
fn roots_outside(a: &[f64], radius: f64) -> bool {
    let mut cur: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(i, c)| c * radius.powi(i as i32 + 1))
        .collect();
    while let Some(&r) = cur.last() {
        if !r.is_finite() || r.abs() >= 1.0 {
            return false;
        }
        let k = cur.len();
        let denom = 1.0 - r * r;
        let next: Vec<f64> = (0..k - 1).map(|j| (cur[j] + r * cur[k - 2 - j]) / denom).collect();
        cur = next;
    }
    true
}

/// AR polynomial has all roots with modulus > 1 + [`ROOT_MARGIN`].
pub fn is_stationary(phi: &[f64]) -> bool {
    roots_outside(phi, 1.0 + ROOT_MARGIN)
}

/// MA polynomial has all roots with modulus > 1 + [`ROOT_MARGIN`].
pub fn is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    roots_outside(&neg, 1.0 + ROOT_MARGIN)
}

/// MA(∞) weights ψ₁..ψ_h (ψ₀ = 1 is implied and not returned).
///
/// ψ_j = θ_j + Σ_{i=1..min(j,p)} φ_i ψ_{j−i}, with θ_j = 0 for j > q.
pub fn psi_weights(phi: &[f64], theta: &[f64], h: usize) -> Vec<f64> {
    let mut psi = vec![1.0; h + 1];
    for j in 1..=h {
        let mut v = theta.get(j - 1).copied().unwrap_or(0.0);
        for (i, f) in phi.iter().enumerate().take(j) {
            v += f * psi[j - 1 - i];
        }
        psi[j] = v;
    }
    psi.remove(0);
    psi
}

/// Coefficients of `(1 − Σφ_i z^i)(1 − z)^d`, returned in the same
/// `1 − Σ a_i z^i` convention.
pub fn ar_times_unit_roots(phi: &[f64], d: usize) -> Vec<f64> {
    // Full polynomial with leading 1.
    let mut poly: Vec<f64> = std::iter::once(1.0).chain(phi.iter().map(|f| -f)).collect();
    for _ in 0..d {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c).collect()
}

/// Psi weights of the full ARIMA operator, including `d` unit roots.
pub fn arima_psi_weights(phi: &[f64], theta: &[f64], d: usize, h: usize) -> Vec<f64> {
    psi_weights(&ar_times_unit_roots(phi, d), theta, h)
}

//! Reparametrization of AR/MA coefficients through partial autocorrelations.
//!
//! Any real vector maps to a stationary AR polynomial: each entry is squashed
//! by `tanh` into (−1, 1) and the Durbin-Levinson recursion turns those
//! partial autocorrelations into AR coefficients.

/// Bound on unconstrained parameters, keeping `tanh` away from ±1.
pub(crate) const RAW_BOUND: f64 = 7.5;

/// Unconstrained values to AR coefficients `φ` of a stationary polynomial.
pub fn from_partial_autocorrelations(raw: &[f64]) -> Vec<f64> {
    let pacf: Vec<f64> = raw.iter().map(|u| u.clamp(-RAW_BOUND, RAW_BOUND).tanh()).collect();
    let mut phi = pacf.clone();
    let mut work = pacf.clone();
    for j in 1..pacf.len() {
        let a = pacf[j];
        for k in 0..j {
            work[k] -= a * phi[j - k - 1];
        }
        phi[..j].copy_from_slice(&work[..j]);
    }
    phi
}

/// Inverse of [`from_partial_autocorrelations`]; `None` if `phi` is not stationary.
pub fn to_partial_autocorrelations(phi: &[f64]) -> Option<Vec<f64>> {
    let p = phi.len();
    let mut cur = phi.to_vec();
    let mut work = phi.to_vec();
    for j in (1..p).rev() {
        let a = cur[j];
        if a.abs() >= 1.0 {
            return None;
        }
        for k in 0..j {
            work[k] = (cur[k] + a * cur[j - k - 1]) / (1.0 - a * a);
        }
        cur[..j].copy_from_slice(&work[..j]);
    }
    if cur.iter().any(|a| a.abs() >= 1.0) {
        return None;
    }
    Some(cur.iter().map(|a| a.atanh()).collect())
}

/// MA coefficients from unconstrained values: `θ = −φ(raw)` so that
/// `1 + Σθ_j z^j` inherits the root location of the AR image.
pub(crate) fn ma_from_raw(raw: &[f64]) -> Vec<f64> {
    from_partial_autocorrelations(raw).into_iter().map(|v| -v).collect()
}

#[cfg(test)]
pub(crate) fn ma_to_raw(theta: &[f64]) -> Option<Vec<f64>> {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    to_partial_autocorrelations(&neg)
}

//! Kalman filter for the exact ARMA likelihood.
//!
//! State-space form with state dimension `r = max(p, q + 1)`:
//!
//! ```text
//! x_t     = Z α_t,                 Z = [1, 0, …, 0]
//! α_{t+1} = T α_t + R ε_{t+1},     T[i][0] = φ_{i+1}, T[i][i+1] = 1
//!                                  R = [1, θ₁, …, θ_{r−1}]ᵀ
//! ```
//!
//! The filter runs with unit innovation variance; the variance enters the
//! likelihood as a scale factor. The initial state covariance is the exact
//! stationary solution of `P = T P Tᵀ + R Rᵀ`.

use crate::error::{Error, Result};

const STEADY_TOL: f64 = 1e-14;

pub(crate) struct StateSpace {
    r: usize,
    phi: Vec<f64>,
    rvec: Vec<f64>,
}

/// Sufficient statistics of one filter pass (unit innovation variance).
pub(crate) struct FilterOutput {
    pub n: usize,
    pub sum_log_f: f64,
    pub sum_sq: f64,
    /// Innovations scaled by `1/√F_t`.
    pub residuals: Vec<f64>,
    /// Predicted state for time n (first out-of-sample step).
    pub next_state: Vec<f64>,
}

impl FilterOutput {
    /// MLE of the innovation variance given the coefficients.
    pub fn sigma2_hat(&self) -> f64 {
        self.sum_sq / self.n as f64
    }

    pub fn loglik(&self, sigma2: f64) -> f64 {
        let n = self.n as f64;
        -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + n * sigma2.ln() + self.sum_log_f + self.sum_sq / sigma2)
    }

    pub fn concentrated_loglik(&self) -> f64 {
        self.loglik(self.sigma2_hat())
    }
}

impl StateSpace {
    pub fn new(phi: &[f64], theta: &[f64]) -> Self {
        let r = phi.len().max(theta.len() + 1);
        let mut p = vec![0.0; r];
        p[..phi.len()].copy_from_slice(phi);
        let mut rvec = vec![0.0; r];
        rvec[0] = 1.0;
        rvec[1..=theta.len()].copy_from_slice(theta);
        Self { r, phi: p, rvec }
    }

    fn transition(&self, a: &[f64]) -> Vec<f64> {
        let r = self.r;
        (0..r)
            .map(|i| self.phi[i] * a[0] + if i + 1 < r { a[i + 1] } else { 0.0 })
            .collect()
    }

    /// Advances a state by one step without noise.
    pub fn step(&self, a: &[f64]) -> Vec<f64> {
        self.transition(a)
    }

    /// `T P Tᵀ + R Rᵀ` for a row-major `r×r` matrix.
    fn propagate(&self, p: &[f64], out: &mut [f64], tmp: &mut [f64]) {
        let r = self.r;
        // tmp = T P
        for i in 0..r {
            for j in 0..r {
                let below = if i + 1 < r { p[(i + 1) * r + j] } else { 0.0 };
                tmp[i * r + j] = self.phi[i] * p[j] + below;
            }
        }
        // out = tmp Tᵀ + R Rᵀ
        for i in 0..r {
            for j in 0..r {
                let right = if j + 1 < r { tmp[i * r + j + 1] } else { 0.0 };
                out[i * r + j] = tmp[i * r] * self.phi[j] + right + self.rvec[i] * self.rvec[j];
            }
        }
    }

    /// Stationary covariance: solves `(I − T⊗T) vec P = vec(R Rᵀ)`.
    pub fn stationary_covariance(&self) -> Result<Vec<f64>> {
        let r = self.r;
        let m = r * r;
        // Dense T.
        let mut t = vec![0.0; m];
        for i in 0..r {
            t[i * r] = self.phi[i];
            if i + 1 < r {
                t[i * r + i + 1] = 1.0;
            }
        }
        let mut a = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        for i in 0..r {
            for j in 0..r {
                let row = i * r + j;
                b[row] = self.rvec[i] * self.rvec[j];
                a[row * m + row] += 1.0;
                for k in 0..r {
                    let tik = t[i * r + k];
                    if tik == 0.0 {
                        continue;
                    }
                    for l in 0..r {
                        let tjl = t[j * r + l];
                        if tjl != 0.0 {
                            a[row * m + k * r + l] -= tik * tjl;
                        }
                    }
                }
            }
        }
        solve_dense(&mut a, &mut b, m)?;
        // Symmetrize against rounding.
        for i in 0..r {
            for j in 0..i {
                let v = 0.5 * (b[i * r + j] + b[j * r + i]);
                b[i * r + j] = v;
                b[j * r + i] = v;
            }
        }
        Ok(b)
    }

    /// Runs the filter over mean-adjusted observations.
    pub fn filter(&self, x: &[f64]) -> Result<FilterOutput> {
        let r = self.r;
        let mut p = self.stationary_covariance()?;
        let mut a = vec![0.0; r];
        let mut p_next = vec![0.0; r * r];
        let mut tmp = vec![0.0; r * r];
        let mut sum_log_f = 0.0;
        let mut sum_sq = 0.0;
        let mut residuals = Vec::with_capacity(x.len());
        let mut steady = false;
        let mut steady_gain = vec![0.0; r];
        let mut steady_f = 0.0;

        for &obs in x {
            let (f, gain) = if steady {
                (steady_f, steady_gain.clone())
            } else {
                let f = p[0];
                if !(f > 0.0 && f.is_finite()) {
                    return Err(Error::NumericalFailure(format!("prediction variance {f}")));
                }
                let gain: Vec<f64> = (0..r).map(|i| p[i * r] / f).collect();
                (f, gain)
            };
            let v = obs - a[0];
            sum_log_f += f.ln();
            sum_sq += v * v / f;
            residuals.push(v / f.sqrt());

            for i in 0..r {
                a[i] += gain[i] * v;
            }
            a = self.transition(&a);

            if !steady {
                // Updated covariance: P − K P[0,:]
                for i in 0..r {
                    for j in 0..r {
                        tmp[i * r + j] = p[i * r + j] - gain[i] * p[j];
                    }
                }
                let updated = tmp.clone();
                self.propagate(&updated, &mut p_next, &mut tmp);
                let change = p.iter().zip(&p_next).map(|(u, w)| (u - w).abs()).fold(0.0, f64::max);
                std::mem::swap(&mut p, &mut p_next);
                if change < STEADY_TOL {
                    steady = true;
                    steady_f = p[0];
                    steady_gain = (0..r).map(|i| p[i * r] / steady_f).collect();
                }
            }
        }
        if !(sum_sq.is_finite() && sum_log_f.is_finite()) {
            return Err(Error::NumericalFailure("non-finite likelihood terms".into()));
        }
        Ok(FilterOutput {
            n: x.len(),
            sum_log_f,
            sum_sq,
            residuals,
            next_state: a,
        })
    }
}

/// Gaussian elimination with partial pivoting; the solution overwrites `b`.
fn solve_dense(a: &mut [f64], b: &mut [f64], m: usize) -> Result<()> {
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .expect("non-empty range");
        if a[pivot * m + col].abs() < 1e-300 {
            return Err(Error::NumericalFailure("singular stationary-covariance system".into()));
        }
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * m + col];
        for row in col + 1..m {
            let factor = a[row * m + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..m {
                a[row * m + k] -= factor * a[col * m + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..m).rev() {
        let mut acc = b[col];
        for k in col + 1..m {
            acc -= a[col * m + k] * b[k];
        }
        b[col] = acc / a[col * m + col];
    }
    Ok(())
}

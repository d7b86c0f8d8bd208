//! Conditional-sum-of-squares and exact maximum-likelihood estimation.

use super::kalman::StateSpace;
use super::poly::{is_invertible, is_stationary};
use super::optim::{minimize_bfgs, BfgsOptions};
use super::transform::{from_partial_autocorrelations, ma_from_raw};
use super::{aicc, ArimaCoefficients, ArimaOrder, FilterState, FitMethod, FittedModel, SeriesMeta};
use crate::error::{Error, Result};
use crate::series::{difference, DailySeries, DifferencedSeries};

/// Variance used to evaluate the likelihood of a constant differenced series.
pub(crate) const DEGENERATE_VARIANCE_FLOOR: f64 = 1e-12;

/// Optimization problem on a differenced series.
///
/// Parameter vector: `p` raw AR values, `q` raw MA values, then (with a
/// constant) the mean offset `m`, where `μ = mean(w) + sd(w)·m`. Measuring the
/// mean in units of the sample spread makes the search path independent of
/// the data's location and scale.
struct Problem<'a> {
    w: &'a [f64],
    order: ArimaOrder,
    center: f64,
    spread: f64,
}

impl<'a> Problem<'a> {
    fn new(w: &'a [f64], order: ArimaOrder) -> Self {
        let n = w.len() as f64;
        let center = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|v| (v - center).powi(2)).sum::<f64>() / n;
        let spread = if var > 0.0 { var.sqrt() } else { 1.0 };
        Self {
            w,
            order,
            center,
            spread,
        }
    }

    fn dim(&self) -> usize {
        self.order.p + self.order.q + usize::from(self.order.with_constant)
    }

    fn unpack(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let (p, q) = (self.order.p, self.order.q);
        let phi = from_partial_autocorrelations(&x[..p]);
        let theta = ma_from_raw(&x[p..p + q]);
        let mu = if self.order.with_constant {
            self.center + self.spread * x[p + q]
        } else {
            0.0
        };
        (phi, theta, mu)
    }

    fn css(&self, phi: &[f64], theta: &[f64], mu: f64) -> (f64, Vec<f64>) {
        let n = self.w.len();
        let mut e = vec![0.0; n];
        let mut sum = 0.0;
        for t in 0..n {
            let mut v = self.w[t] - mu;
            for (i, f) in phi.iter().enumerate() {
                if t > i {
                    v -= f * (self.w[t - 1 - i] - mu);
                }
            }
            for (j, th) in theta.iter().enumerate() {
                if t > j {
                    v -= th * e[t - 1 - j];
                }
            }
            e[t] = v;
            sum += v * v;
        }
        (sum, e)
    }

    fn css_objective(&self, x: &[f64]) -> f64 {
        let (phi, theta, mu) = self.unpack(x);
        if !admissible(&phi, &theta) {
            return f64::INFINITY;
        }
        let (sum, _) = self.css(&phi, &theta, mu);
        0.5 * (sum / self.w.len() as f64).ln()
    }

    fn mle_objective(&self, x: &[f64]) -> f64 {
        let (phi, theta, mu) = self.unpack(x);
        if !admissible(&phi, &theta) {
            return f64::INFINITY;
        }
        let centered: Vec<f64> = self.w.iter().map(|v| v - mu).collect();
        match StateSpace::new(&phi, &theta).filter(&centered) {
            Ok(out) if out.sum_sq > 0.0 => -out.concentrated_loglik() / self.w.len() as f64,
            _ => f64::INFINITY,
        }
    }

    fn coefficients(&self, x: &[f64], sigma2: f64) -> ArimaCoefficients {
        let (phi, theta, mu) = self.unpack(x);
        let constant = if self.order.with_constant {
            mu * (1.0 - phi.iter().sum::<f64>())
        } else {
            0.0
        };
        ArimaCoefficients::new(phi, theta, constant, sigma2)
    }

    fn options(&self) -> BfgsOptions {
        BfgsOptions {
            // Tolerance of 1e-8 on the log-likelihood; the objective is per observation.
            f_tol: 1e-8 / self.w.len() as f64,
            ..Default::default()
        }
    }
}

/// Rejects parameter images that rounding has pushed onto the unit circle.
fn admissible(phi: &[f64], theta: &[f64]) -> bool {
    is_stationary(phi) && is_invertible(theta)
}

fn prepare(series: &DailySeries, order: &ArimaOrder) -> Result<DifferencedSeries> {
    order.validate()?;
    let diff = difference(series, order.d)?;
    let needed = order.p + order.q + usize::from(order.with_constant) + 3;
    if diff.values.len() < needed {
        return Err(Error::InsufficientData {
            needed: needed + order.d,
            got: series.len(),
        });
    }
    Ok(diff)
}

/// White-noise closed form: sample mean and mean squared deviation.
fn white_noise(w: &[f64], with_constant: bool) -> ArimaCoefficients {
    let n = w.len() as f64;
    let mu = if with_constant { w.iter().sum::<f64>() / n } else { 0.0 };
    let sigma2 = w.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    ArimaCoefficients::new(vec![], vec![], mu, sigma2)
}

struct CssFit {
    x: Vec<f64>,
    coefficients: ArimaCoefficients,
    converged: bool,
    iterations: usize,
}

fn css_fit(problem: &Problem) -> Result<CssFit> {
    let x0 = vec![0.0; problem.dim()];
    let min = minimize_bfgs(|x| problem.css_objective(x), &x0, &problem.options())
        .ok_or_else(|| Error::NumericalFailure("conditional sum of squares is not finite".into()))?;
    let (phi, theta, mu) = problem.unpack(&min.x);
    let (sum, _) = problem.css(&phi, &theta, mu);
    let coefficients = problem.coefficients(&min.x, sum / problem.w.len() as f64);
    Ok(CssFit {
        x: min.x,
        coefficients,
        converged: min.converged,
        iterations: min.iterations,
    })
}

/// Conditional-sum-of-squares estimate (pre-sample values set to zero).
///
/// `sigma2` is the mean squared residual.
pub fn estimate_css(series: &DailySeries, order: &ArimaOrder) -> Result<ArimaCoefficients> {
    let diff = prepare(series, order)?;
    if order.p == 0 && order.q == 0 {
        return Ok(white_noise(&diff.values, order.with_constant));
    }
    let fit = css_fit(&Problem::new(&diff.values, *order))?;
    if !fit.converged {
        return Err(Error::ConvergenceFailure {
            iterations: fit.iterations,
            best: Box::new(fit.coefficients),
        });
    }
    Ok(fit.coefficients)
}

/// Exact Gaussian log-likelihood of the differenced, mean-adjusted series.
pub fn log_likelihood(series: &DailySeries, order: &ArimaOrder, coefficients: &ArimaCoefficients) -> Result<f64> {
    coefficients.check_shape(order)?;
    if !coefficients.is_valid() {
        return Err(Error::InvalidCoefficients);
    }
    if !(coefficients.sigma2 > 0.0) {
        return Err(Error::NumericalFailure(format!("sigma2 = {}", coefficients.sigma2)));
    }
    order.validate()?;
    let diff = difference(series, order.d)?;
    let mu = if order.with_constant { coefficients.mean() } else { 0.0 };
    let centered: Vec<f64> = diff.values.iter().map(|v| v - mu).collect();
    let out = StateSpace::new(&coefficients.phi, &coefficients.theta).filter(&centered)?;
    let ll = out.loglik(coefficients.sigma2);
    if !ll.is_finite() {
        return Err(Error::NumericalFailure("log-likelihood is not finite".into()));
    }
    Ok(ll)
}

fn assemble(
    series: &DailySeries,
    diff: &DifferencedSeries,
    order: ArimaOrder,
    coefficients: ArimaCoefficients,
    method: FitMethod,
    converged: bool,
) -> Result<FittedModel> {
    let mu = if order.with_constant { coefficients.mean() } else { 0.0 };
    let centered: Vec<f64> = diff.values.iter().map(|v| v - mu).collect();
    let out = StateSpace::new(&coefficients.phi, &coefficients.theta).filter(&centered)?;
    let degenerate = method == FitMethod::Degenerate;
    let sigma2 = if degenerate {
        coefficients.sigma2.max(DEGENERATE_VARIANCE_FLOOR)
    } else {
        coefficients.sigma2
    };
    if !(sigma2 > 0.0) {
        return Err(Error::NumericalFailure(format!("sigma2 = {sigma2}")));
    }
    let loglik = out.loglik(sigma2);
    let n = diff.values.len();
    let aicc = aicc(loglik, n, order.n_params());
    if !loglik.is_finite() || !aicc.is_finite() {
        return Err(Error::NumericalFailure("log-likelihood is not finite".into()));
    }
    Ok(FittedModel {
        order,
        coefficients,
        loglik,
        aicc,
        residuals: out.residuals,
        series_meta: SeriesMeta {
            start_date: series.start_date(),
            length: series.len(),
            kind: series.kind(),
        },
        method,
        converged,
        degenerate,
        state: FilterState {
            next_state: out.next_state,
            tails: diff.tail_values.clone(),
            last_observation: series.last(),
        },
    })
}

/// Wraps known coefficients as a fitted model (filter state, likelihood,
/// residuals) without estimating anything.
pub fn fit_with_coefficients(
    series: &DailySeries,
    order: &ArimaOrder,
    coefficients: &ArimaCoefficients,
) -> Result<FittedModel> {
    coefficients.check_shape(order)?;
    if !coefficients.is_valid() {
        return Err(Error::InvalidCoefficients);
    }
    order.validate()?;
    let diff = difference(series, order.d)?;
    assemble(series, &diff, *order, coefficients.clone(), FitMethod::Supplied, true)
}

/// Closed-form model for a constant differenced series.
pub(crate) fn degenerate_fit(series: &DailySeries, d: usize, with_constant: bool) -> Result<FittedModel> {
    let order = ArimaOrder::new(0, d, 0, with_constant);
    order.validate()?;
    let diff = difference(series, d)?;
    let coefficients = white_noise(&diff.values, with_constant);
    assemble(series, &diff, order, coefficients, FitMethod::Degenerate, true)
}

/// Exact maximum-likelihood fit, started from the CSS estimate.
///
/// The innovation variance is concentrated out of the likelihood. If the
/// likelihood cannot be evaluated at the CSS point the CSS fit is returned
/// with `method = CssFallback`. Hitting the iteration limit is reported
/// through `converged = false` on the best iterate.
pub fn estimate_mle(series: &DailySeries, order: &ArimaOrder) -> Result<FittedModel> {
    let diff = prepare(series, order)?;
    let w = &diff.values;
    if order.p == 0 && order.q == 0 {
        let coefficients = white_noise(w, order.with_constant);
        return assemble(series, &diff, *order, coefficients, FitMethod::Mle, true);
    }
    let problem = Problem::new(w, *order);
    let css = css_fit(&problem)?;
    let Some(min) = minimize_bfgs(|x| problem.mle_objective(x), &css.x, &problem.options()) else {
        return assemble(series, &diff, *order, css.coefficients, FitMethod::CssFallback, css.converged);
    };
    let (phi, theta, mu) = problem.unpack(&min.x);
    let centered: Vec<f64> = w.iter().map(|v| v - mu).collect();
    let out = StateSpace::new(&phi, &theta).filter(&centered)?;
    let coefficients = problem.coefficients(&min.x, out.sigma2_hat());
    assemble(series, &diff, *order, coefficients, FitMethod::Mle, min.converged)
}

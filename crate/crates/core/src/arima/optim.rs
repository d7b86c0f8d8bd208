//! BFGS minimization with central finite-difference gradients.
//!
//! Every accepted step strictly decreases the objective, so the returned
//! minimum is never worse than the starting point.

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when an iteration lowers the objective by less than this.
    pub f_tol: f64,
    /// ...and the largest gradient component is below this.
    pub g_tol: f64,
    pub fd_step: f64,
    /// Largest allowed change of any coordinate in one step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            f_tol: 1e-8,
            g_tol: 1e-5,
            fd_step: 1e-5,
            max_step: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn gradient(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * (1.0 + x[i].abs());
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            let g = (up - down) / (2.0 * step);
            if g.is_finite() {
                g
            } else {
                0.0
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` from `x0`. Returns `None` if `f(x0)` is not finite.
///
/// Non-finite objective values during the search are treated as +∞.
pub fn minimize_bfgs(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &BfgsOptions) -> Option<Minimum> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return None;
    }
    if n == 0 {
        return Some(Minimum {
            x,
            f: fx,
            iterations: 0,
            converged: true,
        });
    }
    let identity = |n: usize| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        h
    };
    let mut hinv = identity(n);
    let mut g = gradient(&mut f, &x, opts.fd_step);

    for iter in 1..=opts.max_iter {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax < 1e-12 {
            return Some(Minimum {
                x,
                f: fx,
                iterations: iter - 1,
                converged: true,
            });
        }
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        if dot(&dir, &g) >= 0.0 {
            hinv = identity(n);
            dir = g.iter().map(|v| -v).collect();
        }
        let dmax = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut alpha = if dmax > opts.max_step { opts.max_step / dmax } else { 1.0 };
        let slope = dot(&dir, &g);

        let mut accepted = None;
        for _ in 0..50 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
            let fc = f(&cand);
            if fc.is_finite() && fc <= fx + 1e-4 * alpha * slope && fc < fx {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // No descent at finite-difference resolution.
            return Some(Minimum {
                x,
                f: fx,
                iterations: iter,
                converged: true,
            });
        };
        let g_new = gradient(&mut f, &x_new, opts.fd_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        let decrease = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if decrease <= opts.f_tol && gmax <= opts.g_tol {
            return Some(Minimum {
                x,
                f: fx,
                iterations: iter,
                converged: true,
            });
        }
    }
    Some(Minimum {
        x,
        f: fx,
        iterations: opts.max_iter,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = minimize_bfgs(
            |x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &BfgsOptions::default(),
        )
        .unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5);
        assert!((m.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock() {
        let opts = BfgsOptions {
            f_tol: 1e-14,
            g_tol: 1e-7,
            ..Default::default()
        };
        let m = minimize_bfgs(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &opts,
        )
        .unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-3, "{:?}", m);
        assert!((m.x[1] - 1.0).abs() < 1e-3, "{:?}", m);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (x[0] * 3.0).sin() + 0.1 * x[0] * x[0];
        let m = minimize_bfgs(f, &[0.7], &BfgsOptions::default()).unwrap();
        assert!(m.f <= f(&[0.7]));
    }

    #[test]
    fn non_finite_start() {
        assert!(minimize_bfgs(|_| f64::NAN, &[0.0], &BfgsOptions::default()).is_none());
    }
}

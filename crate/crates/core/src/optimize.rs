//! Unconstrained BFGS minimisation with a backtracking Armijo line search.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfgsOptions {
    /// Stop when the max-norm of the gradient drops below this.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-9,
            max_iter: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Armijo decrease, or the approximate Wolfe conditions of Hager and Zhang
/// once value differences reach rounding level.
fn accept(fx: f64, fnew: f64, alpha: f64, slope: f64, new_slope: f64) -> bool {
    if !fnew.is_finite() {
        return false;
    }
    if fnew <= fx + 1e-4 * alpha * slope {
        return true;
    }
    fnew <= fx + 1e-12 * fx.abs() && new_slope >= 0.9 * slope && new_slope <= -0.8 * slope
}

/// Minimises `f`, which returns the value and writes the gradient into its
/// second argument. A non-finite value is treated as an infeasible point.
pub fn bfgs(mut f: impl FnMut(&[f64], &mut [f64]) -> f64, x0: Vec<f64>, opts: &BfgsOptions) -> Minimum {
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    // inverse Hessian, row-major
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    let mut first = true;
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut hy = vec![0.0; n];
    let mut stalls = 0;

    for it in 0..opts.max_iter {
        let gnorm = max_norm(&g);
        if gnorm < opts.grad_tol || !fx.is_finite() {
            return Minimum {
                x,
                value: fx,
                grad_norm: gnorm,
                iterations: it,
                converged: fx.is_finite(),
            };
        }
        for i in 0..n {
            p[i] = -dot(&h[i * n..(i + 1) * n], &g);
        }
        let mut slope = dot(&p, &g);
        if slope >= 0.0 {
            // lost descent: restart from steepest descent
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
                p[i] = -g[i];
            }
            first = true;
            slope = dot(&p, &g);
        }
        let mut alpha = 1.0;
        let mut fnew;
        loop {
            for i in 0..n {
                xn[i] = x[i] + alpha * p[i];
            }
            fnew = f(&xn, &mut gn);
            if accept(fx, fnew, alpha, slope, dot(&p, &gn)) {
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                break;
            }
        }
        if !accept(fx, fnew, alpha, slope, dot(&p, &gn)) {
            // no progress possible along any descent direction we can find
            if first {
                return Minimum {
                    x,
                    value: fx,
                    grad_norm: gnorm,
                    iterations: it,
                    converged: false,
                };
            }
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            first = true;
            continue;
        }
        for i in 0..n {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        let sy = dot(&s, &y);
        if fx - fnew <= 1e-16 * fx.abs().max(1e-300) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        fx = fnew;
        if stalls > 20 {
            let gnorm = max_norm(&g);
            return Minimum {
                x,
                value: fx,
                grad_norm: gnorm,
                iterations: it + 1,
                converged: gnorm < opts.grad_tol,
            };
        }
        if sy > 1e-300 {
            if first {
                let scale = sy / dot(&y, &y);
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] = if i == j { scale } else { 0.0 };
                    }
                }
                first = false;
            }
            for i in 0..n {
                hy[i] = dot(&h[i * n..(i + 1) * n], &y);
            }
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            let c = (1.0 + rho * yhy) * rho;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
    }
    let gnorm = max_norm(&g);
    Minimum {
        x,
        value: fx,
        grad_norm: gnorm,
        iterations: opts.max_iter,
        converged: gnorm < opts.grad_tol,
    }
}

//! BFGS minimization with a strong-Wolfe line search.
//!
//! The inverse Hessian approximation starts at identity, is rescaled by
//! `sᵀy / yᵀy` after the first accepted step, and is only updated when the
//! curvature condition `sᵀy > 0` holds.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub struct BfgsOptions {
    /// Stop once `‖∇f‖∞` falls to this value. When the line search can no
    /// longer lower `f` at all, `√grad_tol` is accepted instead.
    pub grad_tol: f64,
    pub max_iterations: usize,
    /// Sufficient decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iterations: 500,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BfgsOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&DVector<f64>) -> (f64, DVector<f64>)> Counted<F> {
    fn eval(&mut self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        self.evaluations += 1;
        (self.f)(x)
    }
}

/// Minimizes `fg`, which returns the value and gradient at a point.
pub fn minimize<F>(fg: F, x0: DVector<f64>, opts: &BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut fg = Counted { f: fg, evaluations: 0 };
    let mut x = x0;
    let (mut f, mut g) = fg.eval(&x);
    let mut h = DMatrix::identity(n, n);
    let mut scaled = false;
    let mut iterations = 0;
    let mut floor = false;

    // At the precision floor no representable step lowers f, so the gradient
    // is only held to the square root of the tolerance there.
    let finish = |x, f, g: DVector<f64>, iterations, evaluations, tol: f64, floor: bool| {
        let converged = g.amax() <= tol || (floor && g.amax() <= tol.sqrt());
        BfgsOutcome {
            x,
            value: f,
            gradient: g,
            iterations,
            evaluations,
            converged,
        }
    };

    while iterations < opts.max_iterations {
        if !f.is_finite() || g.amax() <= opts.grad_tol {
            break;
        }
        let mut p = -(&h * &g);
        if p.dot(&g) >= 0.0 {
            h = DMatrix::identity(n, n);
            scaled = false;
            p = -g.clone();
        }
        // Until the metric has been scaled, cap the first trial step at unit length.
        let alpha0 = if scaled { 1.0 } else { (1.0 / p.amax()).min(1.0) };
        let step = match line_search(&mut fg, &x, f, &g, &p, alpha0, opts) {
            Some(s) => s,
            None if scaled => {
                // Retry once along steepest descent with a fresh metric.
                h = DMatrix::identity(n, n);
                scaled = false;
                continue;
            }
            None => {
                floor = f.is_finite();
                break;
            }
        };
        iterations += 1;
        let (alpha, f_new, g_new) = step;
        let s = &p * alpha;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        x += &s;
        let stalled = s.amax() <= f64::EPSILON * x.amax().max(1.0) && f_new >= f;
        f = f_new;
        g = g_new;
        if stalled {
            floor = true;
            break;
        }
        if sy > 1e-12 * s.norm() * y.norm() {
            if !scaled {
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded.
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
    }
    finish(x, f, g, iterations, fg.evaluations, opts.grad_tol, floor)
}

/// Strong-Wolfe bracketing and zoom. Returns `(α, f(x+αp), ∇f(x+αp))`.
fn line_search<F>(
    fg: &mut Counted<F>,
    x: &DVector<f64>,
    f0: f64,
    g0: &DVector<f64>,
    p: &DVector<f64>,
    alpha0: f64,
    opts: &BfgsOptions,
) -> Option<(f64, f64, DVector<f64>)>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let d0 = g0.dot(p);
    let mut eval = |a: f64| {
        let (f, g) = fg.eval(&(x + p * a));
        let d = g.dot(p);
        (f, g, d)
    };

    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, d0);
    let mut a = alpha0;
    for i in 0..opts.max_line_search {
        let (f, g, d) = eval(a);
        if !f.is_finite() || !d.is_finite() {
            a = 0.5 * (a_prev + a);
            continue;
        }
        if f > f0 + opts.c1 * a * d0 || (i > 0 && f >= f_prev) {
            return zoom(&mut eval, f0, d0, (a_prev, f_prev, d_prev), (a, f, d), opts);
        }
        if d.abs() <= -opts.c2 * d0 {
            return Some((a, f, g));
        }
        if d >= 0.0 {
            return zoom(&mut eval, f0, d0, (a, f, d), (a_prev, f_prev, d_prev), opts);
        }
        a_prev = a;
        f_prev = f;
        d_prev = d;
        a *= 2.0;
    }
    None
}

fn zoom<E>(
    eval: &mut E,
    f0: f64,
    d0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    opts: &BfgsOptions,
) -> Option<(f64, f64, DVector<f64>)>
where
    E: FnMut(f64) -> (f64, DVector<f64>, f64),
{
    for _ in 0..opts.max_line_search {
        let a = interpolate(lo, hi);
        let (f, g, d) = eval(a);
        if !f.is_finite() || f > f0 + opts.c1 * a * d0 || f >= lo.1 {
            hi = (a, f, d);
        } else {
            if d.abs() <= -opts.c2 * d0 {
                return Some((a, f, g));
            }
            if d * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, f, d);
        }
        if (hi.0 - lo.0).abs() <= f64::EPSILON * lo.0.abs().max(1e-300) {
            break;
        }
    }
    // Accept the best sufficient-decrease point found, if it improved.
    if lo.0 > 0.0 && lo.1 < f0 {
        let (f, g, _) = eval(lo.0);
        return Some((lo.0, f, g));
    }
    None
}

/// Minimizer of the quadratic through `lo` (value and slope) and `hi` (value),
/// safeguarded to the middle 80% of the bracket.
fn interpolate(lo: (f64, f64, f64), hi: (f64, f64, f64)) -> f64 {
    let (a0, f0, d0) = lo;
    let (a1, f1, _) = hi;
    let w = a1 - a0;
    let denom = 2.0 * (f1 - f0 - d0 * w);
    let mut a = if denom.abs() > 0.0 && denom.is_finite() {
        a0 - d0 * w * w / denom
    } else {
        f64::NAN
    };
    let (left, right) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
    let margin = 0.1 * (right - left);
    if !a.is_finite() || a < left + margin || a > right - margin {
        a = 0.5 * (a0 + a1);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rosenbrock(x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = DVector::from_vec(vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ]);
        (f, g)
    }

    #[test]
    fn rosenbrock_minimum() {
        let out = minimize(rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &BfgsOptions::default());
        assert!(out.converged, "{out:?}");
        assert_relative_eq!(out.x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(out.x[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn ill_scaled_quadratic() {
        let scales = [1e-2, 1.0, 1e3];
        let fg = |x: &DVector<f64>| {
            let f = x.iter().zip(&scales).map(|(v, s)| s * (v - 1.0).powi(2)).sum();
            let g = DVector::from_iterator(3, x.iter().zip(&scales).map(|(v, s)| 2.0 * s * (v - 1.0)));
            (f, g)
        };
        let opts = BfgsOptions { grad_tol: 1e-12, ..Default::default() };
        let out = minimize(fg, DVector::from_vec(vec![5.0, -3.0, 0.2]), &opts);
        assert!(out.converged);
        for v in out.x.iter() {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn already_optimal_start_takes_no_steps() {
        let out = minimize(rosenbrock, DVector::from_vec(vec![1.0, 1.0]), &BfgsOptions::default());
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }
}

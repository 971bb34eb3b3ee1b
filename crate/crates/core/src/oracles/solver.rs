use super::{condition_number, norm, true_gradient, Problem};
use crate::error::{Error, Result};

const MAX_ITERS: usize = 5_000_000;

/// Plain gradient descent `x <- x - alpha grad(x)` until `||grad|| <= tol`.
///
/// For a `mu`-strongly convex, `L`-smooth objective and
/// `0 < alpha <= 2/(L + mu)` each step contracts the distance to the
/// minimizer by `1 - alpha mu`.
pub fn gradient_descent<F>(grad: F, x0: Vec<f64>, alpha: f64, tol: f64, max_iters: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("stepsize {alpha} must be positive")));
    }
    let mut x = x0;
    for _ in 0..=max_iters {
        let g = grad(&x)?;
        let gn = norm(&g);
        if !gn.is_finite() {
            return Err(Error::NumericalFailure("gradient descent diverged".into()));
        }
        if gn <= tol {
            return Ok(x);
        }
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= alpha * gi);
    }
    Err(Error::NumericalFailure(format!(
        "gradient descent did not reach tolerance {tol} within {max_iters} iterations"
    )))
}

/// Minimizer of `f = mean_{i in honest} f_i` by full-gradient descent with
/// `alpha = 2 / (L + mu)`, started from the origin.
pub fn solve_minimizer(problem: &dyn Problem, honest: &[usize], tol: f64) -> Result<Vec<f64>> {
    let c = condition_number(problem, honest)?;
    let alpha = 2.0 / (c.l + c.mu);
    gradient_descent(
        |x| true_gradient(problem, honest, x),
        vec![0.0; problem.dim()],
        alpha,
        tol,
        MAX_ITERS,
    )
}

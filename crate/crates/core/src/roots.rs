//! Bracketed scalar root finding and minimization.

/// Why a root search gave up.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("root is not bracketed: f({a}) = {fa}, f({b}) = {fb}")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
}

/// Stopping rule for [`brent`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Absolute tolerance on the abscissa.
    pub x: f64,
    /// Stop once `|f| <= f`.
    pub f: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            x: 1e-15,
            f: 1e-13,
            max_iter: 200,
        }
    }
}

struct Stopping(Tolerance);

impl roots::Convergency<f64> for Stopping {
    fn is_root_found(&mut self, y: f64) -> bool {
        y.abs() <= self.0.f
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= self.0.x + 4.0 * f64::EPSILON * x1.abs().max(x2.abs())
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= self.0.max_iter
    }
}

/// Brent's method on a sign-changing bracket `[a, b]`.
pub fn brent<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }
    roots::find_root_brent(a, b, &mut f, &mut Stopping(tol)).map_err(|e| match e {
        roots::SearchError::NoBracketing => RootError::NotBracketed { a, b, fa, fb },
        _ => RootError::NoConvergence(tol.max_iter),
    })
}

/// Golden-section search for a local minimum of `f` on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_unbracketed_interval() {
        let e = brent(|x| x * x + 1.0, -1.0, 1.0, Tolerance::default()).unwrap_err();
        assert!(matches!(e, RootError::NotBracketed { .. }));
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        // the minimum value is O(1), so x is only resolvable to about sqrt(eps)
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }
}

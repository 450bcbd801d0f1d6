//! Central finite differences on the unit cube.

use thiserror::Error;

use super::Exhausted;

/// Default stencil half-width.
pub const FD_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FdError {
    #[error("evaluation budget exhausted")]
    Exhausted,
    #[error("non-finite function value while differencing coordinate {0}")]
    NonFinite(usize),
}

impl From<Exhausted> for FdError {
    fn from(_: Exhausted) -> Self {
        FdError::Exhausted
    }
}

/// Gradient of `f` at `x` from `2·d` evaluations.
///
/// Near a face of the cube the stencil is clamped into `[0, 1]` and the
/// difference is divided by the actual stencil width, so every probe stays
/// inside the box.
pub fn fd_gradient<F>(mut f: F, x: &[f64], eps: f64) -> Result<Vec<f64>, FdError>
where
    F: FnMut(&[f64]) -> Result<f64, Exhausted>,
{
    assert!(eps > 0.0 && eps < 0.5, "stencil half-width must be in (0, 0.5)");
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let hi = (x[j] + eps).min(1.0);
        let lo = (x[j] - eps).max(0.0);
        probe[j] = hi;
        let f_hi = f(&probe)?;
        probe[j] = lo;
        let f_lo = f(&probe)?;
        probe[j] = x[j];
        let g = (f_hi - f_lo) / (hi - lo);
        if !g.is_finite() {
            return Err(FdError::NonFinite(j));
        }
        grad.push(g);
    }
    Ok(grad)
}

//! Continuum prediction for the finite-temperature condensate of the massless
//! Schwinger model, independent of the chemical potential.

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Upper cutoff on `a cosh t`; beyond it the integrand is below `e^-46`.
const EXPONENT_CUTOFF: f64 = 46.0;
const ABS_TOLERANCE: f64 = 1e-10;
const MAX_DEPTH: u32 = 50;
/// Smallest `a` accepted; below this the integrand near `t = 0` is `~ -1/a`
/// and the integral is dominated by rounding.
pub const MIN_A: f64 = 1e-8;

/// Adaptive Simpson quadrature of `f` over `[lo, hi]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (lm, rm) = (0.5 * (lo + mid), 0.5 * (mid + hi));
    let (flm, frm) = (f(lm), f(rm));
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1)
        + simpson_step(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1)
}

/// `I(a) = \int_0^\infty dt / (1 - exp(a cosh t))`, truncated where
/// `a cosh t` reaches the exponent cutoff.
pub fn i_integral(a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!("I(a) requires finite a > 0, got {a}")));
    }
    if a < MIN_A {
        return Err(Error::IntegrandGuard(format!("a = {a:e} below {MIN_A:e}")));
    }
    if a >= EXPONENT_CUTOFF {
        // Integrand is already below e^-46 at t = 0.
        return Ok(0.0);
    }
    let t_max = (EXPONENT_CUTOFF / a).acosh();
    let integrand = |t: f64| -1.0 / (a * t.cosh()).exp_m1();
    Ok(adaptive_simpson(&integrand, 0.0, t_max, ABS_TOLERANCE))
}

/// Photon mass over coupling, `m_gamma / g = 1/sqrt(pi)`.
pub fn photon_mass_over_g() -> f64 {
    1.0 / std::f64::consts::PI.sqrt()
}

/// Zero-temperature condensate `-e^gamma / (2 pi^{3/2})` in units of `g`.
pub fn zero_temperature_condensate() -> f64 {
    -photon_mass_over_g() / (2.0 * std::f64::consts::PI) * EULER_GAMMA.exp()
}

/// Analytic condensate `<psi-bar psi>/g` at each temperature `T/g`.
pub fn analytic_condensate(t_over_g: &[f64]) -> Result<Vec<f64>> {
    let prefactor = zero_temperature_condensate();
    t_over_g
        .iter()
        .map(|&t| {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid(format!("temperature {t} must be positive")));
            }
            let a = photon_mass_over_g() / t;
            Ok(prefactor * (2.0 * i_integral(a)?).exp())
        })
        .collect()
}

//! Annulus Schwarz kernel and friends.
//!
//! The central object is the kernel of the annulus `A_r = {e^{-r} < |z| < 1}`,
//! defined as the symmetric limit
//!
//! ```text
//! S_r(z) = lim_{N->inf} sum_{k=-N..N} (e^{2kr} + z) / (e^{2kr} - z),
//! ```
//!
//! together with its lift to the periodic covering strip,
//!
//! ```text
//! St_r(z) = (1/i) S_r(e^{iz})
//!         = cot(z/2) + 4 sum_{n>=1} sin(nz) / (e^{2nr} - 1),
//! ```
//!
//! which is exactly the Weierstrass-zeta combination `2 zeta(z) - (2/pi) zeta(pi) z`
//! for the period lattice `(2 pi, 2ir)`, and equals the logarithmic derivative
//! `(1/pi) (d_v theta / theta)(z / 2 pi, ir / pi)` of Jacobi's first theta
//! function. Both classical forms reduce to the same Lambert-type series, so the
//! crate evaluates that series directly ("series" method) and, independently,
//! the theta form after the modular substitution `tau -> -1/tau` ("theta"
//! method), whose nome `exp(-pi^2/r)` stays small precisely when the direct
//! nome `exp(-r)` approaches one. The two routes cross-validate each other.
//!
//! Facts used throughout (and enforced by the test suite): `Re S_r = 1` on the
//! inner circle `C_r`, `Re S_r = 0` on the unit circle minus the point `1`,
//! `Re S_r > 0` inside the annulus, `Im S_r = 0` on the real axis away from the
//! poles `{e^{2kr}}`, and the heat-type identity
//! `d_r St_r = St_r St_r' + St_r''`.

use num_complex::Complex64;
use thiserror::Error;

/// Hard cap on series terms before reporting non-convergence.
const MAX_TERMS: usize = 4000;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("argument {z} within guard distance {guard} of a kernel pole")]
    PoleProximity { z: Complex64, guard: f64 },
    #[error("series did not meet tolerance {tol} within {terms} terms (r = {r}); use the theta method")]
    NonConvergence { r: f64, tol: f64, terms: usize },
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error("derivative order {0} not supported (max 3)")]
    UnsupportedOrder(usize),
}

pub type Result<T> = std::result::Result<T, KernelError>;

/// Evaluation strategy for the kernel series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Symmetric partial sums of the defining rational series (equivalently the
    /// Lambert expansion of the zeta form); geometric ratio `e^{-2r}`.
    Series,
    /// Theta log-derivative after the modular transform `tau -> -1/tau`;
    /// geometric ratio `e^{-pi^2/r}`, usable down to arbitrarily small moduli.
    Theta,
}

/// Modulus, truncation tolerance and evaluation strategy for one kernel call.
#[derive(Debug, Clone, Copy)]
pub struct KernelContext {
    pub r: f64,
    pub tol: f64,
    pub method: Method,
}

/// Guard distance to the nearest pole, below which evaluation refuses to run.
pub const POLE_GUARD: f64 = 1e-6;

/// Below this modulus the direct series is considered hopeless and `auto`
/// switches to the theta representation.
pub const SERIES_MIN_R: f64 = 0.3;

impl KernelContext {
    pub fn new(r: f64, tol: f64, method: Method) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(KernelError::InvalidParameter(format!("modulus r = {r}")));
        }
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(KernelError::InvalidParameter(format!("tolerance = {tol}")));
        }
        Ok(Self { r, tol, method })
    }

    /// Default context: tolerance `1e-12`, series for `r >= 0.3`, theta below.
    pub fn auto(r: f64) -> Self {
        let method = if r >= SERIES_MIN_R { Method::Series } else { Method::Theta };
        Self { r, tol: 1e-12, method }
    }
}

/// `S_r(z)`, the annulus Schwarz kernel.
pub fn schwarz(ctx: &KernelContext, z: Complex64) -> Result<Complex64> {
    guard_plane_poles(ctx.r, z)?;
    match ctx.method {
        Method::Series => schwarz_series(ctx, z),
        Method::Theta => {
            // S_r(z) = i * St_r(zeta) with e^{i zeta} = z.
            let zeta = Complex64::new(z.arg(), -z.norm().ln());
            Ok(Complex64::i() * covering_strip(ctx, zeta, 0, Repr::Modular)?)
        }
    }
}

/// `1 - S_r(e^{-r}/z)`, the kernel reflected through the inner circle.
pub fn reflected(ctx: &KernelContext, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(KernelError::PoleProximity { z, guard: POLE_GUARD });
    }
    let w = Complex64::new((-ctx.r).exp(), 0.0) / z;
    Ok(Complex64::new(1.0, 0.0) - schwarz(ctx, w)?)
}

/// Order-`order` z-derivative of the covering kernel `St_r` (orders 0..=3).
pub fn covering(ctx: &KernelContext, z: Complex64, order: usize) -> Result<Complex64> {
    if order > 3 {
        return Err(KernelError::UnsupportedOrder(order));
    }
    guard_strip_poles(ctx.r, z)?;
    let repr = match ctx.method {
        Method::Series => Repr::Direct,
        Method::Theta => Repr::Modular,
    };
    covering_strip(ctx, z, order, repr)
}

/// `d_r St_r(z)`, by termwise differentiation of the chosen representation.
pub fn covering_dr(ctx: &KernelContext, z: Complex64) -> Result<Complex64> {
    guard_strip_poles(ctx.r, z)?;
    match ctx.method {
        Method::Series => covering_dr_direct(ctx, z),
        Method::Theta => covering_dr_modular(ctx, z),
    }
}

/// The radial (disc) kernel `(chi + z)/(chi - z)`.
pub fn radial(z: Complex64, chi: Complex64) -> Result<Complex64> {
    let den = chi - z;
    if den.norm() < 1e-14 {
        return Err(KernelError::PoleProximity { z, guard: 1e-14 });
    }
    Ok((chi + z) / den)
}

// ---------------------------------------------------------------------------
// plane-form series

/// Symmetric partial sums, regrouped so the +-k pairs telescope:
/// `S_r(z) = (1+z)/(1-z) + sum_{k>=1} [ 2z/(e^{2kr} - z) + 2e^{-2kr}/(e^{-2kr} - z) ]`.
fn schwarz_series(ctx: &KernelContext, z: Complex64) -> Result<Complex64> {
    let q = (-2.0 * ctx.r).exp();
    let zn = z.norm();
    let mut sum = (Complex64::new(1.0, 0.0) + z) / (Complex64::new(1.0, 0.0) - z);
    let coeff = 4.0 * (zn + 1.0 / zn);
    let mut grow = 1.0; // e^{2kr}
    for k in 1..=MAX_TERMS {
        grow *= 1.0 / q; // e^{2kr}
        let decay = 1.0 / grow;
        sum += 2.0 * z / (Complex64::new(grow, 0.0) - z);
        sum += 2.0 * decay / (Complex64::new(decay, 0.0) - z);
        // geometric tail bound once past the crossover scales
        if grow >= 2.0 * zn && decay <= 0.5 * zn {
            let tail = coeff * q.powi(k as i32 + 1) / (1.0 - q);
            if tail < ctx.tol {
                return Ok(sum);
            }
        }
    }
    Err(KernelError::NonConvergence { r: ctx.r, tol: ctx.tol, terms: MAX_TERMS })
}

// ---------------------------------------------------------------------------
// covering-strip forms

#[derive(Clone, Copy)]
enum Repr {
    Direct,
    Modular,
}

/// cot(u) and its u-derivatives up to order 3, expressed through c = cot(u).
fn cot_derivs(u: Complex64) -> [Complex64; 4] {
    let c = u.cos() / u.sin();
    let one = Complex64::new(1.0, 0.0);
    let c2 = c * c;
    [
        c,
        -(one + c2),
        2.0 * c * (one + c2),
        -(one + c2) * (2.0 * one + 6.0 * c2),
    ]
}

/// d^m/dz^m sin(n z) = n^m * {sin, cos, -sin, -cos}[m mod 4](n z).
fn sin_deriv(nz: Complex64, n: f64, order: usize) -> Complex64 {
    let scale = n.powi(order as i32);
    match order % 4 {
        0 => scale * nz.sin(),
        1 => scale * nz.cos(),
        2 => -scale * nz.sin(),
        _ => -scale * nz.cos(),
    }
}

fn reduce_angle(x: f64) -> f64 {
    let k = (x / (2.0 * std::f64::consts::PI)).round();
    x - 2.0 * std::f64::consts::PI * k
}

/// Direct Lambert form on the strip:
/// `St_r^{(m)}(z) = D^m cot(z/2) + 4 sum_n b_n d^m sin(nz)`, `b_n = 1/(e^{2nr}-1)`.
fn covering_direct(ctx: &KernelContext, z: Complex64, order: usize) -> Result<Complex64> {
    let y = z.im.abs();
    if y >= 2.0 * ctx.r {
        // outside the strip of convergence of the direct series
        return Err(KernelError::NonConvergence { r: ctx.r, tol: ctx.tol, terms: 0 });
    }
    let z = Complex64::new(reduce_angle(z.re), z.im);
    let cd = cot_derivs(0.5 * z);
    let mut sum = cd[order] * 0.5f64.powi(order as i32);
    let log_ratio = y - 2.0 * ctx.r; // log of geometric ratio, < 0
    for n in 1..=MAX_TERMS {
        let e = 2.0 * (n as f64) * ctx.r;
        let b = if e > 700.0 { 0.0 } else { 1.0 / (e.exp() - 1.0) };
        let term = 4.0 * b * sin_deriv((n as f64) * z, n as f64, order);
        sum += term;
        let bound = term.norm() / (1.0 - log_ratio.exp());
        if n >= 4 && bound < ctx.tol {
            return Ok(sum);
        }
    }
    Err(KernelError::NonConvergence { r: ctx.r, tol: ctx.tol, terms: MAX_TERMS })
}

/// `d_r` of the direct form: the cot part is r-free and
/// `d_r b_n = -2n b_n (1 + b_n)`.
fn covering_dr_direct(ctx: &KernelContext, z: Complex64) -> Result<Complex64> {
    let y = z.im.abs();
    if y >= 2.0 * ctx.r {
        return Err(KernelError::NonConvergence { r: ctx.r, tol: ctx.tol, terms: 0 });
    }
    let z = Complex64::new(reduce_angle(z.re), z.im);
    let mut sum = Complex64::new(0.0, 0.0);
    let log_ratio = y - 2.0 * ctx.r;
    for n in 1..=MAX_TERMS {
        let nf = n as f64;
        let e = 2.0 * nf * ctx.r;
        let b = if e > 700.0 { 0.0 } else { 1.0 / (e.exp() - 1.0) };
        let db = -2.0 * nf * b * (1.0 + b);
        let term = 4.0 * db * (nf * z).sin();
        sum += term;
        let bound = (term.norm() + 1e-300) / (1.0 - log_ratio.exp());
        if n >= 4 && bound < ctx.tol {
            return Ok(sum);
        }
    }
    Err(KernelError::NonConvergence { r: ctx.r, tol: ctx.tol, terms: MAX_TERMS })
}

/// Modular form. With `u = -i pi z / (2r)` and `c_n = 1/(e^{2 pi^2 n / r} - 1)`:
///
/// ```text
/// St_r(z) = -z/r - (i pi / r) g(u),   g(u) = cot(u) + 4 sum_n c_n sin(2nu)
/// ```
///
/// (the linear part comes from the Gaussian factor in the theta modular
/// identity; its coefficient is pinned by the expansion
/// `St_r(z) = 2/z + (pi^2/(6r^2) - 1/r) z + O(z^3)` of this branch).
/// z-derivatives chain through `du/dz = -i pi / (2r)`.
fn covering_modular_g(ctx: &KernelContext, u: Complex64, order: usize) -> Result<Complex64> {
    let cd = cot_derivs(u);
    let mut sum = cd[order];
    let im_u = u.im.abs();
    // ratio of consecutive terms ~ exp(2 im_u - 2 pi^2 / r)
    let log_ratio = 2.0 * im_u - 2.0 * std::f64::consts::PI.powi(2) / ctx.r;
    if log_ratio >= 0.0 {
        return Err(KernelError::NonConvergence { r: ctx.r, tol: ctx.tol, terms: 0 });
    }
    for n in 1..=MAX_TERMS {
        let nf = n as f64;
        let e = 2.0 * std::f64::consts::PI.powi(2) * nf / ctx.r;
        let c = if e > 700.0 { 0.0 } else { 1.0 / (e.exp() - 1.0) };
        let term = 4.0 * c * sin_deriv(2.0 * nf * u, 2.0 * nf, order);
        sum += term;
        let bound = (term.norm() + 1e-300) / (1.0 - log_ratio.exp());
        if n >= 2 && bound < ctx.tol {
            return Ok(sum);
        }
    }
    Err(KernelError::NonConvergence { r: ctx.r, tol: ctx.tol, terms: MAX_TERMS })
}

fn covering_modular(ctx: &KernelContext, z: Complex64, order: usize) -> Result<Complex64> {
    let z = Complex64::new(reduce_angle(z.re), z.im);
    let r = ctx.r;
    let mu = Complex64::new(0.0, -std::f64::consts::PI / (2.0 * r)); // du/dz
    let u = mu * z;
    let g = covering_modular_g(ctx, u, order)?;
    let pref = Complex64::new(0.0, -std::f64::consts::PI / r); // -i pi / r
    let mut out = pref * mu.powi(order as i32) * g;
    if order == 0 {
        out -= z / r;
    } else if order == 1 {
        out -= Complex64::new(1.0 / r, 0.0);
    }
    Ok(out)
}

/// `d_r` of the modular form, with `d_r u = -u/r` and
/// `d_r c_n = (2 pi^2 n / r^2) c_n (1 + c_n)`.
fn covering_dr_modular(ctx: &KernelContext, z: Complex64) -> Result<Complex64> {
    let z = Complex64::new(reduce_angle(z.re), z.im);
    let r = ctx.r;
    let pi = std::f64::consts::PI;
    let mu = Complex64::new(0.0, -pi / (2.0 * r));
    let u = mu * z;
    let g0 = covering_modular_g(ctx, u, 0)?;
    let g1 = covering_modular_g(ctx, u, 1)?;
    // sum of d_r c_n * sin(2nu), same geometric envelope as g itself
    let mut dc_sum = Complex64::new(0.0, 0.0);
    let log_ratio = 2.0 * u.im.abs() - 2.0 * pi.powi(2) / r;
    if log_ratio >= 0.0 {
        return Err(KernelError::NonConvergence { r, tol: ctx.tol, terms: 0 });
    }
    for n in 1..=MAX_TERMS {
        let nf = n as f64;
        let e = 2.0 * pi.powi(2) * nf / r;
        let c = if e > 700.0 { 0.0 } else { 1.0 / (e.exp() - 1.0) };
        let dc = 2.0 * pi.powi(2) * nf / (r * r) * c * (1.0 + c);
        let term = 4.0 * dc * (2.0 * nf * u).sin();
        dc_sum += term;
        let bound = (term.norm() + 1e-300) / (1.0 - log_ratio.exp());
        if n >= 2 && bound < ctx.tol {
            break;
        }
        if n == MAX_TERMS {
            return Err(KernelError::NonConvergence { r, tol: ctx.tol, terms: MAX_TERMS });
        }
    }
    // d_r [-z/r - (i pi / r) g(u(r))] with d_r u = -u/r:
    let i_pi_over_r = Complex64::new(0.0, pi / r);
    let dr_g = g1 * (-u / r) + dc_sum;
    Ok(z / (r * r) + i_pi_over_r / r * g0 - i_pi_over_r * dr_g)
}

fn covering_strip(ctx: &KernelContext, z: Complex64, order: usize, repr: Repr) -> Result<Complex64> {
    match repr {
        Repr::Direct => covering_direct(ctx, z, order),
        Repr::Modular => covering_modular(ctx, z, order),
    }
}

// ---------------------------------------------------------------------------
// pole guards

fn guard_plane_poles(r: f64, z: Complex64) -> Result<()> {
    let zn = z.norm();
    if zn < POLE_GUARD {
        return Err(KernelError::PoleProximity { z, guard: POLE_GUARD });
    }
    // poles sit on the positive real axis at e^{2kr}
    let k0 = (zn.ln() / (2.0 * r)).round() as i64;
    for k in (k0 - 1)..=(k0 + 1) {
        let pole = (2.0 * k as f64 * r).exp();
        if (z - Complex64::new(pole, 0.0)).norm() < POLE_GUARD {
            return Err(KernelError::PoleProximity { z, guard: POLE_GUARD });
        }
    }
    Ok(())
}

fn guard_strip_poles(r: f64, z: Complex64) -> Result<()> {
    let x = reduce_angle(z.re);
    let m0 = (z.im / (2.0 * r)).round() as i64;
    for m in (m0 - 1)..=(m0 + 1) {
        let d = Complex64::new(x, z.im - 2.0 * m as f64 * r).norm();
        if d < POLE_GUARD {
            return Err(KernelError::PoleProximity { z, guard: POLE_GUARD });
        }
    }
    Ok(())
}

//! Cylindrical Bessel functions of order 0 and 1 and the outgoing 2D
//! Helmholtz Green kernel.
//!
//! Evaluation strategy: power series summed in f64 for `x <= 8`, in
//! double-double for `8 < x <= 16` (where cancellation eats up to six
//! digits), and Hankel amplitude/phase asymptotic expansions truncated at
//! the smallest term for `x > 16`. This keeps the relative error near
//! 1e-13 over the whole range without external tables.

use crate::dd::Dd;
use num_complex::Complex64;
use thiserror::Error;

/// Euler-Mascheroni constant as a double-double pair.
const GAMMA: Dd = Dd { hi: 0.5772156649015329, lo: -4.942915152430645e-18 };
const FRAC_2_PI: f64 = core::f64::consts::FRAC_2_PI;

#[derive(Debug, Error, PartialEq)]
pub enum SpecfunError {
    #[error("Bessel Y functions require a strictly positive argument, got {0}")]
    NonPositiveArgument(f64),
    #[error("Green kernel evaluated at coincident points")]
    CoincidentPoints,
}

/// Green kernel value together with its gradient with respect to `x`.
#[derive(Clone, Copy, Debug)]
pub struct KernelValue {
    pub g: Complex64,
    pub grad: [Complex64; 2],
}

const SERIES_F64_MAX: f64 = 8.0;
const SERIES_DD_MAX: f64 = 16.0;

fn j0_series_f64(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn j1_series_f64(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -q / ((k * (k + 1)) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    0.5 * x * sum
}

/// `S0(x) = sum_{k>=1} (-1)^{k+1} H_k (x^2/4)^k / (k!)^2`, the non-log part
/// of the Y0 power series.
fn y0_inner_series_f64(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut t = 1.0;
    let mut h = 0.0;
    let mut sum = 0.0;
    for k in 1..60 {
        t *= q / ((k * k) as f64);
        h += 1.0 / k as f64;
        let term = if k % 2 == 1 { h * t } else { -h * t };
        sum += term;
        if t * h < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn y0_series_f64(x: f64) -> f64 {
    FRAC_2_PI * (((0.5 * x).ln() + GAMMA.hi) * j0_series_f64(x) + y0_inner_series_f64(x))
}

/// `T(x) = sum_{k>=0} (-1)^k (H_k + H_{k+1}) (x^2/4)^k / (k! (k+1)!)`.
fn y1_inner_series_f64(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut t = 1.0;
    let mut h2 = 1.0; // H_k + H_{k+1} at k = 0
    let mut sum = 1.0;
    for k in 1..60 {
        t *= -q / ((k * (k + 1)) as f64);
        h2 += 1.0 / k as f64 + 1.0 / (k + 1) as f64;
        sum += h2 * t;
        if (h2 * t).abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn y1_series_f64(x: f64) -> f64 {
    FRAC_2_PI * ((0.5 * x).ln() + GAMMA.hi) * j1_series_f64(x)
        - FRAC_2_PI / x
        - x / (2.0 * core::f64::consts::PI) * y1_inner_series_f64(x)
}

fn j0_series_dd(x: f64) -> f64 {
    let q = Dd::from(x).mul(Dd::from(x)).scale(0.25);
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    for k in 1..120 {
        term = term.mul(q).div(Dd::from(-((k * k) as f64)));
        sum = sum.add(term);
        if term.hi.abs() < 1e-34 {
            break;
        }
    }
    sum.to_f64()
}

fn j1_series_dd(x: f64) -> f64 {
    let q = Dd::from(x).mul(Dd::from(x)).scale(0.25);
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    for k in 1..120 {
        term = term.mul(q).div(Dd::from(-((k * (k + 1)) as f64)));
        sum = sum.add(term);
        if term.hi.abs() < 1e-34 {
            break;
        }
    }
    sum.scale(0.5 * x).to_f64()
}

fn y0_inner_series_dd(x: f64) -> f64 {
    let q = Dd::from(x).mul(Dd::from(x)).scale(0.25);
    let mut t = Dd::from(1.0);
    let mut h = Dd::ZERO;
    let mut sum = Dd::ZERO;
    for k in 1..120 {
        t = t.mul(q).div(Dd::from((k * k) as f64));
        h = h.add(Dd::from(1.0).div(Dd::from(k as f64)));
        let term = t.mul(h);
        sum = if k % 2 == 1 { sum.add(term) } else { sum.sub(term) };
        if term.hi.abs() < 1e-34 {
            break;
        }
    }
    sum.to_f64()
}

fn y0_series_dd(x: f64) -> f64 {
    let lg = (0.5 * x).ln() + GAMMA.hi;
    FRAC_2_PI * (lg * j0_series_dd(x) + y0_inner_series_dd(x))
}

fn y1_inner_series_dd(x: f64) -> f64 {
    let q = Dd::from(x).mul(Dd::from(x)).scale(0.25);
    let mut t = Dd::from(1.0);
    let mut h2 = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    for k in 1..120 {
        t = t.mul(q).div(Dd::from(-((k * (k + 1)) as f64)));
        h2 = h2
            .add(Dd::from(1.0).div(Dd::from(k as f64)))
            .add(Dd::from(1.0).div(Dd::from((k + 1) as f64)));
        let term = t.mul(h2);
        sum = sum.add(term);
        if term.hi.abs() < 1e-34 {
            break;
        }
    }
    sum.to_f64()
}

fn y1_series_dd(x: f64) -> f64 {
    let lg = (0.5 * x).ln() + GAMMA.hi;
    FRAC_2_PI * lg * j1_series_dd(x)
        - FRAC_2_PI / x
        - x / (2.0 * core::f64::consts::PI) * y1_inner_series_dd(x)
}

/// Hankel asymptotic expansion in amplitude/phase form, truncated at the
/// smallest term. Returns `(J_nu(x), Y_nu(x))`; valid for `x > 16`.
fn bessel_asymptotic(nu: u32, x: f64) -> (f64, f64) {
    let mu = (4 * nu * nu) as f64;
    // a_k = prod_{j=1..k} (mu - (2j-1)^2) / (k! 8^k); P sums even k, Q odd k.
    let mut a = 1.0f64;
    let mut terms = [0.0f64; 40];
    terms[0] = 1.0;
    for (k, t) in terms.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        a *= (mu - (2.0 * kf - 1.0) * (2.0 * kf - 1.0)) / (8.0 * kf);
        *t = a / x.powi(k as i32);
    }
    let mut p = 0.0;
    let mut q = 0.0;
    let mut prev = f64::INFINITY;
    for (k, &t) in terms.iter().enumerate() {
        if t.abs() > prev {
            break;
        }
        prev = t.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * t;
        } else {
            q += sign * t;
        }
        if t.abs() < 1e-18 {
            break;
        }
    }
    let chi = x - (2.0 * nu as f64 + 1.0) * core::f64::consts::FRAC_PI_4;
    let amp = (2.0 / (core::f64::consts::PI * x)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// J0 for any real argument (even function).
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_F64_MAX {
        j0_series_f64(x)
    } else if x <= SERIES_DD_MAX {
        j0_series_dd(x)
    } else {
        bessel_asymptotic(0, x).0
    }
}

/// J1 for any real argument (odd function).
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_F64_MAX {
        j1_series_f64(ax)
    } else if ax <= SERIES_DD_MAX {
        j1_series_dd(ax)
    } else {
        bessel_asymptotic(1, ax).0
    };
    if x < 0.0 { -v } else { v }
}

/// Y0, defined for `x > 0` only.
pub fn bessel_y0(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_F64_MAX {
        y0_series_f64(x)
    } else if x <= SERIES_DD_MAX {
        y0_series_dd(x)
    } else {
        bessel_asymptotic(0, x).1
    }
}

/// Y1, defined for `x > 0` only.
pub fn bessel_y1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_F64_MAX {
        y1_series_f64(x)
    } else if x <= SERIES_DD_MAX {
        y1_series_dd(x)
    } else {
        bessel_asymptotic(1, x).1
    }
}

/// All four order-0/1 Bessel values at once.
pub fn bessel_j0j1y0y1(x: f64) -> Result<(f64, f64, f64, f64), SpecfunError> {
    if x <= 0.0 {
        return Err(SpecfunError::NonPositiveArgument(x));
    }
    Ok((bessel_j0(x), bessel_j1(x), bessel_y0(x), bessel_y1(x)))
}

/// `G_kappa(r) = (i/4) H0^(1)(kappa r)` as a function of the distance.
pub fn green_value(kappa: f64, r: f64) -> Complex64 {
    let z = kappa * r;
    let (j0, y0) = (bessel_j0(z), bessel_y0(z));
    // (i/4)(J0 + i Y0)
    Complex64::new(-0.25 * y0, 0.25 * j0)
}

/// Radial factor `f(r)` of the kernel gradient: `grad G(x-y) = f(r) (x-y)/r`
/// with `f(r) = -(i kappa/4) H1^(1)(kappa r)`.
pub fn green_grad_radial(kappa: f64, r: f64) -> Complex64 {
    let z = kappa * r;
    let (j1, y1) = (bessel_j1(z), bessel_y1(z));
    // -(i k/4)(J1 + i Y1) = (k/4)(Y1 - i J1)
    Complex64::new(0.25 * kappa * y1, -0.25 * kappa * j1)
}

/// Kernel value and gradient with respect to `x`.
pub fn green_kernel_2d(kappa: f64, x: [f64; 2], y: [f64; 2]) -> Result<KernelValue, SpecfunError> {
    let d = [x[0] - y[0], x[1] - y[1]];
    let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if r == 0.0 {
        return Err(SpecfunError::CoincidentPoints);
    }
    let g = green_value(kappa, r);
    let f = green_grad_radial(kappa, r) / r;
    Ok(KernelValue { g, grad: [f * d[0], f * d[1]] })
}

/// Splits the kernel as `G(r) = c(r) ln(r) + R(r)` with
/// `c(r) = -J0(kappa r)/(2 pi)` and `R` analytic in `r^2`.
/// Returns `(R, c)`; `R` is well defined at `r = 0`.
pub fn log_split(kappa: f64, r: f64) -> (Complex64, f64) {
    let z = kappa * r;
    let j0 = bessel_j0(z);
    let c = -j0 / (2.0 * core::f64::consts::PI);
    let smooth = if z <= SERIES_DD_MAX {
        // R = (i/4 - (ln(k/2)+gamma)/(2 pi)) J0(z) - S0(z)/(2 pi)
        let s0 = if z <= SERIES_F64_MAX { y0_inner_series_f64(z) } else { y0_inner_series_dd(z) };
        let lg = (0.5 * kappa).ln() + GAMMA.hi;
        let two_pi = 2.0 * core::f64::consts::PI;
        Complex64::new(-lg * j0 / two_pi - s0 / two_pi, 0.25 * j0)
    } else {
        green_value(kappa, r) - c * r.ln()
    };
    (smooth, c)
}

/// Log coefficient of the gradient's radial factor:
/// `f(r) = (kappa/(2 pi)) J1(kappa r) ln(r) + smooth`.
pub fn green_grad_radial_log_coef(kappa: f64, r: f64) -> f64 {
    kappa * bessel_j1(kappa * r) / (2.0 * core::f64::consts::PI)
}

//! Independent oracles for the integration tests. Nothing here touches the
//! production special-function or assembly code paths: Bessel functions come
//! from Miller's downward recurrence and Neumann series summed in
//! double-double arithmetic, and the scattering reference is a
//! separation-of-variables series on the circle.
#![allow(dead_code)]

use num_complex::Complex64;

// ---------------------------------------------------------------------------
// double-double arithmetic (local copy; the oracle must not share code with
// the library under test)

#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.scale(q1));
        let q2 = r.hi / o.hi;
        let r2 = r.sub(o.scale(q2));
        let q3 = r2.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2 + q3);
        Dd { hi, lo }
    }

    pub fn scale(self, s: f64) -> Dd {
        let (p, e) = two_prod(self.hi, s);
        let (hi, lo) = quick_two_sum(p, e + self.lo * s);
        Dd { hi, lo }
    }
}

// double-double constants: ln 2, the Euler-Mascheroni constant, 2/pi
#[allow(clippy::approx_constant)]
const DD_LN2: Dd = Dd { hi: 0.6931471805599453, lo: 2.3190468138462996e-17 };
const DD_GAMMA: Dd = Dd { hi: 0.5772156649015329, lo: -4.942915152430645e-18 };
#[allow(clippy::approx_constant)]
const DD_2_OVER_PI: Dd = Dd { hi: 0.6366197723675814, lo: -3.935735335036497e-17 };

fn dd_exp(a: Dd) -> Dd {
    let k = (a.hi / DD_LN2.hi).round();
    let r = a.sub(DD_LN2.scale(k));
    let mut term = Dd::from(1.0);
    let mut s = Dd::from(1.0);
    for i in 1..40 {
        term = term.mul(r).scale(1.0 / i as f64);
        s = s.add(term);
        if term.hi.abs() < 1e-35 {
            break;
        }
    }
    s.scale(2f64.powi(k as i32))
}

fn dd_ln(x: Dd) -> Dd {
    // one Newton step on exp(y) = x from the f64 seed
    let y = Dd::from(x.hi.ln());
    y.add(x.mul(dd_exp(y.neg())).sub(Dd::from(1.0)))
}

// ---------------------------------------------------------------------------
// Bessel oracle

/// `J_0(x) .. J_nmax(x)` by Miller's downward recurrence, normalized with
/// `J_0 + 2 J_2 + 2 J_4 + ... = 1`, summed in double-double precision.
pub fn bessel_j_all(x: f64, nmax: usize) -> Vec<Dd> {
    assert!(x > 0.0);
    let start = nmax + 30 + (1.3 * x) as usize + (12.0 * x.cbrt()) as usize;
    let mut out = vec![Dd::ZERO; nmax + 1];
    let mut fnp1 = Dd::ZERO;
    let mut fnn = Dd::from(1e-30);
    let mut norm = Dd::ZERO;
    for n in (0..=start).rev() {
        if n <= nmax {
            out[n] = fnn;
        }
        if n == 0 {
            norm = norm.add(fnn);
        } else if n % 2 == 0 {
            norm = norm.add(fnn.scale(2.0));
        }
        if n > 0 {
            let fnm1 = fnn.scale(2.0 * n as f64 / x).sub(fnp1);
            fnp1 = fnn;
            fnn = fnm1;
            if fnn.hi.abs() > 1e250 {
                let c = 1e-250;
                fnn = fnn.scale(c);
                fnp1 = fnp1.scale(c);
                norm = norm.scale(c);
                for v in out.iter_mut() {
                    *v = v.scale(c);
                }
            }
        }
    }
    for v in out.iter_mut() {
        *v = v.div(norm);
    }
    out
}

/// `(J_0..J_mmax, Y_0..Y_mmax)`. `Y_0` and `Y_1` come from Neumann-type
/// series over the `J_n`; higher orders by the (upward-stable) recurrence.
pub fn bessel_jy_all(x: f64, mmax: usize) -> (Vec<f64>, Vec<f64>) {
    // enough orders for the Neumann series tails to fall below 1e-35
    let nj = mmax.max(2) + 40 + (1.3 * x) as usize;
    let j = bessel_j_all(x, nj);
    let lx = dd_ln(Dd::from(0.5 * x)).add(DD_GAMMA);
    // Y0 = (2/pi) [ (ln(x/2)+gamma) J0 + 2 sum_k (-1)^{k+1} J_{2k}/k ]
    let mut s0 = Dd::ZERO;
    // Y1 = (2/pi) [ (ln(x/2)+gamma) J1 - J0/x - sum_k (-1)^{k+1} (J_{2k-1}-J_{2k+1})/k ]
    let mut s1 = Dd::ZERO;
    let mut k = 1usize;
    while 2 * k < nj {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        s0 = s0.add(j[2 * k].scale(2.0 * sign / k as f64));
        s1 = s1.add(j[2 * k - 1].sub(j[2 * k + 1]).scale(sign / k as f64));
        if j[2 * k].hi.abs() < 1e-36 && j[2 * k - 1].hi.abs() < 1e-36 {
            break;
        }
        k += 1;
    }
    let y0 = DD_2_OVER_PI.mul(lx.mul(j[0]).add(s0));
    let y1 = DD_2_OVER_PI.mul(lx.mul(j[1]).sub(j[0].scale(1.0 / x)).sub(s1));
    let mut ys = vec![Dd::ZERO; mmax + 1];
    ys[0] = y0;
    if mmax >= 1 {
        ys[1] = y1;
    }
    for m in 2..=mmax {
        ys[m] = ys[m - 1].scale(2.0 * (m - 1) as f64 / x).sub(ys[m - 2]);
    }
    (
        j[..=mmax].iter().map(|v| v.to_f64()).collect(),
        ys.iter().map(|v| v.to_f64()).collect(),
    )
}

/// First-kind Hankel function `H_m^(1)(x) = J_m(x) + i Y_m(x)`.
pub fn hankel1(m: usize, x: f64) -> Complex64 {
    let (j, y) = bessel_jy_all(x, m);
    Complex64::new(j[m], y[m])
}

/// Fourier symbol of the single-layer operator on the circle of radius `a`:
/// the mode `e^{im theta}` is an eigenfunction with eigenvalue
/// `(i pi a / 2) J_m(kappa a) H_m^(1)(kappa a)`.
pub fn sl_circle_symbol(kappa: f64, a: f64, m: usize) -> Complex64 {
    let (j, y) = bessel_jy_all(kappa * a, m);
    Complex64::new(0.0, std::f64::consts::PI * a / 2.0) * j[m] * Complex64::new(j[m], y[m])
}

// ---------------------------------------------------------------------------
// Mie-type transmission series on the penetrable circle

/// Separation-of-variables solution of the transmission problem on the
/// circle of radius `a`: plane wave `e^{i kappa0 d.x}` incident from the
/// exterior (wavenumber `kappa0`), interior wavenumber `kappa1`, with
/// continuity of the field and its normal derivative across the circle.
pub struct MieSolution {
    kappa0: f64,
    kappa1: f64,
    radius: f64,
    /// interior coefficients a_m of `J_m(kappa1 r) e^{im phi}`, m = 0..M
    interior: Vec<Complex64>,
    /// scattered coefficients b_m of `H_m(kappa0 r) e^{im phi}`, m = 0..M
    scattered: Vec<Complex64>,
}

impl MieSolution {
    pub fn new(kappa0: f64, kappa1: f64, radius: f64) -> Self {
        let modes = 25 + (2.0 * kappa0.max(kappa1) * radius) as usize;
        let x0 = kappa0 * radius;
        let x1 = kappa1 * radius;
        let (j0, y0) = bessel_jy_all(x0, modes + 1);
        let (j1, _) = bessel_jy_all(x1, modes + 1);
        let h = |m: usize| Complex64::new(j0[m], y0[m]);
        // derivative via J'_m = (J_{m-1} - J_{m+1})/2, J'_0 = -J_1
        let dj = |tab: &[f64], m: usize| {
            if m == 0 {
                -tab[1]
            } else {
                0.5 * (tab[m - 1] - tab[m + 1])
            }
        };
        let dh = |m: usize| {
            if m == 0 {
                -h(1)
            } else {
                0.5 * (h(m - 1) - h(m + 1))
            }
        };
        let mut interior = Vec::with_capacity(modes + 1);
        let mut scattered = Vec::with_capacity(modes + 1);
        for m in 0..=modes {
            // a_m J_m(k1 a) - b_m H_m(k0 a)        = i^m J_m(k0 a)
            // a_m k1 J'_m(k1 a) - b_m k0 H'_m(k0 a) = i^m k0 J'_m(k0 a)
            let im = Complex64::i().powu(m as u32);
            let (a11, a12) = (Complex64::from(j1[m]), -h(m));
            let (a21, a22) = (Complex64::from(kappa1 * dj(&j1, m)), -kappa0 * dh(m));
            let (r1, r2) = (im * j0[m], im * kappa0 * dj(&j0, m));
            let det = a11 * a22 - a12 * a21;
            interior.push((r1 * a22 - r2 * a12) / det);
            scattered.push((a11 * r2 - a21 * r1) / det);
        }
        MieSolution { kappa0, kappa1, radius, interior, scattered }
    }

    /// Total field at `x` for incidence direction `dir` (unit vector). The
    /// circle is centered at the origin.
    pub fn total_field(&self, x: [f64; 2], dir: [f64; 2]) -> Complex64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        // angle of x relative to the incidence direction
        let phi = x[1].atan2(x[0]) - dir[1].atan2(dir[0]);
        let modes = self.interior.len() - 1;
        let mut u = Complex64::new(0.0, 0.0);
        if r < self.radius {
            let (j, _) = bessel_jy_all((self.kappa1 * r).max(1e-12), modes);
            for (m, (am, jm)) in self.interior.iter().zip(&j).enumerate() {
                let w = if m == 0 { 1.0 } else { 2.0 * (m as f64 * phi).cos() };
                u += am * jm * w;
            }
        } else {
            let (j, y) = bessel_jy_all(self.kappa0 * r, modes);
            for m in 0..=modes {
                let im = Complex64::i().powu(m as u32);
                let c = im * j[m] + self.scattered[m] * Complex64::new(j[m], y[m]);
                let w = if m == 0 { 1.0 } else { 2.0 * (m as f64 * phi).cos() };
                u += c * w;
            }
        }
        u
    }
}

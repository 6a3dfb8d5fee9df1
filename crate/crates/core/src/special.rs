//! Bessel functions of the first kind `J_m` and modified Bessel functions of
//! the second kind `K_m` for small integer orders and real arguments.
//!
//! `J_m` uses the ascending series below `x = 2` and Miller's backward
//! recurrence (normalized by `J_0 + 2 sum J_2k = 1`) above it. `K_0` and `K_1`
//! use the logarithmic ascending series below `x = 2` and Steed's continued
//! fraction above it; higher orders follow by upward recurrence, which is
//! stable for `K`.
//!
//! The declared range of validity is `x` in `(0, 50]`. Beyond it the values
//! stay finite (for very large `x`, `K_m` underflows to zero).

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_SWITCH: f64 = 2.0;

/// Order of a Bessel function, restricted to `0..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BesselOrder(u8);

impl BesselOrder {
    pub const MAX: u8 = 3;
    pub const ZERO: BesselOrder = BesselOrder(0);
    pub const ONE: BesselOrder = BesselOrder(1);
    pub const TWO: BesselOrder = BesselOrder(2);
    pub const THREE: BesselOrder = BesselOrder(3);

    pub fn new(m: u8) -> Result<Self> {
        if m > Self::MAX {
            return Err(Error::domain(format!(
                "Bessel order {m} not supported (max {})",
                Self::MAX
            )));
        }
        Ok(BesselOrder(m))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for BesselOrder {
    type Error = Error;

    fn try_from(m: u8) -> Result<Self> {
        BesselOrder::new(m)
    }
}

/// `J_m(x)` for `x >= 0`.
pub fn bessel_j(m: BesselOrder, x: f64) -> Result<f64> {
    check_j_arg(x)?;
    Ok(j_orders(x)[m.0 as usize])
}

/// `K_m(x)` for `x > 0`.
pub fn bessel_k(m: BesselOrder, x: f64) -> Result<f64> {
    check_k_arg(x)?;
    Ok(k_orders(x)[m.0 as usize])
}

/// `J'_m(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2`, with `J_{-1} = -J_1`.
pub fn bessel_j_prime(m: BesselOrder, x: f64) -> Result<f64> {
    check_j_arg(x)?;
    let j = j_orders(x);
    Ok(j_prime_from(&j, m.0 as usize))
}

/// `K'_m(x) = -(K_{m-1}(x) + K_{m+1}(x)) / 2`, with `K_{-1} = K_1`.
pub fn bessel_k_prime(m: BesselOrder, x: f64) -> Result<f64> {
    check_k_arg(x)?;
    let k = k_orders(x);
    Ok(k_prime_from(&k, m.0 as usize))
}

fn check_j_arg(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!(
            "J_m requires a finite, non-negative argument, got {x}"
        )));
    }
    Ok(())
}

fn check_k_arg(x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(format!(
            "K_m requires a finite, strictly positive argument, got {x}"
        )));
    }
    Ok(())
}

pub(crate) fn j_prime_from(j: &[f64; 5], m: usize) -> f64 {
    let below = if m == 0 { -j[1] } else { j[m - 1] };
    0.5 * (below - j[m + 1])
}

pub(crate) fn k_prime_from(k: &[f64; 5], m: usize) -> f64 {
    let below = if m == 0 { k[1] } else { k[m - 1] };
    -0.5 * (below + k[m + 1])
}

/// `[J_0(x), ..., J_4(x)]` for finite `x >= 0`.
pub(crate) fn j_orders(x: f64) -> [f64; 5] {
    if x < SERIES_SWITCH {
        let mut out = [0.0; 5];
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = j_series(n, x);
        }
        out
    } else {
        j_miller(x)
    }
}

fn j_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let t = -half * half;
    // leading term (x/2)^n / n!
    let mut term = 1.0;
    for i in 1..=n {
        term *= half / i as f64;
    }
    let mut sum = term;
    for k in 1..60 {
        term *= t / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn j_miller(x: f64) -> [f64; 5] {
    const BIG: f64 = 1e250;
    let start = {
        let n = (x + 30.0 + (60.0 * x).sqrt()).ceil() as usize;
        n + (n & 1)
    };
    let mut out = [0.0; 5];
    let mut j_next = 0.0;
    let mut j_cur = 1e-30;
    let mut even_sum = 0.0;
    for k in (1..=start).rev() {
        let j_prev = (2.0 * k as f64 / x) * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        let idx = k - 1;
        if idx > 0 && idx % 2 == 0 {
            even_sum += 2.0 * j_cur;
        }
        if idx < out.len() {
            out[idx] = j_cur;
        }
        if j_cur.abs() > BIG {
            j_cur /= BIG;
            j_next /= BIG;
            even_sum /= BIG;
            for v in out.iter_mut() {
                *v /= BIG;
            }
        }
    }
    let norm = out[0] + even_sum;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `[K_0(x), ..., K_4(x)]` for finite `x > 0`.
pub(crate) fn k_orders(x: f64) -> [f64; 5] {
    let (k0, k1) = if x <= SERIES_SWITCH {
        k01_series(x)
    } else {
        k01_steed(x)
    };
    let mut out = [k0, k1, 0.0, 0.0, 0.0];
    for n in 1..4 {
        out[n + 1] = out[n - 1] + (2.0 * n as f64 / x) * out[n];
    }
    out
}

fn k01_series(x: f64) -> (f64, f64) {
    let t = 0.25 * x * x;
    let log_half = (0.5 * x).ln();

    // I_0, I_1 and the digamma-weighted sums share the same power terms.
    let mut i0 = 1.0;
    let mut i1_core = 1.0;
    let mut k0_tail = 0.0;
    let mut k1_tail = 2.0 * (1.0 - EULER_GAMMA) - 1.0; // psi(1) + psi(2)
    let mut term0 = 1.0; // t^k / (k!)^2
    let mut term1 = 1.0; // t^k / (k! (k+1)!)
    let mut harmonic = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        harmonic += 1.0 / kf;
        term0 *= t / (kf * kf);
        term1 *= t / (kf * (kf + 1.0));
        i0 += term0;
        i1_core += term1;
        k0_tail += harmonic * term0;
        let psi_sum = 2.0 * (harmonic - EULER_GAMMA) + 1.0 / (kf + 1.0);
        k1_tail += psi_sum * term1;
        if term0 < 1e-18 * i0 && term1 < 1e-18 * i1_core {
            break;
        }
    }
    let i1 = 0.5 * x * i1_core;
    let k0 = -(log_half + EULER_GAMMA) * i0 + k0_tail;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * k1_tail;
    (k0, k1)
}

// Steed's algorithm for the CF2 continued fraction, order zero.
fn k01_steed(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

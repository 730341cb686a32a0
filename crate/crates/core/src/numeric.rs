//! Scalar abstraction shared by the float and exact-rational computation paths,
//! plus small numeric helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{NumOps, One, Zero};

/// Arithmetic required by the generic probability kernels. Instantiated with
/// `f64` for the standard path and [`BigRational`] for the exact path.
pub trait Scalar: Clone + PartialOrd + Zero + One + NumOps {}

impl<T> Scalar for T where T: Clone + PartialOrd + Zero + One + NumOps {}

/// Exact conversion of an IEEE double into a rational. Every finite `f64` is a
/// dyadic rational, so this never rounds.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float required for exact mode")
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    let numer = x.numer();
    let denom = x.denom();
    // Good enough for reporting; exact comparisons stay in rational form.
    let fnum = numer.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let fden = denom.to_string().parse::<f64>().unwrap_or(f64::NAN);
    fnum / fden
}

pub fn rational_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Compensated summation; keeps normalization checks tight for long vectors.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Golden-section minimization of a unimodal-enough objective on `[lo, hi]`.
/// Returns the located argmin; tolerance is on the argument.
pub fn golden_section_min(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if hi < lo {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    // Pick the best of the bracket against the midpoint; the objective may be
    // flat near zero.
    let candidates = [lo, mid, hi];
    let mut best = mid;
    let mut best_val = f(mid);
    for &c in &candidates {
        let v = f(c);
        if v < best_val {
            best = c;
            best_val = v;
        }
    }
    best
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function, accurate deep in the right tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Mass of `N(0, scale^2)` on the cell `[lo, hi]`, evaluated in whichever
/// tail keeps the subtraction well-conditioned so far cells stay positive.
pub fn normal_cell_mass(lo: f64, hi: f64, scale: f64) -> f64 {
    let a = lo / scale;
    let b = hi / scale;
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_sf(b) - normal_cdf(a)
    }
}

/// CDF of the zero-mean Laplace distribution with scale `b`.
pub fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// Mass of a zero-mean Laplace with scale `scale` on `[lo, hi]`, computed per
/// tail.
pub fn laplace_cell_mass(lo: f64, hi: f64, scale: f64) -> f64 {
    let f = |x: f64| 0.5 * (x / scale).exp(); // CDF on the left tail
    let s = |x: f64| 0.5 * (-x / scale).exp(); // survival on the right tail
    if lo >= 0.0 {
        s(lo) - s(hi)
    } else if hi <= 0.0 {
        f(hi) - f(lo)
    } else {
        1.0 - s(hi) - f(lo)
    }
}

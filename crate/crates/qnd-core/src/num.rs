//! Small numeric building blocks: half-integer quantum numbers, logarithmic
//! factorials, the entire function (e^x - 1)/x, and Gauss-Legendre rules.

use num_complex::Complex64 as C64;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::OnceLock;

use crate::{QndError, Result};

/// A half-integer (spin projection or total spin), stored as twice its value
/// so that all arithmetic stays exact.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    /// Builds from twice the value, i.e. `from_twice(3)` is 3/2.
    pub fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    /// Builds from an integer value.
    pub fn new(n: i32) -> Self {
        HalfInt(2 * n)
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// Accepts only exact multiples of 1/2.
    pub fn try_from_f64(x: f64) -> Result<Self> {
        let twice = 2.0 * x;
        if !twice.is_finite() || twice != twice.round() || twice.abs() > f64::from(i32::MAX) {
            return Err(QndError::InvalidInput(format!(
                "{x} is not a half-integer"
            )));
        }
        Ok(HalfInt(twice as i32))
    }

    /// Inclusive range from `self` to `hi` in unit steps.
    pub fn range_to(self, hi: HalfInt) -> impl Iterator<Item = HalfInt> {
        (self.0..=hi.0).step_by(2).map(HalfInt)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

const LN_FACT_LEN: usize = 4096;

/// ln(n!) from a lazily built table. Supports n < 4096, which covers every
/// photon count and angular momentum this library handles.
pub fn ln_factorial(n: u32) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_LEN);
        t.push(0.0);
        for k in 1..LN_FACT_LEN {
            t.push(t[k - 1] + (k as f64).ln());
        }
        t
    });
    table[n as usize]
}

/// ln of the binomial coefficient C(n, k).
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    assert!(k <= n, "binomial with k > n");
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// The entire function f(x) = (e^x - 1)/x with f(0) = 1, evaluated stably
/// near the removable singularity.
pub fn f_function(x: C64) -> C64 {
    if x.norm() < 1e-6 {
        // Next term is x^4/120 < 1e-26, far below double precision.
        C64::new(1.0, 0.0) + x / 2.0 + x * x / 6.0 + x * x * x / 24.0
    } else {
        (x.exp() - 1.0) / x
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], nodes
/// ascending. Newton iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "empty quadrature rule");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p0, p1 walk the recurrence up to degree n.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

//! Arithmetic that can be run either natively or through a counting wrapper.
//!
//! Decision rules that appear in the complexity bench are written once,
//! generic over [`Real`]. Running them with `f64` is the production path;
//! running them with [`Counted`] tallies every multiplication/division,
//! addition/subtraction, logarithm and comparison into a thread-local
//! [`OpCounts`].

use std::cell::Cell;
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Tally of elementary operations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub mul_div: u64,
    pub add_sub: u64,
    pub log: u64,
    pub cmp: u64,
}

pub trait Real:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn ln(self) -> Self;
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
}

thread_local! {
    static COUNTS: Cell<OpCounts> = const { Cell::new(OpCounts { mul_div: 0, add_sub: 0, log: 0, cmp: 0 }) };
}

fn bump(f: impl FnOnce(&mut OpCounts)) {
    COUNTS.with(|c| {
        let mut v = c.get();
        f(&mut v);
        c.set(v);
    });
}

/// Runs `f` with a fresh counter and returns its result plus the tally of
/// [`Counted`] operations performed on this thread meanwhile.
pub fn count<R>(f: impl FnOnce() -> R) -> (R, OpCounts) {
    let saved = COUNTS.with(|c| c.replace(OpCounts::default()));
    let out = f();
    let tally = COUNTS.with(|c| c.replace(saved));
    (out, tally)
}

/// `f64` whose arithmetic is tallied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Counted(pub f64);

impl Add for Counted {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        bump(|c| c.add_sub += 1);
        Counted(self.0 + rhs.0)
    }
}

impl Sub for Counted {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Self) -> Self {
        bump(|c| c.add_sub += 1);
        Counted(self.0 - rhs.0)
    }
}

impl Mul for Counted {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> Self {
        bump(|c| c.mul_div += 1);
        Counted(self.0 * rhs.0)
    }
}

impl Div for Counted {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        bump(|c| c.mul_div += 1);
        Counted(self.0 / rhs.0)
    }
}

impl PartialOrd for Counted {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        bump(|c| c.cmp += 1);
        self.0.partial_cmp(&other.0)
    }
}

impl Real for Counted {
    fn from_f64(x: f64) -> Self {
        Counted(x)
    }
    fn to_f64(self) -> f64 {
        self.0
    }
    fn ln(self) -> Self {
        bump(|c| c.log += 1);
        Counted(self.0.ln())
    }
}

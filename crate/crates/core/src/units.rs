//! Unit-carrying scalars.
//!
//! Each newtype stores SI base units internally. Constructors and accessors
//! are named after the unit they take or return.

use core::ops::{Add, Mul, Sub};

/// A time interval, stored in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Time(f64);

impl Time {
    /// Zero duration.
    pub const ZERO: Time = Time(0.0);

    /// From seconds.
    pub const fn from_s(s: f64) -> Self {
        Time(s)
    }

    /// From nanoseconds.
    pub fn from_ns(ns: f64) -> Self {
        Time(ns / 1e9)
    }

    /// From picoseconds.
    pub fn from_ps(ps: f64) -> Self {
        Time(ps / 1e12)
    }

    /// In seconds.
    pub const fn as_s(self) -> f64 {
        self.0
    }

    /// In nanoseconds.
    pub fn as_ns(self) -> f64 {
        self.0 * 1e9
    }

    /// In picoseconds.
    pub fn as_ps(self) -> f64 {
        self.0 * 1e12
    }

    /// Absolute value.
    pub fn abs(self) -> Self {
        Time(if self.0 < 0.0 { -self.0 } else { self.0 })
    }
}

/// An ordinary (cycles per second) frequency, stored in hertz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Frequency(f64);

impl Frequency {
    /// Zero frequency.
    pub const ZERO: Frequency = Frequency(0.0);

    /// From hertz.
    pub const fn from_hz(hz: f64) -> Self {
        Frequency(hz)
    }

    /// From megahertz.
    pub fn from_mhz(mhz: f64) -> Self {
        Frequency(mhz * 1e6)
    }

    /// From gigahertz.
    pub fn from_ghz(ghz: f64) -> Self {
        Frequency(ghz * 1e9)
    }

    /// From terahertz.
    pub fn from_thz(thz: f64) -> Self {
        Frequency(thz * 1e12)
    }

    /// In hertz.
    pub const fn as_hz(self) -> f64 {
        self.0
    }

    /// In megahertz.
    pub fn as_mhz(self) -> f64 {
        self.0 / 1e6
    }

    /// In gigahertz.
    pub fn as_ghz(self) -> f64 {
        self.0 / 1e9
    }

    /// In terahertz.
    pub fn as_thz(self) -> f64 {
        self.0 / 1e12
    }

    /// Absolute value.
    pub fn abs(self) -> Self {
        Frequency(if self.0 < 0.0 { -self.0 } else { self.0 })
    }
}

/// An event or decay rate, stored in events per second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Rate(f64);

impl Rate {
    /// From events per second.
    pub const fn per_s(r: f64) -> Self {
        Rate(r)
    }

    /// From events per nanosecond.
    pub fn per_ns(r: f64) -> Self {
        Rate(r * 1e9)
    }

    /// In events per second.
    pub const fn as_per_s(self) -> f64 {
        self.0
    }

    /// In events per nanosecond.
    pub fn as_per_ns(self) -> f64 {
        self.0 / 1e9
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl Mul<f64> for Time {
    type Output = Time;
    fn mul(self, rhs: f64) -> Time {
        Time(self.0 * rhs)
    }
}

impl Sub for Frequency {
    type Output = Frequency;
    fn sub(self, rhs: Frequency) -> Frequency {
        Frequency(self.0 - rhs.0)
    }
}

impl Add for Frequency {
    type Output = Frequency;
    fn add(self, rhs: Frequency) -> Frequency {
        Frequency(self.0 + rhs.0)
    }
}

impl Mul<f64> for Frequency {
    type Output = Frequency;
    fn mul(self, rhs: f64) -> Frequency {
        Frequency(self.0 * rhs)
    }
}

/// Number of cycles accumulated by a frequency over a time.
impl Mul<Time> for Frequency {
    type Output = f64;
    fn mul(self, rhs: Time) -> f64 {
        self.0 * rhs.0
    }
}

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Complex, TwoPortError};

/// A strictly positive frequency in hertz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Frequency(f64);

impl Frequency {
    pub fn new(hertz: f64) -> Result<Self, TwoPortError> {
        if hertz.is_finite() && hertz > 0.0 {
            Ok(Self(hertz))
        } else {
            Err(TwoPortError::InvalidFrequency(hertz))
        }
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    pub fn omega(self) -> f64 {
        2.0 * PI * self.0
    }

    /// Laplace variable on the imaginary axis, `j2πf`.
    pub fn laplace(self) -> Complex {
        Complex::new(0.0, self.omega())
    }
}

impl TryFrom<f64> for Frequency {
    type Error = TwoPortError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Frequency> for f64 {
    fn from(f: Frequency) -> f64 {
        f.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Hz", self.0)
    }
}

/// Port reference impedance in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ReferenceImpedance(f64);

impl ReferenceImpedance {
    pub fn new(ohms: f64) -> Result<Self, TwoPortError> {
        if ohms.is_finite() && ohms > 0.0 {
            Ok(Self(ohms))
        } else {
            Err(TwoPortError::InvalidReferenceImpedance(ohms))
        }
    }

    pub fn ohms(self) -> f64 {
        self.0
    }
}

impl Default for ReferenceImpedance {
    fn default() -> Self {
        Self(50.0)
    }
}

impl TryFrom<f64> for ReferenceImpedance {
    type Error = TwoPortError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ReferenceImpedance> for f64 {
    fn from(z: ReferenceImpedance) -> f64 {
        z.0
    }
}

/// Sorted list of sweep frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<Frequency>,
}

impl FrequencyGrid {
    pub const DEFAULT_MIN_HZ: f64 = 1.0;
    pub const DEFAULT_MAX_HZ: f64 = 15e9;
    pub const DEFAULT_POINTS: usize = 64;

    pub fn from_points(mut points: Vec<Frequency>) -> Result<Self, TwoPortError> {
        if points.is_empty() {
            return Err(TwoPortError::InvalidGrid("grid is empty".into()));
        }
        points.sort_by(|a, b| a.hz().total_cmp(&b.hz()));
        points.dedup();
        Ok(Self { points })
    }

    pub fn single(f: Frequency) -> Self {
        Self { points: vec![f] }
    }

    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self, TwoPortError> {
        Self::build(lo, hi, n, false)
    }

    pub fn log(lo: f64, hi: f64, n: usize) -> Result<Self, TwoPortError> {
        Self::build(lo, hi, n, true)
    }

    fn build(lo: f64, hi: f64, n: usize, log: bool) -> Result<Self, TwoPortError> {
        let lo_f = Frequency::new(lo)?;
        Frequency::new(hi)?;
        if n == 0 || hi < lo || (n > 1 && hi == lo) {
            return Err(TwoPortError::InvalidGrid(format!("{lo}:{hi}:{n}")));
        }
        if n == 1 {
            return Ok(Self::single(lo_f));
        }
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            let hz = if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            };
            points.push(Frequency::new(hz)?);
        }
        Self::from_points(points)
    }

    /// 64 log-spaced points over 1 Hz to 15 GHz.
    pub fn default_sweep() -> Self {
        Self::log(Self::DEFAULT_MIN_HZ, Self::DEFAULT_MAX_HZ, Self::DEFAULT_POINTS).expect("default grid is valid")
    }

    pub fn points(&self) -> &[Frequency] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, f: Frequency) -> bool {
        self.points.iter().any(|p| p.hz() == f.hz())
    }
}

/// Parses `lo:hi:points[:log]`.
impl FromStr for FrequencyGrid {
    type Err = TwoPortError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TwoPortError::InvalidGrid(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") => Self::linear(lo, hi, n),
            Some("log") => Self::log(lo, hi, n),
            Some(_) => Err(bad()),
        }
    }
}

/// Complex division that refuses an exact-zero divisor.
pub fn checked_div(num: Complex, den: Complex) -> Result<Complex, TwoPortError> {
    if den.re == 0.0 && den.im == 0.0 {
        return Err(TwoPortError::DivisionByZero);
    }
    Ok(num / den)
}

//! Performance figures computed from two-port S-parameters, assuming a
//! `z0`-matched source and load.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::twoport::{mna_two_port, Frequency, FrequencyGrid, ReferenceImpedance, SMatrix, Subcircuit, TwoPortError};

/// Stand-in for −∞ dB in numeric files.
pub const NEG_INF_DB_SENTINEL: f64 = -400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Poi {
    #[serde(alias = "input_return_loss_db")]
    InputReturnLoss,
    #[serde(alias = "insertion_loss_db")]
    InsertionLoss,
    #[serde(alias = "output_return_loss_db")]
    OutputReturnLoss,
    #[serde(alias = "insertion_phase_deg")]
    InsertionPhase,
    #[serde(alias = "transducer_gain_db")]
    TransducerGain,
    #[serde(alias = "power_gain_db")]
    PowerGain,
    #[serde(alias = "available_gain_db")]
    AvailableGain,
    RollettK,
    StabilityMu,
}

impl Poi {
    pub const ALL: [Poi; 9] = [
        Poi::InputReturnLoss,
        Poi::InsertionLoss,
        Poi::OutputReturnLoss,
        Poi::InsertionPhase,
        Poi::TransducerGain,
        Poi::PowerGain,
        Poi::AvailableGain,
        Poi::RollettK,
        Poi::StabilityMu,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Poi::InputReturnLoss => "input_return_loss_db",
            Poi::InsertionLoss => "insertion_loss_db",
            Poi::OutputReturnLoss => "output_return_loss_db",
            Poi::InsertionPhase => "insertion_phase_deg",
            Poi::TransducerGain => "transducer_gain_db",
            Poi::PowerGain => "power_gain_db",
            Poi::AvailableGain => "available_gain_db",
            Poi::RollettK => "rollett_k",
            Poi::StabilityMu => "stability_mu",
        }
    }
}

impl fmt::Display for Poi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Poi {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Poi::ALL
            .into_iter()
            .find(|p| {
                p.column() == s || serde_json::to_value(p).ok().and_then(|v| v.as_str().map(|x| x == s)) == Some(true)
            })
            .ok_or_else(|| format!("unknown performance figure `{s}`"))
    }
}

/// Values at one frequency. `None` marks a figure that is undefined for
/// this S-matrix (e.g. power gain with |S11| ≥ 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoiVector {
    pub input_return_loss_db: f64,
    pub insertion_loss_db: f64,
    pub output_return_loss_db: f64,
    pub insertion_phase_deg: f64,
    pub transducer_gain_db: f64,
    pub power_gain_db: Option<f64>,
    pub available_gain_db: Option<f64>,
    pub rollett_k: Option<f64>,
    pub stability_mu: Option<f64>,
}

impl PoiVector {
    pub fn get(&self, p: Poi) -> Option<f64> {
        match p {
            Poi::InputReturnLoss => Some(self.input_return_loss_db),
            Poi::InsertionLoss => Some(self.insertion_loss_db),
            Poi::OutputReturnLoss => Some(self.output_return_loss_db),
            Poi::InsertionPhase => Some(self.insertion_phase_deg),
            Poi::TransducerGain => Some(self.transducer_gain_db),
            Poi::PowerGain => self.power_gain_db,
            Poi::AvailableGain => self.available_gain_db,
            Poi::RollettK => self.rollett_k,
            Poi::StabilityMu => self.stability_mu,
        }
    }
}

/// Wraps an angle in degrees into (−180, 180].
pub fn wrap_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

fn db20(mag: f64) -> f64 {
    20.0 * mag.log10()
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0 && num.is_finite()).then(|| num / den)
}

pub fn poi_from_s(s: &SMatrix) -> PoiVector {
    let m11 = s.s11.norm_sqr();
    let m22 = s.s22.norm_sqr();
    let m21 = s.s21.norm_sqr();
    let loop_gain = (s.s12 * s.s21).norm();
    let delta = s.determinant();

    let gain_db = |g: Option<f64>| g.filter(|g| *g >= 0.0).map(|g| 10.0 * g.log10());
    PoiVector {
        input_return_loss_db: db20(s.s11.norm()),
        insertion_loss_db: db20(s.s21.norm()),
        output_return_loss_db: db20(s.s22.norm()),
        insertion_phase_deg: wrap_degrees(s.s21.arg().to_degrees()),
        transducer_gain_db: 10.0 * m21.log10(),
        power_gain_db: gain_db(ratio(m21, 1.0 - m11)),
        available_gain_db: gain_db(ratio(m21, 1.0 - m22)),
        rollett_k: ratio(1.0 - m11 - m22 + delta.norm_sqr(), 2.0 * loop_gain),
        stability_mu: ratio(1.0 - m11, (s.s22 - delta * s.s11.conj()).norm() + loop_gain),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("at {frequency}: {source}")]
pub struct SweepError {
    pub frequency: Frequency,
    #[source]
    pub source: TwoPortError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoi {
    pub frequencies: Vec<Frequency>,
    pub s: Vec<SMatrix>,
    pub points: Vec<PoiVector>,
    /// Grid point with the largest defined power gain.
    pub max_power_gain_frequency: Option<Frequency>,
}

impl SweepPoi {
    pub fn from_s(frequencies: Vec<Frequency>, s: Vec<SMatrix>) -> Self {
        let points: Vec<PoiVector> = s.iter().map(poi_from_s).collect();
        let mut best: Option<(Frequency, f64)> = None;
        for (f, p) in frequencies.iter().zip(&points) {
            if let Some(g) = p.power_gain_db {
                if best.is_none_or(|(_, b)| g > b) {
                    best = Some((*f, g));
                }
            }
        }
        Self { frequencies, s, points, max_power_gain_frequency: best.map(|(f, _)| f) }
    }

    /// Header `freq_hz,s11_re,...,s22_im,<figures>`; −∞ dB is written as
    /// the −400 sentinel and undefined figures as `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,s11_re,s11_im,s12_re,s12_im,s21_re,s21_im,s22_re,s22_im");
        for p in Poi::ALL {
            out.push(',');
            out.push_str(p.column());
        }
        out.push('\n');
        for ((f, s), v) in self.frequencies.iter().zip(&self.s).zip(&self.points) {
            let _ = write!(out, "{:e}", f.hz());
            for z in s.entries() {
                let _ = write!(out, ",{:e},{:e}", z.re, z.im);
            }
            for p in Poi::ALL {
                let _ = write!(out, ",{}", file_value(v.get(p)));
            }
            out.push('\n');
        }
        out
    }
}

/// Numeric file encoding of a figure.
pub fn file_value(v: Option<f64>) -> String {
    match v {
        None => "nan".into(),
        Some(x) if x == f64::NEG_INFINITY => format!("{NEG_INF_DB_SENTINEL:e}"),
        Some(x) => format!("{x:e}"),
    }
}

/// Figures at every grid point from an arbitrary S-parameter source.
pub fn sweep_poi_with<F>(grid: &FrequencyGrid, mut solve: F) -> Result<SweepPoi, SweepError>
where
    F: FnMut(Frequency) -> Result<SMatrix, TwoPortError>,
{
    let mut s = Vec::with_capacity(grid.len());
    for &f in grid.points() {
        s.push(solve(f).map_err(|source| SweepError { frequency: f, source })?);
    }
    Ok(SweepPoi::from_s(grid.points().to_vec(), s))
}

pub fn sweep_poi(c: &Subcircuit, grid: &FrequencyGrid, z0: ReferenceImpedance) -> Result<SweepPoi, SweepError> {
    sweep_poi_with(grid, |f| mna_two_port(c, f, z0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoport::{Complex, Element};

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn through_figures() {
        let p = poi_from_s(&SMatrix::identity());
        assert_eq!(p.insertion_loss_db, 0.0);
        assert_eq!(p.input_return_loss_db, f64::NEG_INFINITY);
        assert_eq!(p.insertion_phase_deg, 0.0);
        assert_eq!(p.transducer_gain_db, 0.0);
        assert_eq!(p.power_gain_db, Some(0.0));
        assert_eq!(file_value(Some(p.input_return_loss_db)), "-4e2");
    }

    #[test]
    fn matched_attenuator() {
        let s = SMatrix::new(c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0));
        let p = poi_from_s(&s);
        assert!((p.insertion_loss_db - 20.0 * 0.5f64.log10()).abs() < 1e-12);
        assert!((p.insertion_loss_db + 6.0206).abs() < 1e-4);
        // Unconditionally stable: K > 1 and mu > 1.
        assert!(p.rollett_k.unwrap() > 1.0 && p.stability_mu.unwrap() > 1.0);
    }

    #[test]
    fn phase_wrapping() {
        let s21 = Complex::from_polar(0.9, 181f64.to_radians());
        let s = SMatrix::new(c(0.1, 0.0), s21, s21, c(0.1, 0.0));
        assert!((poi_from_s(&s).insertion_phase_deg + 179.0).abs() < 1e-9);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(540.0), 180.0);
        assert!((wrap_degrees(-181.0) - 179.0).abs() < 1e-12);
    }

    #[test]
    fn undefined_power_gain_is_marked() {
        let s = SMatrix::new(c(1.0, 0.0), c(0.0, 0.0), c(0.3, 0.0), c(0.2, 0.0));
        let p = poi_from_s(&s);
        assert_eq!(p.power_gain_db, None);
        assert_eq!(p.rollett_k, None);
        assert!(p.available_gain_db.is_some());
        assert_eq!(file_value(p.power_gain_db), "nan");
    }

    #[test]
    fn poi_names_parse() {
        for p in Poi::ALL {
            assert_eq!(p.column().parse::<Poi>().unwrap(), p);
        }
        assert_eq!("insertion_phase".parse::<Poi>().unwrap(), Poi::InsertionPhase);
        assert!("noise_figure".parse::<Poi>().is_err());
    }

    #[test]
    fn sweep_error_carries_frequency() {
        let bad = Subcircuit::grounded(vec![Element::resistor("R1", "a", "0", 50.0)], "a", "b");
        let grid = FrequencyGrid::linear(1e9, 2e9, 2).unwrap();
        let err = sweep_poi(&bad, &grid, ReferenceImpedance::default()).unwrap_err();
        assert_eq!(err.frequency.hz(), 1e9);
    }
}

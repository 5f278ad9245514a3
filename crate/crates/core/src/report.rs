//! Report types shared by the scanning modules.

use serde::{Deserialize, Serialize};

use crate::protocol::Trend;

/// Relative change of the ratio-band width allowed between the last two
/// refinement levels of a stable two-sided estimate.
pub const BAND_STABLE_REL_CHANGE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassVerdict {
    Member,
    NonMember,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionVerdict {
    Bounded,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeVerdict {
    Bounded,
    Growing,
    Inconclusive,
}

impl From<Trend> for ConditionVerdict {
    fn from(t: Trend) -> Self {
        match t {
            Trend::Stable => ConditionVerdict::Bounded,
            Trend::Growing => ConditionVerdict::Diverging,
            Trend::Undecided => ConditionVerdict::Inconclusive,
        }
    }
}

impl From<Trend> for ProbeVerdict {
    fn from(t: Trend) -> Self {
        match t {
            Trend::Stable => ProbeVerdict::Bounded,
            Trend::Growing => ProbeVerdict::Growing,
            Trend::Undecided => ProbeVerdict::Inconclusive,
        }
    }
}

impl From<Trend> for ClassVerdict {
    fn from(t: Trend) -> Self {
        match t {
            Trend::Stable => ClassVerdict::Member,
            Trend::Growing => ClassVerdict::NonMember,
            Trend::Undecided => ClassVerdict::Inconclusive,
        }
    }
}

impl ConditionVerdict {
    pub fn agrees_with(self, probe: ProbeVerdict) -> bool {
        matches!(
            (self, probe),
            (ConditionVerdict::Bounded, ProbeVerdict::Bounded)
                | (ConditionVerdict::Diverging, ProbeVerdict::Growing)
                | (ConditionVerdict::Inconclusive, ProbeVerdict::Inconclusive)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    /// Grid coordinates of the sample (one or two entries).
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ln_ratio: f64,
    /// Refinement level at which the sample enters the grid.
    pub level: usize,
}

impl RatioSample {
    pub fn from_ln(point: Vec<f64>, ln_lhs: f64, ln_rhs: f64, level: usize) -> Self {
        RatioSample {
            point,
            lhs: ln_lhs.exp(),
            rhs: ln_rhs.exp(),
            ln_ratio: ln_lhs - ln_rhs,
            level,
        }
    }
}

/// Band of `lhs / rhs` over a refinable grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub lhs_id: String,
    pub rhs_id: String,
    pub grid: String,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ln(max/min)` of the band restricted to each refinement level.
    pub level_widths: Vec<(usize, f64)>,
    pub stable: bool,
    pub samples: Vec<RatioSample>,
    /// Grid points skipped, with the reason.
    pub excluded: Vec<String>,
}

impl RatioReport {
    pub fn from_samples(
        lhs_id: &str,
        rhs_id: &str,
        grid: String,
        samples: Vec<RatioSample>,
        levels: &[usize],
        excluded: Vec<String>,
    ) -> Self {
        let band = |max_level: usize| {
            samples
                .iter()
                .filter(|s| s.level <= max_level && !s.ln_ratio.is_nan())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (lo.min(s.ln_ratio), hi.max(s.ln_ratio))
                })
        };
        let level_widths: Vec<(usize, f64)> = levels
            .iter()
            .map(|&l| {
                let (lo, hi) = band(l);
                (l, hi - lo)
            })
            .collect();
        let (lo, hi) = band(usize::MAX);
        let stable = match level_widths.as_slice() {
            [.., (_, a), (_, b)] => {
                a.is_finite() && b.is_finite() && (b - a).abs() <= BAND_STABLE_REL_CHANGE * a.abs() + 1e-9
            }
            _ => false,
        };
        RatioReport {
            lhs_id: lhs_id.to_string(),
            rhs_id: rhs_id.to_string(),
            grid,
            ratio_min: lo.exp(),
            ratio_max: hi.exp(),
            level_widths,
            stable: stable && lo.is_finite() && hi.is_finite(),
            samples,
            excluded,
        }
    }
}

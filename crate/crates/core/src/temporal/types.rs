use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

pub const MIN_YEAR: i32 = 1000;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemporalError {
    #[error("year {0} outside {MIN_YEAR}..={MAX_YEAR}")]
    YearOutOfRange(i32),
    #[error("invalid month {0}")]
    InvalidMonth(u32),
    #[error("invalid calendar date {0}-{1:02}-{2:02}")]
    InvalidDate(i32, u32, u32),
    #[error("day given without month")]
    DayWithoutMonth,
    #[error("{0:?} requires both endpoints")]
    MissingEndpoint(TemporalRelation),
    #[error("{0:?} takes a single date")]
    UnexpectedEndpoint(TemporalRelation),
    #[error("range end precedes start")]
    ReversedRange,
    #[error("unknown value {0:?}")]
    Unknown(String),
}

/// A calendar date at year, month, or day granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimePoint {
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub month: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day: Option<u32>,
}

impl TimePoint {
    pub fn new(year: i32, month: Option<u32>, day: Option<u32>) -> Result<Self, TemporalError> {
        if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
            return Err(TemporalError::YearOutOfRange(year));
        }
        match (month, day) {
            (None, Some(_)) => return Err(TemporalError::DayWithoutMonth),
            (Some(m), _) if !(1..=12).contains(&m) => return Err(TemporalError::InvalidMonth(m)),
            (Some(m), Some(d)) if NaiveDate::from_ymd_opt(year, m, d).is_none() => {
                return Err(TemporalError::InvalidDate(year, m, d))
            }
            _ => {}
        }
        Ok(Self { year, month, day })
    }

    pub fn year(year: i32) -> Result<Self, TemporalError> {
        Self::new(year, None, None)
    }

    pub fn month(year: i32, month: u32) -> Result<Self, TemporalError> {
        Self::new(year, Some(month), None)
    }

    pub fn ymd(year: i32, month: u32, day: u32) -> Result<Self, TemporalError> {
        Self::new(year, Some(month), Some(day))
    }

    /// Midpoint of the period this point denotes, in fractional years.
    ///
    /// Year-only → mid-year; year-month → mid-month on a twelfths scale;
    /// full date → `year + (day_of_year - 0.5) / 365`.
    pub fn to_fractional_year(&self) -> f64 {
        let y = self.year as f64;
        match (self.month, self.day) {
            (Some(m), Some(d)) => {
                let ordinal = NaiveDate::from_ymd_opt(self.year, m, d)
                    .map(|date| date.ordinal())
                    .expect("validated at construction");
                y + (ordinal as f64 - 0.5) / 365.0
            }
            (Some(m), None) => y + (m as f64 - 0.5) / 12.0,
            _ => y + 0.5,
        }
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.month, self.day) {
            (Some(m), Some(d)) => write!(f, "{:04}-{:02}-{:02}", self.year, m, d),
            (Some(m), None) => write!(f, "{:04}-{:02}", self.year, m),
            _ => write!(f, "{:04}", self.year),
        }
    }
}

impl FromStr for TimePoint {
    type Err = TemporalError;

    /// Accepts `YYYY`, `YYYY-MM`, `YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TemporalError::Unknown(s.to_string());
        let mut parts = s.trim().split('-');
        let year = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let month = parts.next().map(|m| m.parse().map_err(|_| bad())).transpose()?;
        let day = parts.next().map(|d| d.parse().map_err(|_| bad())).transpose()?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Self::new(year, month, day)
    }
}

pub fn to_fractional_year(t: &TimePoint) -> f64 {
    t.to_fractional_year()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalRelation {
    AsOf,
    FromTo,
    Until,
    Before,
    After,
    Around,
    Between,
    By,
    In,
    On,
    Since,
}

impl TemporalRelation {
    pub const ALL: [TemporalRelation; 11] = [
        Self::AsOf,
        Self::FromTo,
        Self::Until,
        Self::Before,
        Self::After,
        Self::Around,
        Self::Between,
        Self::By,
        Self::In,
        Self::On,
        Self::Since,
    ];

    pub fn is_range(self) -> bool {
        matches!(self, Self::FromTo | Self::Between)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AsOf => "as of",
            Self::FromTo => "from to",
            Self::Until => "until",
            Self::Before => "before",
            Self::After => "after",
            Self::Around => "around",
            Self::Between => "between",
            Self::By => "by",
            Self::In => "in",
            Self::On => "on",
            Self::Since => "since",
        }
    }
}

impl FromStr for TemporalRelation {
    type Err = TemporalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace(['_', '-'], " ");
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == norm || (norm == "from" && *r == Self::FromTo))
            .ok_or_else(|| TemporalError::Unknown(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplicitCondition {
    #[default]
    None,
    First,
    Earliest,
    Last,
    Latest,
}

impl ImplicitCondition {
    /// Whether the question seeks the earliest qualifying fact.
    pub fn seeks_first(self) -> bool {
        matches!(self, Self::First | Self::Earliest)
    }

    pub fn from_word(word: &str) -> Option<Self> {
        match word.to_lowercase().as_str() {
            "first" => Some(Self::First),
            "earliest" => Some(Self::Earliest),
            "last" => Some(Self::Last),
            "latest" => Some(Self::Latest),
            _ => None,
        }
    }
}

/// A question's time condition: implicit condition, relation, and date(s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalConstraint {
    pub condition: ImplicitCondition,
    pub relation: TemporalRelation,
    pub t1: TimePoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<TimePoint>,
    /// The constraint span as it appears in the question.
    pub raw_text: String,
}

impl TemporalConstraint {
    pub fn new(
        condition: ImplicitCondition,
        relation: TemporalRelation,
        t1: TimePoint,
        t2: Option<TimePoint>,
        raw_text: impl Into<String>,
    ) -> Result<Self, TemporalError> {
        match (relation.is_range(), t2) {
            (true, None) => return Err(TemporalError::MissingEndpoint(relation)),
            (false, Some(_)) => return Err(TemporalError::UnexpectedEndpoint(relation)),
            (true, Some(end)) if end.to_fractional_year() < t1.to_fractional_year() => {
                return Err(TemporalError::ReversedRange)
            }
            _ => {}
        }
        Ok(Self { condition, relation, t1, t2, raw_text: raw_text.into() })
    }
}

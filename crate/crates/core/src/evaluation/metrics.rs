use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub const fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn record(&mut self, expected_positive: bool, predicted_positive: bool) {
        match (expected_positive, predicted_positive) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.tn + o.tn, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// An exact non-negative ratio. A zero denominator means the value is
/// undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub const fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    pub fn is_defined(&self) -> bool {
        self.den > 0
    }

    pub fn value(&self) -> Option<f64> {
        self.is_defined().then(|| self.num as f64 / self.den as f64)
    }

    /// The percentage rounded half-up to `decimals` places, or `NaN`.
    pub fn percent(&self, decimals: u32) -> String {
        if !self.is_defined() {
            return "NaN".to_string();
        }
        let scale = 10u128.pow(decimals);
        let num = self.num as u128 * 100 * scale;
        let den = self.den as u128;
        let rounded = (2 * num + den) / (2 * den);
        if decimals == 0 {
            return rounded.to_string();
        }
        format!("{}.{:0width$}", rounded / scale, rounded % scale, width = decimals as usize)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.is_defined() {
            true => write!(f, "{} %", self.percent(2)),
            false => f.write_str("NaN"),
        }
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.value() {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("NaN"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub precision: Fraction,
    pub recall: Fraction,
    pub f1: Fraction,
    pub accuracy: Fraction,
}

pub fn compute_metrics(c: &ConfusionCounts) -> Metrics {
    let precision = Fraction::new(c.tp, c.tp + c.fp);
    let recall = Fraction::new(c.tp, c.tp + c.fn_);
    // 2PR/(P+R) reduces to 2tp/(2tp+fp+fn) when both are defined and positive
    let f1 = if precision.is_defined() && recall.is_defined() && c.tp > 0 {
        Fraction::new(2 * c.tp, 2 * c.tp + c.fp + c.fn_)
    } else {
        Fraction::new(0, 0)
    };
    Metrics { precision, recall, f1, accuracy: Fraction::new(c.tp + c.tn, c.total()) }
}

pub fn micro_average(rows: &[ConfusionCounts]) -> ConfusionCounts {
    rows.iter().copied().sum()
}

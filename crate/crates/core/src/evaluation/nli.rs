use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::metrics::Fraction;
use crate::model::{NliClass, NliLabel};

/// Rows are expected classes, columns answered classes. Answers that could
/// not be parsed are counted per expected class outside the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NliConfusion {
    pub matrix: [[u64; 3]; 3],
    pub unparsed: [u64; 3],
}

impl NliConfusion {
    pub fn record(&mut self, expected: NliClass, answered: NliLabel) {
        match answered {
            NliLabel::Class(class) => self.matrix[expected.index()][class.index()] += 1,
            NliLabel::Unparseable => self.unparsed[expected.index()] += 1,
        }
    }

    pub fn cell(&self, expected: NliClass, answered: NliClass) -> u64 {
        self.matrix[expected.index()][answered.index()]
    }

    pub fn matrix_sum(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }

    pub fn unparsed_total(&self) -> u64 {
        self.unparsed.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.matrix_sum() + self.unparsed_total()
    }

    /// Records expected to be `class`, parsed or not.
    pub fn expected_count(&self, class: NliClass) -> u64 {
        self.matrix[class.index()].iter().sum::<u64>() + self.unparsed[class.index()]
    }

    pub fn correct(&self) -> u64 {
        (0..3).map(|i| self.matrix[i][i]).sum()
    }

    /// Correct answers over every evaluated record, unparsed ones included.
    pub fn accuracy(&self) -> Fraction {
        Fraction::new(self.correct(), self.total())
    }
}

impl Add for NliConfusion {
    type Output = Self;

    fn add(mut self, other: Self) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.matrix[i][j] += other.matrix[i][j];
            }
            self.unparsed[i] += other.unparsed[i];
        }
        self
    }
}

pub fn tally_nli(records: impl IntoIterator<Item = (NliClass, NliLabel)>) -> NliConfusion {
    let mut confusion = NliConfusion::default();
    for (expected, answered) in records {
        confusion.record(expected, answered);
    }
    confusion
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct() {
        let stream = (0..10).map(|i| {
            let c = NliClass::ALL[i % 3];
            (c, NliLabel::Class(c))
        });
        let t = tally_nli(stream);
        assert_eq!(t.accuracy().percent(1), "100.0");
        assert_eq!(t.total(), 10);
    }

    #[test]
    fn unparsed_counted_per_class_and_merge_is_additive() {
        let a = tally_nli([(NliClass::Neutral, NliLabel::Unparseable), (NliClass::Neutral, NliLabel::Class(NliClass::Entailment))]);
        assert_eq!(a.unparsed, [0, 1, 0]);
        assert_eq!(a.expected_count(NliClass::Neutral), 2);
        let b = tally_nli([(NliClass::Entailment, NliLabel::Class(NliClass::Entailment))]);
        let merged = a + b;
        assert_eq!(merged.total(), 3);
        assert_eq!(merged.correct(), 1);
        assert_eq!(merged + NliConfusion::default(), merged);
    }
}

//! Compensated summation.

use std::iter::Sum;
use std::ops::AddAssign;

/// Kahan–Babuška–Neumaier accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another accumulator in, keeping both compensation terms.
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl Sum<f64> for NeumaierSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Either compensated or plain left-to-right accumulation.
#[derive(Debug, Clone, Copy)]
pub enum Accumulator {
    Compensated(NeumaierSum),
    Naive(f64),
}

impl Accumulator {
    pub fn new(compensated: bool) -> Self {
        if compensated {
            Accumulator::Compensated(NeumaierSum::new())
        } else {
            Accumulator::Naive(0.0)
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        match self {
            Accumulator::Compensated(s) => s.add(value),
            Accumulator::Naive(s) => *s += value,
        }
    }

    pub fn merge(&mut self, other: &Accumulator) {
        match (self, other) {
            (Accumulator::Compensated(a), Accumulator::Compensated(b)) => a.merge(b),
            (this, other) => this.add(other.value()),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Accumulator::Compensated(s) => s.value(),
            Accumulator::Naive(s) => *s,
        }
    }
}

//! Running contradiction / non-coverage detection along one data sequence.

use serde::{Deserialize, Serialize};

use crate::interval::Interval;

/// Tracks the running intersection of a sequence of intervals.
///
/// A sequence is *contradicted* once the running maximum of the lower
/// endpoints exceeds the running minimum of the upper endpoints (the
/// intersection is empty), and *non-covering* once that running
/// intersection excludes `true_value`. Touching intervals such as `[0, 1]`
/// and `[1, 2]` are not contradictory. Both flags are sticky.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceMonitor {
    max_lower: f64,
    min_upper: f64,
    contradicted: bool,
    noncovered: bool,
    true_value: f64,
}

impl SequenceMonitor {
    pub fn new(true_value: f64) -> Self {
        Self {
            max_lower: f64::NEG_INFINITY,
            min_upper: f64::INFINITY,
            contradicted: false,
            noncovered: false,
            true_value,
        }
    }

    pub fn update(&mut self, interval: &Interval) {
        self.update_lower(interval.lower());
        self.update_upper(interval.upper());
    }

    /// Value-returning form of [`SequenceMonitor::update`].
    #[must_use]
    pub fn updated(mut self, interval: &Interval) -> Self {
        self.update(interval);
        self
    }

    /// Feeds a lower endpoint only. Used by the simulation rules, which skip
    /// endpoints that cannot move the running extremes.
    pub(crate) fn update_lower(&mut self, lower: f64) {
        if lower > self.max_lower {
            self.max_lower = lower;
        }
        self.refresh_flags();
    }

    pub(crate) fn update_upper(&mut self, upper: f64) {
        if upper < self.min_upper {
            self.min_upper = upper;
        }
        self.refresh_flags();
    }

    fn refresh_flags(&mut self) {
        if self.max_lower > self.min_upper {
            self.contradicted = true;
        }
        if self.max_lower > self.true_value || self.min_upper < self.true_value {
            self.noncovered = true;
        }
    }

    pub fn max_lower(&self) -> f64 {
        self.max_lower
    }

    pub fn min_upper(&self) -> f64 {
        self.min_upper
    }

    pub fn contradicted(&self) -> bool {
        self.contradicted
    }

    pub fn noncovered(&self) -> bool {
        self.noncovered
    }

    pub fn true_value(&self) -> f64 {
        self.true_value
    }
}

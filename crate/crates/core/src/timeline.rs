//! Two-timescale index algebra: weeks × hours with a terminal instant.
//!
//! Hours are 0-indexed. Hour 0 of a week is its opening instant; the
//! extended timeline appends one terminal instant `(num_weeks, 0)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    num_weeks: usize,
    hours_per_week: usize,
}

/// A point of the extended timeline, ordered lexicographically by (week, hour).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeIndex {
    pub week: usize,
    pub hour: usize,
}

impl TimeIndex {
    pub const fn new(week: usize, hour: usize) -> Self {
        Self { week, hour }
    }
}

impl Timeline {
    pub fn new(num_weeks: usize, hours_per_week: usize) -> Result<Self> {
        if num_weeks == 0 || hours_per_week == 0 {
            return Err(Error::OutOfRange(format!(
                "timeline needs at least one week and one hour, got {num_weeks}x{hours_per_week}"
            )));
        }
        Ok(Self {
            num_weeks,
            hours_per_week,
        })
    }

    pub fn num_weeks(&self) -> usize {
        self.num_weeks
    }

    pub fn hours_per_week(&self) -> usize {
        self.hours_per_week
    }

    /// Number of instants including the terminal one.
    pub fn extended_len(&self) -> usize {
        self.num_weeks * self.hours_per_week + 1
    }

    pub fn terminal(&self) -> TimeIndex {
        TimeIndex::new(self.num_weeks, 0)
    }

    pub fn is_terminal(&self, t: TimeIndex) -> bool {
        t == self.terminal()
    }

    fn check(&self, t: TimeIndex) -> Result<()> {
        if t.week < self.num_weeks && t.hour < self.hours_per_week {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "instant ({}, {}) is not a non-terminal instant of a {}x{} timeline",
                t.week, t.hour, self.num_weeks, self.hours_per_week
            )))
        }
    }

    fn check_week(&self, week: usize) -> Result<()> {
        if week < self.num_weeks {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "week {week} outside [0, {})",
                self.num_weeks
            )))
        }
    }

    pub fn successor(&self, t: TimeIndex) -> Result<TimeIndex> {
        self.check(t)?;
        if t.hour + 1 < self.hours_per_week {
            Ok(TimeIndex::new(t.week, t.hour + 1))
        } else {
            Ok(TimeIndex::new(t.week + 1, 0))
        }
    }

    /// Inverse of [`Timeline::successor`]; accepts the terminal instant.
    pub fn predecessor(&self, t: TimeIndex) -> Result<TimeIndex> {
        if !self.is_terminal(t) {
            self.check(t)?;
        }
        match (t.week, t.hour) {
            (0, 0) => Err(Error::OutOfRange(
                "the first instant has no predecessor".into(),
            )),
            (w, 0) => Ok(TimeIndex::new(w - 1, self.hours_per_week - 1)),
            (w, h) => Ok(TimeIndex::new(w, h - 1)),
        }
    }

    /// The week's instants `(w,0) … (w,H-1)`, where planning decisions live.
    pub fn week_open_block(&self, week: usize) -> Result<Vec<TimeIndex>> {
        self.check_week(week)?;
        Ok((0..self.hours_per_week)
            .map(|h| TimeIndex::new(week, h))
            .collect())
    }

    /// The week's instants `(w,1) … (w,H-1), (w+1,0)`, where uncertainties and
    /// recourse controls live.
    pub fn week_closed_block(&self, week: usize) -> Result<Vec<TimeIndex>> {
        self.check_week(week)?;
        Ok((1..=self.hours_per_week)
            .map(|h| {
                if h < self.hours_per_week {
                    TimeIndex::new(week, h)
                } else {
                    TimeIndex::new(week + 1, 0)
                }
            })
            .collect())
    }

    /// Every non-terminal instant in order.
    pub fn iter(&self) -> impl Iterator<Item = TimeIndex> + '_ {
        (0..self.num_weeks)
            .flat_map(move |w| (0..self.hours_per_week).map(move |h| TimeIndex::new(w, h)))
    }
}

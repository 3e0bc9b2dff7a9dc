//! Playback of recorded trials without re-running physics.

use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::log::{LogRow, TrialLog};

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("log has no samples")]
    Empty,
    #[error("row {row}: time does not increase")]
    NonMonotonic { row: usize },
    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },
    #[error("replay speed must be positive, got {0}")]
    BadSpeed(f64),
}

fn check(log: &TrialLog) -> Result<(), ReplayError> {
    if log.rows.is_empty() {
        return Err(ReplayError::Empty);
    }
    for (i, r) in log.rows.iter().enumerate() {
        let finite = std::iter::once(r.t)
            .chain(r.ee.iter().chain(&r.force).chain(&r.go).chain([&r.cube]).flat_map(|v| v.iter().copied()))
            .all(f64::is_finite);
        if !finite {
            return Err(ReplayError::NonFinite { row: i });
        }
        if i > 0 && !(r.t > log.rows[i - 1].t) {
            return Err(ReplayError::NonMonotonic { row: i });
        }
    }
    Ok(())
}

/// Validate `log` and return its recorded frames in order.
pub fn replay(log: &TrialLog) -> Result<std::slice::Iter<'_, LogRow>, ReplayError> {
    check(log)?;
    Ok(log.rows.iter())
}

/// Paced playback: frames are released on the wall clock at `speed` times
/// the recorded rate.
#[derive(Debug)]
pub struct Replayer<'a> {
    rows: &'a [LogRow],
    speed: f64,
}

impl<'a> Replayer<'a> {
    pub fn new(log: &'a TrialLog, speed: f64) -> Result<Self, ReplayError> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(ReplayError::BadSpeed(speed));
        }
        check(log)?;
        Ok(Self { rows: &log.rows, speed })
    }

    /// Wall-clock length of the playback.
    pub fn duration(&self) -> Duration {
        let span = self.rows[self.rows.len() - 1].t - self.rows[0].t;
        Duration::from_secs_f64(span / self.speed)
    }

    /// Call `emit` for each frame at its scheduled time. Returning `false`
    /// from `emit` stops playback early. Returns the number of frames sent.
    pub fn play(&self, mut emit: impl FnMut(&LogRow) -> bool) -> usize {
        let start = Instant::now();
        let t0 = self.rows[0].t;
        let mut sent = 0;
        for row in self.rows {
            let due = Duration::from_secs_f64((row.t - t0) / self.speed);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                thread::sleep(wait);
            }
            sent += 1;
            if !emit(row) {
                break;
            }
        }
        sent
    }
}

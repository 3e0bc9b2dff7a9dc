//! Offline analysis of trial logs.
//!
//! Position and force channels are low-passed (6th order Butterworth,
//! 10 Hz, zero phase) before any metric is taken. The movement segment runs
//! from the grab instant, the first sample where both hands press at least
//! at the contact threshold, to the placement cue (or the failure cue for
//! failed trials).

pub mod filter;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::TrialPhase;
use crate::haptics::{FailureEvent, FailureKind};
use crate::log::{Cue, TrialLog, LOG_RATE_HZ};
use crate::world::{MaterialId, Side, TargetLabel, Vec3};

pub use filter::{Biquad, Butterworth};

pub const FILTER_ORDER: usize = 6;
pub const FILTER_CUTOFF_HZ: f64 = 10.0;
/// Samples in a percent-of-movement series (0 %, 1 %, ..., 100 %).
pub const PROFILE_POINTS: usize = 101;
/// Below this hand-displacement sum a DSI sample is undefined, m.
pub const DSI_MIN_DENOMINATOR: f64 = 1e-6;
/// |DSI| at or below this counts as symmetric, %.
pub const DSI_SYMMETRY_BAND: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("series of {len} samples is too short, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("invalid filter design: order {order}, cutoff {cutoff_hz} Hz at {sample_rate_hz} Hz")]
    InvalidFilter {
        order: usize,
        cutoff_hz: f64,
        sample_rate_hz: f64,
    },
    #[error("log has no samples where both hands grip the object")]
    NoGrip,
    #[error("trajectory has no length")]
    DegeneratePath,
    #[error("execution time must be positive")]
    DegenerateDuration,
    #[error("event is not a breakage")]
    NotABreak,
    #[error("log carries no phase annotations or terminal cue")]
    MissingPhases,
    #[error("force profile requires a successful trial")]
    NotSuccessful,
    #[error("no reports to summarise")]
    EmptyGroups,
}

/// Zero-phase 6th order, 10 Hz low-pass at the log rate.
pub fn lowpass(series: &[f64]) -> Result<Vec<f64>, MetricsError> {
    lowpass_at(series, LOG_RATE_HZ)
}

pub fn lowpass_at(series: &[f64], sample_rate_hz: f64) -> Result<Vec<f64>, MetricsError> {
    Butterworth::lowpass(FILTER_ORDER, FILTER_CUTOFF_HZ, sample_rate_hz)?.filtfilt(series)
}

/// Component-wise [`lowpass_at`] of a 3-D trajectory.
pub fn lowpass_points(points: &[Vec3], sample_rate_hz: f64) -> Result<Vec<Vec3>, MetricsError> {
    let filt = Butterworth::lowpass(FILTER_ORDER, FILTER_CUTOFF_HZ, sample_rate_hz)?;
    let axes = (0..3)
        .map(|k| filt.filtfilt(&points.iter().map(|p| p[k]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..points.len()).map(|i| Vec3::new(axes[0][i], axes[1][i], axes[2][i])).collect())
}

/// Lateral compression of the object from the hands' lateral separation.
pub fn deflection_sample(width0: f64, x_left: f64, x_right: f64) -> f64 {
    width0 - (x_left - x_right).abs()
}

/// Signed displacement imbalance, %. `None` when both hands are still at
/// their grab points.
pub fn dsi_sample(d_right: f64, d_left: f64) -> Option<f64> {
    let sum = d_right + d_left;
    (sum >= DSI_MIN_DENOMINATOR).then(|| 100.0 * (d_right - d_left) / sum)
}

/// DSI of every sample relative to the first one.
pub fn dsi_series(left: &[Vec3], right: &[Vec3]) -> Vec<Option<f64>> {
    dsi_series_from(left, right, 0)
}

/// DSI of every sample relative to the hand positions at index `reference`.
pub fn dsi_series_from(left: &[Vec3], right: &[Vec3], reference: usize) -> Vec<Option<f64>> {
    let (Some(l0), Some(r0)) = (left.get(reference), right.get(reference)) else {
        return Vec::new();
    };
    left.iter()
        .zip(right)
        .map(|(l, r)| dsi_sample((r - r0).norm(), (l - l0).norm()))
        .collect()
}

/// Left hand's share of the total lateral force at breakage, %.
pub fn fpb(event: &FailureEvent) -> Result<f64, MetricsError> {
    if event.kind != FailureKind::Break {
        return Err(MetricsError::NotABreak);
    }
    let total = event.f_left + event.f_right;
    if !(total > 0.0) {
        return Err(MetricsError::NotABreak);
    }
    Ok(100.0 * event.f_left / total)
}

/// Cumulative arc length along a polyline, starting at 0.
pub fn cumulative_length(points: &[Vec3]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(points.len());
    out.push(0.0);
    for w in points.windows(2) {
        acc += (w[1] - w[0]).norm();
        out.push(acc);
    }
    out.truncate(points.len());
    out
}

/// Dimensionless normalised jerk of a uniformly sampled trajectory:
/// `sqrt(T^5 / (2 L^2) * integral |jerk|^2 dt)`.
///
/// Jerk comes from the five-point central difference. The integrand is
/// integrated with the trapezoidal rule over the interior samples and held
/// constant over the two samples at either end.
pub fn normalized_jerk(points: &[Vec3], dt: f64) -> Result<f64, MetricsError> {
    let n = points.len();
    if n < 6 {
        return Err(MetricsError::SeriesTooShort { len: n, min: 6 });
    }
    if !(dt > 0.0) {
        return Err(MetricsError::DegenerateDuration);
    }
    let duration = (n - 1) as f64 * dt;
    let length = *cumulative_length(points).last().expect("non-empty");
    if !(length > 1e-12) {
        return Err(MetricsError::DegeneratePath);
    }
    let scale = 1.0 / (2.0 * dt * dt * dt);
    let jerk_sq: Vec<f64> = (2..n - 2)
        .map(|i| {
            let j = (points[i + 2] - 2.0 * points[i + 1] + 2.0 * points[i - 1] - points[i - 2]) * scale;
            j.norm_squared()
        })
        .collect();
    let interior: f64 = jerk_sq.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    let ends = 2.0 * dt * (jerk_sq[0] + jerk_sq[jerk_sq.len() - 1]);
    let integral = interior + ends;
    Ok((duration.powi(5) / (2.0 * length * length) * integral).sqrt())
}

/// Resample `values`, indexed by a non-decreasing `progress` in `[0, 1]`,
/// onto [`PROFILE_POINTS`] evenly spaced progress levels. Samples that are
/// `None` are skipped.
pub fn resample_by_progress(progress: &[f64], values: &[Option<f64>]) -> Vec<Option<f64>> {
    let pts: Vec<(f64, f64)> = progress
        .iter()
        .zip(values)
        .filter_map(|(&u, v)| v.map(|v| (u, v)))
        .collect();
    (0..PROFILE_POINTS)
        .map(|k| {
            let u = k as f64 / (PROFILE_POINTS - 1) as f64;
            let first = pts.first()?;
            let last = pts.last()?;
            if u <= first.0 {
                return Some(first.1);
            }
            if u >= last.0 {
                return Some(last.1);
            }
            let hi = pts.partition_point(|p| p.0 < u);
            let (a, b) = (pts[hi - 1], pts[hi]);
            if b.0 == a.0 {
                return Some(b.1);
            }
            let w = (u - a.0) / (b.0 - a.0);
            Some(a.1 + (b.1 - a.1) * w)
        })
        .collect()
}

/// Log channels after low-pass filtering, with the movement segment located.
#[derive(Debug, Clone)]
pub struct FilteredLog {
    pub t: Vec<f64>,
    pub ee: [Vec<Vec3>; 2],
    pub lateral_force: [Vec<f64>; 2],
    /// Index of the grab instant.
    pub grab: usize,
    /// Index where the grip is complete and the object is first held. Hand
    /// displacements for the symmetry index are measured from here, so the
    /// squeeze from the contact threshold up to the working grip does not
    /// count as movement.
    pub hold: usize,
    /// Index of the terminal cue (inclusive end of the segment).
    pub end: usize,
    pub dt: f64,
}

/// First sample where both raw lateral forces reach the contact threshold.
pub fn grab_index(log: &TrialLog) -> Option<usize> {
    let thr = log.meta.material.f_contact_min;
    log.rows
        .iter()
        .position(|r| r.lateral_force(Side::Left) >= thr && r.lateral_force(Side::Right) >= thr)
}

/// First sample carrying a cue.
pub fn cue_index(log: &TrialLog) -> Option<usize> {
    log.rows.iter().position(|r| r.event != Cue::None)
}

impl FilteredLog {
    pub fn new(log: &TrialLog) -> Result<Self, MetricsError> {
        let grab = grab_index(log).ok_or(MetricsError::NoGrip)?;
        let end = cue_index(log).unwrap_or(log.rows.len().saturating_sub(1));
        if end <= grab {
            return Err(MetricsError::NoGrip);
        }
        let hold = log.rows[grab..=end]
            .iter()
            .position(|r| !matches!(r.phase, TrialPhase::Idle | TrialPhase::Approach | TrialPhase::Grab))
            .map_or(grab, |k| grab + k);
        let fs = log.meta.dt_log.recip();
        let ee = [
            lowpass_points(&log.positions(Side::Left), fs)?,
            lowpass_points(&log.positions(Side::Right), fs)?,
        ];
        let lateral_force = [
            lowpass_at(&log.lateral_forces(Side::Left), fs)?,
            lowpass_at(&log.lateral_forces(Side::Right), fs)?,
        ];
        Ok(Self {
            t: log.rows.iter().map(|r| r.t).collect(),
            ee,
            lateral_force,
            grab,
            hold,
            end,
            dt: log.meta.dt_log,
        })
    }

    pub fn segment(&self, side: Side) -> &[Vec3] {
        &self.ee[side.index()][self.grab..=self.end]
    }

    /// Movement progress in `[0, 1]` from both hands' combined path length.
    fn combined_progress(&self) -> Result<Vec<f64>, MetricsError> {
        let l = cumulative_length(self.segment(Side::Left));
        let r = cumulative_length(self.segment(Side::Right));
        let total = l.last().copied().unwrap_or(0.0) + r.last().copied().unwrap_or(0.0);
        if !(total > 0.0) {
            return Err(MetricsError::DegeneratePath);
        }
        Ok(l.iter().zip(&r).map(|(a, b)| (a + b) / total).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deflection {
    /// `(t, deflection)` for every in-grip sample, m.
    pub series: Vec<(f64, f64)>,
    pub mean: f64,
}

/// Object compression over the in-grip samples, and its time average.
pub fn deflection(log: &TrialLog) -> Result<Deflection, MetricsError> {
    let fl = FilteredLog::new(log)?;
    deflection_filtered(log, &fl)
}

fn deflection_filtered(log: &TrialLog, fl: &FilteredLog) -> Result<Deflection, MetricsError> {
    let thr = log.meta.material.f_contact_min;
    let width0 = log.meta.width0;
    let series: Vec<(f64, f64)> = log
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            r.phase.is_in_grip() && r.lateral_force(Side::Left) >= thr && r.lateral_force(Side::Right) >= thr
        })
        .map(|(i, r)| (r.t, deflection_sample(width0, fl.ee[0][i].x, fl.ee[1][i].x)))
        .collect();
    if series.is_empty() {
        return Err(MetricsError::NoGrip);
    }
    let mean = series.iter().map(|s| s.1).sum::<f64>() / series.len() as f64;
    Ok(Deflection { series, mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dsi {
    /// DSI at 0 %, 1 %, ..., 100 % of the movement, %.
    pub series: Vec<Option<f64>>,
    pub mean: f64,
}

/// Dynamical symmetry index over the forward movement.
pub fn dsi(log: &TrialLog) -> Result<Dsi, MetricsError> {
    dsi_filtered(&FilteredLog::new(log)?)
}

fn dsi_filtered(fl: &FilteredLog) -> Result<Dsi, MetricsError> {
    let raw = dsi_series_from(fl.segment(Side::Left), fl.segment(Side::Right), fl.hold - fl.grab);
    let progress = fl.combined_progress()?;
    let series = resample_by_progress(&progress, &raw);
    let defined: Vec<f64> = series.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(MetricsError::DegeneratePath);
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(Dsi { series, mean })
}

/// Normalised jerk of one hand over the movement segment.
pub fn normalized_jerk_of(log: &TrialLog, side: Side) -> Result<f64, MetricsError> {
    let fl = FilteredLog::new(log)?;
    normalized_jerk(fl.segment(side), fl.dt)
}

/// Time from trial start to the first cue (placement or failure), s.
pub fn execution_time(log: &TrialLog) -> Result<f64, MetricsError> {
    let first = log.rows.first().ok_or(MetricsError::MissingPhases)?;
    let annotated = log.rows.iter().any(|r| r.phase != TrialPhase::Idle);
    if !annotated {
        return Err(MetricsError::MissingPhases);
    }
    let cue = cue_index(log).ok_or(MetricsError::MissingPhases)?;
    Ok(log.rows[cue].t - first.t)
}

/// Number of breakages per material across `logs`.
pub fn max_failure<'a>(logs: impl IntoIterator<Item = &'a TrialLog>) -> BTreeMap<MaterialId, usize> {
    let mut out = BTreeMap::new();
    for log in logs {
        let n = out.entry(log.meta.material.id).or_insert(0);
        if log.first_break().is_some() {
            *n += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceProfile {
    /// Lateral force at 0 %, 1 %, ..., 100 % of each hand's path, N.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl ForceProfile {
    pub fn hand(&self, side: Side) -> &[f64] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn mean(&self, side: Side) -> f64 {
        let h = self.hand(side);
        h.iter().sum::<f64>() / h.len() as f64
    }
}

/// Grip force against normalised path length, per hand. Successful trials only.
pub fn force_profile(log: &TrialLog) -> Result<ForceProfile, MetricsError> {
    if !log.meta.success {
        return Err(MetricsError::NotSuccessful);
    }
    force_profile_filtered(&FilteredLog::new(log)?)
}

fn force_profile_filtered(fl: &FilteredLog) -> Result<ForceProfile, MetricsError> {
    let hand = |side: Side| -> Result<Vec<f64>, MetricsError> {
        let s = cumulative_length(fl.segment(side));
        let total = *s.last().expect("segment is non-empty");
        if !(total > 0.0) {
            return Err(MetricsError::DegeneratePath);
        }
        let u: Vec<f64> = s.iter().map(|v| v / total).collect();
        let f: Vec<Option<f64>> = fl.lateral_force[side.index()][fl.grab..=fl.end]
            .iter()
            .map(|&v| Some(v))
            .collect();
        Ok(resample_by_progress(&u, &f).into_iter().flatten().collect())
    };
    Ok(ForceProfile {
        left: hand(Side::Left)?,
        right: hand(Side::Right)?,
    })
}

/// Every metric for one trial. Metrics that do not apply are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub trial_index: usize,
    pub material: MaterialId,
    pub target: TargetLabel,
    pub success: bool,
    pub familiarization: bool,
    pub deflection_mean: Option<f64>,
    pub dsi_series: Vec<Option<f64>>,
    pub dsi_mean: Option<f64>,
    pub nj_left: Option<f64>,
    pub nj_right: Option<f64>,
    pub fpb: Option<f64>,
    pub execution_time: Option<f64>,
    pub force_profile: Option<ForceProfile>,
}

impl MetricsReport {
    pub fn mean_force(&self, side: Side) -> Option<f64> {
        self.force_profile.as_ref().map(|p| p.mean(side))
    }

    pub fn nj(&self, side: Side) -> Option<f64> {
        match side {
            Side::Left => self.nj_left,
            Side::Right => self.nj_right,
        }
    }
}

/// Compute every applicable metric of one trial.
pub fn analyze(log: &TrialLog) -> MetricsReport {
    let filtered = FilteredLog::new(log).ok();
    let fl = filtered.as_ref();
    let deflection_mean = fl.and_then(|f| deflection_filtered(log, f).ok()).map(|d| d.mean);
    let dsi = fl.and_then(|f| dsi_filtered(f).ok());
    let nj = |side| fl.and_then(|f| normalized_jerk(f.segment(side), f.dt).ok());
    let force_profile = if log.meta.success {
        fl.and_then(|f| force_profile_filtered(f).ok())
    } else {
        None
    };
    MetricsReport {
        trial_index: log.meta.trial_index,
        material: log.meta.material.id,
        target: log.meta.target,
        success: log.meta.success,
        familiarization: log.meta.familiarization,
        deflection_mean,
        dsi_series: dsi.as_ref().map(|d| d.series.clone()).unwrap_or_default(),
        dsi_mean: dsi.map(|d| d.mean),
        nj_left: nj(Side::Left),
        nj_right: nj(Side::Right),
        fpb: log.first_break().and_then(|e| fpb(e).ok()),
        execution_time: execution_time(log).ok(),
        force_profile,
    }
}

/// One line of the descriptive summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub material: MaterialId,
    /// Target label, or `all` for per-material rows.
    pub target: String,
    /// `left`, `right` or `both`.
    pub hand: String,
    pub metric: String,
    pub mean: f64,
    /// Standard error of the mean; absent for fewer than two trials.
    pub se: Option<f64>,
    pub n: usize,
}

fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = (values.len() >= 2).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    (mean, se)
}

/// Mean and standard error per (material, target, hand, metric). Warm-up
/// trials are excluded. Per-material breakage counts are appended as
/// `max_failure` rows.
pub fn summarize(reports: &[MetricsReport]) -> Result<Vec<SummaryRow>, MetricsError> {
    let reports: Vec<&MetricsReport> = reports.iter().filter(|r| !r.familiarization).collect();
    if reports.is_empty() {
        return Err(MetricsError::EmptyGroups);
    }
    type Key = (MaterialId, TargetLabel, u8, &'static str);
    let mut cells: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    let mut push = |k: Key, v: Option<f64>| {
        if let Some(v) = v {
            cells.entry(k).or_default().push(v);
        }
    };
    // Hand code: 0 left, 1 right, 2 both.
    for r in &reports {
        let (m, t) = (r.material, r.target);
        for side in Side::BOTH {
            let h = side.index() as u8;
            push((m, t, h, "mean_force"), r.mean_force(side));
            push((m, t, h, "nj"), r.nj(side));
        }
        push((m, t, 2, "deflection"), r.deflection_mean);
        push((m, t, 2, "dsi"), r.dsi_mean);
        push((m, t, 2, "execution_time"), r.execution_time);
        push((m, t, 2, "fpb"), r.fpb);
    }
    let hand_name = |h: u8| match h {
        0 => "left",
        1 => "right",
        _ => "both",
    };
    let mut rows: Vec<SummaryRow> = cells
        .into_iter()
        .map(|((m, t, h, metric), values)| {
            let (mean, se) = mean_se(&values);
            SummaryRow {
                material: m,
                target: t.to_string(),
                hand: hand_name(h).to_string(),
                metric: metric.to_string(),
                mean,
                se,
                n: values.len(),
            }
        })
        .collect();
    let mut per_material: BTreeMap<MaterialId, (usize, usize)> = BTreeMap::new();
    for r in &reports {
        let e = per_material.entry(r.material).or_insert((0, 0));
        e.1 += 1;
        if r.fpb.is_some() {
            e.0 += 1;
        }
    }
    rows.extend(per_material.into_iter().map(|(m, (breaks, n))| SummaryRow {
        material: m,
        target: "all".into(),
        hand: "both".into(),
        metric: "max_failure".into(),
        mean: breaks as f64,
        se: None,
        n,
    }));
    Ok(rows)
}

/// Flat CSV: `material,target,hand,metric,mean,se,n`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["material", "target", "hand", "metric", "mean", "se", "n"])?;
    for r in rows {
        w.write_record([
            r.material.to_string(),
            r.target.clone(),
            r.hand.clone(),
            r.metric.clone(),
            r.mean.to_string(),
            r.se.map(|v| v.to_string()).unwrap_or_default(),
            r.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(kind: FailureKind, l: f64, r: f64) -> FailureEvent {
        FailureEvent {
            kind,
            t: 1.0,
            f_left: l,
            f_right: r,
        }
    }

    #[test]
    fn fpb_values() {
        assert_eq!(fpb(&event(FailureKind::Break, 2.0, 2.0)).unwrap(), 50.0);
        assert!((fpb(&event(FailureKind::Break, 3.0, 1.0)).unwrap() - 75.0).abs() < 1e-9);
        assert_eq!(fpb(&event(FailureKind::Break, 0.0, 5.0)).unwrap(), 0.0);
        assert_eq!(fpb(&event(FailureKind::Slip, 3.0, 1.0)), Err(MetricsError::NotABreak));
        let a = fpb(&event(FailureKind::Break, 6.3, 2.1)).unwrap();
        let b = fpb(&event(FailureKind::Break, 2.1, 6.3)).unwrap();
        assert!((a + b - 100.0).abs() < 1e-12);
    }

    #[test]
    fn dsi_values() {
        assert!((dsi_sample(0.12, 0.08).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(dsi_sample(0.0, 0.3), Some(-100.0));
        assert_eq!(dsi_sample(0.0, 0.0), None);
        assert_eq!(dsi_sample(4e-7, 4e-7), None);
    }

    #[test]
    fn mirrored_paths_are_symmetric() {
        let left: Vec<Vec3> = (0..50).map(|k| Vec3::new(-0.1 - 0.002 * k as f64, 0.001 * k as f64, 0.004 * k as f64)).collect();
        let right: Vec<Vec3> = left.iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let s = dsi_series(&left, &right);
        assert_eq!(s[0], None);
        assert!(s[1..].iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn deflection_samples() {
        // Each hand 2 cm inside a 20 cm cube.
        assert!((deflection_sample(0.2, -0.08, 0.08) - 0.04).abs() < 1e-15);
        assert_eq!(deflection_sample(0.2, -0.1, 0.1), 0.0);
    }

    #[test]
    fn resample_interpolates_and_skips_undefined() {
        let u = [0.0, 0.5, 1.0];
        let v = [None, Some(10.0), Some(20.0)];
        let r = resample_by_progress(&u, &v);
        assert_eq!(r.len(), PROFILE_POINTS);
        assert_eq!(r[0], Some(10.0));
        assert_eq!(r[50], Some(10.0));
        assert!((r[75].unwrap() - 15.0).abs() < 1e-12);
        assert_eq!(r[100], Some(20.0));
    }

    #[test]
    fn nj_needs_movement() {
        let still = vec![Vec3::new(0.1, 0.2, 0.3); 20];
        assert_eq!(normalized_jerk(&still, 0.01), Err(MetricsError::DegeneratePath));
        assert!(matches!(normalized_jerk(&still[..3], 0.01), Err(MetricsError::SeriesTooShort { .. })));
    }

    #[test]
    fn summary_needs_reports() {
        assert_eq!(summarize(&[]), Err(MetricsError::EmptyGroups));
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample std = sqrt(5/3), se = std / 2
        assert!((se.unwrap() - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mean_se(&[7.0]).1, None);
    }
}

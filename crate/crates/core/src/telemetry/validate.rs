use serde::Serialize;

use super::{Frame, Pose, Recording, MAX_RATE, MIN_RATE, POSITION_LIMIT, QUAT_NORM_TOLERANCE};

/// One violated invariant. `frame` is `None` for header-level rules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub frame: Option<usize>,
    pub rule: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn rules(&self) -> impl Iterator<Item = &str> {
        self.violations.iter().map(|v| v.rule)
    }

    fn push(&mut self, frame: Option<usize>, rule: &'static str, message: String) {
        self.violations.push(Violation {
            frame,
            rule,
            message,
        });
    }
}

fn check_pose(report: &mut ValidationReport, idx: usize, name: &str, pose: &Pose) {
    let p = pose.position;
    if p.iter().any(|c| !c.is_finite()) {
        report.push(Some(idx), "pos-finite", format!("{name} position {p:?}"));
    } else if p.iter().any(|c| c.abs() >= POSITION_LIMIT) {
        report.push(Some(idx), "pos-range", format!("{name} position {p:?}"));
    }
    let norm = pose.orientation.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > QUAT_NORM_TOLERANCE {
        report.push(
            Some(idx),
            "quat-norm",
            format!("{name} quaternion norm {norm}"),
        );
    }
}

fn check_frame(report: &mut ValidationReport, idx: usize, frame: &Frame, prev: Option<&Frame>) {
    if !frame.t.is_finite() {
        report.push(Some(idx), "t-finite", format!("t = {}", frame.t));
    } else {
        if frame.t < 0.0 {
            report.push(Some(idx), "t-negative", format!("t = {}", frame.t));
        }
        if let Some(prev) = prev {
            if !(frame.t > prev.t) {
                report.push(
                    Some(idx),
                    "t-order",
                    format!("t = {} after {}", frame.t, prev.t),
                );
            }
        }
    }
    for (name, pose) in ["head", "left", "right"].iter().zip(frame.poses()) {
        check_pose(report, idx, name, pose);
    }
}

/// List every violated recording, frame and pose invariant.
pub fn validate_recording(r: &Recording) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !(MIN_RATE..=MAX_RATE).contains(&r.rate) {
        report.push(None, "rate-range", format!("rate {} Hz", r.rate));
    }
    if r.frames.is_empty() {
        report.push(None, "frames-empty", "recording has no frames".into());
    }
    let mut prev = None;
    for (idx, frame) in r.frames.iter().enumerate() {
        check_frame(&mut report, idx, frame, prev);
        prev = Some(frame);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{Pose, Quat};

    fn recording(n: usize) -> Recording {
        let frames = (0..n)
            .map(|i| Frame {
                t: i as f64 / 30.0,
                head: Pose::at([0.0, 1.6, 0.0]),
                left: Pose::at([-0.3, 1.2, 0.0]),
                right: Pose::at([0.3, 1.2, 0.0]),
            })
            .collect();
        Recording::new("u001", "s01", 30.0, frames)
    }

    #[test]
    fn valid_recording_has_empty_report() {
        assert!(validate_recording(&recording(10)).is_valid());
    }

    #[test]
    fn short_quaternion_flagged_at_its_frame() {
        let mut r = recording(10);
        r.frames[5].left.orientation = Quat::new(0.9, 0.0, 0.0, 0.0);
        let report = validate_recording(&r);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].frame, Some(5));
        assert_eq!(report.violations[0].rule, "quat-norm");
    }

    #[test]
    fn far_position_flagged() {
        let mut r = recording(3);
        r.frames[1].head.position[1] = 1e6;
        let rules: Vec<_> = validate_recording(&r).rules().map(str::to_owned).collect();
        assert_eq!(rules, ["pos-range"]);
    }

    #[test]
    fn header_and_order_rules() {
        let mut r = recording(3);
        r.rate = 0.5;
        r.frames[2].t = r.frames[1].t;
        let report = validate_recording(&r);
        assert_eq!(report.violations[0].frame, None);
        assert_eq!(report.violations[0].rule, "rate-range");
        assert_eq!(report.violations[1].rule, "t-order");
        assert!(!validate_recording(&recording(0)).is_valid());
    }
}

use super::{Frame, Pose, Recording, TelemetryError, Vec3, MAX_RATE, MIN_RATE};

fn lerp3(a: &Vec3, b: &Vec3, u: f64) -> Vec3 {
    [
        a[0] + (b[0] - a[0]) * u,
        a[1] + (b[1] - a[1]) * u,
        a[2] + (b[2] - a[2]) * u,
    ]
}

fn interpolate_pose(a: &Pose, b: &Pose, u: f64) -> Pose {
    Pose::new(
        lerp3(&a.position, &b.position, u),
        a.orientation.slerp(b.orientation, u),
    )
}

fn interpolate(a: &Frame, b: &Frame, t: f64) -> Frame {
    let u = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
    Frame {
        t,
        head: interpolate_pose(&a.head, &b.head, u),
        left: interpolate_pose(&a.left, &b.left, u),
        right: interpolate_pose(&a.right, &b.right, u),
    }
}

/// Resample onto the uniform grid `t0 + k / target_rate` up to the last input
/// timestamp. Positions are interpolated linearly, orientations by slerp.
pub fn resample(r: &Recording, target_rate: f64) -> Result<Recording, TelemetryError> {
    if !(MIN_RATE..=MAX_RATE).contains(&target_rate) {
        return Err(TelemetryError::InvalidRate(target_rate));
    }
    if r.frames.len() < 2 {
        return Err(TelemetryError::TooShort {
            frames: r.frames.len(),
        });
    }
    let t0 = r.frames[0].t;
    let t_last = r.frames[r.frames.len() - 1].t;
    let count = ((t_last - t0) * target_rate + 1e-9).floor() as usize + 1;

    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        let t = t0 + k as f64 / target_rate;
        while seg + 2 < r.frames.len() && r.frames[seg + 1].t <= t {
            seg += 1;
        }
        let (a, b) = (&r.frames[seg], &r.frames[seg + 1]);
        let mut frame = interpolate(a, b, t);
        if k == 0 {
            frame = r.frames[0];
        }
        out.push(frame);
    }
    Ok(Recording {
        user_id: r.user_id.clone(),
        session_id: r.session_id.clone(),
        rate: target_rate,
        frames: out,
    })
}

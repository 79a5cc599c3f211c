//! Line-oriented text formats: exo calibration and ego trajectory.
//!
//! ```text
//! # calibration: one static exo camera per line (camera-from-world)
//! exo <view_id> <r11 r12 r13 r21 r22 r23 r31 r32 r33> <tx ty tz>
//!
//! # trajectory: one ego pose per integer second (camera-from-world)
//! <t_seconds> <r11 .. r33> <tx ty tz>
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Serialisation
//! emits the canonical form: no comments, single spaces, shortest
//! round-tripping float literals.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::pose::{Frame, Pose, PoseTrack};
use crate::{Error, Result, ViewId};

/// A static exo camera with its extrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExoCamera {
    pub view_id: ViewId,
    pub pose: Pose,
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

pub(crate) fn parse_f64(token: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::parse(line, format!("{what}: `{token}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("{what}: `{token}` is not finite")));
    }
    Ok(v)
}

/// Integer seconds; accepts `3` and `3.0`, rejects fractional values.
pub(crate) fn parse_seconds(token: &str, line: usize) -> Result<u32> {
    if let Ok(t) = token.parse::<u32>() {
        return Ok(t);
    }
    let v = parse_f64(token, line, "timestamp")?;
    if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
        return Err(Error::invalid(Some(line), format!("timestamp `{token}` is not a non-negative integer second")));
    }
    Ok(v as u32)
}

fn parse_pose_tokens(tokens: &[&str], line: usize) -> Result<Pose> {
    debug_assert_eq!(tokens.len(), 12);
    let mut r = [0.0; 9];
    let mut t = [0.0; 3];
    for (k, tok) in tokens.iter().enumerate() {
        let v = parse_f64(tok, line, if k < 9 { "rotation" } else { "translation" })?;
        if k < 9 {
            r[k] = v;
        } else {
            t[k - 9] = v;
        }
    }
    Pose::from_rows(r, t, Frame::CameraFromWorld).map_err(|e| match e {
        Error::Validation { message, .. } => Error::invalid(Some(line), message),
        other => other,
    })
}

fn write_pose(out: &mut String, pose: &Pose) {
    for v in pose.rotation_rows().iter().chain(pose.translation().iter()) {
        let _ = write!(out, " {v:?}");
    }
}

pub fn parse_calibration(text: &str) -> Result<Vec<ExoCamera>> {
    let mut cameras = Vec::new();
    let mut seen = HashSet::new();
    for (line, content) in content_lines(text) {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens[0] != "exo" {
            return Err(Error::parse(line, format!("expected `exo`, found `{}`", tokens[0])));
        }
        if tokens.len() != 14 {
            return Err(Error::parse(
                line,
                format!("expected 14 fields (exo, id, 9 rotation, 3 translation), found {}", tokens.len()),
            ));
        }
        let id: u32 = tokens[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("view id `{}` is not an unsigned integer", tokens[1])))?;
        let view_id = ViewId(id);
        if view_id.is_ego() {
            return Err(Error::invalid(Some(line), "view id 0 is reserved for the ego camera"));
        }
        if !seen.insert(view_id) {
            return Err(Error::invalid(Some(line), format!("duplicate view id {view_id}")));
        }
        let pose = parse_pose_tokens(&tokens[2..], line)?;
        cameras.push(ExoCamera { view_id, pose });
    }
    Ok(cameras)
}

pub fn serialize_calibration(cameras: &[ExoCamera]) -> String {
    let mut out = String::new();
    for cam in cameras {
        let _ = write!(out, "exo {}", cam.view_id);
        write_pose(&mut out, &cam.pose);
        out.push('\n');
    }
    out
}

pub fn parse_ego_trajectory(text: &str) -> Result<PoseTrack> {
    let mut timestamps: Vec<u32> = Vec::new();
    let mut poses = Vec::new();
    for (line, content) in content_lines(text) {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() != 13 {
            return Err(Error::parse(
                line,
                format!("expected 13 fields (t, 9 rotation, 3 translation), found {}", tokens.len()),
            ));
        }
        let t = parse_seconds(tokens[0], line)?;
        if let Some(&prev) = timestamps.last() {
            if t == prev {
                return Err(Error::invalid(Some(line), format!("duplicate timestamp {t}")));
            }
            if t < prev {
                return Err(Error::invalid(Some(line), format!("timestamp {t} decreases (previous {prev})")));
            }
        }
        timestamps.push(t);
        poses.push(parse_pose_tokens(&tokens[1..], line)?);
    }
    if poses.is_empty() {
        return Err(Error::invalid(None, "trajectory file contains no poses"));
    }
    PoseTrack::new(timestamps, poses)
}

pub fn serialize_ego_trajectory(track: &PoseTrack) -> String {
    let mut out = String::new();
    for (t, pose) in track.iter() {
        let _ = write!(out, "{t}");
        write_pose(&mut out, pose);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_camera() {
        let cams = parse_calibration("exo 1  1 0 0 0 1 0 0 0 1  0 0 0\n").unwrap();
        assert_eq!(cams.len(), 1);
        assert_eq!(cams[0].view_id, ViewId(1));
        assert_eq!(cams[0].pose, Pose::identity(Frame::CameraFromWorld));
    }

    #[test]
    fn short_rotation_names_line() {
        let err = parse_calibration("exo 1  1 0 0 0 1 0 0 0  0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn comments_blank_lines_and_line_numbers() {
        let text = "# rig\n\nexo 2 1 0 0 0 1 0 0 0 1 0 0 0 # front\nexo 2 1 0 0 0 1 0 0 0 1 0 0 0\n";
        let err = parse_calibration(text).unwrap_err();
        assert_eq!(err, Error::invalid(Some(4), "duplicate view id 2"));
    }

    #[test]
    fn bad_rotation_rejected_with_line() {
        let err = parse_calibration("exo 3 1 0.5 0 0 1 0 0 0 1 0 0 0").unwrap_err();
        assert!(matches!(err, Error::Validation { line: Some(1), .. }));
    }

    #[test]
    fn trajectory_basics() {
        let text = "0 1 0 0 0 1 0 0 0 1 0 0 0\n1 1 0 0 0 1 0 0 0 1 0 0 0\n";
        assert_eq!(parse_ego_trajectory(text).unwrap().len(), 2);
        let dup = "0 1 0 0 0 1 0 0 0 1 0 0 0\n0 1 0 0 0 1 0 0 0 1 0 0 0\n";
        assert!(matches!(parse_ego_trajectory(dup), Err(Error::Validation { line: Some(2), .. })));
        assert!(matches!(parse_ego_trajectory("# nothing\n"), Err(Error::Validation { .. })));
        assert!(parse_ego_trajectory("0.5 1 0 0 0 1 0 0 0 1 0 0 0").is_err());
        assert!(parse_ego_trajectory("nan 1 0 0 0 1 0 0 0 1 0 0 0").is_err());
    }
}

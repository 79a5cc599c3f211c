//! Ray-cast visibility of the interaction point cloud.

use nalgebra::{Matrix3, Vector3};

/// Solid capsule: all points within `radius` of the segment `a`–`b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

/// Camera centre plus world-from-camera axes (columns: right, down, forward).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRig {
    pub center: Vector3<f64>,
    pub axes: Matrix3<f64>,
}

impl CameraRig {
    /// Camera at `center` looking along `forward` with world +z as up.
    pub fn looking(center: Vector3<f64>, forward: Vector3<f64>) -> CameraRig {
        let f = forward.normalize();
        let up = if f.z.abs() > 0.999 { Vector3::x() } else { Vector3::z() };
        let right = f.cross(&up).normalize();
        let down = f.cross(&right);
        CameraRig { center, axes: Matrix3::from_columns(&[right, down, f]) }
    }

    pub fn gaze(&self) -> Vector3<f64> {
        self.axes.column(2).into_owned()
    }

    /// Inside the 90° square frustum: `z > 0`, `|x| <= z`, `|y| <= z`.
    pub fn in_frustum(&self, p: &Vector3<f64>) -> bool {
        let q = self.axes.transpose() * (p - self.center);
        q.z > 0.0 && q.x.abs() <= q.z && q.y.abs() <= q.z
    }
}

/// Minimum distance between segments `p1q1` and `p2q2`.
pub fn segment_distance(p1: &Vector3<f64>, q1: &Vector3<f64>, p2: &Vector3<f64>, q2: &Vector3<f64>) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    const EPS: f64 = 1e-15;
    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

/// A point counts as seen when it lies in the frustum and the segment from
/// the camera to it stays outside the capsule.
pub fn point_visible(cam: &CameraRig, body: &Capsule, p: &Vector3<f64>) -> bool {
    cam.in_frustum(p) && segment_distance(&cam.center, p, &body.a, &body.b) >= body.radius
}

/// Fraction of `cloud` seen by `cam`; 0 for an empty cloud.
pub fn visible_fraction(cam: &CameraRig, body: &Capsule, cloud: &[Vector3<f64>]) -> f64 {
    if cloud.is_empty() {
        return 0.0;
    }
    let seen = cloud.iter().filter(|p| point_visible(cam, body, p)).count();
    seen as f64 / cloud.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn segment_distance_cases() {
        // crossing
        assert!(
            (segment_distance(&v(-1., 0., 0.), &v(1., 0., 0.), &v(0., -1., 1.), &v(0., 1., 1.)) - 1.0).abs() < 1e-12
        );
        // parallel, offset
        assert!((segment_distance(&v(0., 0., 0.), &v(1., 0., 0.), &v(0., 2., 0.), &v(1., 2., 0.)) - 2.0).abs() < 1e-12);
        // endpoint to endpoint
        assert!((segment_distance(&v(0., 0., 0.), &v(1., 0., 0.), &v(2., 0., 0.), &v(3., 0., 0.)) - 1.0).abs() < 1e-12);
        // degenerate segments
        assert!((segment_distance(&v(0., 0., 0.), &v(0., 0., 0.), &v(0., 3., 0.), &v(0., 3., 0.)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn frustum_edges() {
        let cam = CameraRig::looking(Vector3::zeros(), Vector3::x());
        assert!(cam.in_frustum(&v(1., 0., 0.)));
        assert!(cam.in_frustum(&v(1., 0.99, 0.)));
        assert!(!cam.in_frustum(&v(1., 1.01, 0.)));
        assert!(!cam.in_frustum(&v(1., 0., -1.01)));
        assert!(!cam.in_frustum(&v(-1., 0., 0.)));
        assert!((cam.axes.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capsule_blocks_line_of_sight() {
        let cam = CameraRig::looking(v(-3., 0., 1.), Vector3::x());
        let body = Capsule { a: v(0., 0., 0.), b: v(0., 0., 2.), radius: 0.3 };
        assert!(!point_visible(&cam, &body, &v(1., 0., 1.)));
        assert!(point_visible(&cam, &body, &v(1., 1., 1.)));
        assert!(point_visible(&cam, &body, &v(1., 0., 4.)));
    }
}

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

/// Rigid body pose: world-frame translation and body-to-world rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose3 {
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Default for Pose3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose3 {
    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            translation,
            rotation,
        }
    }

    pub fn from_xyz_yaw(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self::new(
            Vector3::new(x, y, z),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        )
    }

    pub fn x(&self) -> f64 {
        self.translation.x
    }

    pub fn y(&self) -> f64 {
        self.translation.y
    }

    pub fn z(&self) -> f64 {
        self.translation.z
    }

    pub fn yaw(&self) -> f64 {
        let (_, _, yaw) = self.rotation.euler_angles();
        yaw
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.inverse();
        Self::new(-(r * self.translation), r)
    }

    /// `self * other`: `other` expressed in `self`'s frame, mapped to world.
    pub fn compose(&self, other: &Pose3) -> Pose3 {
        Pose3::new(
            self.translation + self.rotation * other.translation,
            self.rotation * other.rotation,
        )
    }

    /// `self⁻¹ * other`.
    pub fn between(&self, other: &Pose3) -> Pose3 {
        self.inverse().compose(other)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.translation + self.rotation * p
    }

    /// Translation added in the world frame, rotation perturbed on the right.
    pub fn retract(&self, delta_t: &Vector3<f64>, delta_r: &Vector3<f64>) -> Pose3 {
        Pose3::new(self.translation + delta_t, self.rotation * so3_exp(delta_r))
    }
}

pub fn so3_exp(phi: &Vector3<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_scaled_axis(*phi)
}

/// Rotation vector of a unit quaternion, accurate for small angles.
pub fn so3_log(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let q: &Quaternion<f64> = q.as_ref();
    let (mut w, mut v) = (q.w, q.imag());
    if w < 0.0 {
        w = -w;
        v = -v;
    }
    let n = v.norm();
    if n < 1e-8 {
        // theta / n ≈ 2 / w to second order
        return v * (2.0 / w) * (1.0 - n * n / (3.0 * w * w));
    }
    let theta = 2.0 * n.atan2(w);
    v * (theta / n)
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of the right Jacobian of SO(3).
pub fn right_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let k = skew(phi);
    let coeff = if theta2 < 1e-10 {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        let theta = theta2.sqrt();
        1.0 / theta2 - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    };
    Matrix3::identity() + 0.5 * k + coeff * k * k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_inverts_exp() {
        for v in [
            Vector3::new(0.3, -0.2, 0.9),
            Vector3::new(1e-9, 2e-9, -1e-9),
            Vector3::new(0.0, 0.0, 3.0),
        ] {
            let back = so3_log(&so3_exp(&v));
            assert!((back - v).norm() < 1e-12, "{v:?} -> {back:?}");
        }
    }

    #[test]
    fn inverse_and_between() {
        let a = Pose3::from_xyz_yaw(1.0, 2.0, 3.0, 0.4);
        let b = Pose3::from_xyz_yaw(-1.0, 0.5, 3.5, -1.1);
        let id = a.compose(&a.inverse());
        assert!(id.translation.norm() < 1e-12);
        let rel = a.between(&b);
        let b2 = a.compose(&rel);
        assert!((b2.translation - b.translation).norm() < 1e-12);
        assert!(b2.rotation.angle_to(&b.rotation) < 1e-9);
        assert!((b.yaw() + 1.1).abs() < 1e-12);
    }

    #[test]
    fn jr_inv_matches_small_angle_series() {
        let v = Vector3::new(1e-6, -2e-6, 5e-7);
        let big = right_jacobian_inv(&(v * 1e4));
        let small = right_jacobian_inv(&v);
        assert!((small - Matrix3::identity() - 0.5 * skew(&v)).norm() < 1e-11);
        assert!(big.norm().is_finite());
    }
}

//! Residuals and their analytic Jacobians with respect to the local update
//! of [`Pose3::retract`]. Residual layout is `[translation; rotation]`.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use super::pose::{right_jacobian_inv, skew, so3_log, Pose3};

fn stack(t: Vector3<f64>, r: Vector3<f64>) -> Vector6<f64> {
    Vector6::new(t.x, t.y, t.z, r.x, r.y, r.z)
}

/// Error of a relative-pose measurement `meas ≈ pose_i⁻¹ · pose_j`.
pub fn between_residual(pi: &Pose3, pj: &Pose3, meas: &Pose3) -> Vector6<f64> {
    let ri_t = pi.rotation.inverse();
    let rm_t = meas.rotation.inverse();
    let et = rm_t * (ri_t * (pj.translation - pi.translation) - meas.translation);
    let er = so3_log(&(rm_t * ri_t * pj.rotation));
    stack(et, er)
}

/// Residual and Jacobians with respect to the updates of `pi` and `pj`.
pub fn between_jacobians(
    pi: &Pose3,
    pj: &Pose3,
    meas: &Pose3,
) -> (Vector6<f64>, Matrix6<f64>, Matrix6<f64>) {
    let ri_t = pi.rotation.inverse().to_rotation_matrix().into_inner();
    let rm_t = meas.rotation.inverse().to_rotation_matrix().into_inner();
    let rj = pj.rotation.to_rotation_matrix().into_inner();
    let ri = ri_t.transpose();
    let d_local = ri_t * (pj.translation - pi.translation);

    let r = between_residual(pi, pj, meas);
    let er = Vector3::new(r[3], r[4], r[5]);
    let jr_inv = right_jacobian_inv(&er);

    let mut ji = Matrix6::zeros();
    let mut jj = Matrix6::zeros();
    let a = rm_t * ri_t;
    ji.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-a));
    ji.fixed_view_mut::<3, 3>(0, 3).copy_from(&(rm_t * skew(&d_local)));
    ji.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-jr_inv * rj.transpose() * ri));
    jj.fixed_view_mut::<3, 3>(0, 0).copy_from(&a);
    jj.fixed_view_mut::<3, 3>(3, 3).copy_from(&jr_inv);
    (r, ji, jj)
}

/// Error of an absolute pose prior.
pub fn prior_residual(p: &Pose3, target: &Pose3) -> Vector6<f64> {
    let rt_t = target.rotation.inverse();
    stack(
        rt_t * (p.translation - target.translation),
        so3_log(&(rt_t * p.rotation)),
    )
}

pub fn prior_jacobian(p: &Pose3, target: &Pose3) -> (Vector6<f64>, Matrix6<f64>) {
    let r = prior_residual(p, target);
    let rt_t: Matrix3<f64> = target.rotation.inverse().to_rotation_matrix().into_inner();
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt_t);
    j.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&right_jacobian_inv(&Vector3::new(r[3], r[4], r[5])));
    (r, j)
}

/// Whitened elevation error and its Jacobian row.
pub fn elevation_residual(p: &Pose3, z_target: f64, sigma_z: f64) -> (f64, Vector6<f64>) {
    let r = (p.z() - z_target) / sigma_z;
    (r, Vector6::new(0.0, 0.0, 1.0 / sigma_z, 0.0, 0.0, 0.0))
}

#pragma once

// Position uncertainty of a triangulated object center from stereo pixel
// measurement noise: Σ = (F_Lᵀ Σ_pix⁻¹ F_L + F_Rᵀ Σ_pix⁻¹ F_R)⁻¹ with
// F_L, F_R the 2x3 Jacobians of the left/right projections at the point
// and Σ_pix = diag(σ_u², σ_v²).

#include <stdexcept>

#include "fusetrack/camera.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack {

// Jacobian d(u,v)/d(p_world) of the pinhole projection; the right camera
// shares the pose and intrinsics but is offset by +baseline along the
// camera X axis (so its camera-frame x is shifted by -baseline).
template <class S>
Mat23T<S> projection_jacobian(const Vec3T<S>& p_world, const CameraPoseT<S>& pose,
                              const CameraIntrinsicsT<S>& k, S baseline_shift) {
  const Vec3T<S> c = world_to_camera(p_world, pose);
  if (!(c.z() > S(0))) throw std::invalid_argument("projection_jacobian: point behind camera");
  const S x = c.x() - baseline_shift, y = c.y(), z = c.z();
  Mat23T<S> d_uv_d_cam;
  d_uv_d_cam << k.fx / z, 0, -k.fx * x / (z * z), 0, k.fy / z, -k.fy * y / (z * z);
  // Camera coordinates are Rᵀ(p - t), so d(cam)/d(world) = Rᵀ.
  return d_uv_d_cam * pose.rotation().transpose();
}

template <class S>
Mat3T<S> position_covariance(const Vec3T<S>& p_world, const StereoRigT<S>& rig,
                             const CameraPoseT<S>& pose, S sigma_u = S(0.5),
                             S sigma_v = S(0.5)) {
  const Mat23T<S> fl = projection_jacobian(p_world, pose, rig.intrinsics, S(0));
  const Mat23T<S> fr = projection_jacobian(p_world, pose, rig.intrinsics, rig.baseline);
  Mat2T<S> pix_info = Mat2T<S>::Zero();
  pix_info(0, 0) = S(1) / (sigma_u * sigma_u);
  pix_info(1, 1) = S(1) / (sigma_v * sigma_v);
  const Mat3T<S> info = fl.transpose() * pix_info * fl + fr.transpose() * pix_info * fr;

  Eigen::FullPivLU<Mat3T<S>> lu(info);
  if (!lu.isInvertible())
    throw std::runtime_error("position_covariance: singular information matrix");
  return lu.inverse();
}

// 3D object location estimate at one frame: center (component-wise median
// of the filtered point set) and its stereo-derived covariance.
struct ObjectState {
  int frame = 0;
  Vec3 center = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
};

}  // namespace fusetrack

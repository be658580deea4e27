#pragma once

// Pinhole camera model and the transforms between pixel, camera and world
// space. Conventions used throughout: right-handed frame, camera looks
// along +Z, Y points down (image v grows with Y), the ground plane is XZ.
// Pixel centers sit at integer coordinates.

#include <cmath>
#include <optional>
#include <stdexcept>

#include "fusetrack/types.hpp"

namespace fusetrack {

template <class S>
struct CameraIntrinsicsT {
  S fx = 1, fy = 1, cx = 0, cy = 0;

  bool valid() const { return fx > S(0) && fy > S(0); }

  Mat3T<S> matrix() const {
    Mat3T<S> k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }
};

template <class S>
struct StereoRigT {
  CameraIntrinsicsT<S> intrinsics;  // shared by left and right camera
  S baseline = S(0);                // meters, > 0

  bool valid() const { return intrinsics.valid() && baseline > S(0); }
};

// World-from-camera rigid transform, accumulated ego position over time.
template <class S>
struct CameraPoseT {
  Mat4T<S> world_from_camera = Mat4T<S>::Identity();

  static CameraPoseT from_rt(const Mat3T<S>& rot, const Vec3T<S>& trans) {
    CameraPoseT p;
    p.world_from_camera.template topLeftCorner<3, 3>() = rot;
    p.world_from_camera.template topRightCorner<3, 1>() = trans;
    return p;
  }

  Mat3T<S> rotation() const { return world_from_camera.template topLeftCorner<3, 3>(); }
  Vec3T<S> translation() const { return world_from_camera.template topRightCorner<3, 1>(); }

  bool rotation_orthonormal(S tol = S(1e-6)) const {
    const Mat3T<S> r = rotation();
    const S err = (r * r.transpose() - Mat3T<S>::Identity()).cwiseAbs().maxCoeff();
    return err <= tol && r.determinant() > S(0);
  }
};

using CameraIntrinsics = CameraIntrinsicsT<double>;
using StereoRig = StereoRigT<double>;
using CameraPose = CameraPoseT<double>;

// Pixel + depth -> 3D point in the camera frame. Depth is the camera-frame
// Z of the surface, not the ray length.
template <class S>
Vec3T<S> backproject(const Vec2T<S>& pixel, S depth, const CameraIntrinsicsT<S>& k) {
  if (!(depth > S(0))) throw std::invalid_argument("backproject: nonpositive depth");
  return Vec3T<S>((pixel.x() - k.cx) / k.fx * depth, (pixel.y() - k.cy) / k.fy * depth, depth);
}

template <class S>
Vec3T<S> camera_to_world(const Vec3T<S>& p_camera, const CameraPoseT<S>& pose) {
  return pose.rotation() * p_camera + pose.translation();
}

template <class S>
Vec3T<S> world_to_camera(const Vec3T<S>& p_world, const CameraPoseT<S>& pose) {
  return pose.rotation().transpose() * (p_world - pose.translation());
}

template <class S>
struct ImagePoint {
  Vec2T<S> uv;
  S depth;  // camera-frame z
};

// Perspective projection of a world point. Throws if the point is not in
// front of the camera.
template <class S>
ImagePoint<S> project_to_image(const Vec3T<S>& p_world, const CameraPoseT<S>& pose,
                               const CameraIntrinsicsT<S>& k) {
  const Vec3T<S> c = world_to_camera(p_world, pose);
  if (!(c.z() > S(0))) throw std::invalid_argument("project_to_image: point behind camera");
  return {Vec2T<S>(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy), c.z()};
}

template <class S>
std::optional<ImagePoint<S>> try_project(const Vec3T<S>& p_world, const CameraPoseT<S>& pose,
                                         const CameraIntrinsicsT<S>& k) {
  const Vec3T<S> c = world_to_camera(p_world, pose);
  if (!(c.z() > S(0))) return std::nullopt;
  return ImagePoint<S>{Vec2T<S>(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy), c.z()};
}

}  // namespace fusetrack

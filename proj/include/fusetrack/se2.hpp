#pragma once

// Planar rigid motion ξ = (ξx, ξz, ξθ): rotation by ξθ about the world Y
// axis (the ground-plane normal) through the origin, then translation
// (ξx, 0, ξz). Y components pass through unchanged. The object-centric
// form ξ̂ re-expresses the same motion as the displacement of a given
// object center plus its rotation, which makes per-step motions
// averageable and extrapolatable.
//
// ξ vectors are packed into Vec3 as [0]=ξx, [1]=ξz, [2]=ξθ.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <utility>

#include "fusetrack/types.hpp"

namespace fusetrack {

template <class S>
S normalize_angle(S a) {
  a = std::remainder(a, S(2) * std::numbers::pi_v<S>);
  if (a <= -std::numbers::pi_v<S>) a += S(2) * std::numbers::pi_v<S>;
  return a;
}

template <class S>
Mat4T<S> se2_to_matrix(const Vec3T<S>& xi) {
  const S c = std::cos(xi.z()), s = std::sin(xi.z());
  Mat4T<S> m = Mat4T<S>::Identity();
  m(0, 0) = c;
  m(0, 2) = -s;
  m(2, 0) = s;
  m(2, 2) = c;
  m(0, 3) = xi.x();
  m(2, 3) = xi.y();
  return m;
}

template <class S>
Vec3T<S> se2_apply(const Vec3T<S>& xi, const Vec3T<S>& p) {
  const S c = std::cos(xi.z()), s = std::sin(xi.z());
  return Vec3T<S>(c * p.x() - s * p.z() + xi.x(), p.y(), s * p.x() + c * p.z() + xi.y());
}

// Composition: result acts as b after a (apply a first).
template <class S>
Vec3T<S> se2_compose(const Vec3T<S>& b, const Vec3T<S>& a) {
  const S c = std::cos(b.z()), s = std::sin(b.z());
  return Vec3T<S>(c * a.x() - s * a.y() + b.x(), s * a.x() + c * a.y() + b.y(),
                  normalize_angle(a.z() + b.z()));
}

template <class S>
Vec3T<S> se2_inverse(const Vec3T<S>& xi) {
  const S c = std::cos(xi.z()), s = std::sin(xi.z());
  return Vec3T<S>(-(c * xi.x() + s * xi.y()), -(-s * xi.x() + c * xi.y()),
                  normalize_angle(-xi.z()));
}

// Object-centric re-parametrization at center p:
//   ξ̂x = (cos ξθ − 1)·px − sin ξθ·pz + ξx
//   ξ̂z = sin ξθ·px + (cos ξθ − 1)·pz + ξz
//   ξ̂θ = ξθ
// so that T(ξ)·p − p = (ξ̂x, 0, ξ̂z).
template <class S>
Vec3T<S> to_object_centric(const Vec3T<S>& xi, const Vec3T<S>& p) {
  const S c = std::cos(xi.z()), s = std::sin(xi.z());
  return Vec3T<S>((c - S(1)) * p.x() - s * p.z() + xi.x(),
                  s * p.x() + (c - S(1)) * p.z() + xi.y(), xi.z());
}

// Per-step rigid motion of one tracklet between consecutive frames,
// together with the fit quality.
struct MotionTransform {
  Vec3 xi = Vec3::Zero();  // (ξx, ξz, ξθ)
  double residual = 0.0;   // RMS 3D distance over the pairs used, meters
  int n_pairs = 0;
};

// Least-squares fit of the 3-DoF motion mapping each pair's first point
// onto its second. Closed-form planar Procrustes on the XZ coordinates;
// the Y residual is constant in ξ but still counts toward the reported
// RMS. Returns nullopt for fewer than 3 pairs.
inline std::optional<MotionTransform> fit_se2(std::span<const std::pair<Vec3, Vec3>> pairs) {
  const int n = static_cast<int>(pairs.size());
  if (n < 3) return std::nullopt;

  Vec2 pc = Vec2::Zero(), qc = Vec2::Zero();
  for (const auto& [p, q] : pairs) {
    pc += Vec2(p.x(), p.z());
    qc += Vec2(q.x(), q.z());
  }
  pc /= n;
  qc /= n;

  double a = 0, b = 0;  // a = Σ pᵀq, b = Σ cross(p, q), centered
  for (const auto& [p, q] : pairs) {
    const Vec2 cp(p.x() - pc.x(), p.z() - pc.y());
    const Vec2 cq(q.x() - qc.x(), q.z() - qc.y());
    a += cp.x() * cq.x() + cp.y() * cq.y();
    b += cp.x() * cq.y() - cp.y() * cq.x();
  }
  const double theta = (a == 0 && b == 0) ? 0.0 : std::atan2(b, a);

  const double c = std::cos(theta), s = std::sin(theta);
  MotionTransform out;
  out.xi = Vec3(qc.x() - (c * pc.x() - s * pc.y()), qc.y() - (s * pc.x() + c * pc.y()),
                normalize_angle(theta));
  out.n_pairs = n;
  double sq = 0;
  for (const auto& [p, q] : pairs) sq += (se2_apply(out.xi, p) - q).squaredNorm();
  out.residual = std::sqrt(sq / n);
  return out;
}

}  // namespace fusetrack

#include "fusetrack/recovery.hpp"

#include <algorithm>
#include <cmath>

#include "fusetrack/lof.hpp"

namespace fusetrack {

std::array<Vec3, 8> Box3D::corners() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double hl = 0.5 * dims.x(), hw = 0.5 * dims.y(), hh = 0.5 * dims.z();
  std::array<Vec3, 8> out;
  int i = 0;
  for (const double sx : {-1.0, 1.0})
    for (const double sy : {-1.0, 1.0})
      for (const double sz : {-1.0, 1.0}) {
        const double lx = sx * hl, ly = sy * hh, lz = sz * hw;
        out[i++] = center + Vec3(c * lx - s * lz, ly, s * lx + c * lz);
      }
  return out;
}

std::optional<Mask> DepthConsistentMaskProvider::mask_for(int frame, const BBox2& box2d,
                                                          const Box3D& box3d, ObjectClass cls) {
  if (frame < 0 || frame >= seq_.num_frames()) return std::nullopt;
  const double d_max = params_.d_max_for(cls);
  const DepthMap& depth = seq_.depth[frame];
  const CameraPose& pose = seq_.poses[frame];
  const int u0 = std::max(0, static_cast<int>(std::floor(box2d.x1)));
  const int v0 = std::max(0, static_cast<int>(std::floor(box2d.y1)));
  const int u1 = std::min(seq_.width - 1, static_cast<int>(std::ceil(box2d.x2)) - 1);
  const int v1 = std::min(seq_.height - 1, static_cast<int>(std::ceil(box2d.y2)) - 1);
  if (u0 > u1 || v0 > v1) return std::nullopt;

  std::vector<std::uint8_t> raster(static_cast<std::size_t>(seq_.width) * seq_.height, 0);
  bool any = false;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      if (!depth.valid_at(u, v)) continue;
      const Vec3 p = camera_to_world(
          backproject(Vec2(u, v), static_cast<double>(depth.at(u, v)), seq_.rig.intrinsics),
          pose);
      if ((p - box3d.center).norm() <= d_max) {
        raster[static_cast<std::size_t>(v) * seq_.width + u] = 1;
        any = true;
      }
    }
  }
  if (!any) return std::nullopt;
  return Mask::from_raster(seq_.width, seq_.height, raster);
}

std::optional<Mask> PrecomputedMaskProvider::mask_for(int frame, const BBox2& box2d,
                                                      const Box3D& box3d, ObjectClass cls) {
  (void)box3d;
  (void)cls;
  for (const Entry& e : entries_) {
    if (e.frame != frame) continue;
    if (std::abs(e.box.x1 - box2d.x1) <= 1.0 && std::abs(e.box.y1 - box2d.y1) <= 1.0 &&
        std::abs(e.box.x2 - box2d.x2) <= 1.0 && std::abs(e.box.y2 - box2d.y2) <= 1.0) {
      // Clip to the requested region, expanded by the 1-pixel matching
      // tolerance.
      std::vector<std::uint8_t> raster(
          static_cast<std::size_t>(e.mask.width) * e.mask.height, 0);
      e.mask.for_each_foreground([&](int u, int v) {
        if (u >= box2d.x1 - 1.0 && u <= box2d.x2 + 1.0 && v >= box2d.y1 - 1.0 &&
            v <= box2d.y2 + 1.0)
          raster[static_cast<std::size_t>(v) * e.mask.width + u] = 1;
      });
      Mask clipped = Mask::from_raster(e.mask.width, e.mask.height, raster);
      if (clipped.is_empty()) return std::nullopt;
      return clipped;
    }
  }
  return std::nullopt;
}

Box3D estimate_box3d(const ObjectState& state, ObjectClass cls, const MotionModel& recent_motion,
                     const ObjectPoints* points, double prev_yaw, const RecoveryParams& params) {
  Box3D box;
  box.center = state.center;
  box.dims = params.dims_for(cls);

  const double speed = recent_motion.stationary ? 0.0 : recent_motion.displacement.norm();
  if (speed >= params.motion_speed_min) {
    box.yaw = std::atan2(recent_motion.displacement.y(), recent_motion.displacement.x());
  } else if (points && points->size() >= 2) {
    // Principal bird's-eye-view axis of the point spread.
    Vec2 mean = Vec2::Zero();
    for (const Vec3& p : points->points) mean += Vec2(p.x(), p.z());
    mean /= static_cast<double>(points->size());
    Mat2 cov = Mat2::Zero();
    for (const Vec3& p : points->points) {
      const Vec2 d = Vec2(p.x(), p.z()) - mean;
      cov += d * d.transpose();
    }
    if (cov.cwiseAbs().maxCoeff() > 0) {
      // Largest-eigenvalue direction of the symmetric 2x2 system.
      const double tr = cov.trace();
      const double det = cov.determinant();
      const double lam = 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
      Vec2 dir(cov(0, 1), lam - cov(0, 0));
      if (dir.norm() < 1e-12) dir = Vec2(lam - cov(1, 1), cov(1, 0));
      if (dir.norm() < 1e-12) dir = Vec2(1, 0);
      box.yaw = std::atan2(dir.y(), dir.x());
    } else {
      box.yaw = prev_yaw;
    }
  } else {
    box.yaw = prev_yaw;
  }
  return box;
}

std::optional<BBox2> recover_box2d(const Box3D& box3d, const CameraPose& pose,
                                   const CameraIntrinsics& k, const std::optional<BBox2>& prev_box,
                                   const FlowField* flow, int width, int height) {
  if (world_to_camera(box3d.center, pose).z() <= 0) return std::nullopt;

  BBox2 hull{1e300, 1e300, -1e300, -1e300};
  for (const Vec3& corner : box3d.corners()) {
    const auto proj = try_project(corner, pose, k);
    if (!proj) return std::nullopt;  // partially behind the camera: give up
    hull.x1 = std::min(hull.x1, proj->uv.x());
    hull.y1 = std::min(hull.y1, proj->uv.y());
    hull.x2 = std::max(hull.x2, proj->uv.x());
    hull.y2 = std::max(hull.y2, proj->uv.y());
  }

  BBox2 box = hull;
  if (prev_box && flow) {
    // Median flow over the previous box's pixels.
    std::vector<double> dus, dvs;
    const int u0 = std::max(0, static_cast<int>(std::floor(prev_box->x1)));
    const int v0 = std::max(0, static_cast<int>(std::floor(prev_box->y1)));
    const int u1 = std::min(width - 1, static_cast<int>(std::ceil(prev_box->x2)) - 1);
    const int v1 = std::min(height - 1, static_cast<int>(std::ceil(prev_box->y2)) - 1);
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const Vec2 d = flow->at(u, v);
        dus.push_back(d.x());
        dvs.push_back(d.y());
      }
    }
    if (!dus.empty()) {
      const double du = median_of(dus), dv = median_of(dvs);
      box.x1 = 0.5 * (hull.x1 + prev_box->x1 + du);
      box.y1 = 0.5 * (hull.y1 + prev_box->y1 + dv);
      box.x2 = 0.5 * (hull.x2 + prev_box->x2 + du);
      box.y2 = 0.5 * (hull.y2 + prev_box->y2 + dv);
    }
  }

  box.x1 = std::clamp(box.x1, 0.0, static_cast<double>(width));
  box.x2 = std::clamp(box.x2, 0.0, static_cast<double>(width));
  box.y1 = std::clamp(box.y1, 0.0, static_cast<double>(height));
  box.y2 = std::clamp(box.y2, 0.0, static_cast<double>(height));
  if (!box.valid()) return std::nullopt;  // outside the field of view
  return box;
}

RecoveryCheck validate_recovery(const Mask& mask, const DepthMap& depth, const Box3D& box3d,
                                const CameraPose& pose, const CameraIntrinsics& k, double d_max,
                                double min_coverage) {
  std::vector<double> xs, ys, zs;
  std::uint64_t total = 0;
  mask.for_each_foreground([&](int u, int v) {
    ++total;
    if (!depth.valid_at(u, v)) return;
    const Vec3 p =
        camera_to_world(backproject(Vec2(u, v), static_cast<double>(depth.at(u, v)), k), pose);
    xs.push_back(p.x());
    ys.push_back(p.y());
    zs.push_back(p.z());
  });
  if (total == 0) return RecoveryCheck::Occluded;
  if (static_cast<double>(xs.size()) < min_coverage * static_cast<double>(total))
    return RecoveryCheck::Occluded;  // not enough depth to judge: conservative
  const Vec3 median_point(median_of(xs), median_of(ys), median_of(zs));
  return (median_point - box3d.center).norm() <= d_max ? RecoveryCheck::Visible
                                                       : RecoveryCheck::Occluded;
}

namespace {

struct FillCursor {
  std::optional<BBox2> prev_box;
  double prev_yaw = 0.0;
};

// Attempts recovery of one frame; appends on success. Returns false when
// the attempt should stop an extension loop (consistency failure or the
// object is out of view).
bool recover_frame(int frame, const ObjectState& state, ObjectClass cls,
                   const MotionModel& motion, FillCursor& cursor, const SequenceData& seq,
                   MaskProvider& provider, const RecoveryParams& params,
                   std::vector<TrackletEntry>& out) {
  const Box3D box3d = estimate_box3d(state, cls, motion, nullptr, cursor.prev_yaw, params);
  cursor.prev_yaw = box3d.yaw;

  const FlowField* flow = nullptr;
  if (cursor.prev_box && frame >= 1 && static_cast<std::size_t>(frame - 1) < seq.flows.size())
    flow = &seq.flows[frame - 1];
  const auto box2d = recover_box2d(box3d, seq.poses[frame], seq.rig.intrinsics, cursor.prev_box,
                                   flow, seq.width, seq.height);
  if (!box2d) {
    cursor.prev_box.reset();
    return false;  // out of the camera field of view
  }
  const auto mask = provider.mask_for(frame, *box2d, box3d, cls);
  if (!mask || mask->is_empty()) {
    cursor.prev_box.reset();
    return false;
  }
  const double d_max = params.d_max_for(cls);
  if (validate_recovery(*mask, seq.depth[frame], box3d, seq.poses[frame], seq.rig.intrinsics,
                        d_max, params.min_depth_coverage) != RecoveryCheck::Visible) {
    cursor.prev_box.reset();
    return false;
  }

  TrackletEntry entry;
  entry.frame = frame;
  entry.det_index = -1;
  entry.detection = Detection{frame, cls, 0.0, *box2d};
  entry.mask = *mask;
  entry.recovered = true;
  out.push_back(std::move(entry));
  cursor.prev_box = *box2d;
  return true;
}

}  // namespace

std::vector<TrackletEntry> fill_track(const Track& track, const std::vector<Tracklet>& tracklets,
                                      const std::vector<TrackletFusion>& fusions,
                                      const SequenceData& seq, MaskProvider& provider,
                                      const RecoveryParams& params,
                                      const MergeParams& merge_params) {
  std::vector<TrackletEntry> recovered;
  if (track.tracklet_indices.empty()) return recovered;

  // Gaps between merged tracklets: try every gap frame, skipping occluded
  // ones.
  for (const GapStates& gap : track.gaps) {
    if (gap.states.empty()) continue;
    const int prev_idx = track.tracklet_indices[gap.after_tracklet];
    const Tracklet& prev = tracklets[prev_idx];
    FillCursor cursor;
    cursor.prev_box = prev.entries.back().detection.box;
    // Seed the heading from the motion across this gap, falling back to
    // the last observed point spread.
    const ObjectPoints* seed_points = nullptr;
    for (auto it = fusions[prev_idx].filtered.rbegin(); it != fusions[prev_idx].filtered.rend();
         ++it) {
      if (it->has_value()) {
        seed_points = &**it;
        break;
      }
    }
    if (!fusions[prev_idx].states.empty()) {
      const ObjectState* last = nullptr;
      for (auto it = fusions[prev_idx].states.rbegin(); it != fusions[prev_idx].states.rend();
           ++it)
        if (it->has_value()) {
          last = &**it;
          break;
        }
      if (last)
        cursor.prev_yaw =
            estimate_box3d(*last, track.cls, gap.motion, seed_points, 0.0, params).yaw;
    }
    for (const ObjectState& state : gap.states)
      recover_frame(state.frame, state, track.cls, gap.motion, cursor, seq, provider, params,
                    recovered);
  }

  // Track-end extension: walk outward until a recovery attempt fails or
  // the sequence ends.
  const int first_idx = track.tracklet_indices.front();
  const int last_idx = track.tracklet_indices.back();

  {  // forward from the last frame
    const Tracklet& tail = tracklets[last_idx];
    const auto tmr =
        trusted_motion_region(fusions[last_idx].steps, merge_params.tmr_residual, TrackletEnd::Tail);
    const MotionModel model = motion_model_from_tmr(tail, fusions[last_idx], tmr);
    const ObjectState* end_state = nullptr;
    for (auto it = fusions[last_idx].states.rbegin(); it != fusions[last_idx].states.rend(); ++it)
      if (it->has_value()) {
        end_state = &**it;
        break;
      }
    if (end_state) {
      const int horizon = seq.num_frames() - 1 - tail.last_frame();
      const auto states = extrapolate(*end_state, model, horizon, true, seq.rig, seq.poses,
                                      merge_params.sigma_u, merge_params.sigma_v);
      FillCursor cursor;
      cursor.prev_box = tail.entries.back().detection.box;
      cursor.prev_yaw = 0.0;
      for (const ObjectState& st : states) {
        if (st.frame <= tail.last_frame()) continue;
        if (!recover_frame(st.frame, st, track.cls, model, cursor, seq, provider, params,
                           recovered))
          break;
      }
    }
  }

  {  // backward from the first frame
    const Tracklet& head = tracklets[first_idx];
    const auto tmr = trusted_motion_region(fusions[first_idx].steps, merge_params.tmr_residual,
                                           TrackletEnd::Head);
    const MotionModel model = motion_model_from_tmr(head, fusions[first_idx], tmr);
    const ObjectState* begin_state = nullptr;
    for (const auto& s : fusions[first_idx].states)
      if (s.has_value()) {
        begin_state = &*s;
        break;
      }
    if (begin_state) {
      const int horizon = head.first_frame();
      const auto states = extrapolate(*begin_state, model, horizon, false, seq.rig, seq.poses,
                                      merge_params.sigma_u, merge_params.sigma_v);
      FillCursor cursor;  // no previous box when walking backward
      for (const ObjectState& st : states) {
        if (st.frame >= head.first_frame()) continue;
        if (!recover_frame(st.frame, st, track.cls, model, cursor, seq, provider, params,
                           recovered))
          break;
      }
    }
  }

  std::sort(recovered.begin(), recovered.end(),
            [](const TrackletEntry& a, const TrackletEntry& b) { return a.frame < b.frame; });
  return recovered;
}

}  // namespace fusetrack

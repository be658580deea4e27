#include "fusetrack/fusion.hpp"

#include <cmath>
#include <unordered_map>

#include "fusetrack/lof.hpp"

namespace fusetrack {

ObjectPoints build_object_points(int frame, const Mask& mask, const DepthMap& depth,
                                 const CameraPose& pose, const CameraIntrinsics& k) {
  ObjectPoints op;
  op.frame = frame;
  mask.for_each_foreground([&](int u, int v) {
    if (!depth.valid_at(u, v)) return;
    const Vec3 cam = backproject(Vec2(u, v), static_cast<double>(depth.at(u, v)), k);
    op.points.push_back(camera_to_world(cam, pose));
    op.pixels.emplace_back(u, v);
  });
  return op;
}

std::optional<ObjectPoints> filter_points(const ObjectPoints& op, int k) {
  const int n = static_cast<int>(op.size());
  if (n < k + 2) return std::nullopt;  // unfit for motion estimation
  const std::vector<double> lof = local_outlier_factor<double>(op.points, k);
  const double med = median_of(lof);
  ObjectPoints out;
  out.frame = op.frame;
  for (int i = 0; i < n; ++i) {
    if (lof[i] <= med) {
      out.points.push_back(op.points[i]);
      out.pixels.push_back(op.pixels[i]);
    }
  }
  return out;
}

std::vector<std::pair<Vec3, Vec3>> correspondences(const ObjectPoints& a, const FlowField& flow,
                                                   const ObjectPoints& b, int cap) {
  std::unordered_map<std::int64_t, int> b_by_pixel;
  b_by_pixel.reserve(b.size());
  for (int i = 0; i < static_cast<int>(b.size()); ++i) {
    const std::int64_t key = static_cast<std::int64_t>(b.pixels[i].y()) * flow.width + b.pixels[i].x();
    b_by_pixel.emplace(key, i);
  }

  std::vector<std::pair<Vec3, Vec3>> pairs;
  for (int i = 0; i < static_cast<int>(a.size()); ++i) {
    const int u = a.pixels[i].x(), v = a.pixels[i].y();
    if (!flow.in_bounds(u, v)) continue;
    const Vec2 d = flow.at(u, v);
    const long tu = std::lround(u + d.x());
    const long tv = std::lround(v + d.y());
    if (tu < 0 || tu >= flow.width || tv < 0 || tv >= flow.height) continue;
    const auto it = b_by_pixel.find(tv * flow.width + tu);
    if (it != b_by_pixel.end()) pairs.emplace_back(a.points[i], b.points[it->second]);
  }

  const int m = static_cast<int>(pairs.size());
  if (cap > 0 && m > cap) {
    const int stride = (m + cap - 1) / cap;
    std::vector<std::pair<Vec3, Vec3>> sampled;
    for (int i = 0; i < m; i += stride) sampled.push_back(pairs[i]);
    return sampled;
  }
  return pairs;
}

Vec3 object_center(const ObjectPoints& points) {
  if (points.size() == 0) throw std::invalid_argument("object_center: empty point set");
  std::vector<double> xs, ys, zs;
  xs.reserve(points.size());
  ys.reserve(points.size());
  zs.reserve(points.size());
  for (const Vec3& p : points.points) {
    xs.push_back(p.x());
    ys.push_back(p.y());
    zs.push_back(p.z());
  }
  return Vec3(median_of(xs), median_of(ys), median_of(zs));
}

TrackletFusion fuse_tracklet(const Tracklet& tracklet, const std::vector<DepthMap>& depth,
                             const std::vector<FlowField>& flows,
                             const std::vector<CameraPose>& poses, const StereoRig& rig,
                             const FusionParams& params) {
  const int len = tracklet.length();
  TrackletFusion fusion;
  fusion.filtered.resize(len);
  fusion.states.resize(len);
  if (len > 1) fusion.steps.resize(len - 1);

  for (int e = 0; e < len; ++e) {
    const TrackletEntry& entry = tracklet.entries[e];
    const int f = entry.frame;
    ObjectPoints raw = build_object_points(f, entry.mask, depth[f], poses[f], rig.intrinsics);
    if (raw.size() == 0) continue;  // no valid depth anywhere on the mask

    std::optional<ObjectPoints> filtered = filter_points(raw, params.lof_k);
    // Too few points to filter: keep the raw set for the state estimate,
    // but leave the frame unfit for motion fitting.
    const ObjectPoints& for_state = filtered ? *filtered : raw;
    ObjectState state;
    state.frame = f;
    state.center = object_center(for_state);
    try {
      state.covariance =
          position_covariance(state.center, rig, poses[f], params.sigma_u, params.sigma_v);
    } catch (const std::exception&) {
      continue;  // degenerate geometry; no usable state this frame
    }
    fusion.states[e] = std::move(state);
    fusion.filtered[e] = std::move(filtered);
  }

  for (int e = 0; e + 1 < len; ++e) {
    if (!fusion.filtered[e] || !fusion.filtered[e + 1]) continue;
    const int f = tracklet.entries[e].frame;
    if (static_cast<std::size_t>(f) >= flows.size()) continue;
    const auto pairs = correspondences(*fusion.filtered[e], flows[f], *fusion.filtered[e + 1],
                                       params.correspondence_cap);
    fusion.steps[e] = fit_se2(pairs);
  }
  return fusion;
}

ObjectReconstruction accumulate_reconstruction(const Tracklet& tracklet,
                                               const TrackletFusion& fusion) {
  const int len = tracklet.length();
  ObjectReconstruction rec;
  if (len == 0) return rec;
  rec.reference_frame = tracklet.first_frame();
  rec.frames.resize(len);
  rec.to_reference.assign(len, Vec3::Zero());
  rec.segment_anchor.resize(len);

  int anchor = tracklet.entries[0].frame;
  Vec3 to_anchor = Vec3::Zero();  // maps current frame's points into the anchor frame
  for (int e = 0; e < len; ++e) {
    if (e > 0) {
      const auto& step = fusion.steps[e - 1];
      if (step) {
        // points at e sit one step ahead of e-1: undo it, then continue to anchor
        to_anchor = se2_compose(to_anchor, se2_inverse(step->xi));
      } else {
        anchor = tracklet.entries[e].frame;  // start a new segment
        to_anchor = Vec3::Zero();
      }
    }
    rec.frames[e] = tracklet.entries[e].frame;
    rec.to_reference[e] = to_anchor;
    rec.segment_anchor[e] = anchor;
    if (fusion.filtered[e]) {
      for (const Vec3& p : fusion.filtered[e]->points)
        rec.fused.push_back({se2_apply(to_anchor, p), tracklet.entries[e].frame});
    }
  }
  return rec;
}

}  // namespace fusetrack

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "fusetrack/camera.hpp"
#include "fusetrack/covariance.hpp"
#include "fusetrack/detection.hpp"
#include "fusetrack/raster.hpp"
#include "fusetrack/se2.hpp"

namespace fusetrack {

// World-space points of one object at one frame, each remembering the mask
// pixel it came from. Points are kept in row-major pixel order.
struct ObjectPoints {
  int frame = 0;
  std::vector<Vec3> points;                // world coordinates
  std::vector<Eigen::Vector2i> pixels;     // (u, v) source pixel

  std::size_t size() const { return points.size(); }
};

// Back-projects every foreground mask pixel with valid depth. Pixels with
// invalid depth simply contribute no point.
ObjectPoints build_object_points(int frame, const Mask& mask, const DepthMap& depth,
                                 const CameraPose& pose, const CameraIntrinsics& k);

// Keeps the points whose LOF is <= the median LOF. Returns nullopt when
// there are too few points to score robustly (needs > k+1 points), in
// which case the frame is unfit for motion estimation.
std::optional<ObjectPoints> filter_points(const ObjectPoints& op, int k);

// Pairs points of `a` with points of `b` whose pixel, displaced by the
// flow at a's pixel and rounded, lands on a pixel owning a b point. The
// result is deterministically reduced to at most `cap` pairs by a uniform
// stride over a's row-major pixel order. Empty result = no motion
// estimate for this frame pair.
std::vector<std::pair<Vec3, Vec3>> correspondences(const ObjectPoints& a, const FlowField& flow,
                                                   const ObjectPoints& b, int cap);

// Accumulated mapping of every frame of a tracklet into a common
// object-centric space. Frame pairs without a motion estimate split the
// tracklet into independently anchored segments, each anchored (identity)
// at its first frame.
struct ObjectReconstruction {
  struct FusedPoint {
    Vec3 p;
    int frame;
  };
  int reference_frame = 0;
  std::vector<int> frames;                      // frame index per slot
  std::vector<Vec3> to_reference;               // ξ mapping slot frame -> its segment anchor
  std::vector<int> segment_anchor;              // anchor frame per slot
  std::vector<FusedPoint> fused;
};

// Everything the 3D stage derives from one tracklet.
struct TrackletFusion {
  std::vector<std::optional<ObjectPoints>> filtered;     // per entry
  std::vector<std::optional<ObjectState>> states;        // per entry
  std::vector<std::optional<MotionTransform>> steps;     // per consecutive entry pair
};

struct FusionParams {
  int lof_k = 4;
  int correspondence_cap = 200;
  double sigma_u = 0.5;
  double sigma_v = 0.5;
};

// Component-wise median of a filtered point set.
Vec3 object_center(const ObjectPoints& points);

// Runs the per-tracklet 3D stage: build + filter points, per-frame states
// (median center + stereo covariance), and per-pair motion fits.
TrackletFusion fuse_tracklet(const Tracklet& tracklet, const std::vector<DepthMap>& depth,
                             const std::vector<FlowField>& flows,
                             const std::vector<CameraPose>& poses, const StereoRig& rig,
                             const FusionParams& params);

ObjectReconstruction accumulate_reconstruction(const Tracklet& tracklet,
                                               const TrackletFusion& fusion);

}  // namespace fusetrack

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fusetrack/io.hpp"
#include "fusetrack/merge.hpp"

namespace fusetrack {

// Oriented 3D box on the ground plane: center, (length, width, height)
// and yaw about the ground normal. Length runs along the heading (+X at
// yaw 0), height along Y.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Ones();  // (l, w, h), all > 0
  double yaw = 0.0;

  std::array<Vec3, 8> corners() const;
};

struct RecoveryParams {
  Vec3 car_dims = Vec3(3.88, 1.63, 1.53);
  Vec3 ped_dims = Vec3(0.84, 0.66, 1.76);
  double motion_speed_min = 0.1;  // m/frame of planar speed to trust heading
  double d_max_car = 0.0;         // 0 = half the XZ box diagonal
  double d_max_ped = 0.0;
  double min_depth_coverage = 0.25;

  Vec3 dims_for(ObjectClass cls) const {
    return cls == ObjectClass::Car ? car_dims : ped_dims;
  }
  double d_max_for(ObjectClass cls) const {
    const double configured = cls == ObjectClass::Car ? d_max_car : d_max_ped;
    if (configured > 0) return configured;
    const Vec3 d = dims_for(cls);
    return 0.5 * std::hypot(d.x(), d.y());
  }
};

// Supplies a segmentation mask for a recovered 2D box. Implementations
// must return masks contained in the box region.
class MaskProvider {
 public:
  virtual ~MaskProvider() = default;
  virtual std::string tag() const = 0;
  virtual std::optional<Mask> mask_for(int frame, const BBox2& box2d, const Box3D& box3d,
                                       ObjectClass cls) = 0;
};

// Marks the box pixels whose back-projected depth point lies within d_max
// of the 3D box center. Self-contained fallback that needs no external
// segmentation source.
class DepthConsistentMaskProvider : public MaskProvider {
 public:
  DepthConsistentMaskProvider(const SequenceData& seq, const RecoveryParams& params)
      : seq_(seq), params_(params) {}
  std::string tag() const override { return "depth-consistent"; }
  std::optional<Mask> mask_for(int frame, const BBox2& box2d, const Box3D& box3d,
                               ObjectClass cls) override;

 private:
  const SequenceData& seq_;
  RecoveryParams params_;
};

// Looks up externally generated masks keyed by (frame, box corners within
// one pixel).
class PrecomputedMaskProvider : public MaskProvider {
 public:
  struct Entry {
    int frame;
    BBox2 box;
    Mask mask;
  };
  explicit PrecomputedMaskProvider(std::vector<Entry> entries) : entries_(std::move(entries)) {}
  std::string tag() const override { return "precomputed"; }
  std::optional<Mask> mask_for(int frame, const BBox2& box2d, const Box3D& box3d,
                               ObjectClass cls) override;

 private:
  std::vector<Entry> entries_;
};

// 3D box at a recovered frame: center from the state, per-class fixed
// dims; yaw from the motion direction when the object moves significantly,
// else from the principal bird's-eye-view axis of the point set, else the
// previous yaw.
Box3D estimate_box3d(const ObjectState& state, ObjectClass cls, const MotionModel& recent_motion,
                     const ObjectPoints* points, double prev_yaw, const RecoveryParams& params);

// Projects the 3D box into the image as the axis-aligned hull of its
// corners; when a previous-frame box is given it is warped by the median
// flow over its pixels and corner-averaged 50/50 with the hull. The result
// is clipped to the image; nullopt when the box cannot be seen.
std::optional<BBox2> recover_box2d(const Box3D& box3d, const CameraPose& pose,
                                   const CameraIntrinsics& k, const std::optional<BBox2>& prev_box,
                                   const FlowField* flow, int width, int height);

enum class RecoveryCheck { Visible, Occluded };

// Back-projects the mask's valid-depth pixels and accepts the frame as
// visible when the median 3D point lies within d_max of the box center.
// Insufficient depth coverage is treated as occluded.
RecoveryCheck validate_recovery(const Mask& mask, const DepthMap& depth, const Box3D& box3d,
                                const CameraPose& pose, const CameraIntrinsics& k, double d_max,
                                double min_coverage);

// Frames added to a track by recovery, keyed by frame index. Original
// detected frames are never touched.
std::vector<TrackletEntry> fill_track(const Track& track, const std::vector<Tracklet>& tracklets,
                                      const std::vector<TrackletFusion>& fusions,
                                      const SequenceData& seq, MaskProvider& provider,
                                      const RecoveryParams& params, const MergeParams& merge_params);

}  // namespace fusetrack

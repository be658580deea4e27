#pragma once

#include <optional>
#include <vector>

#include "fusetrack/fusion.hpp"

namespace fusetrack {

enum class TrackletEnd { Head, Tail };

// Contiguous run of motion steps at one end of a tracklet whose fit
// residuals are all below threshold; at least two steps are required
// before the motion is trusted for extrapolation.
struct TrustedMotionRegion {
  int first_step = 0;  // inclusive step indices into TrackletFusion::steps
  int last_step = 0;
  int length() const { return last_step - first_step + 1; }
};

std::optional<TrustedMotionRegion> trusted_motion_region(
    const std::vector<std::optional<MotionTransform>>& steps, double residual_max,
    TrackletEnd end);

// Unweighted component-wise mean of the TMR's object-centric motions, each
// step mapped at the object center of its source frame. nullopt when no
// step of the region has a usable center.
std::optional<Vec3> average_object_centric_motion(const Tracklet& tracklet,
                                                  const TrackletFusion& fusion,
                                                  const TrustedMotionRegion& tmr);

// Constant per-step motion model used for extrapolation: the world-frame
// center displacement rotates by theta each step (stationary when the
// model is absent).
struct MotionModel {
  Vec2 displacement = Vec2::Zero();  // (dx, dz) world frame
  double theta = 0.0;
  bool stationary = true;
};

MotionModel motion_model_from_tmr(const Tracklet& tracklet, const TrackletFusion& fusion,
                                  const std::optional<TrustedMotionRegion>& tmr);

// Extrapolates object states from `from`, one state per step up to
// `horizon` frames, recomputing the covariance at each predicted center.
// Forward extrapolation produces frames from.frame+1.., backward
// from.frame-1... Predictions that fall behind the camera (no covariance)
// stop the extrapolation early.
std::vector<ObjectState> extrapolate(const ObjectState& from, const MotionModel& model,
                                     int horizon, bool forward, const StereoRig& rig,
                                     const std::vector<CameraPose>& poses, double sigma_u = 0.5,
                                     double sigma_v = 0.5);

double mahalanobis(const Vec3& a, const Vec3& b, const Mat3& covariance);

struct MergeParams {
  int max_gap = 20;             // N: candidate window in frames
  double tmr_residual = 0.25;   // meters RMS
  double merge_score = 3.0;     // Mahalanobis gate, merge when score <= this
  double sigma_u = 0.5;
  double sigma_v = 0.5;
};

// Average Mahalanobis distance between the two tracklets' position
// estimates over the frames separating them (both endpoints inclusive),
// using forward/backward extrapolation where a TMR exists, single-frame
// comparison when only one side has a TMR, and stationary centers when
// neither does. nullopt when no comparison is possible.
std::optional<double> motion_consistency(const Tracklet& a, const TrackletFusion& fa,
                                         const Tracklet& b, const TrackletFusion& fb,
                                         const MergeParams& params, const StereoRig& rig,
                                         const std::vector<CameraPose>& poses);

// Predicted object states for the frames strictly between two merged
// tracklets, used by missing-detection recovery.
struct GapStates {
  int after_tracklet = -1;   // index into the track's tracklet list
  std::vector<ObjectState> states;  // one per gap frame, ascending
  MotionModel motion;        // forward model used across this gap
};

struct Track {
  int id = -1;
  ObjectClass cls = ObjectClass::Car;
  std::vector<int> tracklet_indices;  // into the pipeline's tracklet vector, time order
  std::vector<GapStates> gaps;
};

// Greedy lowest-score-first merging of same-class tracklets whose gap is
// within max_gap frames and whose motion consistency passes the gate.
// Merged pairs chain transitively; the result partitions the tracklets.
std::vector<Track> merge_tracklets(const std::vector<Tracklet>& tracklets,
                                   const std::vector<TrackletFusion>& fusions,
                                   const MergeParams& params, const StereoRig& rig,
                                   const std::vector<CameraPose>& poses, int threads = 1);

// Tracks for the degenerate no-merging case (one track per tracklet),
// shared by the 2D-only stage so outputs match exactly.
std::vector<Track> tracks_from_tracklets(const std::vector<Tracklet>& tracklets);

}  // namespace fusetrack

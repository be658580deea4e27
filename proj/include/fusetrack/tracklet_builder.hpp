#pragma once

#include <optional>
#include <vector>

#include "fusetrack/detection.hpp"
#include "fusetrack/raster.hpp"

namespace fusetrack {

// Result of matching one frame's candidates against the active tracklets.
struct FrameAssignment {
  // matched[t] = candidate index assigned to active tracklet t, or -1.
  std::vector<int> matched;
  std::vector<int> unmatched_candidates;
  Eigen::MatrixXd iou;  // tracklets x candidates, cross-class entries are 0
};

// Matches candidate (detection, mask) pairs of frame t+1 to active
// tracklets ending at frame t. Each active tracklet's last mask is warped
// by the flow t -> t+1 once, mask IoU forms the similarity, and a
// maximum-total-IoU assignment is solved; cross-class pairs never match
// and matches with IoU < iou_min are discarded.
FrameAssignment associate_frame(const std::vector<Tracklet>& active,
                                const std::vector<Detection>& candidates,
                                const std::vector<Mask>& candidate_masks, const FlowField& flow,
                                double iou_min, int threads = 1);

// Builds tracklets over a whole sequence, streaming frame by frame.
// flows[t] is the flow t -> t+1; a missing flow between two frames that
// both carry detections is a hard error.
std::vector<Tracklet> build_tracklets(const std::vector<FrameObjects>& frames,
                                      const std::vector<FlowField>& flows, double iou_min,
                                      int threads = 1);

}  // namespace fusetrack

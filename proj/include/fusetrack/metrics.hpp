#pragma once

#include <map>
#include <string>
#include <vector>

#include "fusetrack/io.hpp"

namespace fusetrack {

enum class MatchMode { Box, Mask };
enum class IdSwitchDef { Kitti, Star };

// One frame's optimal gt<->prediction matching: pairs of indices into the
// frame's gt/pred lists, every match with IoU strictly above the 0.5 gate.
struct FrameMatching {
  std::vector<std::pair<int, int>> matches;  // (gt index, pred index)
  std::vector<double> ious;                  // parallel to matches
};

FrameMatching match_frame(const std::vector<GtEntry>& gt, const std::vector<PredEntry>& pred,
                          MatchMode mode, double iou_threshold = 0.5);

// Counts ID switches from per-gt matched-id timelines. Kitti counts a
// switch only between two contiguous matched frames; Star counts any
// change against the most recent previously matched id, across gaps.
int count_id_switches(const std::map<int, std::map<int, int>>& matched_id_by_gt_frame,
                      IdSwitchDef def);

struct ClassCounts {
  std::int64_t num_gt = 0;  // non-ignored gt instances
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t ids = 0;       // contiguous-frame definition
  std::int64_t ids_star = 0;  // gap-aware definition
  double soft_tp = 0.0;       // sum of matched IoU

  bool defined() const { return num_gt > 0; }
  double mota() const { return 1.0 - static_cast<double>(fp + fn + ids) / num_gt; }
  double mota_star() const { return 1.0 - static_cast<double>(fp + fn + ids_star) / num_gt; }
  // Mask-based scores use the gap-aware switch count.
  double motsa() const { return 1.0 - static_cast<double>(fp + fn + ids_star) / num_gt; }
  double smotsa() const { return (soft_tp - fp - ids_star) / num_gt; }
};

struct EvalReport {
  MatchMode mode = MatchMode::Box;
  std::map<ObjectClass, ClassCounts> per_class;

  ClassCounts total() const;
};

// CLEAR-MOT style evaluation. Predicted masks that overlap within a frame
// are resolved before matching (higher score wins a pixel, ties to the
// lower track id); unmatched predictions sitting on an ignore region do
// not count as false positives.
EvalReport evaluate(const std::vector<GtEntry>& gt, const std::vector<PredEntry>& pred,
                    MatchMode mode, double iou_threshold = 0.5);

// Plain-text table plus machine-readable key=value lines.
std::string format_report(const EvalReport& report);

}  // namespace fusetrack

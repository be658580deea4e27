#include "fusetrack/tracklet_builder.hpp"

#include <algorithm>
#include <stdexcept>

#include "fusetrack/assignment.hpp"
#include "fusetrack/util.hpp"

namespace fusetrack {

FrameAssignment associate_frame(const std::vector<Tracklet>& active,
                                const std::vector<Detection>& candidates,
                                const std::vector<Mask>& candidate_masks, const FlowField& flow,
                                double iou_min, int threads) {
  const int nt = static_cast<int>(active.size());
  const int nc = static_cast<int>(candidates.size());
  FrameAssignment out;
  out.matched.assign(nt, -1);
  out.iou = Eigen::MatrixXd::Zero(nt, nc);
  if (nt > 0 && nc > 0) {
    std::vector<Mask> warped(nt);
    parallel_for(nt, threads, [&](std::size_t t) {
      warped[t] = warp_mask(active[t].entries.back().mask, flow);
    });
    parallel_for(nt, threads, [&](std::size_t t) {
      for (int c = 0; c < nc; ++c) {
        if (candidates[c].cls != active[t].cls) continue;  // cross-class never matches
        out.iou(static_cast<int>(t), c) = mask_iou(warped[t], candidate_masks[c]);
      }
    });
    std::vector<int> assign = solve_assignment(out.iou);
    for (int t = 0; t < nt; ++t) {
      const int c = assign[t];
      if (c >= 0 && out.iou(t, c) >= iou_min && active[t].cls == candidates[c].cls)
        out.matched[t] = c;
    }
  }
  std::vector<char> taken(nc, 0);
  for (const int c : out.matched)
    if (c >= 0) taken[c] = 1;
  for (int c = 0; c < nc; ++c)
    if (!taken[c]) out.unmatched_candidates.push_back(c);
  return out;
}

std::vector<Tracklet> build_tracklets(const std::vector<FrameObjects>& frames,
                                      const std::vector<FlowField>& flows, double iou_min,
                                      int threads) {
  std::vector<Tracklet> finished;
  std::vector<Tracklet> active;
  int next_id = 0;

  auto start_tracklet = [&](int frame, int det_index, const Detection& det, const Mask& mask) {
    Tracklet t;
    t.id = next_id++;
    t.cls = det.cls;
    t.entries.push_back({frame, det_index, det, mask, false});
    active.push_back(std::move(t));
  };

  const int num_frames = static_cast<int>(frames.size());
  for (int f = 0; f < num_frames; ++f) {
    const FrameObjects& cur = frames[f];
    if (cur.detections.size() != cur.masks.size())
      throw std::invalid_argument("build_tracklets: detections/masks count mismatch");

    if (f == 0 || active.empty()) {
      // Nothing to extend; everything starts fresh.
      for (auto& t : active) finished.push_back(std::move(t));
      active.clear();
      for (int c = 0; c < static_cast<int>(cur.detections.size()); ++c)
        start_tracklet(f, c, cur.detections[c], cur.masks[c]);
      continue;
    }

    if (static_cast<std::size_t>(f - 1) >= flows.size())
      throw std::runtime_error("build_tracklets: missing flow for frame pair " +
                               std::to_string(f - 1) + "->" + std::to_string(f));
    const FlowField& flow = flows[f - 1];

    FrameAssignment assignment =
        associate_frame(active, cur.detections, cur.masks, flow, iou_min, threads);

    std::vector<Tracklet> still_active;
    for (std::size_t t = 0; t < active.size(); ++t) {
      const int c = assignment.matched[t];
      if (c >= 0) {
        active[t].entries.push_back({f, c, cur.detections[c], cur.masks[c], false});
        still_active.push_back(std::move(active[t]));
      } else {
        finished.push_back(std::move(active[t]));  // terminated
      }
    }
    active = std::move(still_active);
    for (const int c : assignment.unmatched_candidates)
      start_tracklet(f, c, cur.detections[c], cur.masks[c]);
  }
  for (auto& t : active) finished.push_back(std::move(t));

  std::sort(finished.begin(), finished.end(),
            [](const Tracklet& a, const Tracklet& b) { return a.id < b.id; });
  return finished;
}

}  // namespace fusetrack

#include "fusetrack/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "fusetrack/assignment.hpp"

namespace fusetrack {

namespace {

double entry_iou(const GtEntry& g, const PredEntry& p, MatchMode mode) {
  if (mode == MatchMode::Box) return box_iou(g.box, p.box);
  return mask_iou(g.mask, p.mask);
}

// Fraction of the prediction covered by the (ignore) region.
double coverage_by(const GtEntry& region, const PredEntry& p, MatchMode mode) {
  if (mode == MatchMode::Box) {
    const double ix = std::min(region.box.x2, p.box.x2) - std::max(region.box.x1, p.box.x1);
    const double iy = std::min(region.box.y2, p.box.y2) - std::max(region.box.y1, p.box.y1);
    if (ix <= 0 || iy <= 0 || p.box.area() <= 0) return 0.0;
    return ix * iy / p.box.area();
  }
  if (p.mask.is_empty()) return 0.0;
  const auto a = region.mask.to_raster();
  const auto b = p.mask.to_raster();
  if (a.size() != b.size()) return 0.0;
  std::uint64_t inter = 0, parea = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i]) {
      ++parea;
      if (a[i]) ++inter;
    }
  }
  return parea ? static_cast<double>(inter) / parea : 0.0;
}

// Removes overlap between predicted masks of one frame: pixels go to the
// higher-score mask, ties to the lower track id.
void resolve_mask_overlaps(std::vector<PredEntry>& preds, int width, int height) {
  if (preds.size() < 2) return;
  std::vector<int> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
    return preds[a].track_id < preds[b].track_id;
  });
  std::vector<std::uint8_t> taken(static_cast<std::size_t>(width) * height, 0);
  for (const int i : order) {
    if (preds[i].mask.width != width || preds[i].mask.height != height) continue;
    std::vector<std::uint8_t> raster = preds[i].mask.to_raster();
    bool changed = false;
    for (std::size_t px = 0; px < raster.size(); ++px) {
      if (!raster[px]) continue;
      if (taken[px]) {
        raster[px] = 0;
        changed = true;
      } else {
        taken[px] = 1;
      }
    }
    if (changed) preds[i].mask = Mask::from_raster(width, height, raster);
  }
}

}  // namespace

FrameMatching match_frame(const std::vector<GtEntry>& gt, const std::vector<PredEntry>& pred,
                          MatchMode mode, double iou_threshold) {
  FrameMatching out;
  if (gt.empty() || pred.empty()) return out;
  Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(gt.size(), pred.size());
  for (int i = 0; i < static_cast<int>(gt.size()); ++i) {
    for (int j = 0; j < static_cast<int>(pred.size()); ++j) {
      if (gt[i].cls != pred[j].cls) continue;
      const double iou = entry_iou(gt[i], pred[j], mode);
      if (iou > iou_threshold) sim(i, j) = iou;
    }
  }
  const std::vector<int> assign = solve_assignment(sim);
  for (int i = 0; i < static_cast<int>(gt.size()); ++i) {
    const int j = assign[i];
    if (j >= 0 && sim(i, j) > iou_threshold) {
      out.matches.emplace_back(i, j);
      out.ious.push_back(sim(i, j));
    }
  }
  return out;
}

int count_id_switches(const std::map<int, std::map<int, int>>& matched_id_by_gt_frame,
                      IdSwitchDef def) {
  int switches = 0;
  for (const auto& [gt_id, timeline] : matched_id_by_gt_frame) {
    (void)gt_id;
    int last_id = -1;
    int last_frame = std::numeric_limits<int>::min();
    for (const auto& [frame, id] : timeline) {
      if (last_id >= 0 && id != last_id) {
        if (def == IdSwitchDef::Star || frame == last_frame + 1) ++switches;
      }
      last_id = id;
      last_frame = frame;
    }
  }
  return switches;
}

ClassCounts EvalReport::total() const {
  ClassCounts t;
  for (const auto& [cls, c] : per_class) {
    (void)cls;
    t.num_gt += c.num_gt;
    t.tp += c.tp;
    t.fp += c.fp;
    t.fn += c.fn;
    t.ids += c.ids;
    t.ids_star += c.ids_star;
    t.soft_tp += c.soft_tp;
  }
  return t;
}

EvalReport evaluate(const std::vector<GtEntry>& gt, const std::vector<PredEntry>& pred,
                    MatchMode mode, double iou_threshold) {
  EvalReport report;
  report.mode = mode;

  std::set<ObjectClass> classes;
  for (const auto& g : gt) classes.insert(g.cls);
  for (const auto& p : pred) classes.insert(p.cls);

  for (const ObjectClass cls : classes) {
    ClassCounts counts;

    // Group by frame.
    std::map<int, std::vector<GtEntry>> gt_by_frame;       // non-ignored
    std::map<int, std::vector<GtEntry>> ignore_by_frame;
    std::map<int, std::vector<PredEntry>> pred_by_frame;
    int width = 0, height = 0;
    for (const auto& g : gt) {
      if (g.cls != cls) continue;
      (g.ignore ? ignore_by_frame : gt_by_frame)[g.frame].push_back(g);
      width = std::max(width, g.mask.width);
      height = std::max(height, g.mask.height);
    }
    for (const auto& p : pred) {
      if (p.cls != cls) continue;
      pred_by_frame[p.frame].push_back(p);
      width = std::max(width, p.mask.width);
      height = std::max(height, p.mask.height);
    }

    std::set<int> frames;
    for (const auto& [f, v] : gt_by_frame) frames.insert(f);
    for (const auto& [f, v] : pred_by_frame) frames.insert(f);

    std::map<int, std::map<int, int>> matched_id_by_gt_frame;
    for (const int f : frames) {
      const auto git = gt_by_frame.find(f);
      auto pit = pred_by_frame.find(f);
      const std::vector<GtEntry> empty_gt;
      std::vector<PredEntry> frame_pred =
          pit == pred_by_frame.end() ? std::vector<PredEntry>{} : pit->second;
      const std::vector<GtEntry>& frame_gt = git == gt_by_frame.end() ? empty_gt : git->second;
      counts.num_gt += static_cast<std::int64_t>(frame_gt.size());

      if (mode == MatchMode::Mask && width > 0 && height > 0)
        resolve_mask_overlaps(frame_pred, width, height);

      const FrameMatching matching = match_frame(frame_gt, frame_pred, mode, iou_threshold);
      std::vector<char> gt_matched(frame_gt.size(), 0), pred_matched(frame_pred.size(), 0);
      for (std::size_t m = 0; m < matching.matches.size(); ++m) {
        const auto [gi, pj] = matching.matches[m];
        gt_matched[gi] = 1;
        pred_matched[pj] = 1;
        counts.tp += 1;
        counts.soft_tp += matching.ious[m];
        matched_id_by_gt_frame[frame_gt[gi].gt_id][f] = frame_pred[pj].track_id;
      }
      counts.fn += static_cast<std::int64_t>(frame_gt.size()) -
                   static_cast<std::int64_t>(matching.matches.size());
      // Unmatched predictions: not a false positive if they sit on an
      // ignore region.
      const auto iit = ignore_by_frame.find(f);
      for (std::size_t j = 0; j < frame_pred.size(); ++j) {
        if (pred_matched[j]) continue;
        bool ignored = false;
        if (iit != ignore_by_frame.end()) {
          for (const GtEntry& region : iit->second) {
            if (coverage_by(region, frame_pred[j], mode) > 0.5) {
              ignored = true;
              break;
            }
          }
        }
        if (!ignored) counts.fp += 1;
      }
    }

    counts.ids = count_id_switches(matched_id_by_gt_frame, IdSwitchDef::Kitti);
    counts.ids_star = count_id_switches(matched_id_by_gt_frame, IdSwitchDef::Star);
    report.per_class[cls] = counts;
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "mode: %s\n%-12s %8s %8s %8s %8s %8s %8s %10s\n",
                report.mode == MatchMode::Box ? "box" : "mask", "class", "num_gt", "tp", "fp",
                "fn", "ids", "ids*", "score");
  out += buf;
  auto emit_row = [&](const std::string& name, const ClassCounts& c) {
    std::string score = "undefined";
    if (c.defined()) {
      const double s = report.mode == MatchMode::Box ? c.mota() : c.motsa();
      std::snprintf(buf, sizeof buf, "%.4f", s);
      score = buf;
    }
    std::snprintf(buf, sizeof buf, "%-12s %8lld %8lld %8lld %8lld %8lld %8lld %10s\n",
                  name.c_str(), static_cast<long long>(c.num_gt), static_cast<long long>(c.tp),
                  static_cast<long long>(c.fp), static_cast<long long>(c.fn),
                  static_cast<long long>(c.ids), static_cast<long long>(c.ids_star),
                  score.c_str());
    out += buf;
  };
  for (const auto& [cls, counts] : report.per_class)
    emit_row(cls == ObjectClass::Car ? "car" : "pedestrian", counts);
  const ClassCounts t = report.total();
  emit_row("all", t);

  out += '\n';
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.6f\n", key, v);
    out += buf;
  };
  if (!t.defined()) {
    out += "score=undefined\n";
  } else if (report.mode == MatchMode::Box) {
    kv("mota", t.mota());
    kv("mota_star", t.mota_star());
  } else {
    kv("motsa", t.motsa());
    kv("smotsa", t.smotsa());
  }
  std::snprintf(buf, sizeof buf, "ids=%lld\nids_star=%lld\nfp=%lld\nfn=%lld\n",
                static_cast<long long>(t.ids), static_cast<long long>(t.ids_star),
                static_cast<long long>(t.fp), static_cast<long long>(t.fn));
  out += buf;
  return out;
}

}  // namespace fusetrack

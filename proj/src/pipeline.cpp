#include "fusetrack/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fusetrack/online.hpp"
#include "fusetrack/tracklet_builder.hpp"
#include "fusetrack/util.hpp"

namespace fusetrack {

void PipelineConfig::validate() const {
  if (!(iou_min > 0 && iou_min <= 1)) throw std::invalid_argument("iou_min must be in (0,1]");
  if (lof_k < 1) throw std::invalid_argument("lof_k must be >= 1");
  if (correspondence_cap < 3) throw std::invalid_argument("correspondence_cap must be >= 3");
  if (!(tmr_residual > 0)) throw std::invalid_argument("tmr_residual must be > 0");
  if (max_gap < 0) throw std::invalid_argument("max_gap must be >= 0");
  if (!(merge_score > 0)) throw std::invalid_argument("merge_score must be > 0");
  if (!(sigma_u > 0) || !(sigma_v > 0)) throw std::invalid_argument("sigma must be > 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if ((recovery.car_dims.array() <= 0).any() || (recovery.ped_dims.array() <= 0).any())
    throw std::invalid_argument("class dims must be > 0");
  if (!(recovery.motion_speed_min > 0))
    throw std::invalid_argument("motion_speed_min must be > 0");
  if (provider == ProviderKind::Precomputed && provider_file.empty())
    throw std::invalid_argument("precomputed mask provider needs provider_file");
}

void PipelineConfig::apply_key(const std::string& key, const std::string& value) {
  auto as_double = [&] { return std::stod(value); };
  auto as_int = [&] { return std::stoi(value); };
  auto as_bool = [&] {
    if (value == "1" || value == "true" || value == "on") return true;
    if (value == "0" || value == "false" || value == "off") return false;
    throw std::invalid_argument("bad boolean '" + value + "' for " + key);
  };
  if (key == "iou_min") iou_min = as_double();
  else if (key == "lof_k") lof_k = as_int();
  else if (key == "correspondence_cap") correspondence_cap = as_int();
  else if (key == "tmr_residual") tmr_residual = as_double();
  else if (key == "max_gap") max_gap = as_int();
  else if (key == "merge_score") merge_score = as_double();
  else if (key == "sigma_u") sigma_u = as_double();
  else if (key == "sigma_v") sigma_v = as_double();
  else if (key == "car_length") recovery.car_dims.x() = as_double();
  else if (key == "car_width") recovery.car_dims.y() = as_double();
  else if (key == "car_height") recovery.car_dims.z() = as_double();
  else if (key == "ped_length") recovery.ped_dims.x() = as_double();
  else if (key == "ped_width") recovery.ped_dims.y() = as_double();
  else if (key == "ped_height") recovery.ped_dims.z() = as_double();
  else if (key == "motion_speed_min") recovery.motion_speed_min = as_double();
  else if (key == "d_max_car") recovery.d_max_car = as_double();
  else if (key == "d_max_ped") recovery.d_max_ped = as_double();
  else if (key == "min_depth_coverage") recovery.min_depth_coverage = as_double();
  else if (key == "fill") fill = as_bool();
  else if (key == "online") online = as_bool();
  else if (key == "stage") {
    if (value == "full") stage = PipelineStage::Full;
    else if (value == "2d-only") stage = PipelineStage::TwoDOnly;
    else throw std::invalid_argument("stage must be 'full' or '2d-only'");
  } else if (key == "mask_provider") {
    if (value == "depth-consistent") provider = ProviderKind::DepthConsistent;
    else if (value == "precomputed") provider = ProviderKind::Precomputed;
    else if (value == "none") provider = ProviderKind::None;
    else throw std::invalid_argument("unknown mask_provider '" + value + "'");
  } else if (key == "provider_file") provider_file = value;
  else if (key == "class_filter") {
    if (value == "all") class_filter = ClassFilter::All;
    else if (value == "car") class_filter = ClassFilter::Car;
    else if (value == "pedestrian") class_filter = ClassFilter::Pedestrian;
    else throw std::invalid_argument("unknown class_filter '" + value + "'");
  } else if (key == "threads") threads = as_int();
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InputError(file.string(), 0, "cannot open config file");
  PipelineConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::invalid_argument(file.string() + ":" + std::to_string(line_no) +
                                    ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument(file.string() + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    config.apply_key(key, value);
  }
  return config;
}

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
  void mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

SequenceData filter_classes(const SequenceData& seq, ClassFilter filter) {
  if (filter == ClassFilter::All) return seq;
  const ObjectClass keep = filter == ClassFilter::Car ? ObjectClass::Car : ObjectClass::Pedestrian;
  SequenceData out = seq;
  for (FrameObjects& frame : out.frames) {
    FrameObjects kept;
    for (std::size_t i = 0; i < frame.detections.size(); ++i) {
      if (frame.detections[i].cls == keep) {
        kept.detections.push_back(frame.detections[i]);
        kept.masks.push_back(frame.masks[i]);
      }
    }
    frame = std::move(kept);
  }
  return out;
}

std::unique_ptr<MaskProvider> make_provider(const SequenceData& seq, const PipelineConfig& config) {
  switch (config.provider) {
    case ProviderKind::DepthConsistent:
      return std::make_unique<DepthConsistentMaskProvider>(seq, config.recovery);
    case ProviderKind::Precomputed: {
      std::vector<PrecomputedMaskProvider::Entry> entries;
      for (const ProviderEntry& e : read_provider_file(config.provider_file))
        entries.push_back({e.frame, e.box, e.mask});
      return std::make_unique<PrecomputedMaskProvider>(std::move(entries));
    }
    case ProviderKind::None:
      return nullptr;
  }
  return nullptr;
}

}  // namespace

PipelineResult run_pipeline(const SequenceData& seq_in, const PipelineConfig& config) {
  config.validate();
  PipelineResult result;
  StageClock clock(result.timings);

  SequenceData filtered;
  const SequenceData* seq_ptr = &seq_in;
  if (config.class_filter != ClassFilter::All) {
    filtered = filter_classes(seq_in, config.class_filter);
    seq_ptr = &filtered;
  }
  const SequenceData& seq = *seq_ptr;
  clock.mark("input");

  if (config.online && config.stage == PipelineStage::Full) {
    OnlineTracker::Params params{config.iou_min, config.fusion_params(), config.merge_params(),
                                 config.recovery, config.fill, config.threads};
    auto provider = config.fill ? make_provider(seq, config) : nullptr;
    OnlineTracker tracker(seq, params, provider.get());
    for (int f = 0; f < seq.num_frames(); ++f) tracker.step(f);
    OnlineTracker::Result online = tracker.finish();
    result.tracklets = std::move(online.tracklets);
    result.tracks = std::move(online.tracks);
    result.recovered = std::move(online.recovered);
    clock.mark("online");
    return result;
  }

  result.tracklets = build_tracklets(seq.frames, seq.flows, config.iou_min, config.threads);
  clock.mark("tracklets_2d");

  if (config.stage == PipelineStage::TwoDOnly) {
    result.tracks = tracks_from_tracklets(result.tracklets);
    result.recovered.resize(result.tracks.size());
    clock.mark("assemble");
    return result;
  }

  result.fusions.resize(result.tracklets.size());
  const FusionParams fusion_params = config.fusion_params();
  parallel_for(result.tracklets.size(), config.threads, [&](std::size_t i) {
    result.fusions[i] =
        fuse_tracklet(result.tracklets[i], seq.depth, seq.flows, seq.poses, seq.rig, fusion_params);
  });
  clock.mark("fusion_3d");

  result.tracks = merge_tracklets(result.tracklets, result.fusions, config.merge_params(), seq.rig,
                                  seq.poses, config.threads);
  clock.mark("merge_3d");

  result.recovered.resize(result.tracks.size());
  if (config.fill && config.provider != ProviderKind::None) {
    auto provider = make_provider(seq, config);
    if (provider) {
      for (std::size_t t = 0; t < result.tracks.size(); ++t) {
        result.recovered[t] =
            fill_track(result.tracks[t], result.tracklets, result.fusions, seq, *provider,
                       config.recovery, config.merge_params());
      }
    }
  }
  clock.mark("recovery");
  return result;
}

std::vector<TrackOutput> collect_outputs(const PipelineResult& result) {
  std::vector<TrackOutput> out;
  for (std::size_t t = 0; t < result.tracks.size(); ++t) {
    const Track& track = result.tracks[t];
    for (const int ti : track.tracklet_indices) {
      for (const TrackletEntry& e : result.tracklets[ti].entries) {
        out.push_back({e.frame, track.id, track.cls, e.detection.score, e.detection.box, &e.mask,
                       e.recovered});
      }
    }
    if (t < result.recovered.size()) {
      for (const TrackletEntry& e : result.recovered[t])
        out.push_back({e.frame, track.id, track.cls, e.detection.score, e.detection.box, &e.mask,
                       true});
    }
  }
  std::sort(out.begin(), out.end(), [](const TrackOutput& a, const TrackOutput& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.track_id < b.track_id;
  });
  return out;
}

void write_track_outputs(const std::filesystem::path& out_dir, const PipelineResult& result) {
  std::filesystem::create_directories(out_dir);
  const std::vector<TrackOutput> outputs = collect_outputs(result);
  std::vector<PredEntry> preds;
  preds.reserve(outputs.size());
  for (const TrackOutput& o : outputs) {
    PredEntry p;
    p.frame = o.frame;
    p.track_id = o.track_id;
    p.cls = o.cls;
    p.score = o.score;
    p.box = o.box;
    p.mask = *o.mask;
    preds.push_back(std::move(p));
  }
  write_predictions_box(out_dir / "tracks_box.txt", preds);
  write_predictions_mask(out_dir / "tracks_mask.txt", preds);
}

std::string format_timings(const PipelineResult& result) {
  std::string out;
  char buf[128];
  double total = 0;
  for (const auto& [stage, seconds] : result.timings) {
    std::snprintf(buf, sizeof buf, "%-14s %8.3f s\n", stage.c_str(), seconds);
    out += buf;
    total += seconds;
  }
  std::snprintf(buf, sizeof buf, "%-14s %8.3f s\n", "total", total);
  out += buf;
  return out;
}

}  // namespace fusetrack

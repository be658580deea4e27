#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fusetrack/io.hpp"
#include "fusetrack/merge.hpp"
#include "fusetrack/recovery.hpp"

namespace fusetrack {

enum class PipelineStage { Full, TwoDOnly };
enum class ProviderKind { DepthConsistent, Precomputed, None };
enum class ClassFilter { All, Car, Pedestrian };

struct PipelineConfig {
  double iou_min = 0.5;
  int lof_k = 4;
  int correspondence_cap = 200;
  double tmr_residual = 0.25;
  int max_gap = 20;
  double merge_score = 3.0;
  double sigma_u = 0.5;
  double sigma_v = 0.5;
  RecoveryParams recovery;
  bool fill = true;
  bool online = false;
  PipelineStage stage = PipelineStage::Full;
  ProviderKind provider = ProviderKind::DepthConsistent;
  std::string provider_file;
  ClassFilter class_filter = ClassFilter::All;
  int threads = 1;

  FusionParams fusion_params() const {
    return FusionParams{lof_k, correspondence_cap, sigma_u, sigma_v};
  }
  MergeParams merge_params() const {
    return MergeParams{max_gap, tmr_residual, merge_score, sigma_u, sigma_v};
  }
  void validate() const;  // throws std::invalid_argument on bad values

  // key = value lines; '#' starts a comment. Unknown keys are errors.
  static PipelineConfig from_file(const std::filesystem::path& file);
  void apply_key(const std::string& key, const std::string& value);
};

struct PipelineResult {
  std::vector<Tracklet> tracklets;
  std::vector<TrackletFusion> fusions;       // empty in 2d-only stage
  std::vector<Track> tracks;
  std::vector<std::vector<TrackletEntry>> recovered;  // parallel to tracks
  std::vector<std::pair<std::string, double>> timings;  // (stage, seconds)
};

PipelineResult run_pipeline(const SequenceData& seq, const PipelineConfig& config);

// One output line per tracked frame.
struct TrackOutput {
  int frame;
  int track_id;
  ObjectClass cls;
  double score;
  BBox2 box;
  const Mask* mask;
  bool recovered;
};
std::vector<TrackOutput> collect_outputs(const PipelineResult& result);

// Writes tracks_box.txt and tracks_mask.txt into out_dir.
void write_track_outputs(const std::filesystem::path& out_dir, const PipelineResult& result);

std::string format_timings(const PipelineResult& result);

}  // namespace fusetrack

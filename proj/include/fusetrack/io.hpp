#pragma once

// File formats.
//
// Depth raster (.dpt): magic "DPT1", little-endian u32 width, u32 height,
//   then width*height little-endian f32 meters, row-major; values <= 0 are
//   invalid.
// Flow (.flo), Middlebury convention: f32 sentinel 202021.25, i32 width,
//   i32 height, then interleaved f32 (du, dv) row-major.
// Poses: one line per frame, 12 floats = row-major 3x4 world-from-camera
//   transform (bottom row implicitly 0 0 0 1).
// Calibration: line 1 "fx fy cx cy", line 2 "baseline".
// Detections: one line per detection, "frame class_id score x1 y1 x2 y2"
//   (class_id 1=car, 2=pedestrian).
// Masks: "frame det_index height width n_runs r1 ... rn", row-major RLE
//   counts starting with background.
// Predictions (box): "frame track_id class_id score x1 y1 x2 y2".
// Predictions (mask): "frame track_id class_id height width n_runs r...".
// Ground truth adds an ignore flag: "frame gt_id class_id ignore ..." in
//   either box or mask layout.
// Precomputed provider file: "frame x1 y1 x2 y2 height width n_runs r..."
//   with corners printed to 4 decimals; lookups match within one pixel.

#include <filesystem>
#include <string>
#include <vector>

#include "fusetrack/camera.hpp"
#include "fusetrack/detection.hpp"
#include "fusetrack/raster.hpp"

namespace fusetrack {

// A whole sequence loaded in memory. flows[t] maps frame t to t+1, so
// there is one fewer flow field than frames.
struct SequenceData {
  int width = 0, height = 0;
  StereoRig rig;
  std::vector<CameraPose> poses;
  std::vector<DepthMap> depth;
  std::vector<FlowField> flows;
  std::vector<FrameObjects> frames;

  int num_frames() const { return static_cast<int>(poses.size()); }
};

DepthMap read_depth(const std::filesystem::path& file);
void write_depth(const std::filesystem::path& file, const DepthMap& d);

FlowField read_flow(const std::filesystem::path& file);
void write_flow(const std::filesystem::path& file, const FlowField& f);

std::vector<CameraPose> read_poses(const std::filesystem::path& file);
void write_poses(const std::filesystem::path& file, const std::vector<CameraPose>& poses);

StereoRig read_calib(const std::filesystem::path& file);
void write_calib(const std::filesystem::path& file, const StereoRig& rig);

std::vector<Detection> read_detections(const std::filesystem::path& file);
void write_detections(const std::filesystem::path& file, const std::vector<Detection>& dets);

// Masks keyed by (frame, det_index).
struct MaskRecord {
  int frame;
  int det_index;
  Mask mask;
};
std::vector<MaskRecord> read_masks(const std::filesystem::path& file);
void write_masks(const std::filesystem::path& file, const std::vector<MaskRecord>& masks);

struct PredEntry {
  int frame = 0;
  int track_id = 0;
  ObjectClass cls = ObjectClass::Car;
  double score = 1.0;
  BBox2 box;
  Mask mask;  // empty in box mode
};
std::vector<PredEntry> read_predictions_box(const std::filesystem::path& file);
std::vector<PredEntry> read_predictions_mask(const std::filesystem::path& file);
void write_predictions_box(const std::filesystem::path& file, const std::vector<PredEntry>& preds);
void write_predictions_mask(const std::filesystem::path& file,
                            const std::vector<PredEntry>& preds);

struct GtEntry {
  int frame = 0;
  int gt_id = 0;
  ObjectClass cls = ObjectClass::Car;
  bool ignore = false;
  BBox2 box;
  Mask mask;  // empty in box mode
};
std::vector<GtEntry> read_gt_box(const std::filesystem::path& file);
std::vector<GtEntry> read_gt_mask(const std::filesystem::path& file);
void write_gt_box(const std::filesystem::path& file, const std::vector<GtEntry>& gts);
void write_gt_mask(const std::filesystem::path& file, const std::vector<GtEntry>& gts);

// Sequence directory layout: calib.txt, poses.txt, detections.txt,
// masks.txt, depth/NNNNNN.dpt, flow/NNNNNN.flo (6-digit frame indices).
SequenceData load_sequence(const std::filesystem::path& dir);
void write_sequence(const std::filesystem::path& dir, const SequenceData& seq);

struct ProviderEntry {
  int frame;
  BBox2 box;
  Mask mask;
};
std::vector<ProviderEntry> read_provider_file(const std::filesystem::path& file);
void write_provider_file(const std::filesystem::path& file,
                         const std::vector<ProviderEntry>& entries);

// KITTI-MOTS-style mask lines: "frame id class_id height width rle" with
// the compressed COCO string encoding.
std::string convert_rle_file(const std::string& text, bool compressed_to_plain,
                             const std::string& file_name_for_errors);

}  // namespace fusetrack

#pragma once

#include <optional>
#include <vector>

#include "fusetrack/io.hpp"
#include "fusetrack/merge.hpp"
#include "fusetrack/recovery.hpp"
#include "fusetrack/tracklet_builder.hpp"

namespace fusetrack {

// Forward-only variant of the tracker: frames are consumed strictly in
// order, terminated tracklets are extrapolated forward and matched against
// newly started tracklets, and missing detections are only filled in the
// current frame. Nothing emitted at frame t depends on frames after t.
class OnlineTracker {
 public:
  struct Params {
    double iou_min = 0.5;
    FusionParams fusion;
    MergeParams merge;
    RecoveryParams recovery;
    bool fill = true;
    int threads = 1;
  };

  struct Emission {
    int frame;
    int provisional_id;  // root tracklet id, stable once emitted
    ObjectClass cls;
    double score;
    BBox2 box;
    Mask mask;
    bool recovered;
  };

  struct Result {
    std::vector<Tracklet> tracklets;
    std::vector<Track> tracks;
    std::vector<std::vector<TrackletEntry>> recovered;  // parallel to tracks
  };

  OnlineTracker(const SequenceData& seq, const Params& params, MaskProvider* provider);

  // Processes the next frame; frames must arrive in order starting at 0.
  void step(int frame);

  const std::vector<Emission>& emissions() const { return emissions_; }

  // Finalizes tracks once the sequence is done.
  Result finish();

 private:
  struct Slot {
    Tracklet tracklet;
    TrackletFusion fusion;
    int root;                        // slot index of the chain root
    bool dangling = false;           // terminated but still matchable
    std::optional<BBox2> fill_prev_box;
    double fill_prev_yaw = 0.0;
    std::vector<TrackletEntry> recovered;
  };

  void append_entry(Slot& slot, int frame, int det_index, const Detection& det, const Mask& mask);
  void link_new_seeds(int frame, const std::vector<int>& seed_slots);
  void fill_dangling(int frame);

  const SequenceData& seq_;
  Params params_;
  MaskProvider* provider_;
  std::vector<Slot> slots_;
  std::vector<int> active_;  // slot indices with tracklet ending at the previous frame
  std::vector<Emission> emissions_;
  int next_frame_ = 0;
};

}  // namespace fusetrack

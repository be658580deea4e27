#pragma once

#include <vector>

#include "fusetrack/mask.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack {

struct Detection {
  int frame = 0;
  ObjectClass cls = ObjectClass::Car;
  double score = 1.0;
  BBox2 box;
};

// All detections of one frame, with masks parallel to the detection list.
struct FrameObjects {
  std::vector<Detection> detections;
  std::vector<Mask> masks;
};

struct TrackletEntry {
  int frame = 0;
  int det_index = -1;  // index into the frame's detection list; -1 for recovered frames
  Detection detection;
  Mask mask;
  bool recovered = false;
};

// Short contiguous track fragment with a provisional id. Frames are
// strictly increasing with no gaps, all entries share one class.
struct Tracklet {
  int id = -1;
  ObjectClass cls = ObjectClass::Car;
  std::vector<TrackletEntry> entries;

  int first_frame() const { return entries.front().frame; }
  int last_frame() const { return entries.back().frame; }
  int length() const { return static_cast<int>(entries.size()); }
};

}  // namespace fusetrack

#pragma once

// Deterministic synthetic-scene generator. Scenes are built from cuboid
// actors moving in the ground plane (velocities in the actor's heading
// frame, so a nonzero yaw rate traces an arc), optional articulated side
// slabs for pedestrians, static box occluders with an active frame window,
// and a camera following a constant-velocity trajectory. Rendering is
// analytic ray-box intersection; depth, flow, masks, detections and poses
// come out exactly in the pipeline's input formats, together with ground
// truth (tracks, per-frame centers, true per-step motions, visibility).

#include <cstdint>
#include <optional>
#include <vector>

#include "fusetrack/io.hpp"

namespace fusetrack {

struct MotionSegment {
  int first_frame = 0;
  int last_frame = 0;   // inclusive; velocity applies to steps f -> f+1
  double vx = 0;        // m/frame along the actor's heading
  double vz = 0;        // m/frame across the heading
  double yaw_rate = 0;  // rad/frame
};

struct DropoutSpec {
  int first = 0;
  int last = 0;       // inclusive frame window
  double prob = 1.0;  // chance the detection is suppressed, per frame
};

struct ActorSpec {
  ObjectClass cls = ObjectClass::Car;
  Vec3 dims = Vec3(3.9, 1.6, 1.5);  // (l, w, h)
  int spawn = 0;
  int despawn = 1 << 30;  // exclusive
  double x0 = 0, z0 = 10, yaw0 = 0;
  std::vector<MotionSegment> motion;
  double articulation = 0;       // side-slab swing amplitude, fraction of height
  int articulation_period = 8;   // frames per swing cycle
  double relief = 0;             // static depth texture, fraction of width
  std::vector<DropoutSpec> dropouts;
};

struct OccluderSpec {
  double x = 0, z = 5, yaw = 0;
  Vec3 dims = Vec3(2.5, 0.3, 2.0);
  int spawn = 0;
  int despawn = 1 << 30;
};

struct EgoSpec {
  Vec3 start = Vec3(0, -1.2, 0);  // camera 1.2 m above ground (Y down)
  double yaw0 = 0;
  double pitch = 0;  // fixed tilt about the camera X axis (negative looks down)
  double vx = 0, vz = 0, yaw_rate = 0;  // heading-frame, per frame
};

struct SceneScript {
  std::uint64_t seed = 1;
  int width = 128, height = 96;
  int frames = 60;
  double fx = 110, fy = 110, cx = 64, cy = 48;
  double baseline = 0.54;
  double depth_noise = 0;  // std dev, meters
  double flow_noise = 0;   // std dev, pixels
  int min_pixels = 8;      // silhouettes below this are not annotated
  EgoSpec ego;
  std::vector<ActorSpec> actors;
  std::vector<OccluderSpec> occluders;
};

SceneScript parse_scene_script(const std::string& text, const std::string& file_name_for_errors);
std::string scene_script_to_text(const SceneScript& script);

struct GtFrame {
  bool present = false;  // spawned and at least partly inside the frustum
  bool visible = false;  // enough un-occluded pixels to annotate
  Mask mask;             // visible silhouette (only when visible)
  BBox2 box;
  Vec3 center = Vec3::Zero();  // torso center, world frame
  double yaw = 0;
};

struct GtTrack {
  int id = 0;
  ObjectClass cls = ObjectClass::Car;
  std::vector<GtFrame> frames;          // one per scene frame
  std::vector<std::optional<Vec3>> xi;  // true rigid step f -> f+1 (torso)
};

struct SequenceBundle {
  SequenceData inputs;
  std::vector<GtTrack> gt;
};

SequenceBundle render_scene(const SceneScript& script);

// Ground truth as evaluation entries (visible frames only; no ignore
// regions).
std::vector<GtEntry> gt_entries(const SequenceBundle& bundle);

// Writes inputs in the sequence-directory layout plus gt_box.txt,
// gt_mask.txt and gt_states.txt alongside.
void write_bundle(const std::filesystem::path& dir, const SequenceBundle& bundle);

}  // namespace fusetrack

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fusetrack/metrics.hpp"
#include "fusetrack/online.hpp"
#include "fusetrack/pipeline.hpp"
#include "fusetrack/synth.hpp"
#include "oracles.hpp"

using namespace fusetrack;
namespace fs = std::filesystem;

namespace {

// One car crossing behind a pop-in wall: the classic occlusion split.
SceneScript occlusion_scene(std::uint64_t seed = 101) {
  SceneScript script;
  script.seed = seed;
  script.frames = 30;
  ActorSpec car;
  car.cls = ObjectClass::Car;
  car.dims = Vec3(3.6, 1.6, 1.5);
  car.x0 = 0.3;
  car.z0 = 9;
  car.motion = {{0, 29, 0.0, 0.22, 0.0}};
  script.actors.push_back(car);
  OccluderSpec wall;
  wall.x = 0.3;
  wall.z = 5;
  wall.dims = Vec3(7, 0.4, 3.5);
  wall.spawn = 12;
  wall.despawn = 20;
  script.occluders.push_back(wall);
  return script;
}

std::vector<PredEntry> to_predictions(const PipelineResult& result) {
  std::vector<PredEntry> preds;
  for (const TrackOutput& o : collect_outputs(result)) {
    PredEntry p;
    p.frame = o.frame;
    p.track_id = o.track_id;
    p.cls = o.cls;
    p.score = o.score;
    p.box = o.box;
    p.mask = *o.mask;
    preds.push_back(std::move(p));
  }
  return preds;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fusetrack_pipe_" + std::to_string(oracle::rng(std::random_device{}())()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("occlusion scene: full pipeline heals the identity split of 2D-only") {
  const SequenceBundle bundle = render_scene(occlusion_scene());
  const std::vector<GtEntry> gts = gt_entries(bundle);

  PipelineConfig full;
  const PipelineResult full_result = run_pipeline(bundle.inputs, full);
  PipelineConfig two_d;
  two_d.stage = PipelineStage::TwoDOnly;
  const PipelineResult two_d_result = run_pipeline(bundle.inputs, two_d);

  const ClassCounts full_counts =
      evaluate(gts, to_predictions(full_result), MatchMode::Mask).total();
  const ClassCounts two_d_counts =
      evaluate(gts, to_predictions(two_d_result), MatchMode::Mask).total();

  CHECK(two_d_counts.ids_star == 1);  // the occlusion splits the identity
  CHECK(full_counts.ids_star == 0);   // merged back into one track
  CHECK(full_result.tracks.size() == 1);
  CHECK(two_d_result.tracks.size() == 2);
}

TEST_CASE("2d-only output ignores every 3D-stage setting") {
  const SequenceBundle bundle = render_scene(occlusion_scene(7));
  PipelineConfig a;
  a.stage = PipelineStage::TwoDOnly;
  PipelineConfig b = a;
  b.max_gap = 3;
  b.tmr_residual = 1.5;
  const PipelineResult ra = run_pipeline(bundle.inputs, a);
  const PipelineResult rb = run_pipeline(bundle.inputs, b);
  const auto pa = to_predictions(ra);
  const auto pb = to_predictions(rb);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].track_id == pb[i].track_id);
    CHECK(pa[i].frame == pb[i].frame);
  }
}

TEST_CASE("empty sequence produces empty outputs and succeeds") {
  SceneScript script;
  script.seed = 5;
  script.frames = 4;  // no actors at all
  const SequenceBundle bundle = render_scene(script);
  PipelineConfig config;
  const PipelineResult result = run_pipeline(bundle.inputs, config);
  CHECK(result.tracklets.empty());
  CHECK(result.tracks.empty());
  TempDir tmp;
  write_track_outputs(tmp.path, result);
  CHECK(file_bytes(tmp.path / "tracks_box.txt").empty());
  CHECK(file_bytes(tmp.path / "tracks_mask.txt").empty());
}

TEST_CASE("running twice yields byte-identical output files") {
  const SequenceBundle bundle = render_scene(occlusion_scene(13));
  PipelineConfig config;
  TempDir t1, t2;
  write_track_outputs(t1.path, run_pipeline(bundle.inputs, config));
  write_track_outputs(t2.path, run_pipeline(bundle.inputs, config));
  CHECK(file_bytes(t1.path / "tracks_box.txt") == file_bytes(t2.path / "tracks_box.txt"));
  CHECK(file_bytes(t1.path / "tracks_mask.txt") == file_bytes(t2.path / "tracks_mask.txt"));
  CHECK(!file_bytes(t1.path / "tracks_box.txt").empty());
}

TEST_CASE("thread count does not change the output bytes") {
  const SequenceBundle bundle = render_scene(occlusion_scene(17));
  PipelineConfig one;
  one.threads = 1;
  PipelineConfig eight;
  eight.threads = 8;
  TempDir t1, t8;
  write_track_outputs(t1.path, run_pipeline(bundle.inputs, one));
  write_track_outputs(t8.path, run_pipeline(bundle.inputs, eight));
  CHECK(file_bytes(t1.path / "tracks_box.txt") == file_bytes(t8.path / "tracks_box.txt"));
  CHECK(file_bytes(t1.path / "tracks_mask.txt") == file_bytes(t8.path / "tracks_mask.txt"));
}

TEST_CASE("online mode matches offline tracks on the occlusion scene") {
  const SequenceBundle bundle = render_scene(occlusion_scene(19));
  PipelineConfig offline;
  const PipelineResult off = run_pipeline(bundle.inputs, offline);
  PipelineConfig online;
  online.online = true;
  const PipelineResult on = run_pipeline(bundle.inputs, online);
  REQUIRE(off.tracks.size() == on.tracks.size());
  // Same partition: compare the per-track frame sets of detected entries.
  for (std::size_t t = 0; t < off.tracks.size(); ++t) {
    std::set<int> a, b;
    for (const int ti : off.tracks[t].tracklet_indices)
      for (const auto& e : off.tracklets[ti].entries) a.insert(e.frame);
    for (const int ti : on.tracks[t].tracklet_indices)
      for (const auto& e : on.tracklets[ti].entries) b.insert(e.frame);
    CHECK(a == b);
  }
}

TEST_CASE("no-occlusion scene: online and offline agree exactly") {
  SceneScript script;
  script.seed = 23;
  script.frames = 20;
  ActorSpec car;
  car.x0 = -1.5;
  car.z0 = 10;
  car.motion = {{0, 19, 0.0, 0.15, 0.0}};
  script.actors.push_back(car);
  const SequenceBundle bundle = render_scene(script);
  PipelineConfig offline;
  PipelineConfig online;
  online.online = true;
  TempDir t1, t2;
  write_track_outputs(t1.path, run_pipeline(bundle.inputs, offline));
  write_track_outputs(t2.path, run_pipeline(bundle.inputs, online));
  CHECK(file_bytes(t1.path / "tracks_mask.txt") == file_bytes(t2.path / "tracks_mask.txt"));
}

TEST_CASE("online causality: truncated input reproduces the emitted prefix") {
  const SequenceBundle bundle = render_scene(occlusion_scene(29));
  OnlineTracker::Params params;
  auto run_until = [&](int frames) {
    OnlineTracker tracker(bundle.inputs, params, nullptr);
    for (int f = 0; f < frames; ++f) tracker.step(f);
    return tracker.emissions();
  };
  const auto all = run_until(30);
  for (const int t : {8, 15, 22}) {
    const auto prefix = run_until(t);
    std::size_t upto = 0;
    while (upto < all.size() && all[upto].frame < t) ++upto;
    REQUIRE(prefix.size() == upto);
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      CHECK(prefix[i].frame == all[i].frame);
      CHECK(prefix[i].provisional_id == all[i].provisional_id);
      CHECK(prefix[i].box.x1 == all[i].box.x1);
      CHECK(prefix[i].recovered == all[i].recovered);
    }
  }
}

TEST_CASE("out-of-order online frames are rejected") {
  const SequenceBundle bundle = render_scene(occlusion_scene(31));
  OnlineTracker::Params params;
  OnlineTracker tracker(bundle.inputs, params, nullptr);
  tracker.step(0);
  CHECK_THROWS(tracker.step(2));
}

TEST_CASE("dump-style trajectory line count equals total tracked states") {
  const SequenceBundle bundle = render_scene(occlusion_scene(37));
  PipelineConfig config;
  const PipelineResult result = run_pipeline(bundle.inputs, config);
  std::size_t states = 0;
  for (const Track& track : result.tracks)
    for (const int ti : track.tracklet_indices)
      for (const auto& s : result.fusions[ti].states)
        if (s.has_value()) ++states;
  // Every detected entry of this noiseless scene has a state.
  std::size_t entries = 0;
  for (const auto& t : result.tracklets) entries += t.entries.size();
  CHECK(states == entries);
}

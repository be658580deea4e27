#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fusetrack/io.hpp"
#include "fusetrack/pipeline.hpp"
#include "fusetrack/synth.hpp"
#include "oracles.hpp"

using namespace fusetrack;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fusetrack_test_" + std::to_string(oracle::rng(std::random_device{}())()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("depth raster round trip and validation") {
  TempDir tmp;
  DepthMap d;
  d.width = 3;
  d.height = 2;
  d.values = {1.0f, 2.5f, 0.0f, -1.0f, 7.25f, 3.0f};
  write_depth(tmp.path / "a.dpt", d);
  const DepthMap back = read_depth(tmp.path / "a.dpt");
  CHECK(back.width == 3);
  CHECK(back.height == 2);
  CHECK(back.values == d.values);
  CHECK(!back.valid_at(2, 0));  // zero depth is invalid
  CHECK(back.valid_at(1, 1));

  // Corrupted magic is rejected with the offending byte offset.
  std::ofstream bad(tmp.path / "bad.dpt", std::ios::binary);
  bad << "JUNKxxxxyyyy";
  bad.close();
  CHECK_THROWS_AS(read_depth(tmp.path / "bad.dpt"), InputError);
  try {
    read_depth(tmp.path / "bad.dpt");
  } catch (const InputError& ex) {
    CHECK(ex.file_name.find("bad.dpt") != std::string::npos);
  }
}

TEST_CASE("flow file round trip and sentinel check") {
  TempDir tmp;
  FlowField f = FlowField::zero(4, 3);
  f.set(1, 2, 0.5, -2.25);
  f.set(3, 0, -8, 1);
  write_flow(tmp.path / "a.flo", f);
  const FlowField back = read_flow(tmp.path / "a.flo");
  CHECK(back.data == f.data);

  std::ofstream bad(tmp.path / "bad.flo", std::ios::binary);
  const float wrong = 1234.5f;
  const std::int32_t wh = 1;
  bad.write(reinterpret_cast<const char*>(&wrong), 4);
  bad.write(reinterpret_cast<const char*>(&wh), 4);
  bad.write(reinterpret_cast<const char*>(&wh), 4);
  bad.write(reinterpret_cast<const char*>(&wrong), 4);
  bad.write(reinterpret_cast<const char*>(&wrong), 4);
  bad.close();
  CHECK_THROWS_AS(read_flow(tmp.path / "bad.flo"), InputError);
}

TEST_CASE("pose file round trip rejects non-orthonormal rotations") {
  TempDir tmp;
  std::vector<CameraPose> poses;
  for (int i = 0; i < 3; ++i) {
    Mat3 r;
    const double a = 0.2 * i;
    r << std::cos(a), 0, -std::sin(a), 0, 1, 0, std::sin(a), 0, std::cos(a);
    poses.push_back(CameraPose::from_rt(r, Vec3(i, -1.2, 2.0 * i)));
  }
  write_poses(tmp.path / "poses.txt", poses);
  const auto back = read_poses(tmp.path / "poses.txt");
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK((back[i].world_from_camera - poses[i].world_from_camera).norm() < 1e-12);

  std::ofstream bad(tmp.path / "bad.txt");
  bad << "2 0 0 0 0 1 0 0 0 0 1 0\n";  // scaled rotation
  bad.close();
  CHECK_THROWS_AS(read_poses(tmp.path / "bad.txt"), InputError);
}

TEST_CASE("calibration file round trip and validation") {
  TempDir tmp;
  StereoRig rig;
  rig.intrinsics = CameraIntrinsics{721.5377, 721.5377, 609.5593, 172.854};
  rig.baseline = 0.5327;
  write_calib(tmp.path / "calib.txt", rig);
  const StereoRig back = read_calib(tmp.path / "calib.txt");
  CHECK(back.intrinsics.fx == doctest::Approx(rig.intrinsics.fx));
  CHECK(back.baseline == doctest::Approx(rig.baseline));

  std::ofstream bad(tmp.path / "bad.txt");
  bad << "100 100 50 50\n0\n";  // zero baseline
  bad.close();
  CHECK_THROWS_AS(read_calib(tmp.path / "bad.txt"), InputError);
}

TEST_CASE("detection file round trip and field validation") {
  TempDir tmp;
  std::vector<Detection> dets = {
      {0, ObjectClass::Car, 0.98, {10.5, 20.25, 60, 45.75}},
      {2, ObjectClass::Pedestrian, 0.5, {1, 2, 3, 4}},
  };
  write_detections(tmp.path / "det.txt", dets);
  const auto back = read_detections(tmp.path / "det.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[0].box.x1 == doctest::Approx(10.5));
  CHECK(back[1].cls == ObjectClass::Pedestrian);

  std::ofstream bad(tmp.path / "bad.txt");
  bad << "0 1 0.9 50 20 10 45\n";  // x1 > x2
  bad.close();
  CHECK_THROWS_AS(read_detections(tmp.path / "bad.txt"), InputError);

  std::ofstream bad2(tmp.path / "bad2.txt");
  bad2 << "0 1 1.5 10 20 30 45\n";  // score out of range
  bad2.close();
  CHECK_THROWS_AS(read_detections(tmp.path / "bad2.txt"), InputError);
}

TEST_CASE("mask file round trip preserves runs") {
  TempDir tmp;
  std::vector<std::uint8_t> raster(6 * 4, 0);
  raster[7] = raster[8] = raster[13] = 1;
  const Mask m = Mask::from_raster(6, 4, raster);
  write_masks(tmp.path / "masks.txt", {{3, 0, m}});
  const auto back = read_masks(tmp.path / "masks.txt");
  REQUIRE(back.size() == 1);
  CHECK(back[0].frame == 3);
  CHECK(back[0].det_index == 0);
  CHECK(back[0].mask.runs == m.runs);

  std::ofstream bad(tmp.path / "bad.txt");
  bad << "0 0 4 6 3 10 10 10\n";  // runs sum to 30, not 24
  bad.close();
  CHECK_THROWS_AS(read_masks(tmp.path / "bad.txt"), InputError);
}

TEST_CASE("whole sequence round trip through a directory") {
  TempDir tmp;
  SceneScript script;
  script.seed = 11;
  script.frames = 6;
  ActorSpec car;
  car.x0 = 1;
  car.z0 = 10;
  car.motion = {{0, 5, 0.2, 0, 0}};
  script.actors.push_back(car);
  const SequenceBundle bundle = render_scene(script);
  write_sequence(tmp.path, bundle.inputs);
  const SequenceData back = load_sequence(tmp.path);
  CHECK(back.num_frames() == 6);
  CHECK(back.width == bundle.inputs.width);
  CHECK(back.flows.size() == 5);
  for (int f = 0; f < 6; ++f) {
    CHECK(back.depth[f].values == bundle.inputs.depth[f].values);
    REQUIRE(back.frames[f].detections.size() == bundle.inputs.frames[f].detections.size());
    for (std::size_t i = 0; i < back.frames[f].masks.size(); ++i)
      CHECK(back.frames[f].masks[i].runs == bundle.inputs.frames[f].masks[i].runs);
  }

  // A missing mask for a detection is a hard pairing error.
  std::ofstream truncate(tmp.path / "masks.txt", std::ios::trunc);
  truncate.close();
  if (!bundle.inputs.frames[0].detections.empty())
    CHECK_THROWS_AS(load_sequence(tmp.path), InputError);
}

TEST_CASE("rle converter round trips through the compressed form") {
  std::vector<std::uint8_t> raster(10 * 7, 0);
  auto g = oracle::rng(3);
  for (auto& px : raster) px = oracle::uniform(g, 0, 1) < 0.4 ? 1 : 0;
  const Mask m = Mask::from_raster(10, 7, raster);
  std::string plain = "2 5";
  plain += " " + std::to_string(m.height) + " " + std::to_string(m.width) + " " +
           std::to_string(m.runs.size());
  for (const auto r : m.runs) plain += " " + std::to_string(r);
  plain += "\n";

  const std::string compressed = convert_rle_file(plain, false, "plain");
  // KITTI-style line: frame id class h w rle-string.
  std::istringstream iss(compressed);
  int frame, id, cls, h, w;
  std::string rle;
  iss >> frame >> id >> cls >> h >> w >> rle;
  CHECK(frame == 2);
  CHECK(id == 5);
  CHECK(h == 7);
  CHECK(w == 10);
  CHECK(mask_from_coco_string(h, w, rle).runs == m.runs);

  const std::string back = convert_rle_file(compressed, true, "compressed");
  CHECK(back == plain);
}

TEST_CASE("config file parsing and validation") {
  TempDir tmp;
  std::ofstream cfg(tmp.path / "config.txt");
  cfg << "# thresholds\n"
      << "iou_min = 0.6\n"
      << "max_gap = 15\n"
      << "tmr_residual = 0.5\n"
      << "car_length = 4.2\n"
      << "fill = off\n"
      << "stage = 2d-only\n";
  cfg.close();
  const PipelineConfig config = PipelineConfig::from_file(tmp.path / "config.txt");
  CHECK(config.iou_min == doctest::Approx(0.6));
  CHECK(config.max_gap == 15);
  CHECK(config.tmr_residual == doctest::Approx(0.5));
  CHECK(config.recovery.car_dims.x() == doctest::Approx(4.2));
  CHECK(!config.fill);
  CHECK(config.stage == PipelineStage::TwoDOnly);
  config.validate();

  std::ofstream bad(tmp.path / "bad.txt");
  bad << "iou_min 0.6\n";
  bad.close();
  CHECK_THROWS(PipelineConfig::from_file(tmp.path / "bad.txt"));

  std::ofstream unknown(tmp.path / "unknown.txt");
  unknown << "wibble = 3\n";
  unknown.close();
  CHECK_THROWS(PipelineConfig::from_file(tmp.path / "unknown.txt"));

  PipelineConfig invalid;
  invalid.max_gap = -2;
  CHECK_THROWS_AS(invalid.validate(), std::invalid_argument);
}

TEST_CASE("prediction and gt files round trip in both modes") {
  TempDir tmp;
  std::vector<std::uint8_t> raster(8 * 6, 0);
  for (int i = 9; i < 20; ++i) raster[i] = 1;
  const Mask m = Mask::from_raster(8, 6, raster);

  PredEntry p;
  p.frame = 4;
  p.track_id = 2;
  p.cls = ObjectClass::Car;
  p.score = 0.75;
  p.box = BBox2{1, 1, 5, 3.5};
  p.mask = m;
  write_predictions_box(tmp.path / "pb.txt", {p});
  write_predictions_mask(tmp.path / "pm.txt", {p});
  const auto pb = read_predictions_box(tmp.path / "pb.txt");
  const auto pm = read_predictions_mask(tmp.path / "pm.txt");
  REQUIRE(pb.size() == 1);
  REQUIRE(pm.size() == 1);
  CHECK(pb[0].score == doctest::Approx(0.75));
  CHECK(pm[0].mask.runs == m.runs);

  GtEntry gt;
  gt.frame = 4;
  gt.gt_id = 9;
  gt.cls = ObjectClass::Pedestrian;
  gt.ignore = true;
  gt.box = BBox2{0, 0, 3, 3};
  gt.mask = m;
  write_gt_box(tmp.path / "gb.txt", {gt});
  write_gt_mask(tmp.path / "gm.txt", {gt});
  CHECK(read_gt_box(tmp.path / "gb.txt")[0].ignore);
  CHECK(read_gt_mask(tmp.path / "gm.txt")[0].mask.runs == m.runs);
}

TEST_CASE("provider file round trip") {
  TempDir tmp;
  std::vector<std::uint8_t> raster(8 * 6, 0);
  raster[10] = 1;
  const Mask m = Mask::from_raster(8, 6, raster);
  write_provider_file(tmp.path / "prov.txt", {{7, BBox2{2, 1, 4.5, 3}, m}});
  const auto back = read_provider_file(tmp.path / "prov.txt");
  REQUIRE(back.size() == 1);
  CHECK(back[0].frame == 7);
  CHECK(back[0].box.x2 == doctest::Approx(4.5));
  CHECK(back[0].mask.runs == m.runs);
}

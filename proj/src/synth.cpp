#include "fusetrack/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "fusetrack/util.hpp"

namespace fusetrack {

namespace {

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, -s, 0, 1, 0, s, 0, c;
  return r;
}

// Planar pose integrated with heading-frame velocities: position advances
// by R(yaw(f+1)) * v each step, matching a constant-turn trajectory.
struct PlanarPose {
  double x = 0, z = 0, yaw = 0;
};

PlanarPose integrate(const PlanarPose& start, int steps,
                     const std::vector<MotionSegment>& motion, int frame0) {
  PlanarPose p = start;
  for (int s = 0; s < steps; ++s) {
    const int f = frame0 + s;
    double vx = 0, vz = 0, w = 0;
    for (const MotionSegment& seg : motion) {
      if (f >= seg.first_frame && f <= seg.last_frame) {
        vx = seg.vx;
        vz = seg.vz;
        w = seg.yaw_rate;
        break;
      }
    }
    p.yaw += w;
    const double c = std::cos(p.yaw), sn = std::sin(p.yaw);
    p.x += c * vx - sn * vz;
    p.z += sn * vx + c * vz;
  }
  return p;
}

struct SolidBox {
  Vec3 center;
  double yaw;
  Vec3 half;     // (l/2, h/2, w/2) -> local (x, y, z)
  int actor;     // actor index, or -1 for occluders
};

// Slab test in the box's local frame; returns the entry parameter of the
// ray origin + s * dir, or nullopt.
std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const SolidBox& box) {
  const Mat3 r = rot_y(box.yaw);
  const Vec3 o = r.transpose() * (origin - box.center);
  const Vec3 d = r.transpose() * dir;
  double tmin = 1e-9, tmax = 1e30;
  const double lo[3] = {-box.half.x(), -box.half.y(), -box.half.z()};
  const double hi[3] = {box.half.x(), box.half.y(), box.half.z()};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double t1 = (lo[a] - o[a]) / d[a];
    double t2 = (hi[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::nullopt;
  }
  return tmin;
}

double gaussian(std::uint64_t seed, std::uint64_t key) {
  const double u1 = std::max(uniform01(seed, 2 * key), 1e-300);
  const double u2 = uniform01(seed, 2 * key + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

constexpr std::uint64_t kStreamDepth = 0, kStreamFlowU = 1, kStreamFlowV = 2, kStreamDropout = 3;

std::uint64_t noise_key(std::uint64_t stream, std::uint64_t frame, std::uint64_t index) {
  return hash_mix((stream << 56) ^ (frame << 32) ^ index);
}

struct ActorGeometry {
  PlanarPose pose;
  std::vector<SolidBox> boxes;  // torso first
  Vec3 torso_center;
};

ActorGeometry actor_geometry(const ActorSpec& spec, int actor_index, int frame) {
  ActorGeometry g;
  g.pose = integrate({spec.x0, spec.z0, spec.yaw0}, frame - spec.spawn, spec.motion, spec.spawn);
  const double l = spec.dims.x(), w = spec.dims.y(), h = spec.dims.z();
  g.torso_center = Vec3(g.pose.x, -0.5 * h, g.pose.z);
  const Mat3 r = rot_y(g.pose.yaw);
  if (spec.articulation <= 0 && spec.relief > 0) {
    // Rigid convex body built from vertical slabs on a symmetric
    // parabolic depth profile: the visible surface depth varies across
    // columns, so point medians move smoothly instead of snapping to one
    // flat plane's pixel grid, without biasing the lateral median.
    constexpr int kSlabs = 9;
    const double half_z = 0.5 * w * (1.0 - 0.5 * spec.relief);
    for (int i = 0; i < kSlabs; ++i) {
      const double x_i = ((i + 0.5) / kSlabs - 0.5) * l;
      const double t = 2.0 * x_i / l;  // -1..1 across the body
      const double z_i = 0.5 * spec.relief * w * (t * t - 0.5);
      g.boxes.push_back({g.torso_center + r * Vec3(x_i, 0, z_i), g.pose.yaw,
                         Vec3(0.5 * l / kSlabs, 0.5 * h, half_z), actor_index});
    }
    return g;
  }
  if (spec.articulation <= 0) {
    g.boxes.push_back({g.torso_center, g.pose.yaw, Vec3(0.5 * l, 0.5 * h, 0.5 * w), actor_index});
    return g;
  }
  // Rigid torso plus a limb slab attached flush at each end, swinging
  // anti-phase along the heading. Flush coplanar slabs keep ownership
  // changes at the limb/torso boundary in-plane, so the torso motion
  // stays recoverable from a rigid fit.
  const double ls = 0.35 * l;
  const double amp = spec.articulation * h;
  g.boxes.push_back({g.torso_center, g.pose.yaw, Vec3(0.5 * l, 0.5 * h, 0.5 * w), actor_index});
  const double phase = 2.0 * std::numbers::pi * (frame - spec.spawn) / spec.articulation_period;
  for (const double side : {-1.0, 1.0}) {
    const double swing = amp * std::sin(phase + (side < 0 ? 0.0 : std::numbers::pi));
    const Vec3 local(side * (0.5 * l + 0.5 * ls) + swing, 0.0, 0.0);
    g.boxes.push_back(
        {g.torso_center + r * local, g.pose.yaw, Vec3(0.5 * ls, 0.5 * h, 0.5 * w), actor_index});
  }
  return g;
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

CameraPose ego_pose(const EgoSpec& ego, int frame) {
  std::vector<MotionSegment> seg = {{0, 1 << 30, ego.vx, ego.vz, ego.yaw_rate}};
  const PlanarPose p = integrate({ego.start.x(), ego.start.z(), ego.yaw0}, frame, seg, 0);
  return CameraPose::from_rt(rot_y(p.yaw) * rot_x(ego.pitch), Vec3(p.x, ego.start.y(), p.z));
}

}  // namespace

SequenceBundle render_scene(const SceneScript& script) {
  SequenceBundle bundle;
  SequenceData& seq = bundle.inputs;
  seq.width = script.width;
  seq.height = script.height;
  seq.rig.intrinsics = CameraIntrinsics{script.fx, script.fy, script.cx, script.cy};
  seq.rig.baseline = script.baseline;
  const int F = script.frames;
  seq.frames.resize(F);

  for (int f = 0; f < F; ++f) seq.poses.push_back(ego_pose(script.ego, f));

  const int na = static_cast<int>(script.actors.size());
  bundle.gt.resize(na);
  for (int a = 0; a < na; ++a) {
    bundle.gt[a].id = a + 1;
    bundle.gt[a].cls = script.actors[a].cls;
    bundle.gt[a].frames.resize(F);
    bundle.gt[a].xi.resize(std::max(0, F - 1));
  }

  const std::size_t npx = static_cast<std::size_t>(script.width) * script.height;
  std::vector<double> depth_buf(npx);
  std::vector<int> owner_actor(npx);   // actor index, -2 none, -1 occluder
  std::vector<int> owner_box(npx);     // box index within the frame's solid list

  for (int f = 0; f < F; ++f) {
    // Solids active this frame.
    std::vector<SolidBox> solids;
    std::vector<ActorGeometry> geom(na);
    std::vector<bool> active(na, false);
    for (int a = 0; a < na; ++a) {
      const ActorSpec& spec = script.actors[a];
      if (f < spec.spawn || f >= spec.despawn) continue;
      active[a] = true;
      geom[a] = actor_geometry(spec, a, f);
      for (const SolidBox& b : geom[a].boxes) solids.push_back(b);
    }
    for (const OccluderSpec& occ : script.occluders) {
      if (f < occ.spawn || f >= occ.despawn) continue;
      solids.push_back({Vec3(occ.x, -0.5 * occ.dims.z(), occ.z), occ.yaw,
                        Vec3(0.5 * occ.dims.x(), 0.5 * occ.dims.z(), 0.5 * occ.dims.y()), -1});
    }

    const CameraPose& pose = seq.poses[f];
    const Mat3 cam_rot = pose.rotation();
    const Vec3 cam_pos = pose.translation();

    std::fill(depth_buf.begin(), depth_buf.end(), 0.0);
    std::fill(owner_actor.begin(), owner_actor.end(), -2);
    std::fill(owner_box.begin(), owner_box.end(), -1);

    for (int v = 0; v < script.height; ++v) {
      for (int u = 0; u < script.width; ++u) {
        const Vec3 dir_cam((u - script.cx) / script.fx, (v - script.cy) / script.fy, 1.0);
        const Vec3 dir = cam_rot * dir_cam;
        double best = 1e30;
        int best_solid = -1;
        for (int s = 0; s < static_cast<int>(solids.size()); ++s) {
          const auto hit = ray_box(cam_pos, dir, solids[s]);
          if (hit && *hit < best) {
            best = *hit;
            best_solid = s;
          }
        }
        if (best_solid < 0) continue;
        const std::size_t px = static_cast<std::size_t>(v) * script.width + u;
        depth_buf[px] = best;  // camera-frame z because dir_cam.z() == 1
        owner_actor[px] = solids[best_solid].actor;
        owner_box[px] = best_solid;
      }
    }

    // Exact flow of every visible surface pixel (computed before noise).
    if (f + 1 < F) {
      FlowField flow = FlowField::zero(script.width, script.height);
      const CameraPose& next_pose = seq.poses[f + 1];
      std::vector<ActorGeometry> next_geom(na);
      for (int a = 0; a < na; ++a)
        if (active[a]) next_geom[a] = actor_geometry(script.actors[a], a, f + 1);

      // Map each frame-f solid to its frame-f+1 pose (occluders static).
      for (int v = 0; v < script.height; ++v) {
        for (int u = 0; u < script.width; ++u) {
          const std::size_t px = static_cast<std::size_t>(v) * script.width + u;
          if (owner_actor[px] == -2) continue;
          const Vec3 dir_cam((u - script.cx) / script.fx, (v - script.cy) / script.fy, 1.0);
          const Vec3 x_now = cam_pos + cam_rot * dir_cam * depth_buf[px];
          Vec3 x_next = x_now;
          if (owner_actor[px] >= 0) {
            const int a = owner_actor[px];
            // Which of the actor's boxes owns the pixel?
            int local_box = owner_box[px];
            int base = 0;
            for (int aa = 0; aa < a; ++aa)
              if (active[aa]) base += static_cast<int>(geom[aa].boxes.size());
            local_box -= base;
            const SolidBox& now = geom[a].boxes[local_box];
            const SolidBox& next = next_geom[a].boxes[local_box];
            const Vec3 local = rot_y(now.yaw).transpose() * (x_now - now.center);
            x_next = next.center + rot_y(next.yaw) * local;
          }
          const auto proj = try_project(x_next, next_pose, seq.rig.intrinsics);
          if (proj) flow.set(u, v, proj->uv.x() - u, proj->uv.y() - v);
        }
      }
      if (script.flow_noise > 0) {
        for (std::size_t px = 0; px < npx; ++px) {
          flow.data[2 * px] += static_cast<float>(
              script.flow_noise * gaussian(script.seed, noise_key(kStreamFlowU, f, px)));
          flow.data[2 * px + 1] += static_cast<float>(
              script.flow_noise * gaussian(script.seed, noise_key(kStreamFlowV, f, px)));
        }
      }
      seq.flows.push_back(std::move(flow));
    }

    // Annotations per actor.
    for (int a = 0; a < na; ++a) {
      GtFrame& gf = bundle.gt[a].frames[f];
      if (!active[a]) continue;
      std::vector<std::uint8_t> raster(npx, 0);
      std::uint64_t count = 0;
      for (std::size_t px = 0; px < npx; ++px) {
        if (owner_actor[px] == a) {
          raster[px] = 1;
          ++count;
        }
      }
      gf.center = geom[a].torso_center;
      gf.yaw = geom[a].pose.yaw;
      // Present if the (unoccluded) silhouette reaches the image at all.
      bool in_frustum = count > 0;
      if (!in_frustum) {
        for (const SolidBox& b : geom[a].boxes) {
          const Mat3 r = rot_y(b.yaw);
          for (const double sx : {-1.0, 1.0})
            for (const double sy : {-1.0, 1.0})
              for (const double sz : {-1.0, 1.0}) {
                const Vec3 corner =
                    b.center + r * Vec3(sx * b.half.x(), sy * b.half.y(), sz * b.half.z());
                const auto proj = try_project(corner, pose, seq.rig.intrinsics);
                if (proj && proj->uv.x() >= 0 && proj->uv.x() < script.width &&
                    proj->uv.y() >= 0 && proj->uv.y() < script.height) {
                  in_frustum = true;
                  break;
                }
              }
          if (in_frustum) break;
        }
      }
      gf.present = in_frustum;
      if (count >= static_cast<std::uint64_t>(script.min_pixels)) {
        gf.visible = true;
        gf.mask = Mask::from_raster(script.width, script.height, raster);
        gf.box = *gf.mask.bbox();
      }
    }

    // True per-step rigid motion of each torso.
    if (f + 1 < F) {
      for (int a = 0; a < na; ++a) {
        const ActorSpec& spec = script.actors[a];
        if (!active[a] || f + 1 >= spec.despawn) continue;
        const ActorGeometry now = geom[a];
        const ActorGeometry next = actor_geometry(spec, a, f + 1);
        const double w = next.pose.yaw - now.pose.yaw;
        const double c = std::cos(w), s = std::sin(w);
        const Vec2 cn(now.pose.x, now.pose.z);
        const Vec2 cx(next.pose.x, next.pose.z);
        bundle.gt[a].xi[f] =
            Vec3(cx.x() - (c * cn.x() - s * cn.y()), cx.y() - (s * cn.x() + c * cn.y()), w);
      }
    }

    // Depth noise (valid pixels only), then detections from the exact
    // masks.
    DepthMap depth;
    depth.width = script.width;
    depth.height = script.height;
    depth.values.resize(npx);
    for (std::size_t px = 0; px < npx; ++px) {
      double d = depth_buf[px];
      if (d > 0 && script.depth_noise > 0) {
        d += script.depth_noise * gaussian(script.seed, noise_key(kStreamDepth, f, px));
        d = std::max(d, 0.01);
      }
      depth.values[px] = static_cast<float>(d);
    }
    seq.depth.push_back(std::move(depth));

    for (int a = 0; a < na; ++a) {
      const GtFrame& gf = bundle.gt[a].frames[f];
      if (!gf.visible) continue;
      bool dropped = false;
      for (const DropoutSpec& dr : script.actors[a].dropouts) {
        if (f >= dr.first && f <= dr.last &&
            uniform01(script.seed, noise_key(kStreamDropout, f, a)) < dr.prob) {
          dropped = true;
          break;
        }
      }
      if (dropped) continue;
      Detection det;
      det.frame = f;
      det.cls = script.actors[a].cls;
      det.score = 1.0;
      det.box = gf.box;
      seq.frames[f].detections.push_back(det);
      seq.frames[f].masks.push_back(gf.mask);
    }
  }

  return bundle;
}

std::vector<GtEntry> gt_entries(const SequenceBundle& bundle) {
  std::vector<GtEntry> out;
  for (const GtTrack& track : bundle.gt) {
    for (int f = 0; f < static_cast<int>(track.frames.size()); ++f) {
      const GtFrame& gf = track.frames[f];
      if (!gf.visible) continue;
      GtEntry e;
      e.frame = f;
      e.gt_id = track.id;
      e.cls = track.cls;
      e.ignore = false;
      e.box = gf.box;
      e.mask = gf.mask;
      out.push_back(std::move(e));
    }
  }
  return out;
}

void write_bundle(const std::filesystem::path& dir, const SequenceBundle& bundle) {
  write_sequence(dir, bundle.inputs);
  const std::vector<GtEntry> gts = gt_entries(bundle);
  write_gt_box(dir / "gt_box.txt", gts);
  write_gt_mask(dir / "gt_mask.txt", gts);

  std::string states;
  char buf[160];
  for (const GtTrack& track : bundle.gt) {
    for (int f = 0; f < static_cast<int>(track.frames.size()); ++f) {
      const GtFrame& gf = track.frames[f];
      if (!gf.present) continue;
      std::snprintf(buf, sizeof buf, "%d %d %d %.6f %.6f %.6f\n", f, track.id, gf.visible ? 1 : 0,
                    gf.center.x(), gf.center.y(), gf.center.z());
      states += buf;
    }
  }
  std::ofstream out(dir / "gt_states.txt", std::ios::binary | std::ios::trunc);
  out << states;
}

namespace {

// Script stanzas:
//   scene ... end    seed / size W H / frames N / calib fx fy cx cy baseline
//                    / depth_noise S / flow_noise S / min_pixels N
//   ego ... end      start X Y Z YAW / velocity VX VZ YAWRATE
//   actor ... end    class car|pedestrian / dims L W H / frames SPAWN DESPAWN
//                    / start X Z YAW / motion F0 F1 VX VZ YAWRATE
//                    / articulation A / dropout F0 F1 PROB
//   occluder ... end pose X Z YAW / dims L W H / frames SPAWN DESPAWN
struct ScriptReader {
  const std::string& text;
  std::string file;
  std::size_t pos = 0;

  void skip_ws_and_comments() {
    while (pos < text.size()) {
      if (text[pos] == '#') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(text[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  }
  bool at_end() {
    skip_ws_and_comments();
    return pos >= text.size();
  }
  std::string word() {
    skip_ws_and_comments();
    const std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (start == pos) throw InputError(file, pos, "expected token");
    return text.substr(start, pos - start);
  }
  double number() {
    const std::size_t at = pos;
    const std::string w = word();
    try {
      return std::stod(w);
    } catch (...) {
      throw InputError(file, at, "expected number, got '" + w + "'");
    }
  }
  int integer() { return static_cast<int>(number()); }
};

}  // namespace

SceneScript parse_scene_script(const std::string& text, const std::string& file_name_for_errors) {
  SceneScript script;
  ScriptReader r{text, file_name_for_errors};
  while (!r.at_end()) {
    const std::string stanza = r.word();
    if (stanza == "scene") {
      for (std::string key = r.word(); key != "end"; key = r.word()) {
        if (key == "seed") script.seed = static_cast<std::uint64_t>(r.number());
        else if (key == "size") { script.width = r.integer(); script.height = r.integer(); }
        else if (key == "frames") script.frames = r.integer();
        else if (key == "calib") {
          script.fx = r.number(); script.fy = r.number();
          script.cx = r.number(); script.cy = r.number();
          script.baseline = r.number();
        }
        else if (key == "depth_noise") script.depth_noise = r.number();
        else if (key == "flow_noise") script.flow_noise = r.number();
        else if (key == "min_pixels") script.min_pixels = r.integer();
        else throw InputError(r.file, r.pos, "unknown scene key '" + key + "'");
      }
    } else if (stanza == "ego") {
      for (std::string key = r.word(); key != "end"; key = r.word()) {
        if (key == "start") {
          script.ego.start.x() = r.number();
          script.ego.start.y() = r.number();
          script.ego.start.z() = r.number();
          script.ego.yaw0 = r.number();
        } else if (key == "velocity") {
          script.ego.vx = r.number();
          script.ego.vz = r.number();
          script.ego.yaw_rate = r.number();
        } else if (key == "pitch") {
          script.ego.pitch = r.number();
        } else {
          throw InputError(r.file, r.pos, "unknown ego key '" + key + "'");
        }
      }
    } else if (stanza == "actor") {
      ActorSpec actor;
      for (std::string key = r.word(); key != "end"; key = r.word()) {
        if (key == "class") {
          const std::string c = r.word();
          if (c == "car") actor.cls = ObjectClass::Car;
          else if (c == "pedestrian") actor.cls = ObjectClass::Pedestrian;
          else throw InputError(r.file, r.pos, "unknown class '" + c + "'");
        } else if (key == "dims") {
          actor.dims.x() = r.number();
          actor.dims.y() = r.number();
          actor.dims.z() = r.number();
        } else if (key == "frames") {
          actor.spawn = r.integer();
          actor.despawn = r.integer();
        } else if (key == "start") {
          actor.x0 = r.number();
          actor.z0 = r.number();
          actor.yaw0 = r.number();
        } else if (key == "motion") {
          MotionSegment seg;
          seg.first_frame = r.integer();
          seg.last_frame = r.integer();
          seg.vx = r.number();
          seg.vz = r.number();
          seg.yaw_rate = r.number();
          actor.motion.push_back(seg);
        } else if (key == "articulation") {
          actor.articulation = r.number();
        } else if (key == "articulation_period") {
          actor.articulation_period = r.integer();
        } else if (key == "relief") {
          actor.relief = r.number();
        } else if (key == "dropout") {
          DropoutSpec d;
          d.first = r.integer();
          d.last = r.integer();
          d.prob = r.number();
          actor.dropouts.push_back(d);
        } else {
          throw InputError(r.file, r.pos, "unknown actor key '" + key + "'");
        }
      }
      script.actors.push_back(std::move(actor));
    } else if (stanza == "occluder") {
      OccluderSpec occ;
      for (std::string key = r.word(); key != "end"; key = r.word()) {
        if (key == "pose") {
          occ.x = r.number();
          occ.z = r.number();
          occ.yaw = r.number();
        } else if (key == "dims") {
          occ.dims.x() = r.number();
          occ.dims.y() = r.number();
          occ.dims.z() = r.number();
        } else if (key == "frames") {
          occ.spawn = r.integer();
          occ.despawn = r.integer();
        } else {
          throw InputError(r.file, r.pos, "unknown occluder key '" + key + "'");
        }
      }
      script.occluders.push_back(occ);
    } else {
      throw InputError(r.file, r.pos, "unknown stanza '" + stanza + "'");
    }
  }
  return script;
}

std::string scene_script_to_text(const SceneScript& s) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "scene\n  seed %llu\n  size %d %d\n  frames %d\n  calib %g %g %g %g %g\n"
                "  depth_noise %g\n  flow_noise %g\n  min_pixels %d\nend\n\n",
                static_cast<unsigned long long>(s.seed), s.width, s.height, s.frames, s.fx, s.fy,
                s.cx, s.cy, s.baseline, s.depth_noise, s.flow_noise, s.min_pixels);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "ego\n  start %g %g %g %g\n  pitch %g\n  velocity %g %g %g\nend\n\n",
                s.ego.start.x(), s.ego.start.y(), s.ego.start.z(), s.ego.yaw0, s.ego.pitch,
                s.ego.vx, s.ego.vz, s.ego.yaw_rate);
  out += buf;
  for (const ActorSpec& a : s.actors) {
    out += "actor\n";
    std::snprintf(buf, sizeof buf, "  class %s\n  dims %g %g %g\n  frames %d %d\n  start %g %g %g\n",
                  a.cls == ObjectClass::Car ? "car" : "pedestrian", a.dims.x(), a.dims.y(),
                  a.dims.z(), a.spawn, a.despawn, a.x0, a.z0, a.yaw0);
    out += buf;
    for (const MotionSegment& m : a.motion) {
      std::snprintf(buf, sizeof buf, "  motion %d %d %g %g %g\n", m.first_frame, m.last_frame,
                    m.vx, m.vz, m.yaw_rate);
      out += buf;
    }
    if (a.articulation > 0) {
      std::snprintf(buf, sizeof buf, "  articulation %g\n  articulation_period %d\n",
                    a.articulation, a.articulation_period);
      out += buf;
    }
    if (a.relief > 0) {
      std::snprintf(buf, sizeof buf, "  relief %g\n", a.relief);
      out += buf;
    }
    for (const DropoutSpec& d : a.dropouts) {
      std::snprintf(buf, sizeof buf, "  dropout %d %d %g\n", d.first, d.last, d.prob);
      out += buf;
    }
    out += "end\n\n";
  }
  for (const OccluderSpec& o : s.occluders) {
    std::snprintf(buf, sizeof buf,
                  "occluder\n  pose %g %g %g\n  dims %g %g %g\n  frames %d %d\nend\n\n", o.x, o.z,
                  o.yaw, o.dims.x(), o.dims.y(), o.dims.z(), o.spawn, o.despawn);
    out += buf;
  }
  return out;
}

}  // namespace fusetrack

#include "fusetrack/io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "binary rasters are little-endian; big-endian hosts are unsupported");

namespace fusetrack {

namespace {

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError(file.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& file, const std::string& data) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(file.string(), 0, "cannot open file for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw InputError(file.string(), 0, "write failed");
}

// Whitespace-separated token scanner that tracks byte offsets for error
// reporting.
class TokenReader {
 public:
  TokenReader(const std::string& text, std::string file) : text_(text), file_(std::move(file)) {}

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  // Consumes to end of current line; true if any non-ws token remains on it.
  void expect_line_end() {
    while (pos_ < text_.size() && text_[pos_] != '\n') {
      if (!std::isspace(static_cast<unsigned char>(text_[pos_])))
        throw InputError(file_, pos_, "unexpected trailing token");
      ++pos_;
    }
    if (pos_ < text_.size()) ++pos_;
  }

  bool line_has_more() {
    std::size_t p = pos_;
    while (p < text_.size() && text_[p] != '\n') {
      if (!std::isspace(static_cast<unsigned char>(text_[p]))) return true;
      ++p;
    }
    return false;
  }

  double number() {
    skip_ws();
    if (pos_ >= text_.size()) throw InputError(file_, pos_, "expected number, found end of file");
    double value = 0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc())
      throw InputError(file_, pos_, "expected number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  long integer() {
    skip_ws();
    if (pos_ >= text_.size()) throw InputError(file_, pos_, "expected integer, found end of file");
    long value = 0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) throw InputError(file_, pos_, "expected integer");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  std::string word() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw InputError(file_, pos_, "expected token");
    return text_.substr(start, pos_ - start);
  }

  std::size_t offset() const { return pos_; }
  const std::string& file() const { return file_; }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  const std::string& text_;
  std::string file_;
  std::size_t pos_ = 0;
};

Mask read_mask_tokens(TokenReader& r) {
  const long h = r.integer();
  const long w = r.integer();
  const long n = r.integer();
  if (h <= 0 || w <= 0 || n < 1) throw InputError(r.file(), r.offset(), "bad mask header");
  Mask m;
  m.width = static_cast<int>(w);
  m.height = static_cast<int>(h);
  m.runs.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const long run = r.integer();
    if (run < 0) throw InputError(r.file(), r.offset(), "negative run length");
    m.runs.push_back(static_cast<std::uint32_t>(run));
  }
  if (!m.consistent())
    throw InputError(r.file(), r.offset(), "mask runs do not sum to width*height");
  return m;
}

void append_mask_tokens(std::string& out, const Mask& m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, " %d %d %zu", m.height, m.width, m.runs.size());
  out += buf;
  for (const std::uint32_t run : m.runs) {
    std::snprintf(buf, sizeof buf, " %u", run);
    out += buf;
  }
}

std::string format_double(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

DepthMap read_depth(const std::filesystem::path& file) {
  const std::string data = read_file(file);
  if (data.size() < 12 || data.compare(0, 4, "DPT1") != 0)
    throw InputError(file.string(), 0, "bad depth magic (want DPT1)");
  std::uint32_t w = 0, h = 0;
  std::memcpy(&w, data.data() + 4, 4);
  std::memcpy(&h, data.data() + 8, 4);
  const std::uint64_t n = static_cast<std::uint64_t>(w) * h;
  if (data.size() != 12 + 4 * n)
    throw InputError(file.string(), data.size(), "depth payload size mismatch");
  DepthMap d;
  d.width = static_cast<int>(w);
  d.height = static_cast<int>(h);
  d.values.resize(n);
  std::memcpy(d.values.data(), data.data() + 12, 4 * n);
  for (std::uint64_t i = 0; i < n; ++i)
    if (!std::isfinite(d.values[i]))
      throw InputError(file.string(), 12 + 4 * i, "non-finite depth value");
  return d;
}

void write_depth(const std::filesystem::path& file, const DepthMap& d) {
  std::string out;
  out.reserve(12 + 4 * d.values.size());
  out += "DPT1";
  const std::uint32_t w = static_cast<std::uint32_t>(d.width);
  const std::uint32_t h = static_cast<std::uint32_t>(d.height);
  out.append(reinterpret_cast<const char*>(&w), 4);
  out.append(reinterpret_cast<const char*>(&h), 4);
  out.append(reinterpret_cast<const char*>(d.values.data()), 4 * d.values.size());
  write_file(file, out);
}

FlowField read_flow(const std::filesystem::path& file) {
  const std::string data = read_file(file);
  if (data.size() < 12) throw InputError(file.string(), data.size(), "flow file too short");
  float tag = 0;
  std::int32_t w = 0, h = 0;
  std::memcpy(&tag, data.data(), 4);
  std::memcpy(&w, data.data() + 4, 4);
  std::memcpy(&h, data.data() + 8, 4);
  if (tag != 202021.25f) throw InputError(file.string(), 0, "bad flow sentinel");
  if (w <= 0 || h <= 0) throw InputError(file.string(), 4, "bad flow dimensions");
  const std::uint64_t n = 2ull * w * h;
  if (data.size() != 12 + 4 * n)
    throw InputError(file.string(), data.size(), "flow payload size mismatch");
  FlowField f;
  f.width = w;
  f.height = h;
  f.data.resize(n);
  std::memcpy(f.data.data(), data.data() + 12, 4 * n);
  for (std::uint64_t i = 0; i < n; ++i)
    if (!std::isfinite(f.data[i]))
      throw InputError(file.string(), 12 + 4 * i, "non-finite flow value");
  return f;
}

void write_flow(const std::filesystem::path& file, const FlowField& f) {
  std::string out;
  out.reserve(12 + 4 * f.data.size());
  const float tag = 202021.25f;
  const std::int32_t w = f.width, h = f.height;
  out.append(reinterpret_cast<const char*>(&tag), 4);
  out.append(reinterpret_cast<const char*>(&w), 4);
  out.append(reinterpret_cast<const char*>(&h), 4);
  out.append(reinterpret_cast<const char*>(f.data.data()), 4 * f.data.size());
  write_file(file, out);
}

std::vector<CameraPose> read_poses(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  std::vector<CameraPose> poses;
  while (!r.at_end()) {
    const std::size_t line_offset = r.offset();
    Mat4 t = Mat4::Identity();
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 4; ++col) t(row, col) = r.number();
    CameraPose pose;
    pose.world_from_camera = t;
    if (!pose.rotation_orthonormal())
      throw InputError(file.string(), line_offset, "pose rotation not orthonormal");
    poses.push_back(pose);
  }
  return poses;
}

void write_poses(const std::filesystem::path& file, const std::vector<CameraPose>& poses) {
  std::string out;
  char buf[64];
  for (const CameraPose& p : poses) {
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 4; ++col) {
        std::snprintf(buf, sizeof buf, "%.17g", p.world_from_camera(row, col));
        if (row != 0 || col != 0) out += ' ';
        out += buf;
      }
    }
    out += '\n';
  }
  write_file(file, out);
}

StereoRig read_calib(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  StereoRig rig;
  rig.intrinsics.fx = r.number();
  rig.intrinsics.fy = r.number();
  rig.intrinsics.cx = r.number();
  rig.intrinsics.cy = r.number();
  rig.baseline = r.number();
  if (!rig.valid())
    throw InputError(file.string(), 0, "invalid calibration (need fx, fy, baseline > 0)");
  return rig;
}

void write_calib(const std::filesystem::path& file, const StereoRig& rig) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n%.17g\n", rig.intrinsics.fx,
                rig.intrinsics.fy, rig.intrinsics.cx, rig.intrinsics.cy, rig.baseline);
  out = buf;
  write_file(file, out);
}

std::vector<Detection> read_detections(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  std::vector<Detection> dets;
  while (!r.at_end()) {
    const std::size_t off = r.offset();
    Detection d;
    d.frame = static_cast<int>(r.integer());
    d.cls = object_class_from_id(static_cast<int>(r.integer()));
    d.score = r.number();
    d.box.x1 = r.number();
    d.box.y1 = r.number();
    d.box.x2 = r.number();
    d.box.y2 = r.number();
    if (d.frame < 0) throw InputError(file.string(), off, "negative frame index");
    if (!(d.score >= 0.0 && d.score <= 1.0))
      throw InputError(file.string(), off, "score out of [0,1]");
    if (!d.box.valid()) throw InputError(file.string(), off, "degenerate box (x1<x2, y1<y2)");
    dets.push_back(d);
  }
  return dets;
}

void write_detections(const std::filesystem::path& file, const std::vector<Detection>& dets) {
  std::string out;
  for (const Detection& d : dets) {
    out += std::to_string(d.frame) + ' ' + std::to_string(class_id(d.cls)) + ' ' +
           format_double(d.score) + ' ' + format_double(d.box.x1) + ' ' + format_double(d.box.y1) +
           ' ' + format_double(d.box.x2) + ' ' + format_double(d.box.y2) + '\n';
  }
  write_file(file, out);
}

std::vector<MaskRecord> read_masks(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  std::vector<MaskRecord> records;
  while (!r.at_end()) {
    MaskRecord rec;
    rec.frame = static_cast<int>(r.integer());
    rec.det_index = static_cast<int>(r.integer());
    rec.mask = read_mask_tokens(r);
    records.push_back(std::move(rec));
  }
  return records;
}

void write_masks(const std::filesystem::path& file, const std::vector<MaskRecord>& masks) {
  std::string out;
  for (const MaskRecord& rec : masks) {
    out += std::to_string(rec.frame) + ' ' + std::to_string(rec.det_index);
    append_mask_tokens(out, rec.mask);
    out += '\n';
  }
  write_file(file, out);
}

std::vector<PredEntry> read_predictions_box(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  std::vector<PredEntry> preds;
  while (!r.at_end()) {
    PredEntry p;
    p.frame = static_cast<int>(r.integer());
    p.track_id = static_cast<int>(r.integer());
    p.cls = object_class_from_id(static_cast<int>(r.integer()));
    p.score = r.number();
    p.box.x1 = r.number();
    p.box.y1 = r.number();
    p.box.x2 = r.number();
    p.box.y2 = r.number();
    preds.push_back(std::move(p));
  }
  return preds;
}

std::vector<PredEntry> read_predictions_mask(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  std::vector<PredEntry> preds;
  while (!r.at_end()) {
    PredEntry p;
    p.frame = static_cast<int>(r.integer());
    p.track_id = static_cast<int>(r.integer());
    p.cls = object_class_from_id(static_cast<int>(r.integer()));
    p.mask = read_mask_tokens(r);
    if (const auto bb = p.mask.bbox()) p.box = *bb;
    preds.push_back(std::move(p));
  }
  return preds;
}

void write_predictions_box(const std::filesystem::path& file,
                           const std::vector<PredEntry>& preds) {
  std::string out;
  for (const PredEntry& p : preds) {
    out += std::to_string(p.frame) + ' ' + std::to_string(p.track_id) + ' ' +
           std::to_string(class_id(p.cls)) + ' ' + format_double(p.score) + ' ' +
           format_double(p.box.x1) + ' ' + format_double(p.box.y1) + ' ' +
           format_double(p.box.x2) + ' ' + format_double(p.box.y2) + '\n';
  }
  write_file(file, out);
}

void write_predictions_mask(const std::filesystem::path& file,
                            const std::vector<PredEntry>& preds) {
  std::string out;
  for (const PredEntry& p : preds) {
    out += std::to_string(p.frame) + ' ' + std::to_string(p.track_id) + ' ' +
           std::to_string(class_id(p.cls));
    append_mask_tokens(out, p.mask);
    out += '\n';
  }
  write_file(file, out);
}

std::vector<GtEntry> read_gt_box(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  std::vector<GtEntry> gts;
  while (!r.at_end()) {
    GtEntry g;
    g.frame = static_cast<int>(r.integer());
    g.gt_id = static_cast<int>(r.integer());
    g.cls = object_class_from_id(static_cast<int>(r.integer()));
    g.ignore = r.integer() != 0;
    g.box.x1 = r.number();
    g.box.y1 = r.number();
    g.box.x2 = r.number();
    g.box.y2 = r.number();
    gts.push_back(std::move(g));
  }
  return gts;
}

std::vector<GtEntry> read_gt_mask(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  std::vector<GtEntry> gts;
  while (!r.at_end()) {
    GtEntry g;
    g.frame = static_cast<int>(r.integer());
    g.gt_id = static_cast<int>(r.integer());
    g.cls = object_class_from_id(static_cast<int>(r.integer()));
    g.ignore = r.integer() != 0;
    g.mask = read_mask_tokens(r);
    if (const auto bb = g.mask.bbox()) g.box = *bb;
    gts.push_back(std::move(g));
  }
  return gts;
}

void write_gt_box(const std::filesystem::path& file, const std::vector<GtEntry>& gts) {
  std::string out;
  for (const GtEntry& g : gts) {
    out += std::to_string(g.frame) + ' ' + std::to_string(g.gt_id) + ' ' +
           std::to_string(class_id(g.cls)) + ' ' + (g.ignore ? "1" : "0") + ' ' +
           format_double(g.box.x1) + ' ' + format_double(g.box.y1) + ' ' +
           format_double(g.box.x2) + ' ' + format_double(g.box.y2) + '\n';
  }
  write_file(file, out);
}

void write_gt_mask(const std::filesystem::path& file, const std::vector<GtEntry>& gts) {
  std::string out;
  for (const GtEntry& g : gts) {
    out += std::to_string(g.frame) + ' ' + std::to_string(g.gt_id) + ' ' +
           std::to_string(class_id(g.cls)) + ' ' + (g.ignore ? "1" : "0");
    append_mask_tokens(out, g.mask);
    out += '\n';
  }
  write_file(file, out);
}

namespace {

std::string frame_name(int frame, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d%s", frame, ext);
  return buf;
}

}  // namespace

SequenceData load_sequence(const std::filesystem::path& dir) {
  SequenceData seq;
  seq.rig = read_calib(dir / "calib.txt");
  seq.poses = read_poses(dir / "poses.txt");
  const int num_frames = static_cast<int>(seq.poses.size());
  if (num_frames == 0) throw InputError((dir / "poses.txt").string(), 0, "no frames");

  seq.depth.reserve(num_frames);
  for (int f = 0; f < num_frames; ++f)
    seq.depth.push_back(read_depth(dir / "depth" / frame_name(f, ".dpt")));
  seq.width = seq.depth[0].width;
  seq.height = seq.depth[0].height;
  for (int f = 0; f < num_frames; ++f)
    if (seq.depth[f].width != seq.width || seq.depth[f].height != seq.height)
      throw InputError((dir / "depth" / frame_name(f, ".dpt")).string(), 4,
                       "depth dimensions differ between frames");

  seq.flows.reserve(std::max(0, num_frames - 1));
  for (int f = 0; f + 1 < num_frames; ++f) {
    seq.flows.push_back(read_flow(dir / "flow" / frame_name(f, ".flo")));
    if (seq.flows.back().width != seq.width || seq.flows.back().height != seq.height)
      throw InputError((dir / "flow" / frame_name(f, ".flo")).string(), 4,
                       "flow dimensions differ from depth");
  }

  const std::vector<Detection> dets = read_detections(dir / "detections.txt");
  const std::vector<MaskRecord> masks = read_masks(dir / "masks.txt");
  seq.frames.resize(num_frames);
  for (const Detection& d : dets) {
    if (d.frame >= num_frames)
      throw InputError((dir / "detections.txt").string(), 0,
                       "detection frame " + std::to_string(d.frame) + " out of range");
    seq.frames[d.frame].detections.push_back(d);
    seq.frames[d.frame].masks.emplace_back();  // paired below
  }
  std::map<std::pair<int, int>, const Mask*> mask_by_key;
  for (const MaskRecord& m : masks) {
    if (m.mask.width != seq.width || m.mask.height != seq.height)
      throw InputError((dir / "masks.txt").string(), 0, "mask dimensions differ from depth");
    mask_by_key[{m.frame, m.det_index}] = &m.mask;
  }
  for (int f = 0; f < num_frames; ++f) {
    for (int i = 0; i < static_cast<int>(seq.frames[f].detections.size()); ++i) {
      const auto it = mask_by_key.find({f, i});
      if (it == mask_by_key.end())
        throw InputError((dir / "masks.txt").string(), 0,
                         "no mask for detection " + std::to_string(i) + " of frame " +
                             std::to_string(f));
      seq.frames[f].masks[i] = *it->second;
    }
  }
  return seq;
}

void write_sequence(const std::filesystem::path& dir, const SequenceData& seq) {
  std::filesystem::create_directories(dir / "depth");
  std::filesystem::create_directories(dir / "flow");
  write_calib(dir / "calib.txt", seq.rig);
  write_poses(dir / "poses.txt", seq.poses);
  for (int f = 0; f < static_cast<int>(seq.depth.size()); ++f)
    write_depth(dir / "depth" / frame_name(f, ".dpt"), seq.depth[f]);
  for (int f = 0; f < static_cast<int>(seq.flows.size()); ++f)
    write_flow(dir / "flow" / frame_name(f, ".flo"), seq.flows[f]);

  std::vector<Detection> dets;
  std::vector<MaskRecord> masks;
  for (int f = 0; f < static_cast<int>(seq.frames.size()); ++f) {
    for (int i = 0; i < static_cast<int>(seq.frames[f].detections.size()); ++i) {
      dets.push_back(seq.frames[f].detections[i]);
      masks.push_back({f, i, seq.frames[f].masks[i]});
    }
  }
  write_detections(dir / "detections.txt", dets);
  write_masks(dir / "masks.txt", masks);
}

std::vector<ProviderEntry> read_provider_file(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  TokenReader r(text, file.string());
  std::vector<ProviderEntry> entries;
  while (!r.at_end()) {
    ProviderEntry e;
    e.frame = static_cast<int>(r.integer());
    e.box.x1 = r.number();
    e.box.y1 = r.number();
    e.box.x2 = r.number();
    e.box.y2 = r.number();
    e.mask = read_mask_tokens(r);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_provider_file(const std::filesystem::path& file,
                         const std::vector<ProviderEntry>& entries) {
  std::string out;
  for (const ProviderEntry& e : entries) {
    out += std::to_string(e.frame) + ' ' + format_double(e.box.x1) + ' ' +
           format_double(e.box.y1) + ' ' + format_double(e.box.x2) + ' ' +
           format_double(e.box.y2);
    append_mask_tokens(out, e.mask);
    out += '\n';
  }
  write_file(file, out);
}

std::string convert_rle_file(const std::string& text, bool compressed_to_plain,
                             const std::string& file_name_for_errors) {
  TokenReader r(text, file_name_for_errors);
  std::string out;
  if (compressed_to_plain) {
    while (!r.at_end()) {
      const long frame = r.integer();
      const long id = r.integer();
      const long cls = r.integer();
      const long h = r.integer();
      const long w = r.integer();
      const std::string rle = r.word();
      (void)cls;
      Mask m;
      try {
        m = mask_from_coco_string(static_cast<int>(h), static_cast<int>(w), rle);
      } catch (const std::exception& ex) {
        throw InputError(file_name_for_errors, r.offset(), ex.what());
      }
      out += std::to_string(frame) + ' ' + std::to_string(id);
      append_mask_tokens(out, m);
      out += '\n';
    }
  } else {
    while (!r.at_end()) {
      const long frame = r.integer();
      const long id = r.integer();
      const Mask m = read_mask_tokens(r);
      // class id 1 is assumed when producing KITTI-style lines from the
      // class-less plain format
      out += std::to_string(frame) + ' ' + std::to_string(id) + " 1 " +
             std::to_string(m.height) + ' ' + std::to_string(m.width) + ' ' +
             mask_to_coco_string(m) + '\n';
    }
  }
  return out;
}

}  // namespace fusetrack

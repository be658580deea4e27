// Command-line front end. Subcommands: track, eval, synth, convert-rle,
// dump-recon, dump-traj. Exit codes: 0 success, 1 input error, 2 config
// error.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "fusetrack/metrics.hpp"
#include "fusetrack/pipeline.hpp"
#include "fusetrack/synth.hpp"

using namespace fusetrack;

namespace {

struct TrackCli {
  std::string seq_dir;
  std::string out_dir;
  std::string config_file;
  std::string stage = "full";
  std::string provider = "depth-consistent";
  std::string provider_file;
  std::string class_filter = "all";
  double iou_min = -1;
  int lof_k = -1;
  int max_gap = -1;
  double tmr_residual = -1;
  double merge_score = -1;
  int threads = -1;
  bool online = false;
  bool no_fill = false;
};

PipelineConfig build_config(const TrackCli& cli) {
  PipelineConfig config;
  if (!cli.config_file.empty()) config = PipelineConfig::from_file(cli.config_file);
  // CLI flags override the config file.
  config.apply_key("stage", cli.stage);
  config.apply_key("mask_provider", cli.provider);
  config.apply_key("class_filter", cli.class_filter);
  if (!cli.provider_file.empty()) config.provider_file = cli.provider_file;
  if (cli.iou_min >= 0) config.iou_min = cli.iou_min;
  if (cli.lof_k >= 0) config.lof_k = cli.lof_k;
  if (cli.max_gap >= 0) config.max_gap = cli.max_gap;
  if (cli.tmr_residual >= 0) config.tmr_residual = cli.tmr_residual;
  if (cli.merge_score >= 0) config.merge_score = cli.merge_score;
  if (cli.threads >= 1) config.threads = cli.threads;
  if (cli.online) config.online = true;
  if (cli.no_fill) config.fill = false;
  config.validate();
  return config;
}

int run_track(const TrackCli& cli) {
  PipelineConfig config;
  try {
    config = build_config(cli);
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  }
  const SequenceData seq = load_sequence(cli.seq_dir);
  const PipelineResult result = run_pipeline(seq, config);
  write_track_outputs(cli.out_dir, result);
  std::cout << format_timings(result);
  return 0;
}

int run_eval(const std::string& gt_file, const std::string& pred_file, const std::string& mode,
             const std::string& out_file) {
  const MatchMode match_mode = mode == "mask" ? MatchMode::Mask : MatchMode::Box;
  std::vector<GtEntry> gt;
  std::vector<PredEntry> pred;
  if (match_mode == MatchMode::Mask) {
    gt = read_gt_mask(gt_file);
    pred = read_predictions_mask(pred_file);
  } else {
    gt = read_gt_box(gt_file);
    pred = read_predictions_box(pred_file);
  }
  const EvalReport report = evaluate(gt, pred, match_mode);
  const std::string text = format_report(report);
  std::cout << text;
  if (!out_file.empty()) {
    std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
    out << text;
  }
  return 0;
}

int run_synth(const std::string& script_file, const std::string& out_dir) {
  std::ifstream in(script_file, std::ios::binary);
  if (!in) throw InputError(script_file, 0, "cannot open script");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const SceneScript script = parse_scene_script(text, script_file);
  const SequenceBundle bundle = render_scene(script);
  write_bundle(out_dir, bundle);
  std::cout << "wrote " << bundle.inputs.num_frames() << " frames, "
            << bundle.gt.size() << " ground-truth tracks to " << out_dir << "\n";
  return 0;
}

int run_convert_rle(const std::string& in_file, const std::string& out_file,
                    const std::string& direction) {
  std::ifstream in(in_file, std::ios::binary);
  if (!in) throw InputError(in_file, 0, "cannot open input");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const bool to_plain = direction == "compressed-to-plain";
  if (!to_plain && direction != "plain-to-compressed")
    throw std::invalid_argument("direction must be compressed-to-plain or plain-to-compressed");
  const std::string converted = convert_rle_file(text, to_plain, in_file);
  std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(out_file, 0, "cannot open output");
  out << converted;
  return 0;
}

int run_dump_recon(const TrackCli& cli, int only_tracklet) {
  PipelineConfig config = build_config(cli);
  config.stage = PipelineStage::Full;
  config.fill = false;
  const SequenceData seq = load_sequence(cli.seq_dir);
  const PipelineResult result = run_pipeline(seq, config);
  std::filesystem::create_directories(cli.out_dir);
  char buf[160];
  for (std::size_t i = 0; i < result.tracklets.size(); ++i) {
    if (only_tracklet >= 0 && result.tracklets[i].id != only_tracklet) continue;
    const ObjectReconstruction rec =
        accumulate_reconstruction(result.tracklets[i], result.fusions[i]);
    std::snprintf(buf, sizeof buf, "recon_%05d.txt", result.tracklets[i].id);
    std::ofstream points(std::filesystem::path(cli.out_dir) / buf);
    for (const auto& fp : rec.fused) {
      std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %d\n", fp.p.x(), fp.p.y(), fp.p.z(),
                    fp.frame);
      points << buf;
    }
    std::snprintf(buf, sizeof buf, "transforms_%05d.txt", result.tracklets[i].id);
    std::ofstream transforms(std::filesystem::path(cli.out_dir) / buf);
    for (std::size_t s = 0; s < result.fusions[i].steps.size(); ++s) {
      const auto& step = result.fusions[i].steps[s];
      if (!step) continue;
      std::snprintf(buf, sizeof buf, "%d %.9f %.9f %.9f %.9f %d\n",
                    result.tracklets[i].entries[s].frame, step->xi.x(), step->xi.y(),
                    step->xi.z(), step->residual, step->n_pairs);
      transforms << buf;
    }
  }
  return 0;
}

int run_dump_traj(const TrackCli& cli) {
  PipelineConfig config = build_config(cli);
  const SequenceData seq = load_sequence(cli.seq_dir);
  const PipelineResult result = run_pipeline(seq, config);
  std::filesystem::create_directories(cli.out_dir);
  std::ofstream out(std::filesystem::path(cli.out_dir) / "trajectories.txt");
  char buf[160];
  for (const Track& track : result.tracks) {
    for (const int ti : track.tracklet_indices) {
      for (std::size_t e = 0; e < result.fusions[ti].states.size(); ++e) {
        const auto& state = result.fusions[ti].states[e];
        if (!state) continue;
        std::snprintf(buf, sizeof buf, "%d %d %.6f %.6f %.6f\n", state->frame, track.id,
                      state->center.x(), state->center.y(), state->center.z());
        out << buf;
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D-reconstruction-based multi-object tracker"};
  app.require_subcommand(1);

  TrackCli cli;
  auto add_track_options = [&](CLI::App* cmd, bool with_stage) {
    cmd->add_option("--seq", cli.seq_dir, "sequence directory")->required();
    cmd->add_option("--out", cli.out_dir, "output directory")->required();
    cmd->add_option("--config", cli.config_file, "config file (key = value lines)");
    if (with_stage) cmd->add_option("--stage", cli.stage, "full | 2d-only");
    cmd->add_option("--mask-provider", cli.provider, "depth-consistent | precomputed | none");
    cmd->add_option("--provider-file", cli.provider_file, "precomputed provider masks file");
    cmd->add_option("--class", cli.class_filter, "all | car | pedestrian");
    cmd->add_option("--iou-min", cli.iou_min, "2D association IoU threshold");
    cmd->add_option("--lof-k", cli.lof_k, "LOF neighborhood size");
    cmd->add_option("--max-gap", cli.max_gap, "max frames between merged tracklets (N)");
    cmd->add_option("--tmr-residual", cli.tmr_residual, "trusted-motion residual gate, meters");
    cmd->add_option("--merge-score", cli.merge_score, "Mahalanobis merge gate");
    cmd->add_option("--threads", cli.threads, "worker threads (1 = reference)");
    cmd->add_flag("--online", cli.online, "forward-only online mode");
    cmd->add_flag("--no-fill", cli.no_fill, "disable missing-detection recovery");
  };

  CLI::App* track = app.add_subcommand("track", "run the tracking pipeline on a sequence");
  add_track_options(track, true);

  std::string gt_file, pred_file, eval_mode = "box", eval_out;
  CLI::App* eval = app.add_subcommand("eval", "evaluate tracking output against ground truth");
  eval->add_option("--gt", gt_file, "ground-truth file")->required();
  eval->add_option("--pred", pred_file, "prediction file")->required();
  eval->add_option("--mode", eval_mode, "box | mask");
  eval->add_option("--report", eval_out, "also write the report to this file");

  std::string script_file, synth_out;
  CLI::App* synth = app.add_subcommand("synth", "render a synthetic scene script");
  synth->add_option("--script", script_file, "scene script")->required();
  synth->add_option("--out", synth_out, "output sequence directory")->required();

  std::string rle_in, rle_out, rle_dir = "compressed-to-plain";
  CLI::App* convert = app.add_subcommand("convert-rle", "convert between mask RLE encodings");
  convert->add_option("--in", rle_in)->required();
  convert->add_option("--out", rle_out)->required();
  convert->add_option("--direction", rle_dir, "compressed-to-plain | plain-to-compressed");

  int only_tracklet = -1;
  CLI::App* dump_recon = app.add_subcommand("dump-recon", "dump per-tracklet reconstructions");
  add_track_options(dump_recon, false);
  dump_recon->add_option("--tracklet", only_tracklet, "restrict to one tracklet id");

  CLI::App* dump_traj = app.add_subcommand("dump-traj", "dump per-track 3D center trajectories");
  add_track_options(dump_traj, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (track->parsed()) return run_track(cli);
    if (eval->parsed()) return run_eval(gt_file, pred_file, eval_mode, eval_out);
    if (synth->parsed()) return run_synth(script_file, synth_out);
    if (convert->parsed()) return run_convert_rle(rle_in, rle_out, rle_dir);
    if (dump_recon->parsed()) return run_dump_recon(cli, only_tracklet);
    if (dump_traj->parsed()) return run_dump_traj(cli);
  } catch (const InputError& ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}

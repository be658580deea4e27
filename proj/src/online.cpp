#include "fusetrack/online.hpp"

#include <algorithm>
#include <stdexcept>

namespace fusetrack {

OnlineTracker::OnlineTracker(const SequenceData& seq, const Params& params,
                             MaskProvider* provider)
    : seq_(seq), params_(params), provider_(provider) {}

void OnlineTracker::append_entry(Slot& slot, int frame, int det_index, const Detection& det,
                                 const Mask& mask) {
  slot.tracklet.entries.push_back({frame, det_index, det, mask, false});

  // Grow the fusion state incrementally, mirroring fuse_tracklet.
  const int e = slot.tracklet.length() - 1;
  slot.fusion.filtered.resize(e + 1);
  slot.fusion.states.resize(e + 1);
  if (e > 0) slot.fusion.steps.resize(e);

  ObjectPoints raw =
      build_object_points(frame, mask, seq_.depth[frame], seq_.poses[frame], seq_.rig.intrinsics);
  if (raw.size() > 0) {
    std::optional<ObjectPoints> filtered = filter_points(raw, params_.fusion.lof_k);
    const ObjectPoints& for_state = filtered ? *filtered : raw;
    ObjectState state;
    state.frame = frame;
    state.center = object_center(for_state);
    try {
      state.covariance = position_covariance(state.center, seq_.rig, seq_.poses[frame],
                                             params_.fusion.sigma_u, params_.fusion.sigma_v);
      slot.fusion.states[e] = std::move(state);
      slot.fusion.filtered[e] = std::move(filtered);
    } catch (const std::exception&) {
      // degenerate geometry; leave the frame stateless
    }
  }
  if (e > 0 && slot.fusion.filtered[e - 1] && slot.fusion.filtered[e]) {
    const int prev_frame = slot.tracklet.entries[e - 1].frame;
    if (static_cast<std::size_t>(prev_frame) < seq_.flows.size()) {
      const auto pairs = correspondences(*slot.fusion.filtered[e - 1], seq_.flows[prev_frame],
                                         *slot.fusion.filtered[e], params_.fusion.correspondence_cap);
      slot.fusion.steps[e - 1] = fit_se2(pairs);
    }
  }

  emissions_.push_back({frame, slots_[slot.root].tracklet.id, det.cls, det.score, det.box, mask,
                        false});
}

void OnlineTracker::link_new_seeds(int frame, const std::vector<int>& seed_slots) {
  struct Candidate {
    double score;
    int dangling_slot;
    int seed_slot;
  };
  std::vector<Candidate> candidates;
  for (std::size_t d = 0; d < slots_.size(); ++d) {
    Slot& dangling = slots_[d];
    if (!dangling.dangling) continue;
    const int gap = frame - dangling.tracklet.last_frame();
    if (gap < 1 || gap > params_.merge.max_gap) continue;
    for (const int s : seed_slots) {
      const Slot& seed = slots_[s];
      if (seed.tracklet.cls != dangling.tracklet.cls) continue;
      const auto score =
          motion_consistency(dangling.tracklet, dangling.fusion, seed.tracklet, seed.fusion,
                             params_.merge, seq_.rig, seq_.poses);
      if (score && *score <= params_.merge.merge_score)
        candidates.push_back({*score, static_cast<int>(d), s});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.dangling_slot != b.dangling_slot) return a.dangling_slot < b.dangling_slot;
    return a.seed_slot < b.seed_slot;
  });
  std::vector<char> dangling_used(slots_.size(), 0), seed_used(slots_.size(), 0);
  for (const Candidate& c : candidates) {
    if (dangling_used[c.dangling_slot] || seed_used[c.seed_slot]) continue;
    dangling_used[c.dangling_slot] = 1;
    seed_used[c.seed_slot] = 1;
    slots_[c.dangling_slot].dangling = false;  // consumed by the link
    slots_[c.seed_slot].root = slots_[c.dangling_slot].root;
    // Rewrite the seed's emissions (all from this frame) to the linked id.
    for (auto it = emissions_.rbegin(); it != emissions_.rend() && it->frame == frame; ++it) {
      if (it->provisional_id == slots_[c.seed_slot].tracklet.id)
        it->provisional_id = slots_[slots_[c.seed_slot].root].tracklet.id;
    }
  }
}

void OnlineTracker::fill_dangling(int frame) {
  if (!params_.fill || provider_ == nullptr) return;
  for (Slot& slot : slots_) {
    if (!slot.dangling) continue;
    const int gap = frame - slot.tracklet.last_frame();
    if (gap < 1 || gap > params_.merge.max_gap) continue;

    const auto tmr =
        trusted_motion_region(slot.fusion.steps, params_.merge.tmr_residual, TrackletEnd::Tail);
    const MotionModel model = motion_model_from_tmr(slot.tracklet, slot.fusion, tmr);
    const ObjectState* end_state = nullptr;
    for (auto it = slot.fusion.states.rbegin(); it != slot.fusion.states.rend(); ++it)
      if (it->has_value()) {
        end_state = &**it;
        break;
      }
    if (!end_state) continue;
    const auto states = extrapolate(*end_state, model, frame - end_state->frame, true, seq_.rig,
                                    seq_.poses, params_.merge.sigma_u, params_.merge.sigma_v);
    const ObjectState* at_frame = nullptr;
    for (const auto& s : states)
      if (s.frame == frame) at_frame = &s;
    if (!at_frame) continue;

    const Box3D box3d = estimate_box3d(*at_frame, slot.tracklet.cls, model, nullptr,
                                       slot.fill_prev_yaw, params_.recovery);
    const FlowField* flow = nullptr;
    if (slot.fill_prev_box && frame >= 1 && static_cast<std::size_t>(frame - 1) < seq_.flows.size())
      flow = &seq_.flows[frame - 1];
    const auto box2d = recover_box2d(box3d, seq_.poses[frame], seq_.rig.intrinsics,
                                     slot.fill_prev_box, flow, seq_.width, seq_.height);
    slot.fill_prev_yaw = box3d.yaw;
    if (!box2d) {
      slot.fill_prev_box.reset();
      continue;
    }
    const auto mask = provider_->mask_for(frame, *box2d, box3d, slot.tracklet.cls);
    if (!mask || mask->is_empty()) {
      slot.fill_prev_box.reset();
      continue;
    }
    if (validate_recovery(*mask, seq_.depth[frame], box3d, seq_.poses[frame], seq_.rig.intrinsics,
                          params_.recovery.d_max_for(slot.tracklet.cls),
                          params_.recovery.min_depth_coverage) != RecoveryCheck::Visible) {
      slot.fill_prev_box.reset();
      continue;
    }
    TrackletEntry entry;
    entry.frame = frame;
    entry.det_index = -1;
    entry.detection = Detection{frame, slot.tracklet.cls, 0.0, *box2d};
    entry.mask = *mask;
    entry.recovered = true;
    slot.recovered.push_back(entry);
    slot.fill_prev_box = *box2d;
    emissions_.push_back({frame, slots_[slot.root].tracklet.id, slot.tracklet.cls, 0.0, *box2d,
                          *mask, true});
  }
}

void OnlineTracker::step(int frame) {
  if (frame != next_frame_) throw std::runtime_error("OnlineTracker: out-of-order frame");
  ++next_frame_;
  const FrameObjects& cur = seq_.frames[frame];

  // 2D association against tracklets still active from the previous frame.
  std::vector<Tracklet> active_tracklets;
  for (const int s : active_) active_tracklets.push_back(slots_[s].tracklet);
  std::vector<int> matched(active_.size(), -1);
  std::vector<int> unmatched_candidates;
  if (!active_.empty() && frame >= 1 && !cur.detections.empty()) {
    const FrameAssignment assignment =
        associate_frame(active_tracklets, cur.detections, cur.masks, seq_.flows[frame - 1],
                        params_.iou_min, params_.threads);
    matched = assignment.matched;
    unmatched_candidates = assignment.unmatched_candidates;
  } else {
    for (int c = 0; c < static_cast<int>(cur.detections.size()); ++c)
      unmatched_candidates.push_back(c);
  }

  std::vector<int> still_active;
  for (std::size_t t = 0; t < active_.size(); ++t) {
    const int s = active_[t];
    if (matched[t] >= 0) {
      const int c = matched[t];
      append_entry(slots_[s], frame, c, cur.detections[c], cur.masks[c]);
      still_active.push_back(s);
    } else {
      slots_[s].dangling = true;
      slots_[s].fill_prev_box = slots_[s].tracklet.entries.back().detection.box;
      slots_[s].fill_prev_yaw = 0.0;
    }
  }

  // Unmatched detections start new tracklets (seeds).
  std::vector<int> seed_slots;
  for (const int c : unmatched_candidates) {
    Slot slot;
    slot.tracklet.id = static_cast<int>(slots_.size());
    slot.tracklet.cls = cur.detections[c].cls;
    slot.root = slot.tracklet.id;
    slots_.push_back(std::move(slot));
    append_entry(slots_.back(), frame, c, cur.detections[c], cur.masks[c]);
    seed_slots.push_back(slots_.back().tracklet.id);
    still_active.push_back(slots_.back().tracklet.id);
  }

  // Match seeds against forward-extrapolated dangling tracklets.
  if (!seed_slots.empty()) link_new_seeds(frame, seed_slots);

  // Expire dangling tracklets beyond the merge window.
  for (Slot& slot : slots_) {
    if (slot.dangling && frame - slot.tracklet.last_frame() > params_.merge.max_gap)
      slot.dangling = false;
  }

  // Recover missing detections in the current frame only.
  fill_dangling(frame);

  active_ = std::move(still_active);
}

OnlineTracker::Result OnlineTracker::finish() {
  Result result;
  for (const Slot& slot : slots_) result.tracklets.push_back(slot.tracklet);

  // Group slots by chain root, keeping temporal order inside each chain.
  std::vector<std::vector<int>> members(slots_.size());
  for (std::size_t s = 0; s < slots_.size(); ++s) members[slots_[s].root].push_back(static_cast<int>(s));

  std::vector<Track> tracks;
  std::vector<std::vector<TrackletEntry>> recovered;
  for (std::size_t root = 0; root < slots_.size(); ++root) {
    if (members[root].empty()) continue;
    Track track;
    track.cls = slots_[root].tracklet.cls;
    std::sort(members[root].begin(), members[root].end(), [&](int a, int b) {
      return slots_[a].tracklet.first_frame() < slots_[b].tracklet.first_frame();
    });
    track.tracklet_indices = members[root];
    std::vector<TrackletEntry> rec;
    for (const int s : members[root])
      rec.insert(rec.end(), slots_[s].recovered.begin(), slots_[s].recovered.end());
    std::sort(rec.begin(), rec.end(),
              [](const TrackletEntry& a, const TrackletEntry& b) { return a.frame < b.frame; });
    tracks.push_back(std::move(track));
    recovered.push_back(std::move(rec));
  }

  // Same id discipline as the offline merger.
  std::vector<int> order(tracks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Tracklet& ta = result.tracklets[tracks[a].tracklet_indices.front()];
    const Tracklet& tb = result.tracklets[tracks[b].tracklet_indices.front()];
    if (ta.first_frame() != tb.first_frame()) return ta.first_frame() < tb.first_frame();
    return ta.id < tb.id;
  });
  Result ordered;
  ordered.tracklets = std::move(result.tracklets);
  for (std::size_t i = 0; i < order.size(); ++i) {
    Track t = std::move(tracks[order[i]]);
    t.id = static_cast<int>(i) + 1;
    ordered.tracks.push_back(std::move(t));
    ordered.recovered.push_back(std::move(recovered[order[i]]));
  }
  return ordered;
}

}  // namespace fusetrack

#include "fusetrack/merge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fusetrack/util.hpp"

namespace fusetrack {

std::optional<TrustedMotionRegion> trusted_motion_region(
    const std::vector<std::optional<MotionTransform>>& steps, double residual_max,
    TrackletEnd end) {
  const int n = static_cast<int>(steps.size());
  if (n == 0) return std::nullopt;
  auto ok = [&](int i) { return steps[i].has_value() && steps[i]->residual < residual_max; };

  TrustedMotionRegion tmr;
  if (end == TrackletEnd::Tail) {
    if (!ok(n - 1)) return std::nullopt;
    tmr.last_step = n - 1;
    int i = n - 1;
    while (i > 0 && ok(i - 1)) --i;
    tmr.first_step = i;
  } else {
    if (!ok(0)) return std::nullopt;
    tmr.first_step = 0;
    int i = 0;
    while (i + 1 < n && ok(i + 1)) ++i;
    tmr.last_step = i;
  }
  if (tmr.length() < 2) return std::nullopt;
  return tmr;
}

std::optional<Vec3> average_object_centric_motion(const Tracklet& tracklet,
                                                  const TrackletFusion& fusion,
                                                  const TrustedMotionRegion& tmr) {
  Vec3 sum = Vec3::Zero();
  int count = 0;
  for (int s = tmr.first_step; s <= tmr.last_step; ++s) {
    if (!fusion.steps[s] || !fusion.states[s]) continue;
    sum += to_object_centric(fusion.steps[s]->xi, fusion.states[s]->center);
    ++count;
  }
  (void)tracklet;
  if (count == 0) return std::nullopt;
  return Vec3(sum / count);
}

MotionModel motion_model_from_tmr(const Tracklet& tracklet, const TrackletFusion& fusion,
                                  const std::optional<TrustedMotionRegion>& tmr) {
  MotionModel model;
  if (!tmr) return model;
  const std::optional<Vec3> avg = average_object_centric_motion(tracklet, fusion, *tmr);
  if (!avg) return model;
  model.displacement = Vec2(avg->x(), avg->y());
  model.theta = avg->z();
  model.stationary = false;
  return model;
}

std::vector<ObjectState> extrapolate(const ObjectState& from, const MotionModel& model,
                                     int horizon, bool forward, const StereoRig& rig,
                                     const std::vector<CameraPose>& poses, double sigma_u,
                                     double sigma_v) {
  std::vector<ObjectState> out;
  Vec3 center = from.center;
  Vec2 step = model.displacement;
  const double c = std::cos(model.theta), s = std::sin(model.theta);
  for (int i = 1; i <= horizon; ++i) {
    const int frame = forward ? from.frame + i : from.frame - i;
    if (frame < 0 || frame >= static_cast<int>(poses.size())) break;
    if (!model.stationary) {
      if (forward) {
        // heading turns by theta each step, then the center advances
        step = Vec2(c * step.x() - s * step.y(), s * step.x() + c * step.y());
        center += Vec3(step.x(), 0.0, step.y());
      } else {
        step = Vec2(c * step.x() + s * step.y(), -s * step.x() + c * step.y());
        center -= Vec3(step.x(), 0.0, step.y());
      }
    }
    ObjectState st;
    st.frame = frame;
    st.center = center;
    try {
      st.covariance = position_covariance(center, rig, poses[frame], sigma_u, sigma_v);
    } catch (const std::exception&) {
      break;  // behind camera or degenerate; stop predicting
    }
    out.push_back(std::move(st));
  }
  return out;
}

double mahalanobis(const Vec3& a, const Vec3& b, const Mat3& covariance) {
  Eigen::LDLT<Mat3> ldlt(covariance);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("mahalanobis: covariance not positive definite");
  const Vec3 d = a - b;
  return std::sqrt(d.dot(ldlt.solve(d)));
}

namespace {

const ObjectState* last_state(const TrackletFusion& f) {
  for (auto it = f.states.rbegin(); it != f.states.rend(); ++it)
    if (it->has_value()) return &**it;
  return nullptr;
}

const ObjectState* first_state(const TrackletFusion& f) {
  for (const auto& s : f.states)
    if (s.has_value()) return &*s;
  return nullptr;
}

std::optional<double> score_at_frames(const std::vector<ObjectState>& pred_a,
                                      const std::vector<ObjectState>& pred_b, int frame_begin,
                                      int frame_end) {
  auto find = [](const std::vector<ObjectState>& v, int frame) -> const ObjectState* {
    for (const auto& s : v)
      if (s.frame == frame) return &s;
    return nullptr;
  };
  double sum = 0;
  int count = 0;
  for (int f = frame_begin; f <= frame_end; ++f) {
    const ObjectState* sa = find(pred_a, f);
    const ObjectState* sb = find(pred_b, f);
    if (!sa || !sb) continue;
    const Mat3 cov = 0.5 * (sa->covariance + sb->covariance);
    sum += mahalanobis(sa->center, sb->center, cov);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

}  // namespace

std::optional<double> motion_consistency(const Tracklet& a, const TrackletFusion& fa,
                                         const Tracklet& b, const TrackletFusion& fb,
                                         const MergeParams& params, const StereoRig& rig,
                                         const std::vector<CameraPose>& poses) {
  const ObjectState* a_end = last_state(fa);
  const ObjectState* b_begin = first_state(fb);
  if (!a_end || !b_begin) return std::nullopt;

  const auto tmr_a = trusted_motion_region(fa.steps, params.tmr_residual, TrackletEnd::Tail);
  const auto tmr_b = trusted_motion_region(fb.steps, params.tmr_residual, TrackletEnd::Head);
  const MotionModel model_a = motion_model_from_tmr(a, fa, tmr_a);
  const MotionModel model_b = motion_model_from_tmr(b, fb, tmr_b);
  const bool has_a = !model_a.stationary;
  const bool has_b = !model_b.stationary;

  const int frame_begin = a_end->frame;
  const int frame_end = b_begin->frame;
  if (frame_end <= frame_begin) return std::nullopt;
  const int span = frame_end - frame_begin;

  try {
    if (has_a && has_b) {
      // Both sides extrapolate toward each other across the whole range.
      std::vector<ObjectState> pa = {*a_end};
      auto fa_pred = extrapolate(*a_end, model_a, span, true, rig, poses, params.sigma_u,
                                 params.sigma_v);
      pa.insert(pa.end(), fa_pred.begin(), fa_pred.end());
      std::vector<ObjectState> pb = {*b_begin};
      auto fb_pred = extrapolate(*b_begin, model_b, span, false, rig, poses, params.sigma_u,
                                 params.sigma_v);
      pb.insert(pb.end(), fb_pred.begin(), fb_pred.end());
      return score_at_frames(pa, pb, frame_begin, frame_end);
    }
    if (has_a != has_b) {
      // One-sided: extrapolate the trusted side to the untrusted
      // tracklet's gap-facing frame and compare against its observed
      // state there.
      if (has_a) {
        auto pred = extrapolate(*a_end, model_a, span, true, rig, poses, params.sigma_u,
                                params.sigma_v);
        return score_at_frames(pred, {*b_begin}, frame_end, frame_end);
      }
      auto pred = extrapolate(*b_begin, model_b, span, false, rig, poses, params.sigma_u,
                              params.sigma_v);
      return score_at_frames({*a_end}, pred, frame_begin, frame_begin);
    }
    // Neither side is trusted: both assumed stationary.
    const Mat3 cov = 0.5 * (a_end->covariance + b_begin->covariance);
    return mahalanobis(a_end->center, b_begin->center, cov);
  } catch (const std::exception&) {
    return std::nullopt;  // degenerate covariance somewhere in the gap
  }
}

namespace {

struct Candidate {
  double score;
  int a, b;  // tracklet indices
};

}  // namespace

std::vector<Track> merge_tracklets(const std::vector<Tracklet>& tracklets,
                                   const std::vector<TrackletFusion>& fusions,
                                   const MergeParams& params, const StereoRig& rig,
                                   const std::vector<CameraPose>& poses, int threads) {
  const int n = static_cast<int>(tracklets.size());

  // Enumerate candidate pairs, then score them in parallel.
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || tracklets[i].cls != tracklets[j].cls) continue;
      const int gap = tracklets[j].first_frame() - tracklets[i].last_frame();
      if (gap < 1 || gap > params.max_gap) continue;
      pairs.emplace_back(i, j);
    }
  }
  std::vector<std::optional<double>> scores(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    scores[p] = motion_consistency(tracklets[pairs[p].first], fusions[pairs[p].first],
                                   tracklets[pairs[p].second], fusions[pairs[p].second], params,
                                   rig, poses);
  });

  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (scores[p] && *scores[p] <= params.merge_score)
      candidates.push_back({*scores[p], pairs[p].first, pairs[p].second});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.score != y.score) return x.score < y.score;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  std::vector<int> successor(n, -1), predecessor(n, -1);
  for (const Candidate& c : candidates) {
    if (successor[c.a] >= 0 || predecessor[c.b] >= 0) continue;
    successor[c.a] = c.b;
    predecessor[c.b] = c.a;
  }

  // Walk chains from their roots, in root order, to form tracks.
  std::vector<Track> tracks;
  for (int i = 0; i < n; ++i) {
    if (predecessor[i] >= 0) continue;
    Track track;
    track.cls = tracklets[i].cls;
    for (int cur = i; cur >= 0; cur = successor[cur]) {
      if (!track.tracklet_indices.empty()) {
        const int prev = track.tracklet_indices.back();
        GapStates gap;
        gap.after_tracklet = static_cast<int>(track.tracklet_indices.size()) - 1;
        const auto tmr_prev =
            trusted_motion_region(fusions[prev].steps, params.tmr_residual, TrackletEnd::Tail);
        gap.motion = motion_model_from_tmr(tracklets[prev], fusions[prev], tmr_prev);

        // Blend forward and backward predictions across the gap frames.
        const ObjectState* a_end = last_state(fusions[prev]);
        const ObjectState* b_begin = first_state(fusions[cur]);
        const int f0 = tracklets[prev].last_frame();
        const int f1 = tracklets[cur].first_frame();
        if (a_end && b_begin && f1 - f0 >= 2) {
          const auto tmr_next =
              trusted_motion_region(fusions[cur].steps, params.tmr_residual, TrackletEnd::Head);
          const MotionModel model_b =
              motion_model_from_tmr(tracklets[cur], fusions[cur], tmr_next);
          auto fwd = extrapolate(*a_end, gap.motion, f1 - f0 - 1, true, rig, poses,
                                 params.sigma_u, params.sigma_v);
          auto bwd = extrapolate(*b_begin, model_b, f1 - f0 - 1, false, rig, poses,
                                 params.sigma_u, params.sigma_v);
          for (int f = f0 + 1; f <= f1 - 1; ++f) {
            const ObjectState* sf = nullptr;
            const ObjectState* sb = nullptr;
            for (const auto& s : fwd)
              if (s.frame == f) sf = &s;
            for (const auto& s : bwd)
              if (s.frame == f) sb = &s;
            if (!sf && !sb) continue;
            ObjectState st;
            st.frame = f;
            const double w = static_cast<double>(f - f0) / (f1 - f0);
            if (sf && sb)
              st.center = (1.0 - w) * sf->center + w * sb->center;
            else
              st.center = sf ? sf->center : sb->center;
            try {
              st.covariance =
                  position_covariance(st.center, rig, poses[f], params.sigma_u, params.sigma_v);
            } catch (const std::exception&) {
              continue;
            }
            gap.states.push_back(std::move(st));
          }
        }
        track.gaps.push_back(std::move(gap));
      }
      track.tracklet_indices.push_back(cur);
    }
    tracks.push_back(std::move(track));
  }

  // Deterministic ids ordered by (first frame, first tracklet id).
  std::sort(tracks.begin(), tracks.end(), [&](const Track& x, const Track& y) {
    const int fx = tracklets[x.tracklet_indices.front()].first_frame();
    const int fy = tracklets[y.tracklet_indices.front()].first_frame();
    if (fx != fy) return fx < fy;
    return tracklets[x.tracklet_indices.front()].id < tracklets[y.tracklet_indices.front()].id;
  });
  for (int i = 0; i < static_cast<int>(tracks.size()); ++i) tracks[i].id = i + 1;
  return tracks;
}

std::vector<Track> tracks_from_tracklets(const std::vector<Tracklet>& tracklets) {
  std::vector<Track> tracks;
  tracks.reserve(tracklets.size());
  for (int i = 0; i < static_cast<int>(tracklets.size()); ++i) {
    Track t;
    t.cls = tracklets[i].cls;
    t.tracklet_indices = {i};
    tracks.push_back(std::move(t));
  }
  std::sort(tracks.begin(), tracks.end(), [&](const Track& x, const Track& y) {
    const int fx = tracklets[x.tracklet_indices.front()].first_frame();
    const int fy = tracklets[y.tracklet_indices.front()].first_frame();
    if (fx != fy) return fx < fy;
    return tracklets[x.tracklet_indices.front()].id < tracklets[y.tracklet_indices.front()].id;
  });
  for (int i = 0; i < static_cast<int>(tracks.size()); ++i) tracks[i].id = i + 1;
  return tracks;
}

}  // namespace fusetrack

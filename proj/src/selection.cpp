#include "kafr/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kafr {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Adaptive1: return "adaptive1";
    case Algorithm::Adaptive2: return "adaptive2";
    case Algorithm::UFS: return "ufs";
    case Algorithm::MSE: return "mse";
  }
  return "";
}

std::optional<Algorithm> algorithm_from_string(std::string_view name) {
  for (auto a : {Algorithm::Adaptive1, Algorithm::Adaptive2, Algorithm::UFS, Algorithm::MSE}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::string_view to_string(Accumulation accumulation) {
  return accumulation == Accumulation::Anchored ? "anchored" : "consecutive";
}

namespace {

void check_fraction(double f) {
  if (!(f > 0.0 && f <= 1.0)) {
    throw Error(ErrorKind::InvalidFraction, "fraction must lie in (0, 1]");
  }
}

std::vector<FrameIndex> dense_frames(const FrameRange& range) {
  std::vector<FrameIndex> frames(static_cast<std::size_t>(range.count()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i] = range.first + static_cast<FrameIndex>(i);
  }
  return frames;
}

template <typename Track>
const Track& track_for(std::span<const Track> tracks, Role role) {
  const Track* found = nullptr;
  for (const auto& t : tracks) {
    if (t.role == role) {
      found = &t;
      break;
    }
  }
  bool has_samples = false;
  if (found != nullptr) {
    if constexpr (std::is_same_v<Track, ToolTrack>) {
      has_samples = !found->samples.empty();
    } else {
      has_samples = !found->entries.empty();
    }
  }
  if (!has_samples) {
    throw Error(ErrorKind::RolesUnavailable,
                "role " + std::string(to_string(role)) + " has no samples");
  }
  return *found;
}

template <typename Track>
std::string common_video_id(std::span<const Track> tracks) {
  if (tracks.empty()) throw Error(ErrorKind::EmptyTracks, "no tracks given");
  for (const auto& t : tracks) {
    if (t.video_id != tracks.front().video_id) {
      throw Error(ErrorKind::InvalidArgument, "tracks belong to different videos");
    }
  }
  return tracks.front().video_id;
}

void check_roles(std::span<const Role> roles) {
  if (roles.empty()) throw Error(ErrorKind::InvalidParams, "no roles selected");
}

}  // namespace

FrameRange frame_range_of(std::span<const ToolTrack> tracks) {
  FrameIndex lo = std::numeric_limits<FrameIndex>::max();
  FrameIndex hi = std::numeric_limits<FrameIndex>::min();
  for (const auto& t : tracks) {
    if (t.samples.empty()) continue;
    lo = std::min(lo, t.samples.begin()->first);
    hi = std::max(hi, t.samples.rbegin()->first);
  }
  if (lo > hi) throw Error(ErrorKind::EmptyTracks, "tracks hold no samples");
  return {lo, hi};
}

std::size_t target_count(std::size_t frame_count, double target_fraction) {
  check_fraction(target_fraction);
  const auto m = std::llround(target_fraction * static_cast<double>(frame_count));
  return static_cast<std::size_t>(std::max<long long>(1, m));
}

// ---------------------------------------------------------------------------
// Sweep problems
// ---------------------------------------------------------------------------

SweepProblem SweepProblem::displacement(std::span<const ToolTrack> tracks,
                                        std::span<const Role> roles, Accumulation accumulation,
                                        std::optional<FrameRange> range) {
  SweepProblem p;
  p.video_id_ = common_video_id(tracks);
  check_roles(roles);
  const FrameRange r = range ? *range : frame_range_of(tracks);
  if (r.count() < 1) throw Error(ErrorKind::InvalidArgument, "empty frame range");
  p.frames_ = dense_frames(r);
  p.accumulation_ = accumulation;

  Motion motion;
  const auto n = static_cast<Eigen::Index>(p.frames_.size());
  for (Role role : roles) {
    const auto& track = track_for(tracks, role);
    Eigen::Matrix2Xd pos = Eigen::Matrix2Xd::Zero(2, n);
    std::vector<bool> present(p.frames_.size(), false);
    for (auto it = track.samples.lower_bound(r.first);
         it != track.samples.end() && it->first <= r.last; ++it) {
      const auto idx = static_cast<Eigen::Index>(it->first - r.first);
      pos.col(idx) = it->second;
      present[static_cast<std::size_t>(idx)] = true;
    }
    motion.positions.push_back(std::move(pos));
    motion.present.push_back(std::move(present));
  }
  p.data_ = std::move(motion);
  return p;
}

SweepProblem SweepProblem::speed_variation(std::span<const KinematicSeries> series,
                                           std::span<const Role> roles,
                                           Accumulation accumulation,
                                           std::optional<FrameRange> range) {
  SweepProblem p;
  p.video_id_ = common_video_id(series);
  check_roles(roles);
  FrameRange r{};
  if (range) {
    r = *range;
  } else {
    FrameIndex lo = std::numeric_limits<FrameIndex>::max();
    FrameIndex hi = std::numeric_limits<FrameIndex>::min();
    for (const auto& s : series) {
      if (s.entries.empty()) continue;
      lo = std::min(lo, s.entries.begin()->first);
      hi = std::max(hi, s.entries.rbegin()->first);
    }
    if (lo > hi) throw Error(ErrorKind::EmptyTracks, "series hold no samples");
    r = {lo, hi};
  }
  if (r.count() < 1) throw Error(ErrorKind::InvalidArgument, "empty frame range");
  p.frames_ = dense_frames(r);
  p.accumulation_ = accumulation;

  Speeds speeds;
  const auto n = static_cast<Eigen::Index>(p.frames_.size());
  std::size_t first_defined = p.frames_.size();
  for (Role role : roles) {
    const auto& s = track_for(series, role);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    std::vector<bool> defined(p.frames_.size(), false);
    for (auto it = s.entries.lower_bound(r.first); it != s.entries.end() && it->first <= r.last;
         ++it) {
      if (!it->second.speed) continue;
      const auto idx = static_cast<std::size_t>(it->first - r.first);
      v(static_cast<Eigen::Index>(idx)) = *it->second.speed;
      defined[idx] = true;
      first_defined = std::min(first_defined, idx);
    }
    speeds.speed.push_back(std::move(v));
    speeds.defined.push_back(std::move(defined));
  }
  // the sweep starts at the first speed-bearing frame
  p.start_ = first_defined == p.frames_.size() ? 0 : first_defined;
  p.data_ = std::move(speeds);
  return p;
}

SweepProblem SweepProblem::pixel_mse(std::span<const IndexedFrame> frames,
                                     Accumulation accumulation) {
  if (frames.empty()) throw Error(ErrorKind::EmptyInput, "no frames given");
  SweepProblem p;
  p.accumulation_ = accumulation;
  Pixels pixels;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0 && frames[i].frame_index <= frames[i - 1].frame_index) {
      throw Error(ErrorKind::InvalidArgument, "frame indices must be strictly increasing");
    }
    if (frames[i].image.rows() != frames[0].image.rows() ||
        frames[i].image.cols() != frames[0].image.cols()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "frame " + std::to_string(frames[i].frame_index) + " differs in size");
    }
    p.frames_.push_back(frames[i].frame_index);
    pixels.images.push_back(&frames[i].image);
  }
  p.data_ = std::move(pixels);
  return p;
}

double SweepProblem::term(std::size_t anchor, std::size_t k) const {
  const std::size_t ref = accumulation_ == Accumulation::Anchored ? anchor : k - 1;
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        double sum = 0.0;
        if constexpr (std::is_same_v<T, Motion>) {
          const auto a = static_cast<Eigen::Index>(ref);
          const auto b = static_cast<Eigen::Index>(k);
          for (std::size_t s = 0; s < d.positions.size(); ++s) {
            if (d.present[s][ref] && d.present[s][k]) {
              sum += (d.positions[s].col(a) - d.positions[s].col(b)).norm();
            }
          }
        } else if constexpr (std::is_same_v<T, Speeds>) {
          for (std::size_t s = 0; s < d.speed.size(); ++s) {
            if (!d.defined[s][k]) continue;
            // an undefined reference speed reads as 0 (stored that way)
            sum += std::abs(d.speed[s](static_cast<Eigen::Index>(ref)) -
                            d.speed[s](static_cast<Eigen::Index>(k)));
          }
        } else {
          sum = mean_squared_error(*d.images[ref], *d.images[k]);
        }
        return sum;
      },
      data_);
}

std::vector<FrameIndex> SweepProblem::select(const Crossing& crossing) const {
  std::vector<FrameIndex> selected{frames_[start_]};
  std::size_t anchor = start_;
  double accumulated = 0.0;
  for (std::size_t j = start_ + 1; j < frames_.size(); ++j) {
    accumulated += term(anchor, j);
    if (crossing(accumulated)) {
      selected.push_back(frames_[j]);
      anchor = j;
      accumulated = 0.0;
    }
  }
  return selected;
}

double SweepProblem::total_accumulation() const {
  double total = 0.0;
  for (std::size_t j = start_ + 1; j < frames_.size(); ++j) total += term(start_, j);
  return total;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

namespace {

struct Candidate {
  double budget;
  std::size_t count;
};

bool better(const Candidate& c, const Candidate& best, std::size_t target) {
  const auto diff = [&](std::size_t n) { return n > target ? n - target : target - n; };
  if (diff(c.count) != diff(best.count)) return diff(c.count) < diff(best.count);
  return c.count >= target && best.count < target;
}

template <typename CountFn>
Calibration search_budget(CountFn count_at, double total, std::size_t frames,
                          double target_fraction) {
  const std::size_t target = target_count(frames, target_fraction);
  const std::size_t ceiling = count_at(0.0);
  if (ceiling < target) {
    throw UnreachableTarget(target_fraction,
                            static_cast<double>(ceiling) / static_cast<double>(frames));
  }

  Candidate best{0.0, ceiling};
  if (ceiling != target && total > 0.0) {
    double lo = 0.0;
    double hi = std::nextafter(total, std::numeric_limits<double>::infinity());
    const Candidate top{hi, count_at(hi)};
    if (better(top, best, target)) best = top;
    const double tolerance = 1e-9 * total;
    while (hi - lo > tolerance) {
      const double mid = lo + (hi - lo) / 2.0;
      if (mid <= lo || mid >= hi) break;
      const Candidate c{mid, count_at(mid)};
      if (better(c, best, target)) best = c;
      if (c.count == target) break;
      if (c.count > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  return {best.budget, static_cast<double>(best.count) / static_cast<double>(frames), best.count,
          target};
}

}  // namespace

Calibration calibrate_threshold(const SweepProblem& problem, double target_fraction) {
  check_fraction(target_fraction);
  return search_budget([&](double b) { return problem.count(b); }, problem.total_accumulation(),
                       problem.frame_count(), target_fraction);
}

Calibration calibrate_threshold(std::span<const SweepProblem> problems, double target_fraction) {
  check_fraction(target_fraction);
  if (problems.empty()) throw Error(ErrorKind::EmptyInput, "no videos to calibrate");
  double total = 0.0;
  std::size_t frames = 0;
  for (const auto& p : problems) {
    total = std::max(total, p.total_accumulation());
    frames += p.frame_count();
  }
  auto pooled = [&](double b) {
    std::size_t n = 0;
    for (const auto& p : problems) n += p.count(b);
    return n;
  };
  return search_budget(pooled, total, frames, target_fraction);
}

// ---------------------------------------------------------------------------
// Selectors
// ---------------------------------------------------------------------------

KeyFrameSet select_with_policy(const SweepProblem& problem, const SelectionPolicy& policy) {
  KeyFrameSet out;
  out.video_id = problem.video_id();
  out.policy = policy;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AccumulationBudget>) {
          if (!(c.value >= 0.0)) throw Error(ErrorKind::InvalidParams, "budget must be >= 0");
          out.selected = problem.select(Crossing::budget(c.value));
          out.budget = c.value;
        } else if constexpr (std::is_same_v<T, FThreshold>) {
          if (!(c.value > 0.0 && c.value <= 1.0)) {
            throw Error(ErrorKind::InvalidParams, "threshold must lie in (0, 1]");
          }
          out.selected = problem.select(Crossing::threshold(c.value, policy.beta, policy.epsilon));
          out.budget = budget_from_threshold(c.value, policy.beta, policy.epsilon);
        } else {
          const auto cal = calibrate_threshold(problem, c.value);
          out.selected = problem.select(Crossing::budget(cal.budget));
          out.budget = cal.budget;
        }
      },
      policy.criterion);
  out.achieved_fraction =
      static_cast<double>(out.selected.size()) / static_cast<double>(problem.frame_count());
  return out;
}

namespace {

void check_policy(const SelectionPolicy& policy, Algorithm expected) {
  if (policy.algorithm != expected) {
    throw Error(ErrorKind::InvalidArgument,
                "policy algorithm is " + std::string(to_string(policy.algorithm)) + ", expected " +
                    std::string(to_string(expected)));
  }
  if (!(policy.beta > 0.0) || !(policy.epsilon > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "beta and epsilon must be positive");
  }
}

std::vector<KinematicSeries> speeds_for(std::span<const ToolTrack> tracks,
                                        const SelectionPolicy& policy) {
  if (tracks.empty()) throw Error(ErrorKind::EmptyTracks, "no tracks given");
  std::vector<KinematicSeries> series;
  for (Role role : policy.roles) series.push_back(compute_speed(track_for(tracks, role), policy.gap_max));
  return series;
}

}  // namespace

SweepProblem make_problem(std::span<const ToolTrack> tracks, const SelectionPolicy& policy,
                          std::optional<FrameRange> range) {
  if (tracks.empty()) throw Error(ErrorKind::EmptyTracks, "no tracks given");
  const FrameRange r = range ? *range : frame_range_of(tracks);
  switch (policy.algorithm) {
    case Algorithm::Adaptive1:
      return SweepProblem::displacement(tracks, policy.roles, policy.accumulation, r);
    case Algorithm::Adaptive2: {
      const auto series = speeds_for(tracks, policy);
      return SweepProblem::speed_variation(series, policy.roles, policy.accumulation, r);
    }
    default:
      throw Error(ErrorKind::InvalidArgument, "track-based problems need adaptive1 or adaptive2");
  }
}

KeyFrameSet adaptive1_select(std::span<const ToolTrack> tracks, const SelectionPolicy& policy,
                             std::optional<FrameRange> range) {
  check_policy(policy, Algorithm::Adaptive1);
  return select_with_policy(make_problem(tracks, policy, range), policy);
}

KeyFrameSet adaptive2_select(std::span<const ToolTrack> tracks, const SelectionPolicy& policy,
                             std::optional<FrameRange> range) {
  check_policy(policy, Algorithm::Adaptive2);
  return select_with_policy(make_problem(tracks, policy, range), policy);
}

KeyFrameSet adaptive2_select(std::span<const KinematicSeries> series, const SelectionPolicy& policy,
                             std::optional<FrameRange> range) {
  check_policy(policy, Algorithm::Adaptive2);
  return select_with_policy(
      SweepProblem::speed_variation(series, policy.roles, policy.accumulation, range), policy);
}

KeyFrameSet mse_select(std::span<const IndexedFrame> frames, const SelectionPolicy& policy,
                       std::string video_id) {
  check_policy(policy, Algorithm::MSE);
  auto result = select_with_policy(SweepProblem::pixel_mse(frames, policy.accumulation), policy);
  result.video_id = std::move(video_id);
  return result;
}

KeyFrameSet ufs_select(const FrameRange& range, double target_fraction, std::string video_id) {
  check_fraction(target_fraction);
  const FrameIndex n = range.count();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "frame count must be >= 1");
  const auto m = static_cast<FrameIndex>(target_count(static_cast<std::size_t>(n), target_fraction));

  KeyFrameSet out;
  out.video_id = std::move(video_id);
  out.policy.algorithm = Algorithm::UFS;
  out.policy.roles.clear();
  out.policy.criterion = TargetFraction{target_fraction};
  if (m == 1) {
    out.selected = {range.first};
  } else {
    // round-half-up of t (n-1) / (m-1), in integers
    for (FrameIndex t = 0; t < m; ++t) {
      const FrameIndex idx = (2 * t * (n - 1) + (m - 1)) / (2 * (m - 1));
      if (out.selected.empty() || out.selected.back() != range.first + idx) {
        out.selected.push_back(range.first + idx);
      }
    }
  }
  out.achieved_fraction = static_cast<double>(out.selected.size()) / static_cast<double>(n);
  return out;
}

KeyFrameSet ufs_select(FrameIndex frame_count, double target_fraction) {
  if (frame_count < 1) throw Error(ErrorKind::InvalidArgument, "frame count must be >= 1");
  return ufs_select(FrameRange{0, frame_count - 1}, target_fraction, {});
}

}  // namespace kafr

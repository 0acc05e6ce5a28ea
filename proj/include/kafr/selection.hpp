#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kafr/detections.hpp"
#include "kafr/image.hpp"
#include "kafr/kinematics.hpp"

namespace kafr {

enum class Algorithm { Adaptive1, Adaptive2, UFS, MSE };

/// Anchored: each frame k contributes its distance to the anchor frame.
/// Consecutive: each frame k contributes its distance to frame k-1.
enum class Accumulation { Anchored, Consecutive };

std::string_view to_string(Algorithm algorithm);
std::optional<Algorithm> algorithm_from_string(std::string_view name);
std::string_view to_string(Accumulation accumulation);

/// Accumulated change (z-scale) at which a key frame fires.
struct AccumulationBudget {
  double value = 0.0;
};
/// Threshold d on the decreasing f-scale, f(z) = 1 / (z + eps)^beta.
struct FThreshold {
  double value = 1.0;
};
/// Fraction of frames to keep; the budget is calibrated to hit it.
struct TargetFraction {
  double value = 0.1;
};

using SelectionCriterion = std::variant<AccumulationBudget, FThreshold, TargetFraction>;

inline constexpr double kDefaultBeta = 1.0;
inline constexpr double kDefaultEpsilon = 1e-9;

/// Percentages accepted as CLI presets.
inline constexpr std::array<int, 7> kPercentPresets = {1, 5, 10, 15, 20, 30, 50};

struct SelectionPolicy {
  Algorithm algorithm = Algorithm::Adaptive1;
  std::vector<Role> roles = roles_for(ObjectsPreset::Two);
  double beta = kDefaultBeta;
  double epsilon = kDefaultEpsilon;
  SelectionCriterion criterion = TargetFraction{};
  Accumulation accumulation = Accumulation::Anchored;
  FrameIndex gap_max = kDefaultGapMax;
};

/// f(z) = 1 / (z + eps)^beta.
inline double decreasing_transform(double z, double beta, double epsilon) {
  return 1.0 / std::pow(z + epsilon, beta);
}

/// The z-scale budget equivalent to an f-scale threshold: d^(-1/beta) - eps.
inline double budget_from_threshold(double threshold, double beta, double epsilon) {
  return std::pow(threshold, -1.0 / beta) - epsilon;
}

/// Inclusive frame interval.
struct FrameRange {
  FrameIndex first = 0;
  FrameIndex last = 0;

  FrameIndex count() const { return last - first + 1; }
  bool contains(FrameIndex f) const { return f >= first && f <= last; }
};

struct KeyFrameSet {
  std::string video_id;
  std::vector<FrameIndex> selected;  // strictly increasing
  double achieved_fraction = 0.0;
  SelectionPolicy policy;
  /// z-scale budget actually used (after calibration or threshold
  /// conversion); absent for UFS.
  std::optional<double> budget;

  friend bool operator==(const KeyFrameSet& a, const KeyFrameSet& b) {
    return a.video_id == b.video_id && a.selected == b.selected &&
           a.achieved_fraction == b.achieved_fraction && a.budget == b.budget;
  }
};

/// Firing rule of the anchored sweep. Either scale can be used; a frame never
/// fires on zero accumulated change.
class Crossing {
 public:
  static Crossing budget(double z) { return Crossing(Scale::Budget, z, 1.0, 0.0); }
  static Crossing threshold(double d, double beta, double epsilon) {
    return Crossing(Scale::Threshold, d, beta, epsilon);
  }

  bool operator()(double accumulated) const {
    if (!(accumulated > 0.0)) return false;
    if (scale_ == Scale::Budget) return accumulated >= value_;
    return decreasing_transform(accumulated, beta_, epsilon_) <= value_;
  }

 private:
  enum class Scale { Budget, Threshold };
  Crossing(Scale scale, double value, double beta, double epsilon)
      : scale_(scale), value_(value), beta_(beta), epsilon_(epsilon) {}

  Scale scale_;
  double value_;
  double beta_;
  double epsilon_;
};

/// Prepared inputs of one video for an anchored sweep: the per-frame data the
/// accumulation terms read, laid out densely over the video's frame range.
class SweepProblem {
 public:
  /// Adaptive 1: centroid displacement of the given roles.
  static SweepProblem displacement(std::span<const ToolTrack> tracks, std::span<const Role> roles,
                                   Accumulation accumulation,
                                   std::optional<FrameRange> range = std::nullopt);

  /// Adaptive 2: variation of scalar speed of the given roles.
  static SweepProblem speed_variation(std::span<const KinematicSeries> series,
                                      std::span<const Role> roles, Accumulation accumulation,
                                      std::optional<FrameRange> range = std::nullopt);

  /// Pixel MSE between frames (positions in `frames` order). The frames are
  /// referenced, not copied, and must outlive the problem.
  static SweepProblem pixel_mse(std::span<const IndexedFrame> frames, Accumulation accumulation);

  const std::string& video_id() const { return video_id_; }
  std::size_t frame_count() const { return frames_.size(); }
  const std::vector<FrameIndex>& frames() const { return frames_; }

  /// Runs the sweep and returns the selected frame indices.
  std::vector<FrameIndex> select(const Crossing& crossing) const;
  std::size_t count(double budget) const { return select(Crossing::budget(budget)).size(); }

  /// Accumulation from the first eligible frame through the last frame with
  /// no re-anchoring; any budget above it selects only the first frame.
  double total_accumulation() const;

 private:
  struct Motion {
    std::vector<Eigen::Matrix2Xd> positions;  // one 2 x n block per role
    std::vector<std::vector<bool>> present;
  };
  struct Speeds {
    std::vector<Eigen::VectorXd> speed;  // one per role, 0 where undefined
    std::vector<std::vector<bool>> defined;
  };
  struct Pixels {
    std::vector<const GrayscaleFrame*> images;
  };

  SweepProblem() = default;
  double term(std::size_t anchor, std::size_t k) const;

  std::string video_id_;
  std::vector<FrameIndex> frames_;
  std::size_t start_ = 0;
  Accumulation accumulation_ = Accumulation::Anchored;
  std::variant<Motion, Speeds, Pixels> data_;
};

struct Calibration {
  double budget = 0.0;
  double achieved_fraction = 0.0;
  std::size_t selected_count = 0;
  std::size_t target_count = 0;
};

/// Searches the budget whose selected count is closest to
/// round(target_fraction * N), preferring counts at or above the target on
/// ties. Throws UnreachableTarget when even the smallest budget selects too
/// few frames, InvalidFraction for target outside (0, 1].
Calibration calibrate_threshold(const SweepProblem& problem, double target_fraction);

/// One budget fitted to the pooled count of several videos.
Calibration calibrate_threshold(std::span<const SweepProblem> problems, double target_fraction);

/// Builds the sweep problem the policy describes (Adaptive1 or Adaptive2).
SweepProblem make_problem(std::span<const ToolTrack> tracks, const SelectionPolicy& policy,
                          std::optional<FrameRange> range = std::nullopt);

KeyFrameSet adaptive1_select(std::span<const ToolTrack> tracks, const SelectionPolicy& policy,
                             std::optional<FrameRange> range = std::nullopt);

KeyFrameSet adaptive2_select(std::span<const ToolTrack> tracks, const SelectionPolicy& policy,
                             std::optional<FrameRange> range = std::nullopt);

/// Adaptive 2 on precomputed speed series.
KeyFrameSet adaptive2_select(std::span<const KinematicSeries> series, const SelectionPolicy& policy,
                             std::optional<FrameRange> range = std::nullopt);

KeyFrameSet mse_select(std::span<const IndexedFrame> frames, const SelectionPolicy& policy,
                       std::string video_id = {});

/// Evenly spaced indices 0..frame_count-1, always including the first and
/// last frame when more than one is kept.
KeyFrameSet ufs_select(FrameIndex frame_count, double target_fraction);
KeyFrameSet ufs_select(const FrameRange& range, double target_fraction, std::string video_id);

/// Runs a problem under a policy's criterion (budget, threshold or target).
KeyFrameSet select_with_policy(const SweepProblem& problem, const SelectionPolicy& policy);

/// Frame range covered by a set of tracks (min..max sample frame).
FrameRange frame_range_of(std::span<const ToolTrack> tracks);

std::size_t target_count(std::size_t frame_count, double target_fraction);

}  // namespace kafr

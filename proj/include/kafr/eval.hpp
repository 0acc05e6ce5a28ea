#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kafr/pipeline.hpp"

namespace kafr {

inline constexpr int kDefaultSmoothingWindow = 31;

using ClassProbabilities = std::array<double, kPhaseCount>;
using ConfusionMatrix = Eigen::Matrix<std::int64_t, kPhaseCount, kPhaseCount>;

struct PredictionEntry {
  FrameIndex frame_index = 0;
  int label = 0;
  friend bool operator==(const PredictionEntry&, const PredictionEntry&) = default;
};

struct PredictionSequence {
  std::string video_id;
  std::vector<PredictionEntry> entries;
  /// Empty, or one probability vector per entry.
  std::vector<ClassProbabilities> probabilities;

  friend bool operator==(const PredictionSequence&, const PredictionSequence&) = default;
};

/// Strictly increasing frames, labels in 0..6, probabilities normalized.
void validate(const PredictionSequence& pred);

struct EvalOptions {
  bool include_idle = true;  // false: frames whose truth is idle are not scored
};

struct F1Scores {
  double macro = 0.0;
  std::array<double, kPhaseCount> per_class{};
};

struct MetricReport {
  double accuracy = 0.0;
  double f1_macro = 0.0;
  std::array<double, kPhaseCount> per_class_f1{};
  ConfusionMatrix confusion = ConfusionMatrix::Zero();
  std::optional<double> accuracy_change_pct;
  std::optional<double> f1_change_pct;
};

/// Rows are ground truth, columns predictions. Throws UncoveredFrame for a
/// predicted frame outside every annotation of its video.
ConfusionMatrix confusion_matrix(std::span<const PredictionSequence> predictions,
                                 std::span<const PhaseAnnotation> truth,
                                 const EvalOptions& options = {});

double accuracy(const ConfusionMatrix& confusion);
/// Per-class F1 (0 where undefined); macro mean over classes present in truth.
F1Scores f1_scores(const ConfusionMatrix& confusion);

double accuracy(const PredictionSequence& pred, std::span<const PhaseAnnotation> truth,
                const EvalOptions& options = {});
F1Scores f1_macro(const PredictionSequence& pred, std::span<const PhaseAnnotation> truth,
                  const EvalOptions& options = {});

struct Baseline {
  double accuracy = 0.0;
  double f1_macro = 0.0;
};

MetricReport evaluate(std::span<const PredictionSequence> predictions,
                      std::span<const PhaseAnnotation> truth, const EvalOptions& options = {},
                      std::optional<Baseline> baseline = std::nullopt);

/// (new - old) / old * 100, unrounded. Throws ZeroBaseline unless old > 0.
double relative_change_exact(double old_value, double new_value);
/// relative_change_exact truncated toward zero to two decimals, the way the
/// published accuracy deltas are reported.
double relative_change(double old_value, double new_value);

/// Centered modal filter. The window shrinks at the sequence edges; ties keep
/// the original label when it is among the modes, else the smallest label.
PredictionSequence temporal_smooth(const PredictionSequence& pred,
                                   int window = kDefaultSmoothingWindow);

/// Averages aligned probability vectors and predicts their argmax.
PredictionSequence ensemble_mean(std::span<const PredictionSequence> streams);

/// Predicts, for every frame of `frames`, the phase with the most frames in
/// the training manifest (duplicates counted; ties to the smaller label).
PredictionSequence majority_predictor(std::span<const FrameManifest> training,
                                      std::string video_id, std::span<const FrameIndex> frames);

std::string confusion_csv(const MetricReport& report);

// ---------------------------------------------------------------------------
// Timeline rendering
// ---------------------------------------------------------------------------

struct TimelineRow {
  std::string label;
  std::vector<std::pair<FrameIndex, int>> items;  // (frame, phase)
};

TimelineRow timeline_row(std::string label, std::span<const PhaseAnnotation> video_annotations);
TimelineRow timeline_row(std::string label, const FrameManifest& manifest);
TimelineRow timeline_row(std::string label, const PredictionSequence& pred);

/// Phase colors: 1 Blue, 2 Yellow, 3 Green, 4 Orange, 5 Indigo, 6 Violet, 0 Gray.
std::string_view phase_color(int phase);
std::string_view phase_name(int phase);

/// Horizontal color-band chart as SVG, one row per input row plus a legend.
std::string render_timeline(std::span<const TimelineRow> rows);

}  // namespace kafr

#include "kafr/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace kafr {

void validate(const PredictionSequence& pred) {
  for (std::size_t i = 0; i < pred.entries.size(); ++i) {
    const auto& e = pred.entries[i];
    if (e.label < 0 || e.label >= kPhaseCount) {
      throw Error(ErrorKind::MalformedRecord, "label " + std::to_string(e.label) + " not in 0..6");
    }
    if (i > 0 && e.frame_index <= pred.entries[i - 1].frame_index) {
      throw Error(ErrorKind::MalformedRecord, "prediction frames must be strictly increasing");
    }
  }
  if (!pred.probabilities.empty()) {
    if (pred.probabilities.size() != pred.entries.size()) {
      throw Error(ErrorKind::MalformedRecord, "one probability vector per entry expected");
    }
    for (const auto& p : pred.probabilities) {
      double sum = 0.0;
      for (double v : p) {
        if (!(v >= 0.0)) throw Error(ErrorKind::MalformedRecord, "negative probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw Error(ErrorKind::MalformedRecord, "probabilities must sum to 1");
      }
    }
  }
}

ConfusionMatrix confusion_matrix(std::span<const PredictionSequence> predictions,
                                 std::span<const PhaseAnnotation> truth,
                                 const EvalOptions& options) {
  ConfusionMatrix c = ConfusionMatrix::Zero();
  for (const auto& pred : predictions) {
    validate(pred);
    const auto segments = annotations_for(truth, pred.video_id);
    for (const auto& e : pred.entries) {
      const int actual = phase_at(segments, e.frame_index);
      if (!options.include_idle && actual == kIdlePhase) continue;
      ++c(actual, e.label);
    }
  }
  return c;
}

double accuracy(const ConfusionMatrix& confusion) {
  const auto total = confusion.sum();
  if (total == 0) return 0.0;
  return static_cast<double>(confusion.trace()) / static_cast<double>(total);
}

F1Scores f1_scores(const ConfusionMatrix& confusion) {
  F1Scores s;
  const Eigen::Matrix<std::int64_t, kPhaseCount, 1> truth_counts = confusion.rowwise().sum();
  const Eigen::Matrix<std::int64_t, 1, kPhaseCount> pred_counts = confusion.colwise().sum();
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < kPhaseCount; ++c) {
    const auto tp = confusion(c, c);
    const auto fp = pred_counts(c) - tp;
    const auto fn = truth_counts(c) - tp;
    const auto denom = 2 * tp + fp + fn;
    s.per_class[static_cast<std::size_t>(c)] =
        denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    if (truth_counts(c) > 0) {
      sum += s.per_class[static_cast<std::size_t>(c)];
      ++present;
    }
  }
  s.macro = present == 0 ? 0.0 : sum / present;
  return s;
}

double accuracy(const PredictionSequence& pred, std::span<const PhaseAnnotation> truth,
                const EvalOptions& options) {
  return accuracy(confusion_matrix(std::span(&pred, 1), truth, options));
}

F1Scores f1_macro(const PredictionSequence& pred, std::span<const PhaseAnnotation> truth,
                  const EvalOptions& options) {
  return f1_scores(confusion_matrix(std::span(&pred, 1), truth, options));
}

MetricReport evaluate(std::span<const PredictionSequence> predictions,
                      std::span<const PhaseAnnotation> truth, const EvalOptions& options,
                      std::optional<Baseline> baseline) {
  MetricReport r;
  r.confusion = confusion_matrix(predictions, truth, options);
  r.accuracy = accuracy(r.confusion);
  const auto f1 = f1_scores(r.confusion);
  r.f1_macro = f1.macro;
  r.per_class_f1 = f1.per_class;
  if (baseline) {
    r.accuracy_change_pct = relative_change(baseline->accuracy, r.accuracy);
    r.f1_change_pct = relative_change(baseline->f1_macro, r.f1_macro);
  }
  return r;
}

double relative_change_exact(double old_value, double new_value) {
  if (!(old_value > 0.0)) {
    throw Error(ErrorKind::ZeroBaseline, "relative change needs a positive baseline");
  }
  return (new_value - old_value) / old_value * 100.0;
}

double relative_change(double old_value, double new_value) {
  const double pct = relative_change_exact(old_value, new_value);
  // absorb representation error so an exact 2.05 does not truncate to 2.04
  const double scaled = pct * 100.0;
  const double nudged = scaled + std::copysign(1e-9 * std::max(1.0, std::abs(scaled)), scaled);
  const double truncated = std::trunc(nudged) / 100.0;
  return truncated == 0.0 ? 0.0 : truncated;
}

PredictionSequence temporal_smooth(const PredictionSequence& pred, int window) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorKind::InvalidParams, "smoothing window must be odd and >= 1");
  }
  validate(pred);
  PredictionSequence out = pred;
  const auto n = static_cast<std::ptrdiff_t>(pred.entries.size());
  const std::ptrdiff_t half = window / 2;
  std::array<int, kPhaseCount> counts{};
  std::ptrdiff_t lo = 0;
  std::ptrdiff_t hi = -1;  // current window is [lo, hi]
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t want_lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t want_hi = std::min(n - 1, i + half);
    while (hi < want_hi) ++counts[static_cast<std::size_t>(pred.entries[static_cast<std::size_t>(++hi)].label)];
    while (lo < want_lo) --counts[static_cast<std::size_t>(pred.entries[static_cast<std::size_t>(lo++)].label)];

    const int original = pred.entries[static_cast<std::size_t>(i)].label;
    const int top = *std::max_element(counts.begin(), counts.end());
    int chosen = original;
    if (counts[static_cast<std::size_t>(original)] != top) {
      chosen = static_cast<int>(std::find(counts.begin(), counts.end(), top) - counts.begin());
    }
    out.entries[static_cast<std::size_t>(i)].label = chosen;
  }
  return out;
}

PredictionSequence ensemble_mean(std::span<const PredictionSequence> streams) {
  if (streams.empty()) throw Error(ErrorKind::EmptyInput, "nothing to ensemble");
  const auto& first = streams.front();
  for (const auto& s : streams) {
    validate(s);
    if (s.video_id != first.video_id || s.entries.size() != first.entries.size()) {
      throw Error(ErrorKind::InvalidArgument, "ensembled streams must be aligned");
    }
    if (s.probabilities.empty()) {
      throw Error(ErrorKind::InvalidArgument, "ensembling needs class probabilities");
    }
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
      if (s.entries[i].frame_index != first.entries[i].frame_index) {
        throw Error(ErrorKind::InvalidArgument, "ensembled streams must be aligned");
      }
    }
  }
  PredictionSequence out{first.video_id, first.entries, {}};
  out.probabilities.resize(first.entries.size());
  for (std::size_t i = 0; i < first.entries.size(); ++i) {
    Eigen::Matrix<double, kPhaseCount, 1> mean = Eigen::Matrix<double, kPhaseCount, 1>::Zero();
    for (const auto& s : streams) {
      mean += Eigen::Map<const Eigen::Matrix<double, kPhaseCount, 1>>(s.probabilities[i].data());
    }
    mean /= static_cast<double>(streams.size());
    Eigen::Index best = 0;
    mean.maxCoeff(&best);
    out.entries[i].label = static_cast<int>(best);
    Eigen::Map<Eigen::Matrix<double, kPhaseCount, 1>>(out.probabilities[i].data()) = mean;
  }
  return out;
}

PredictionSequence majority_predictor(std::span<const FrameManifest> training,
                                      std::string video_id, std::span<const FrameIndex> frames) {
  std::array<std::size_t, kPhaseCount> counts{};
  for (const auto& m : training) {
    for (const auto& e : m.entries) {
      counts[static_cast<std::size_t>(e.phase_label)] += static_cast<std::size_t>(e.duplication_count);
    }
  }
  const int majority =
      static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  PredictionSequence out{std::move(video_id), {}, {}};
  out.entries.reserve(frames.size());
  for (FrameIndex f : frames) out.entries.push_back({f, majority});
  return out;
}

std::string confusion_csv(const MetricReport& report) {
  std::string out = "truth\\pred";
  for (int c = 0; c < kPhaseCount; ++c) out += fmt::format(",{}", c);
  out += '\n';
  for (int r = 0; r < kPhaseCount; ++r) {
    out += std::to_string(r);
    for (int c = 0; c < kPhaseCount; ++c) out += fmt::format(",{}", report.confusion(r, c));
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Timeline
// ---------------------------------------------------------------------------

std::string_view phase_color(int phase) {
  static constexpr std::array<std::string_view, kPhaseCount> colors = {
      "#808080",  // 0 gray (idle)
      "#0000FF",  // 1 blue
      "#FFFF00",  // 2 yellow
      "#008000",  // 3 green
      "#FFA500",  // 4 orange
      "#4B0082",  // 5 indigo
      "#EE82EE",  // 6 violet
  };
  if (phase < 0 || phase >= kPhaseCount) return "#000000";
  return colors[static_cast<std::size_t>(phase)];
}

std::string_view phase_name(int phase) {
  static constexpr std::array<std::string_view, kPhaseCount> names = {
      "Idle time",
      "1.1 Stay suture",
      "1.2 Inner running suture",
      "1.3 Enterotomy",
      "2.2 Inner running suture",
      "3.1 Inner Layer of Connell",
      "4.1 Outer Layer of Connell",
  };
  if (phase < 0 || phase >= kPhaseCount) return "unknown";
  return names[static_cast<std::size_t>(phase)];
}

TimelineRow timeline_row(std::string label, std::span<const PhaseAnnotation> video_annotations) {
  TimelineRow row{std::move(label), {}};
  for (const auto& a : video_annotations) {
    for (FrameIndex f = a.start_frame; f <= a.end_frame; ++f) row.items.emplace_back(f, a.phase_label);
  }
  std::sort(row.items.begin(), row.items.end());
  return row;
}

TimelineRow timeline_row(std::string label, const FrameManifest& manifest) {
  TimelineRow row{std::move(label), {}};
  for (const auto& e : manifest.entries) row.items.emplace_back(e.frame_index, e.phase_label);
  return row;
}

TimelineRow timeline_row(std::string label, const PredictionSequence& pred) {
  TimelineRow row{std::move(label), {}};
  for (const auto& e : pred.entries) row.items.emplace_back(e.frame_index, e.label);
  return row;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kLabelWidth = 180.0;
constexpr double kPlotWidth = 1000.0;
constexpr double kRowHeight = 24.0;
constexpr double kRowGap = 8.0;
constexpr double kMargin = 10.0;
constexpr double kLegendRow = 18.0;
constexpr double kHeader = 22.0;

}  // namespace

std::string render_timeline(std::span<const TimelineRow> rows) {
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "timeline needs at least one row");

  FrameIndex lo = std::numeric_limits<FrameIndex>::max();
  FrameIndex hi = std::numeric_limits<FrameIndex>::min();
  for (const auto& r : rows) {
    for (const auto& [f, phase] : r.items) {
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
  }
  if (lo > hi) lo = hi = 0;
  const double scale = kPlotWidth / static_cast<double>(hi - lo + 1);

  const double rows_height = static_cast<double>(rows.size()) * (kRowHeight + kRowGap);
  const double legend_top = kHeader + rows_height + kRowGap;
  const double width = kMargin * 2 + kLabelWidth + kPlotWidth;
  const double height = legend_top + kPhaseCount * kLegendRow + kMargin;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height, width, height);
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"#FFFFFF\"/>\n",
                     width, height);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"#000000\">frames {}-{}</text>\n",
                     kMargin + kLabelWidth, kHeader - 6.0, lo, hi);

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y = kHeader + static_cast<double>(r) * (kRowHeight + kRowGap);
    svg += fmt::format("<g id=\"row{}\">\n", r);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"#000000\">{}</text>\n", kMargin,
                       y + kRowHeight * 0.7, xml_escape(rows[r].label));
    const auto& items = rows[r].items;
    std::size_t i = 0;
    while (i < items.size()) {
      // run of one phase over consecutive frame indices
      std::size_t j = i + 1;
      while (j < items.size() && items[j].second == items[i].second &&
             items[j].first == items[j - 1].first + 1) {
        ++j;
      }
      const double x = kMargin + kLabelWidth + static_cast<double>(items[i].first - lo) * scale;
      const double w = static_cast<double>(items[j - 1].first - items[i].first + 1) * scale;
      svg += fmt::format(
          "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x,
          y, w, kRowHeight, phase_color(items[i].second));
      i = j;
    }
    svg += "</g>\n";
  }

  svg += "<g id=\"legend\">\n";
  const std::array<int, kPhaseCount> order = {1, 2, 3, 4, 5, 6, 0};
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double y = legend_top + static_cast<double>(k) * kLegendRow;
    svg += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"14.00\" height=\"14.00\" fill=\"{}\" "
        "stroke=\"#000000\" stroke-width=\"0.5\"/>\n",
        kMargin + kLabelWidth, y, phase_color(order[k]));
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"#000000\">{} - {}</text>\n",
                       kMargin + kLabelWidth + 20.0, y + 11.0, order[k],
                       xml_escape(phase_name(order[k])));
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace kafr

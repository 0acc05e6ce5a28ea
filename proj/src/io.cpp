#include "kafr/io.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "kafr/text.hpp"

namespace kafr {

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& message) {
  throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line) + ": " + message);
}

template <typename T>
T field(std::string_view s, std::size_t line, const char* name) {
  T v{};
  if (!text::parse_number(s, v)) malformed(line, std::string("bad ") + name + " '" + std::string(s) + "'");
  return v;
}

/// Data lines after a required header, with 1-based line numbers.
std::vector<std::pair<std::size_t, std::string_view>> csv_body(std::string_view text,
                                                               std::string_view header) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  const auto lines = text::split_lines(text);
  std::size_t i = 0;
  while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
  if (i == lines.size()) throw Error(ErrorKind::EmptyStream, "CSV has no header");
  if (text::trim(lines[i]) != header) {
    malformed(i + 1, "expected header '" + std::string(header) + "'");
  }
  std::vector<std::pair<std::size_t, std::string_view>> body;
  for (++i; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (!line.empty()) body.emplace_back(i + 1, line);
  }
  return body;
}

}  // namespace

// ---------------------------------------------------------------------------
// Key frames
// ---------------------------------------------------------------------------

ordered_json policy_to_json(const SelectionPolicy& policy) {
  ordered_json j;
  j["algorithm"] = to_string(policy.algorithm);
  auto roles = ordered_json::array();
  for (Role r : policy.roles) roles.push_back(to_string(r));
  j["roles"] = std::move(roles);
  j["beta"] = policy.beta;
  j["epsilon"] = policy.epsilon;
  j["accumulation"] = to_string(policy.accumulation);
  j["gap_max"] = policy.gap_max == kNoGapLimit ? ordered_json(nullptr) : ordered_json(policy.gap_max);
  j["budget"] = nullptr;
  j["threshold"] = nullptr;
  j["target_fraction"] = nullptr;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AccumulationBudget>) j["budget"] = c.value;
        if constexpr (std::is_same_v<T, FThreshold>) j["threshold"] = c.value;
        if constexpr (std::is_same_v<T, TargetFraction>) j["target_fraction"] = c.value;
      },
      policy.criterion);
  return j;
}

ordered_json keyframes_to_json(const KeyFrameSet& keyframes) {
  ordered_json j;
  j["video_id"] = keyframes.video_id;
  auto policy = policy_to_json(keyframes.policy);
  policy["resolved_budget"] = keyframes.budget ? ordered_json(*keyframes.budget) : ordered_json(nullptr);
  j["policy"] = std::move(policy);
  j["achieved_fraction"] = keyframes.achieved_fraction;
  j["selected"] = keyframes.selected;
  return j;
}

std::string keyframes_json(const KeyFrameSet& keyframes) {
  return keyframes_to_json(keyframes).dump() + "\n";
}

KeyFrameSet keyframes_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("key frame JSON: ") + e.what());
  }
  try {
    KeyFrameSet k;
    k.video_id = j.at("video_id").get<std::string>();
    k.selected = j.at("selected").get<std::vector<FrameIndex>>();
    k.achieved_fraction = j.at("achieved_fraction").get<double>();
    for (std::size_t i = 1; i < k.selected.size(); ++i) {
      if (k.selected[i] <= k.selected[i - 1]) {
        throw Error(ErrorKind::MalformedRecord, "selected frames must be strictly increasing");
      }
    }
    if (auto p = j.find("policy"); p != j.end() && p->is_object()) {
      if (auto a = algorithm_from_string(p->value("algorithm", ""))) k.policy.algorithm = *a;
      if (p->contains("roles")) {
        k.policy.roles.clear();
        for (const auto& r : p->at("roles")) {
          if (auto role = role_from_string(r.get<std::string>())) k.policy.roles.push_back(*role);
        }
      }
      k.policy.beta = p->value("beta", kDefaultBeta);
      k.policy.epsilon = p->value("epsilon", kDefaultEpsilon);
      k.policy.accumulation = p->value("accumulation", std::string("anchored")) == "consecutive"
                                  ? Accumulation::Consecutive
                                  : Accumulation::Anchored;
      if (auto g = p->find("gap_max"); g != p->end()) {
        k.policy.gap_max = g->is_null() ? kNoGapLimit : g->get<FrameIndex>();
      }
      if (p->contains("budget") && !p->at("budget").is_null()) {
        k.policy.criterion = AccumulationBudget{p->at("budget").get<double>()};
      } else if (p->contains("threshold") && !p->at("threshold").is_null()) {
        k.policy.criterion = FThreshold{p->at("threshold").get<double>()};
      } else if (p->contains("target_fraction") && !p->at("target_fraction").is_null()) {
        k.policy.criterion = TargetFraction{p->at("target_fraction").get<double>()};
      }
      if (p->contains("resolved_budget") && !p->at("resolved_budget").is_null()) {
        k.budget = p->at("resolved_budget").get<double>();
      }
    }
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("key frame JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

constexpr std::string_view kAnnotationHeader = "video_id,phase_label,start_frame,end_frame";

std::vector<PhaseAnnotation> parse_annotations_csv(std::string_view text) {
  std::vector<PhaseAnnotation> out;
  for (const auto& [line_no, line] : csv_body(text, kAnnotationHeader)) {
    const auto f = text::split(line, ',');
    if (f.size() != 4) malformed(line_no, "expected 4 fields");
    PhaseAnnotation a;
    a.video_id = std::string(f[0]);
    a.phase_label = field<int>(f[1], line_no, "phase_label");
    a.start_frame = field<FrameIndex>(f[2], line_no, "start_frame");
    a.end_frame = field<FrameIndex>(f[3], line_no, "end_frame");
    if (a.video_id.empty()) malformed(line_no, "empty video_id");
    if (a.phase_label < 0 || a.phase_label >= kPhaseCount) malformed(line_no, "phase_label not in 0..6");
    if (a.start_frame < 0 || a.start_frame > a.end_frame) malformed(line_no, "bad frame range");
    out.push_back(std::move(a));
  }
  return out;
}

std::string annotations_csv(std::span<const PhaseAnnotation> annotations) {
  std::string out(kAnnotationHeader);
  out += '\n';
  for (const auto& a : annotations) {
    out += a.video_id + ',' + std::to_string(a.phase_label) + ',' + std::to_string(a.start_frame) +
           ',' + std::to_string(a.end_frame) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifests and clips
// ---------------------------------------------------------------------------

constexpr std::string_view kManifestHeader = "video_id,frame,phase,dup_count,provenance";

std::vector<FrameManifest> parse_manifest_csv(std::string_view text) {
  std::vector<FrameManifest> out;
  std::map<std::string, std::size_t, std::less<>> index;
  for (const auto& [line_no, line] : csv_body(text, kManifestHeader)) {
    const auto f = text::split(line, ',');
    if (f.size() != 5) malformed(line_no, "expected 5 fields");
    Provenance prov;
    if (f[4] == "raw") {
      prov = Provenance::Raw;
    } else if (f[4] == "resampled") {
      prov = Provenance::Resampled;
    } else if (f[4] == "selected") {
      prov = Provenance::Selected;
    } else {
      malformed(line_no, "unknown provenance '" + std::string(f[4]) + "'");
    }
    ManifestEntry e;
    e.frame_index = field<FrameIndex>(f[1], line_no, "frame");
    e.phase_label = field<int>(f[2], line_no, "phase");
    e.duplication_count = field<int>(f[3], line_no, "dup_count");
    if (e.phase_label < 0 || e.phase_label >= kPhaseCount) malformed(line_no, "phase not in 0..6");
    if (e.duplication_count < 1) malformed(line_no, "dup_count must be >= 1");

    auto it = index.find(f[0]);
    if (it == index.end()) {
      it = index.emplace(std::string(f[0]), out.size()).first;
      out.push_back({std::string(f[0]), {}, prov});
    }
    auto& m = out[it->second];
    if (m.provenance != prov) malformed(line_no, "mixed provenance within one video");
    if (!m.entries.empty() && e.frame_index < m.entries.back().frame_index) {
      malformed(line_no, "manifest entries must be ordered by frame");
    }
    m.entries.push_back(e);
  }
  return out;
}

std::string manifest_csv(std::span<const FrameManifest> manifests) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& m : manifests) {
    const auto prov = std::string(to_string(m.provenance));
    for (const auto& e : m.entries) {
      out += m.video_id + ',' + std::to_string(e.frame_index) + ',' +
             std::to_string(e.phase_label) + ',' + std::to_string(e.duplication_count) + ',' +
             prov + '\n';
    }
  }
  return out;
}

std::string clips_jsonl(std::span<const ClipWindow> clips) {
  std::string out;
  for (const auto& c : clips) {
    ordered_json j;
    j["video_id"] = c.video_id;
    j["end"] = c.end_frame;
    j["members"] = c.members;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ClipWindow> parse_clips_jsonl(std::string_view text) {
  std::vector<ClipWindow> out;
  const auto lines = text::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("video_id").get<std::string>(), j.at("end").get<FrameIndex>(),
                     j.at("members").get<std::vector<FrameIndex>>()});
    } catch (const nlohmann::json::exception& e) {
      malformed(i + 1, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics and predictions
// ---------------------------------------------------------------------------

ordered_json metrics_to_json(const MetricReport& report) {
  ordered_json j;
  j["accuracy"] = report.accuracy;
  j["f1_macro"] = report.f1_macro;
  j["per_class_f1"] = report.per_class_f1;
  auto confusion = ordered_json::array();
  for (int r = 0; r < kPhaseCount; ++r) {
    auto row = ordered_json::array();
    for (int c = 0; c < kPhaseCount; ++c) row.push_back(report.confusion(r, c));
    confusion.push_back(std::move(row));
  }
  j["confusion"] = std::move(confusion);
  j["accuracy_change_pct"] =
      report.accuracy_change_pct ? ordered_json(*report.accuracy_change_pct) : ordered_json(nullptr);
  j["f1_change_pct"] =
      report.f1_change_pct ? ordered_json(*report.f1_change_pct) : ordered_json(nullptr);
  return j;
}

std::vector<PredictionSequence> parse_predictions_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  const auto lines = text::split_lines(text);
  std::size_t first = 0;
  while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error(ErrorKind::EmptyStream, "predictions CSV is empty");
  const auto header = text::trim(lines[first]);
  const bool with_probs = header == "video_id,frame,label,p0,p1,p2,p3,p4,p5,p6";
  if (!with_probs && header != "video_id,frame,label") {
    malformed(first + 1, "expected header 'video_id,frame,label[,p0..p6]'");
  }

  std::vector<PredictionSequence> out;
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != (with_probs ? 10u : 3u)) malformed(i + 1, "wrong field count");
    auto it = index.find(f[0]);
    if (it == index.end()) {
      it = index.emplace(std::string(f[0]), out.size()).first;
      out.push_back({std::string(f[0]), {}, {}});
    }
    auto& seq = out[it->second];
    seq.entries.push_back({field<FrameIndex>(f[1], i + 1, "frame"), field<int>(f[2], i + 1, "label")});
    if (with_probs) {
      ClassProbabilities p{};
      for (int c = 0; c < kPhaseCount; ++c) {
        p[static_cast<std::size_t>(c)] = field<double>(f[3 + static_cast<std::size_t>(c)], i + 1, "probability");
      }
      seq.probabilities.push_back(p);
    }
  }
  for (const auto& seq : out) validate(seq);
  return out;
}

std::string predictions_csv(std::span<const PredictionSequence> predictions) {
  bool with_probs = !predictions.empty();
  for (const auto& p : predictions) with_probs = with_probs && !p.probabilities.empty();
  std::string out = with_probs ? "video_id,frame,label,p0,p1,p2,p3,p4,p5,p6\n" : "video_id,frame,label\n";
  for (const auto& p : predictions) {
    for (std::size_t i = 0; i < p.entries.size(); ++i) {
      out += p.video_id + ',' + std::to_string(p.entries[i].frame_index) + ',' +
             std::to_string(p.entries[i].label);
      if (with_probs) {
        for (double v : p.probabilities[i]) out += ',' + text::format_double(v);
      }
      out += '\n';
    }
  }
  return out;
}

ordered_json reduction_to_json(const ReductionReport& report) {
  auto phase_json = [](const PhaseReduction& p) {
    ordered_json j;
    j["before"] = p.before;
    j["after"] = p.after;
    j["duplicates_before"] = p.duplicates_before;
    j["duplicates_after"] = p.duplicates_after;
    return j;
  };
  ordered_json j;
  j["video_id"] = report.video_id;
  ordered_json phases = ordered_json::object();
  for (const auto& [phase, p] : report.per_phase) phases[std::to_string(phase)] = phase_json(p);
  j["per_phase"] = std::move(phases);
  j["total"] = phase_json(report.total);
  j["filtered_percent"] = report.filtered_percent;
  j["reduction_factor"] = report.reduction_factor;
  return j;
}

ordered_json calibration_to_json(const Calibration& c) {
  ordered_json j;
  j["budget"] = c.budget;
  j["achieved_fraction"] = c.achieved_fraction;
  j["selected_count"] = c.selected_count;
  j["target_count"] = c.target_count;
  return j;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace kafr

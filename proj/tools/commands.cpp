#include "commands.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "kafr/detections.hpp"
#include "kafr/error.hpp"
#include "kafr/eval.hpp"
#include "kafr/image.hpp"
#include "kafr/io.hpp"
#include "kafr/kinematics.hpp"
#include "kafr/pipeline.hpp"
#include "kafr/selection.hpp"
#include "kafr/synth.hpp"

namespace kafr::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorKind::InvalidParams, message);
}

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  j["command"] = c.command;
  j["detections"] = c.detections.string();
  j["detection_format"] = c.detection_format;
  j["annotations"] = c.annotations.string();
  j["frames_dir"] = c.frames_dir.string();
  j["keyframes_dir"] = c.keyframes_dir.string();
  j["manifest"] = c.manifest.string();
  j["predictions"] = c.predictions.string();
  j["majority_from"] = c.majority_from.string();
  j["video_id"] = c.video_id;
  j["min_confidence"] = c.min_confidence;
  j["image_width"] = c.image_width;
  j["gap_max"] = c.gap_max;
  j["algorithm"] = c.algorithm;
  j["objects"] = c.objects;
  j["beta"] = c.beta;
  j["epsilon"] = c.epsilon;
  j["target"] = optional_json(c.target);
  j["preset"] = c.preset ? ordered_json(*c.preset) : ordered_json(nullptr);
  j["budget"] = optional_json(c.budget);
  j["threshold"] = optional_json(c.threshold);
  j["consecutive"] = c.consecutive;
  j["calibration"] = c.calibration;
  j["frames_per_step"] = c.frames_per_step;
  j["exclude_idle"] = c.exclude_idle;
  j["select_first"] = c.select_first;
  j["clip_length"] = c.clip_length;
  j["smooth"] = c.smooth;
  j["baseline_accuracy"] = optional_json(c.baseline_accuracy);
  j["baseline_f1"] = optional_json(c.baseline_f1);
  j["videos"] = c.videos;
  j["frames"] = c.frames;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["jobs"] = c.jobs;
  return j;
}

/// Tracks inputs read and artifacts written by one subcommand, and writes the
/// run manifest when done.
class Run {
 public:
  explicit Run(const RunConfig& config) : config_(config) {}

  std::string read(const fs::path& path) {
    if (path.empty()) config_error("missing input path");
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "no such file: " + path.string());
    std::string content = read_file(path);
    inputs_[path.string()] = sha256_hex(content);
    return content;
  }

  void note_input(const fs::path& path, std::string_view content) {
    inputs_[path.string()] = sha256_hex(content);
  }

  void write(const std::string& name, std::string_view content) {
    write_file_atomic(config_.out / name, content);
    outputs_[name] = sha256_hex(content);
  }

  void finish() {
    ordered_json j;
    j["command"] = config_.command;
    j["config"] = config_json(config_);
    ordered_json in = ordered_json::object();
    for (const auto& [k, v] : inputs_) in[k] = v;
    ordered_json out = ordered_json::object();
    for (const auto& [k, v] : outputs_) out[k] = v;
    j["inputs"] = std::move(in);
    j["outputs"] = std::move(out);
    if (config_.timestamp) {
      const auto now = std::chrono::system_clock::now().time_since_epoch();
      j["timestamp_unix"] = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    }
    write_file_atomic(config_.out / ("run_manifest_" + config_.command + ".json"),
                      j.dump(2) + "\n");
  }

 private:
  const RunConfig& config_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
/// failure.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

DetectionFormat detection_format(const RunConfig& c) {
  if (c.detection_format == "jsonl") return DetectionFormat::Jsonl;
  if (c.detection_format == "csv") return DetectionFormat::Csv;
  if (c.detection_format != "auto") config_error("unknown detection format " + c.detection_format);
  return c.detections.extension() == ".csv" ? DetectionFormat::Csv : DetectionFormat::Jsonl;
}

std::vector<Role> configured_roles(const RunConfig& c) {
  auto preset = objects_preset_from_string(c.objects);
  if (!preset) config_error("unknown objects preset '" + c.objects + "' (one|two|four|six)");
  return roles_for(*preset);
}

SelectionPolicy configured_policy(const RunConfig& c) {
  SelectionPolicy policy;
  auto algorithm = algorithm_from_string(c.algorithm);
  if (!algorithm) config_error("unknown algorithm '" + c.algorithm + "'");
  policy.algorithm = *algorithm;
  policy.roles = configured_roles(c);
  policy.beta = c.beta;
  policy.epsilon = c.epsilon;
  policy.accumulation = c.consecutive ? Accumulation::Consecutive : Accumulation::Anchored;
  policy.gap_max = c.gap_max < 0 ? kNoGapLimit : c.gap_max;
  if (!(c.beta > 0.0) || !(c.epsilon > 0.0)) config_error("beta and epsilon must be positive");

  const int given = int(c.target.has_value()) + int(c.preset.has_value()) +
                    int(c.budget.has_value()) + int(c.threshold.has_value());
  if (given > 1) config_error("give at most one of --target, --preset, --budget, --threshold");
  if (c.preset) {
    if (std::find(kPercentPresets.begin(), kPercentPresets.end(), *c.preset) == kPercentPresets.end()) {
      config_error(fmt::format("preset {} is not one of 1,5,10,15,20,30,50", *c.preset));
    }
    policy.criterion = TargetFraction{*c.preset / 100.0};
  } else if (c.target) {
    if (!(*c.target > 0.0 && *c.target <= 1.0)) config_error("target must lie in (0, 1]");
    policy.criterion = TargetFraction{*c.target};
  } else if (c.budget) {
    if (!(*c.budget >= 0.0)) config_error("budget must be >= 0");
    policy.criterion = AccumulationBudget{*c.budget};
  } else if (c.threshold) {
    if (!(*c.threshold > 0.0 && *c.threshold <= 1.0)) config_error("threshold must lie in (0, 1]");
    policy.criterion = FThreshold{*c.threshold};
  }
  if (policy.algorithm == Algorithm::UFS &&
      !std::holds_alternative<TargetFraction>(policy.criterion)) {
    config_error("ufs takes a target fraction, not a budget or threshold");
  }
  return policy;
}

struct VideoTracks {
  std::string video_id;
  std::vector<ToolTrack> tracks;
};

struct Ingested {
  ParseResult parsed;
  std::size_t kept = 0;
  std::vector<VideoTracks> videos;
};

Ingested ingest(Run& run, const RunConfig& c, const std::vector<Role>& roles) {
  Ingested in;
  in.parsed = parse_detections(run.read(c.detections), detection_format(c));
  const auto kept = filter_confidence(in.parsed.records, c.min_confidence);
  in.kept = kept.size();
  std::set<Part> parts;
  for (Role r : roles) parts.insert(part_of(r));
  for (auto& t : assign_roles(kept, c.image_width, parts)) {
    if (std::find(roles.begin(), roles.end(), t.role) == roles.end()) continue;
    if (in.videos.empty() || in.videos.back().video_id != t.video_id) {
      in.videos.push_back({t.video_id, {}});
    }
    in.videos.back().tracks.push_back(std::move(t));
  }
  if (in.videos.empty()) throw Error(ErrorKind::EmptyTracks, "no needle-driver detections survived");
  return in;
}

std::vector<std::string> annotated_videos(std::span<const PhaseAnnotation> annotations) {
  std::set<std::string> ids;
  for (const auto& a : annotations) ids.insert(a.video_id);
  return {ids.begin(), ids.end()};
}

FrameRange annotated_range(std::span<const PhaseAnnotation> video_annotations) {
  FrameRange r{video_annotations.front().start_frame, video_annotations.front().end_frame};
  for (const auto& a : video_annotations) {
    r.first = std::min(r.first, a.start_frame);
    r.last = std::max(r.last, a.end_frame);
  }
  return r;
}

std::string safe_name(const std::string& video_id) {
  std::string s = video_id;
  for (char& ch : s) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  }
  return s;
}

/// Sweep problems for the detection-driven algorithms, one per video.
std::vector<SweepProblem> build_problems(const std::vector<VideoTracks>& videos,
                                         const SelectionPolicy& policy, int jobs) {
  std::vector<std::optional<SweepProblem>> slots(videos.size());
  parallel_for(videos.size(), jobs,
               [&](std::size_t i) { slots[i] = make_problem(videos[i].tracks, policy); });
  std::vector<SweepProblem> problems;
  for (auto& s : slots) problems.push_back(std::move(*s));
  return problems;
}

bool corpus_calibration(const RunConfig& c) {
  if (c.calibration == "corpus") return true;
  if (c.calibration != "per-video") config_error("calibration must be per-video or corpus");
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_ingest(const RunConfig& c) {
  Run run(c);
  const auto in = ingest(run, c, configured_roles(c));
  std::vector<KinematicSeries> series;
  ordered_json tracks = ordered_json::array();
  for (const auto& v : in.videos) {
    for (const auto& t : v.tracks) {
      ordered_json tj;
      tj["video_id"] = t.video_id;
      tj["role"] = to_string(t.role);
      tj["samples"] = t.samples.size();
      tracks.push_back(std::move(tj));
      if (!t.samples.empty()) {
        series.push_back(compute_kinematics(t, c.gap_max < 0 ? kNoGapLimit : c.gap_max));
      }
    }
  }
  ordered_json issues = ordered_json::array();
  for (const auto& issue : in.parsed.issues) {
    ordered_json ij;
    ij["line"] = issue.line;
    ij["kind"] = to_string(issue.kind);
    ij["field"] = issue.field;
    ij["message"] = issue.message;
    issues.push_back(std::move(ij));
  }
  ordered_json report;
  report["records"] = in.parsed.records.size();
  report["above_min_confidence"] = in.kept;
  report["issues"] = std::move(issues);
  report["tracks"] = std::move(tracks);
  run.write("kinematics.csv", kinematics_csv(series));
  run.write("ingest_report.json", report.dump(2) + "\n");
  run.finish();
}

void cmd_select(const RunConfig& c) {
  Run run(c);
  const SelectionPolicy policy = configured_policy(c);
  std::vector<KeyFrameSet> results;

  if (policy.algorithm == Algorithm::UFS) {
    const double f = std::get<TargetFraction>(policy.criterion).value;
    if (!c.annotations.empty()) {
      const auto anns = parse_annotations_csv(run.read(c.annotations));
      for (const auto& id : annotated_videos(anns)) {
        results.push_back(ufs_select(annotated_range(annotations_for(anns, id)), f, id));
      }
    } else {
      const auto in = ingest(run, c, policy.roles);
      for (const auto& v : in.videos) {
        results.push_back(ufs_select(frame_range_of(v.tracks), f, v.video_id));
      }
    }
    for (auto& r : results) r.policy = policy;
  } else if (policy.algorithm == Algorithm::MSE) {
    if (c.frames_dir.empty()) config_error("mse needs --frames-dir");
    const auto frames = read_frame_directory(c.frames_dir);
    const std::string id = c.video_id.empty() ? c.frames_dir.filename().string() : c.video_id;
    results.push_back(mse_select(frames, policy, id));
  } else {
    const auto in = ingest(run, c, policy.roles);
    const auto problems = build_problems(in.videos, policy, c.jobs);
    results.resize(problems.size());
    if (corpus_calibration(c) && std::holds_alternative<TargetFraction>(policy.criterion)) {
      const auto cal =
          calibrate_threshold(problems, std::get<TargetFraction>(policy.criterion).value);
      SelectionPolicy fixed = policy;
      fixed.criterion = AccumulationBudget{cal.budget};
      parallel_for(problems.size(), c.jobs, [&](std::size_t i) {
        results[i] = select_with_policy(problems[i], fixed);
        results[i].policy = policy;
      });
    } else {
      parallel_for(problems.size(), c.jobs,
                   [&](std::size_t i) { results[i] = select_with_policy(problems[i], policy); });
    }
  }

  ordered_json summary = ordered_json::array();
  for (const auto& r : results) {
    run.write("keyframes/" + safe_name(r.video_id) + ".json", keyframes_json(r));
    ordered_json s;
    s["video_id"] = r.video_id;
    s["selected_count"] = r.selected.size();
    s["achieved_fraction"] = r.achieved_fraction;
    s["budget"] = optional_json(r.budget);
    summary.push_back(std::move(s));
  }
  run.write("selection_summary.json", summary.dump(2) + "\n");
  run.finish();
}

void cmd_calibrate(const RunConfig& c) {
  Run run(c);
  SelectionPolicy policy = configured_policy(c);
  if (!std::holds_alternative<TargetFraction>(policy.criterion)) {
    config_error("calibrate takes --target or --preset");
  }
  if (policy.algorithm == Algorithm::UFS) config_error("ufs has no budget to calibrate");
  const double f = std::get<TargetFraction>(policy.criterion).value;

  std::vector<SweepProblem> problems;
  std::vector<IndexedFrame> frames;  // outlives the pixel problem
  if (policy.algorithm == Algorithm::MSE) {
    if (c.frames_dir.empty()) config_error("mse needs --frames-dir");
    frames = read_frame_directory(c.frames_dir);
    problems.push_back(SweepProblem::pixel_mse(frames, policy.accumulation));
  } else {
    problems = build_problems(ingest(run, c, policy.roles).videos, policy, c.jobs);
  }

  ordered_json out;
  out["policy"] = policy_to_json(policy);
  out["target_fraction"] = f;
  if (corpus_calibration(c)) {
    out["mode"] = "corpus";
    out["corpus"] = calibration_to_json(calibrate_threshold(problems, f));
  } else {
    out["mode"] = "per-video";
    std::vector<Calibration> cals(problems.size());
    parallel_for(problems.size(), c.jobs,
                 [&](std::size_t i) { cals[i] = calibrate_threshold(problems[i], f); });
    ordered_json videos = ordered_json::array();
    for (std::size_t i = 0; i < problems.size(); ++i) {
      auto j = calibration_to_json(cals[i]);
      j["video_id"] = problems[i].video_id().empty() ? c.video_id : problems[i].video_id();
      videos.push_back(std::move(j));
    }
    out["videos"] = std::move(videos);
  }
  run.write("calibration.json", out.dump(2) + "\n");
  run.finish();
}

void cmd_resample(const RunConfig& c) {
  Run run(c);
  if (c.frames_per_step < 1) config_error("frames-per-step must be >= 1");
  if (c.select_first && c.keyframes_dir.empty()) config_error("--select-first needs --keyframes");
  const auto anns = parse_annotations_csv(run.read(c.annotations));
  const ResampleOptions options{c.frames_per_step, !c.exclude_idle};

  std::vector<FrameManifest> manifests;
  ordered_json reports = ordered_json::array();
  for (const auto& id : annotated_videos(anns)) {
    const auto video_anns = annotations_for(anns, id);
    const FrameManifest raw = manifest_from_annotations(anns, id, annotated_range(video_anns));

    std::optional<KeyFrameSet> keyframes;
    if (!c.keyframes_dir.empty()) {
      keyframes = keyframes_from_json(run.read(c.keyframes_dir / (safe_name(id) + ".json")));
    }
    FrameManifest result;
    if (c.select_first) {
      result = resample_phases(apply_selection(raw, *keyframes), video_anns, options);
    } else {
      result = resample_phases(raw, video_anns, options);
      if (keyframes) result = apply_selection(result, *keyframes);
    }
    reports.push_back(reduction_to_json(reduction_report(raw, result)));
    manifests.push_back(std::move(result));
  }
  run.write("manifest.csv", manifest_csv(manifests));
  run.write("reduction.json", reports.dump(2) + "\n");
  run.finish();
}

void cmd_clips(const RunConfig& c) {
  Run run(c);
  if (c.clip_length < 1) config_error("clip-length must be >= 1");
  const auto manifests = parse_manifest_csv(run.read(c.manifest));
  if (manifests.empty()) throw Error(ErrorKind::EmptyInput, "manifest has no entries");
  std::vector<std::vector<ClipWindow>> per_video(manifests.size());
  parallel_for(manifests.size(), c.jobs,
               [&](std::size_t i) { per_video[i] = build_clips(manifests[i], c.clip_length); });
  std::string out;
  for (const auto& clips : per_video) out += clips_jsonl(clips);
  run.write("clips.jsonl", out);
  run.finish();
}

void cmd_evaluate(const RunConfig& c) {
  Run run(c);
  if (c.smooth < 0 || (c.smooth > 0 && c.smooth % 2 == 0)) {
    config_error("smoothing window must be odd (0 disables)");
  }
  if (c.baseline_accuracy.has_value() != c.baseline_f1.has_value()) {
    config_error("give both --baseline-accuracy and --baseline-f1");
  }
  const auto truth = parse_annotations_csv(run.read(c.annotations));

  std::vector<PredictionSequence> preds;
  if (!c.majority_from.empty()) {
    const auto training = parse_manifest_csv(run.read(c.majority_from));
    for (const auto& id : annotated_videos(truth)) {
      const auto video_anns = annotations_for(truth, id);
      const auto raw = manifest_from_annotations(truth, id, annotated_range(video_anns));
      std::vector<FrameIndex> frames;
      for (const auto& e : raw.entries) frames.push_back(e.frame_index);
      preds.push_back(majority_predictor(training, id, frames));
    }
  } else {
    preds = parse_predictions_csv(run.read(c.predictions));
  }
  if (c.smooth > 0) {
    for (auto& p : preds) p = temporal_smooth(p, c.smooth);
  }

  std::optional<Baseline> baseline;
  if (c.baseline_accuracy) baseline = Baseline{*c.baseline_accuracy, *c.baseline_f1};
  const auto report = evaluate(preds, truth, EvalOptions{!c.exclude_idle}, baseline);
  run.write("metrics.json", metrics_to_json(report).dump(2) + "\n");
  run.write("confusion.csv", confusion_csv(report));
  run.write("predictions.csv", predictions_csv(preds));
  run.finish();
}

void cmd_render(const RunConfig& c) {
  Run run(c);
  const auto anns = parse_annotations_csv(run.read(c.annotations));
  std::vector<FrameManifest> manifests;
  if (!c.manifest.empty()) manifests = parse_manifest_csv(run.read(c.manifest));
  std::vector<PredictionSequence> preds;
  if (!c.predictions.empty()) preds = parse_predictions_csv(run.read(c.predictions));

  std::vector<std::string> ids = annotated_videos(anns);
  if (!c.video_id.empty()) {
    if (std::find(ids.begin(), ids.end(), c.video_id) == ids.end()) {
      throw Error(ErrorKind::EmptyInput, "no annotations for video " + c.video_id);
    }
    ids = {c.video_id};
  }
  for (const auto& id : ids) {
    std::vector<TimelineRow> rows;
    rows.push_back(timeline_row("ground truth", annotations_for(anns, id)));
    for (const auto& m : manifests) {
      if (m.video_id == id) rows.push_back(timeline_row("manifest", m));
    }
    for (const auto& p : preds) {
      if (p.video_id == id) rows.push_back(timeline_row("prediction", p));
    }
    run.write("timeline_" + safe_name(id) + ".svg", render_timeline(rows));
  }
  run.finish();
}

void cmd_synth(const RunConfig& c) {
  Run run(c);
  SynthCorpusOptions options;
  options.videos = c.videos;
  options.frames_per_video = c.frames;
  options.image_width = c.image_width;
  options.seed = c.seed;
  const auto corpus = generate_corpus(options);
  run.write("detections.jsonl", serialize_detections(corpus.detections, DetectionFormat::Jsonl));
  run.write("annotations.csv", annotations_csv(corpus.annotations));
  run.finish();
}

// ---------------------------------------------------------------------------

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParams:
    case ErrorKind::InvalidFraction:
    case ErrorKind::InvalidArgument:
      return kExitConfig;
    case ErrorKind::UnreachableTarget:
      return kExitUnreachable;
    default:
      return kExitData;
  }
}

int report_error(std::string_view kind, const std::string& message, int code,
                 ordered_json extra = ordered_json::object()) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  for (auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << '\n';
  return code;
}

void add_input_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--detections", c.detections, "Detection stream (.jsonl or .csv)");
  sub->add_option("--format", c.detection_format, "Detection format")
      ->check(CLI::IsMember({"auto", "jsonl", "csv"}));
  sub->add_option("--min-conf", c.min_confidence, "Keep detections above this confidence");
  sub->add_option("--image-width", c.image_width, "Frame width in pixels for side assignment");
  sub->add_option("--gap-max", c.gap_max, "Longest tolerated detection gap (negative: none)");
  sub->add_option("--objects", c.objects, "Tracked parts: one|two|four|six");
}

void add_policy_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--algorithm", c.algorithm, "adaptive1|adaptive2|ufs|mse");
  sub->add_option("--beta", c.beta);
  sub->add_option("--epsilon", c.epsilon);
  sub->add_option("--target", c.target, "Fraction of frames to keep, in (0, 1]");
  sub->add_option("--preset", c.preset, "Percentage preset: 1,5,10,15,20,30,50");
  sub->add_option("--budget", c.budget, "Fixed accumulation budget");
  sub->add_option("--threshold", c.threshold, "Threshold on the decreasing scale, in (0, 1]");
  sub->add_flag("--consecutive", c.consecutive, "Accumulate frame-to-frame instead of anchored");
  sub->add_option("--calibration", c.calibration, "per-video|corpus");
  sub->add_option("--frames-dir", c.frames_dir, "Directory of numbered .pgm frames (mse)");
  sub->add_option("--video-id", c.video_id);
}

}  // namespace

int run(int argc, const char* const* argv) {
  RunConfig c;
  if (const char* env = std::getenv("KAFR_JOBS")) {
    try {
      c.jobs = std::stoi(env);
    } catch (const std::exception&) {
      return report_error("InvalidParams", "KAFR_JOBS is not an integer", kExitConfig);
    }
  }

  CLI::App app{"Kinematics-driven key frame selection and phase-recognition data tools"};
  app.set_config("--config", "", "TOML or INI config file; flags override it");
  app.add_option("--out", c.out, "Output directory")->capture_default_str();
  app.add_option("--jobs", c.jobs, "Videos processed concurrently (default $KAFR_JOBS or 1)");
  app.add_flag("--timestamp", c.timestamp, "Record wall-clock time in the run manifest");
  app.require_subcommand(1, 1);

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse detections, assign roles, write kinematics");
  add_input_options(ingest_cmd, c);

  auto* select_cmd = app.add_subcommand("select", "Select key frames per video");
  add_input_options(select_cmd, c);
  add_policy_options(select_cmd, c);
  select_cmd->add_option("--annotations", c.annotations, "Phase annotations (ufs frame ranges)");

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit the budget for a target fraction");
  add_input_options(calibrate_cmd, c);
  add_policy_options(calibrate_cmd, c);

  auto* resample_cmd = app.add_subcommand("resample", "Balance phases and apply key frames");
  resample_cmd->add_option("--annotations", c.annotations)->required();
  resample_cmd->add_option("--keyframes", c.keyframes_dir, "Directory written by select");
  resample_cmd->add_option("--frames-per-step", c.frames_per_step);
  resample_cmd->add_flag("--exclude-idle", c.exclude_idle, "Leave idle segments unbalanced");
  resample_cmd->add_flag("--select-first", c.select_first, "Apply key frames before resampling");

  auto* clips_cmd = app.add_subcommand("clips", "Build backward clip windows");
  clips_cmd->add_option("--manifest", c.manifest)->required();
  clips_cmd->add_option("--clip-length", c.clip_length);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against annotations");
  evaluate_cmd->add_option("--annotations", c.annotations)->required();
  auto* pred_opt = evaluate_cmd->add_option("--predictions", c.predictions);
  auto* major_opt = evaluate_cmd->add_option("--majority-from", c.majority_from,
                                             "Predict the majority phase of this manifest");
  pred_opt->excludes(major_opt);
  evaluate_cmd->add_option("--smooth", c.smooth, "Modal smoothing window (odd, 0 = off)");
  evaluate_cmd->add_flag("--exclude-idle", c.exclude_idle);
  evaluate_cmd->add_option("--baseline-accuracy", c.baseline_accuracy);
  evaluate_cmd->add_option("--baseline-f1", c.baseline_f1);

  auto* render_cmd = app.add_subcommand("render", "Draw phase timelines as SVG");
  render_cmd->add_option("--annotations", c.annotations)->required();
  render_cmd->add_option("--manifest", c.manifest);
  render_cmd->add_option("--predictions", c.predictions);
  render_cmd->add_option("--video-id", c.video_id);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--videos", c.videos);
  synth_cmd->add_option("--frames", c.frames, "Frames per video");
  synth_cmd->add_option("--seed", c.seed);
  synth_cmd->add_option("--image-width", c.image_width);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("InvalidParams", e.what(), kExitConfig);
  }

  const std::map<CLI::App*, void (*)(const RunConfig&)> dispatch = {
      {ingest_cmd, cmd_ingest},     {select_cmd, cmd_select}, {calibrate_cmd, cmd_calibrate},
      {resample_cmd, cmd_resample}, {clips_cmd, cmd_clips},   {evaluate_cmd, cmd_evaluate},
      {render_cmd, cmd_render},     {synth_cmd, cmd_synth}};
  CLI::App* chosen = app.get_subcommands().front();
  c.command = chosen->get_name();

  try {
    if (c.jobs < 1) config_error("--jobs must be >= 1");
    if (c.command == "evaluate" && c.predictions.empty() && c.majority_from.empty()) {
      config_error("evaluate needs --predictions or --majority-from");
    }
    dispatch.at(chosen)(c);
  } catch (const UnreachableTarget& e) {
    ordered_json extra;
    extra["target"] = e.target();
    extra["ceiling"] = e.ceiling();
    return report_error(to_string(e.kind()), e.what(), kExitUnreachable, std::move(extra));
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), e.what(), exit_code_for(e.kind()));
  } catch (const fs::filesystem_error& e) {
    return report_error("Io", e.what(), kExitData);
  } catch (const std::exception& e) {
    return report_error("Internal", e.what(), kExitData);
  }
  return kExitOk;
}

}  // namespace kafr::cli

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kafr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitUnreachable = 4;

/// Everything a subcommand can be configured with. Flags and the config file
/// both land here; unused fields are ignored by a given subcommand.
struct RunConfig {
  std::string command;

  // inputs
  std::filesystem::path detections;
  std::string detection_format = "auto";  // auto|jsonl|csv
  std::filesystem::path annotations;
  std::filesystem::path frames_dir;
  std::filesystem::path keyframes_dir;
  std::filesystem::path manifest;
  std::filesystem::path predictions;
  std::filesystem::path majority_from;
  std::string video_id;

  // detections
  double min_confidence = 0.5;
  double image_width = 1920.0;
  long long gap_max = 30;

  // policy
  std::string algorithm = "adaptive1";
  std::string objects = "two";
  double beta = 1.0;
  double epsilon = 1e-9;
  std::optional<double> target;
  std::optional<int> preset;
  std::optional<double> budget;
  std::optional<double> threshold;
  bool consecutive = false;
  std::string calibration = "per-video";  // per-video|corpus

  // pipeline
  int frames_per_step = 250;
  bool exclude_idle = false;
  bool select_first = false;
  int clip_length = 16;
  int smooth = 0;  // 0 disables smoothing
  std::optional<double> baseline_accuracy;
  std::optional<double> baseline_f1;

  // synth
  int videos = 5;
  long long frames = 2000;
  unsigned long long seed = 1;

  std::filesystem::path out = "out";
  int jobs = 1;
  bool timestamp = false;
};

/// Parses argv, runs the chosen subcommand and returns the process exit
/// code. Errors are reported as one JSON object on stderr.
int run(int argc, const char* const* argv);

/// Subcommand bodies; throw kafr::Error on failure.
void cmd_ingest(const RunConfig& config);
void cmd_select(const RunConfig& config);
void cmd_calibrate(const RunConfig& config);
void cmd_resample(const RunConfig& config);
void cmd_clips(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_render(const RunConfig& config);
void cmd_synth(const RunConfig& config);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace kafr::cli

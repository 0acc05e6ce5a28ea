#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kafr/detections.hpp"
#include "kafr/image.hpp"
#include "kafr/pipeline.hpp"

namespace kafr {

enum class MotionKind { Stationary, Linear, SinusoidalSpeed, SutureLoop, Dropout };

std::string_view to_string(MotionKind kind);
std::optional<MotionKind> motion_kind_from_string(std::string_view name);

/// Parameters of a synthetic centroid trajectory. Fields a kind does not use
/// are ignored.
struct MotionProfile {
  MotionKind kind = MotionKind::Linear;
  std::string video_id = "synth";
  Role role = Role::RightJaw;
  FrameIndex first_frame = 0;
  FrameIndex duration = 100;
  std::uint64_t seed = 1;  // only drives frame noise

  Point origin = Point::Zero();
  /// Linear and dropout: px/frame. Sinusoidal speed: direction of travel.
  Point velocity = Point(1.0, 0.0);

  // sinusoidal_speed: v(t) = base_speed + speed_amplitude * sin(2 pi t / speed_period)
  double base_speed = 1.0;
  double speed_amplitude = 0.5;
  double speed_period = 60.0;

  // suture_loop: origin is the center; default angular step closes the loop
  // over the duration
  double radius = 20.0;
  std::optional<double> angular_step;

  // dropout: frames [first_frame + dropout_start, + dropout_length) are missing
  FrameIndex dropout_start = 0;
  FrameIndex dropout_length = 0;

  // frame rendering
  int block_size = 4;
  int noise_amplitude = 0;  // uniform integer noise in [-a, a] around 128
};

/// Deterministic centroid series for a profile. Throws InvalidParams.
ToolTrack generate_track(const MotionProfile& profile);

/// One frame per frame of the profile: mid-gray background with seeded noise
/// and a bright square centered on the track position (absent during
/// dropouts). Noise comes from the minimal-standard multiplicative
/// congruential generator (multiplier 48271, modulus 2^31 - 1).
std::vector<IndexedFrame> generate_frames(const MotionProfile& profile, int width, int height);

struct SynthCorpusOptions {
  int videos = 5;
  FrameIndex frames_per_video = 2000;
  double image_width = kDefaultImageWidth;
  double image_height = 1080.0;
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<DetectionRecord> detections;
  std::vector<PhaseAnnotation> annotations;
};

/// Detection stream and phase annotations for a set of synthetic videos:
/// both needle drivers (all three parts) on their own screen half, a grasper
/// distractor, and low-confidence noise detections.
SynthCorpus generate_corpus(const SynthCorpusOptions& options);

}  // namespace kafr

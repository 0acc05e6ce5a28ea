#include "kafr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace kafr {

std::string_view to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::Stationary: return "stationary";
    case MotionKind::Linear: return "linear";
    case MotionKind::SinusoidalSpeed: return "sinusoidal_speed";
    case MotionKind::SutureLoop: return "suture_loop";
    case MotionKind::Dropout: return "dropout";
  }
  return "";
}

std::optional<MotionKind> motion_kind_from_string(std::string_view name) {
  for (auto k : {MotionKind::Stationary, MotionKind::Linear, MotionKind::SinusoidalSpeed,
                 MotionKind::SutureLoop, MotionKind::Dropout}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidParams, what);
}

}  // namespace

ToolTrack generate_track(const MotionProfile& p) {
  check(p.duration >= 1, "duration must be >= 1");
  check(p.first_frame >= 0, "first frame must be >= 0");
  check(p.origin.allFinite() && p.velocity.allFinite(), "origin and velocity must be finite");

  ToolTrack track{p.video_id, p.role, {}};
  switch (p.kind) {
    case MotionKind::Stationary:
      for (FrameIndex t = 0; t < p.duration; ++t) track.samples.emplace(p.first_frame + t, p.origin);
      break;

    case MotionKind::Linear:
    case MotionKind::Dropout: {
      if (p.kind == MotionKind::Dropout) {
        check(p.dropout_start >= 0 && p.dropout_length >= 0 &&
                  p.dropout_start + p.dropout_length <= p.duration,
              "dropout range must lie inside the duration");
      }
      for (FrameIndex t = 0; t < p.duration; ++t) {
        if (p.kind == MotionKind::Dropout && t >= p.dropout_start &&
            t < p.dropout_start + p.dropout_length) {
          continue;
        }
        track.samples.emplace(p.first_frame + t, p.origin + p.velocity * static_cast<double>(t));
      }
      break;
    }

    case MotionKind::SinusoidalSpeed: {
      check(std::isfinite(p.base_speed) && std::isfinite(p.speed_amplitude),
            "speed parameters must be finite");
      check(p.speed_period > 0.0, "speed period must be positive");
      check(p.velocity.norm() > 0.0, "direction must be non-zero");
      check(p.base_speed >= std::abs(p.speed_amplitude), "speed must stay non-negative");
      const Point dir = p.velocity.normalized();
      Point pos = p.origin;
      for (FrameIndex t = 0; t < p.duration; ++t) {
        if (t > 0) {
          const double v = p.base_speed +
                           p.speed_amplitude * std::sin(2.0 * std::numbers::pi *
                                                        static_cast<double>(t) / p.speed_period);
          pos += dir * v;
        }
        track.samples.emplace(p.first_frame + t, pos);
      }
      break;
    }

    case MotionKind::SutureLoop: {
      check(p.radius > 0.0 && std::isfinite(p.radius), "radius must be positive");
      const double step =
          p.angular_step.value_or(2.0 * std::numbers::pi / static_cast<double>(p.duration));
      check(std::isfinite(step), "angular step must be finite");
      for (FrameIndex t = 0; t < p.duration; ++t) {
        const double a = step * static_cast<double>(t);
        track.samples.emplace(p.first_frame + t,
                              p.origin + p.radius * Point(std::cos(a), std::sin(a)));
      }
      break;
    }
  }
  return track;
}

std::vector<IndexedFrame> generate_frames(const MotionProfile& profile, int width, int height) {
  check(width >= 8 && height >= 8, "frames must be at least 8x8");
  check(profile.block_size >= 1, "block size must be >= 1");
  check(profile.noise_amplitude >= 0 && profile.noise_amplitude <= 127,
        "noise amplitude must lie in 0..127");
  const ToolTrack track = generate_track(profile);

  auto seed = static_cast<std::uint_fast32_t>(profile.seed % std::minstd_rand::modulus);
  std::minstd_rand rng(seed == 0 ? 1 : seed);
  const auto span = static_cast<std::uint_fast32_t>(2 * profile.noise_amplitude + 1);

  std::vector<IndexedFrame> frames;
  frames.reserve(static_cast<std::size_t>(profile.duration));
  for (FrameIndex t = 0; t < profile.duration; ++t) {
    const FrameIndex f = profile.first_frame + t;
    GrayscaleFrame img(height, width);
    if (profile.noise_amplitude == 0) {
      img.setConstant(128);
    } else {
      for (Eigen::Index i = 0; i < img.size(); ++i) {
        img.data()[i] = static_cast<std::uint8_t>(128 + static_cast<int>(rng() % span) -
                                                  profile.noise_amplitude);
      }
    }
    if (const Point* c = track.at(f)) {
      const long x0 = std::lround(c->x()) - profile.block_size / 2;
      const long y0 = std::lround(c->y()) - profile.block_size / 2;
      const long x1 = std::clamp<long>(x0 + profile.block_size, 0, width);
      const long y1 = std::clamp<long>(y0 + profile.block_size, 0, height);
      const long xs = std::clamp<long>(x0, 0, width);
      const long ys = std::clamp<long>(y0, 0, height);
      if (x1 > xs && y1 > ys) img.block(ys, xs, y1 - ys, x1 - xs).setConstant(255);
    }
    frames.push_back({f, std::move(img)});
  }
  return frames;
}

namespace {

Polygon square_around(const Point& c, double half) {
  Polygon p(2, 4);
  p << c.x() - half, c.x() + half, c.x() + half, c.x() - half,  //
      c.y() - half, c.y() - half, c.y() + half, c.y() + half;
  return p;
}

// Left needle driver reports instrument3 IDs, the right one instrument2 IDs,
// so both spellings of the needle driver show up in the stream.
int class_for(Side side, Part part) {
  if (side == Side::Left) return ToolCatalog::needle_driver_id(part);
  switch (part) {
    case Part::Jaw: return 5;
    case Part::Wrist: return 4;
    case Part::Shaft: return 3;
  }
  return 5;
}

}  // namespace

SynthCorpus generate_corpus(const SynthCorpusOptions& options) {
  check(options.videos >= 1, "need at least one video");
  check(options.frames_per_video >= 14, "videos need at least 14 frames");
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SynthCorpus corpus;
  const double w = options.image_width;
  const double h = options.image_height;
  const FrameIndex n = options.frames_per_video;

  for (int v = 0; v < options.videos; ++v) {
    const std::string video_id = "video" + std::to_string(v + 1);

    // Phase layout: idle, then tasks 1..6 each followed by a short idle gap.
    std::vector<double> weights;
    for (int k = 0; k < 13; ++k) weights.push_back(0.5 + unit(rng));
    const double weight_sum = [&] {
      double s = 0;
      for (double x : weights) s += x;
      return s;
    }();
    FrameIndex start = 0;
    for (int k = 0; k < 13; ++k) {
      const int label = k % 2 == 0 ? kIdlePhase : (k + 1) / 2;
      FrameIndex len = std::max<FrameIndex>(
          1, static_cast<FrameIndex>(std::floor(weights[static_cast<std::size_t>(k)] / weight_sum *
                                                static_cast<double>(n))));
      if (k == 12) len = n - start;
      corpus.annotations.push_back({video_id, label, start, start + len - 1});
      start += len;
    }

    MotionProfile left;
    left.kind = MotionKind::SutureLoop;
    left.video_id = video_id;
    left.role = Role::LeftJaw;
    left.duration = n;
    left.origin = Point(w * 0.25, h * 0.5);
    left.radius = 60.0 + 40.0 * unit(rng);
    left.angular_step = 2.0 * std::numbers::pi / (80.0 + 120.0 * unit(rng));

    MotionProfile right;
    right.kind = MotionKind::SinusoidalSpeed;
    right.video_id = video_id;
    right.role = Role::RightJaw;
    right.duration = n;
    right.origin = Point(w * 0.6, h * 0.3);
    right.velocity = Point(1.0, 0.5);
    right.base_speed = 0.15 + 0.05 * unit(rng);
    right.speed_amplitude = 0.1;
    right.speed_period = 50.0 + 100.0 * unit(rng);

    const ToolTrack left_jaw = generate_track(left);
    const ToolTrack right_jaw = generate_track(right);
    // tool-loss interval on the right instrument
    const FrameIndex lost_from = n / 3 + static_cast<FrameIndex>(unit(rng) * static_cast<double>(n / 6));
    const FrameIndex lost_to = lost_from + 12 + static_cast<FrameIndex>(unit(rng) * 40.0);

    for (FrameIndex f = 0; f < n; ++f) {
      for (Side side : {Side::Left, Side::Right}) {
        if (side == Side::Right && f >= lost_from && f < lost_to) continue;
        const Point jaw = side == Side::Left ? left_jaw.samples.at(f) : right_jaw.samples.at(f);
        const Point offset = side == Side::Left ? Point(-25.0, 20.0) : Point(25.0, 20.0);
        for (Part part : {Part::Jaw, Part::Wrist, Part::Shaft}) {
          const double k = part == Part::Jaw ? 0.0 : part == Part::Wrist ? 1.0 : 2.5;
          DetectionRecord rec;
          rec.video_id = video_id;
          rec.frame_index = f;
          rec.class_id = class_for(side, part);
          rec.confidence = 0.55 + 0.44 * unit(rng);
          rec.polygon = square_around(jaw + k * offset, 8.0 + 4.0 * k);
          rec.track_id = side == Side::Left ? 1 : 2;
          corpus.detections.push_back(std::move(rec));
        }
      }
      if (unit(rng) < 0.2) {
        DetectionRecord grasper;
        grasper.video_id = video_id;
        grasper.frame_index = f;
        grasper.class_id = 8;
        grasper.confidence = 0.6 + 0.3 * unit(rng);
        grasper.polygon = square_around(Point(w * 0.5, h * 0.8), 15.0);
        corpus.detections.push_back(std::move(grasper));
      }
      if (unit(rng) < 0.1) {
        // spurious low-confidence jaw far from both instruments
        DetectionRecord noise;
        noise.video_id = video_id;
        noise.frame_index = f;
        noise.class_id = 0;
        noise.confidence = 0.5 * unit(rng);
        noise.polygon = square_around(Point(w * unit(rng), h * unit(rng)), 6.0);
        corpus.detections.push_back(std::move(noise));
      }
    }
  }
  return corpus;
}

}  // namespace kafr

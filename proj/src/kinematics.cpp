#include "kafr/kinematics.hpp"

#include "kafr/text.hpp"

namespace kafr {

KinematicSeries compute_speed(const ToolTrack& track, FrameIndex gap_max) {
  if (track.empty()) {
    throw Error(ErrorKind::EmptyTracks, "cannot derive kinematics from an empty track");
  }
  KinematicSeries series{track.video_id, track.role, {}};
  const std::pair<const FrameIndex, Point>* prev = nullptr;
  for (const auto& sample : track.samples) {
    KinematicEntry entry;
    entry.position = sample.second;
    if (prev != nullptr) {
      const FrameIndex delta = sample.first - prev->first;
      if (delta - 1 < gap_max) {
        entry.speed = (sample.second - prev->second).norm() / static_cast<double>(delta);
      }
    }
    series.entries.emplace(sample.first, entry);
    prev = &sample;
  }
  return series;
}

KinematicSeries compute_acceleration(KinematicSeries series) {
  std::optional<std::pair<FrameIndex, double>> prev;
  for (auto& [frame, entry] : series.entries) {
    entry.acceleration.reset();
    if (!entry.speed) {
      // a restart breaks the chain of speeds
      prev.reset();
      continue;
    }
    if (prev) {
      entry.acceleration = (*entry.speed - prev->second) / static_cast<double>(frame - prev->first);
    }
    prev = std::make_pair(frame, *entry.speed);
  }
  return series;
}

KinematicSeries compute_kinematics(const ToolTrack& track, FrameIndex gap_max) {
  return compute_acceleration(compute_speed(track, gap_max));
}

std::string kinematics_csv(std::span<const KinematicSeries> series) {
  std::string out = "video_id,role,frame,x,y,speed,accel\n";
  for (const auto& s : series) {
    for (const auto& [frame, e] : s.entries) {
      out += s.video_id;
      out += ',';
      out += to_string(s.role);
      out += ',';
      out += std::to_string(frame);
      out += ',';
      out += text::format_double(e.position.x());
      out += ',';
      out += text::format_double(e.position.y());
      out += ',';
      if (e.speed) out += text::format_double(*e.speed);
      out += ',';
      if (e.acceleration) out += text::format_double(*e.acceleration);
      out += '\n';
    }
  }
  return out;
}

}  // namespace kafr

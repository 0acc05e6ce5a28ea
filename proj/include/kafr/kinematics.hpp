#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "kafr/detections.hpp"

namespace kafr {

/// Default restart gap: 30 missing frames (about 5 s at 6 fps).
inline constexpr FrameIndex kDefaultGapMax = 30;
inline constexpr FrameIndex kNoGapLimit = std::numeric_limits<FrameIndex>::max();

struct KinematicEntry {
  Point position = Point::Zero();
  std::optional<double> speed;         // px / frame
  std::optional<double> acceleration;  // px / frame^2, signed
};

struct KinematicSeries {
  std::string video_id;
  Role role = Role::RightJaw;
  std::map<FrameIndex, KinematicEntry> entries;

  std::optional<double> speed_at(FrameIndex frame) const {
    auto it = entries.find(frame);
    return it == entries.end() ? std::nullopt : it->second.speed;
  }
};

/// Scalar speed between consecutive samples, divided by the frame gap.
/// A sample following `gap_max` or more missing frames restarts the series
/// and carries no speed. Throws EmptyTracks for an empty track.
KinematicSeries compute_speed(const ToolTrack& track, FrameIndex gap_max = kDefaultGapMax);

/// Fills acceleration from consecutive speed-bearing entries.
KinematicSeries compute_acceleration(KinematicSeries series);

/// compute_acceleration(compute_speed(track, gap_max)).
KinematicSeries compute_kinematics(const ToolTrack& track, FrameIndex gap_max = kDefaultGapMax);

/// CSV dump: video_id,role,frame,x,y,speed,accel with empty cells for
/// undefined values.
std::string kinematics_csv(std::span<const KinematicSeries> series);

}  // namespace kafr

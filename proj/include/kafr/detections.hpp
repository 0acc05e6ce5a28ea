#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kafr/geometry.hpp"

namespace kafr {

using FrameIndex = std::int64_t;

inline constexpr int kClassCount = 16;
inline constexpr double kDefaultMinConfidence = 0.5;
inline constexpr double kDefaultImageWidth = 1920.0;

/// One detected tool part in one frame.
struct DetectionRecord {
  std::string video_id;
  FrameIndex frame_index = 0;
  int class_id = 0;
  double confidence = 0.0;
  Polygon polygon;
  std::optional<std::int64_t> track_id;

  friend bool operator==(const DetectionRecord& a, const DetectionRecord& b) {
    return a.video_id == b.video_id && a.frame_index == b.frame_index &&
           a.class_id == b.class_id && a.confidence == b.confidence &&
           a.polygon.cols() == b.polygon.cols() && a.polygon == b.polygon &&
           a.track_id == b.track_id;
  }
};

// ---------------------------------------------------------------------------
// Tool catalog
// ---------------------------------------------------------------------------

enum class Part { Jaw, Wrist, Shaft };

struct ToolCatalogEntry {
  std::string_view instrument_name;  // e.g. "instrument3part1"
  std::string_view tool_name;        // e.g. "Needle Driver"
  std::optional<Part> part;          // the irrigator has no parts
  int canonical_id;
};

/// The 16 detector class IDs. Needle driver IDs 3,4,5 (instrument2) are the
/// same tool type as 2,1,0 (instrument3) and merge onto them.
class ToolCatalog {
 public:
  static const ToolCatalog& standard();

  const ToolCatalogEntry& entry(int class_id) const;
  int canonical_id(int class_id) const { return entry(class_id).canonical_id; }
  bool contains(int class_id) const { return class_id >= 0 && class_id < kClassCount; }
  bool is_needle_driver(int class_id) const;

  /// Canonical needle-driver class for a part (Jaw -> 0, Wrist -> 1, Shaft -> 2).
  static int needle_driver_id(Part part);

 private:
  explicit ToolCatalog(std::array<ToolCatalogEntry, kClassCount> entries)
      : entries_(entries) {}
  std::array<ToolCatalogEntry, kClassCount> entries_;
};

// ---------------------------------------------------------------------------
// Roles and tracks
// ---------------------------------------------------------------------------

enum class Side { Left, Right };

enum class Role { LeftJaw, RightJaw, LeftWrist, RightWrist, LeftShaft, RightShaft };

inline constexpr std::array<Role, 6> kAllRoles = {Role::LeftJaw,   Role::RightJaw,
                                                  Role::LeftWrist, Role::RightWrist,
                                                  Role::LeftShaft, Role::RightShaft};

Role make_role(Side side, Part part);
Side side_of(Role role);
Part part_of(Role role);
std::string_view to_string(Role role);
std::string_view to_string(Part part);
std::optional<Role> role_from_string(std::string_view name);

/// Tracked-object presets: "one" (right jaw), "two" (both jaws),
/// "four" (+ wrists), "six" (+ shafts).
enum class ObjectsPreset { One, Two, Four, Six };

std::vector<Role> roles_for(ObjectsPreset preset);
std::optional<ObjectsPreset> objects_preset_from_string(std::string_view name);
std::string_view to_string(ObjectsPreset preset);

/// Centroid time series of one role in one video. Frames absent from
/// `samples` are gaps.
struct ToolTrack {
  std::string video_id;
  Role role = Role::RightJaw;
  std::map<FrameIndex, Point> samples;

  bool empty() const { return samples.empty(); }
  const Point* at(FrameIndex frame) const {
    auto it = samples.find(frame);
    return it == samples.end() ? nullptr : &it->second;
  }
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

enum class DetectionFormat { Jsonl, Csv };

struct ParseIssue {
  std::size_t line = 0;  // 1-based
  ErrorKind kind = ErrorKind::MalformedRecord;
  std::string field;
  std::string message;
};

struct ParseResult {
  std::vector<DetectionRecord> records;
  std::vector<ParseIssue> issues;
};

/// Parses a detection stream. Bad lines are reported in `issues` and skipped;
/// records come back sorted by (video_id, frame_index), stable otherwise.
/// Throws EmptyStream when the stream has no non-blank data lines.
ParseResult parse_detections(std::string_view stream, DetectionFormat format);

std::string serialize_detections(std::span<const DetectionRecord> records,
                                 DetectionFormat format);

/// Records with confidence strictly greater than `min_confidence`, order kept.
std::vector<DetectionRecord> filter_confidence(std::span<const DetectionRecord> records,
                                               double min_confidence = kDefaultMinConfidence);

/// Builds one track per (video, wanted role). A needle-driver part detection
/// goes Left when its centroid x < width/2, Right otherwise; duplicates on a
/// side keep the highest confidence (first seen wins ties). Tracks are
/// returned grouped by video in video_id order, roles in kAllRoles order.
std::vector<ToolTrack> assign_roles(std::span<const DetectionRecord> records, double image_width,
                                    const std::set<Part>& parts_wanted);

}  // namespace kafr

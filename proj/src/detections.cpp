#include "kafr/detections.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <tuple>

#include "kafr/text.hpp"

namespace kafr {

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

const ToolCatalog& ToolCatalog::standard() {
  static const ToolCatalog catalog({{
      {"instrument3part1", "Needle Driver", Part::Jaw, 0},
      {"instrument3part2", "Needle Driver", Part::Wrist, 1},
      {"instrument3part3", "Needle Driver", Part::Shaft, 2},
      {"instrument2part3", "Needle Driver", Part::Shaft, 2},
      {"instrument2part2", "Needle Driver", Part::Wrist, 1},
      {"instrument2part1", "Needle Driver", Part::Jaw, 0},
      {"laptool", "Irrigator", std::nullopt, 6},
      {"instrument4part1", "Forcep", Part::Jaw, 7},
      {"instrument1part1", "Grasper", Part::Jaw, 8},
      {"instrument1part2", "Grasper", Part::Wrist, 9},
      {"instrument1part3", "Grasper", Part::Shaft, 10},
      {"instrument4part2", "Forcep", Part::Wrist, 11},
      {"instrument5part3", "Monopolar Curved Scissors", Part::Shaft, 12},
      {"instrument5part2", "Monopolar Curved Scissors", Part::Wrist, 13},
      {"instrument5part1", "Monopolar Curved Scissors", Part::Jaw, 14},
      {"instrument4part3", "Forcep", Part::Shaft, 15},
  }});
  return catalog;
}

const ToolCatalogEntry& ToolCatalog::entry(int class_id) const {
  if (!contains(class_id)) {
    throw Error(ErrorKind::UnknownClassId, "unknown class id " + std::to_string(class_id));
  }
  return entries_[static_cast<std::size_t>(class_id)];
}

bool ToolCatalog::is_needle_driver(int class_id) const {
  return contains(class_id) && canonical_id(class_id) <= 2;
}

int ToolCatalog::needle_driver_id(Part part) {
  switch (part) {
    case Part::Jaw: return 0;
    case Part::Wrist: return 1;
    case Part::Shaft: return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Roles
// ---------------------------------------------------------------------------

Role make_role(Side side, Part part) {
  const bool left = side == Side::Left;
  switch (part) {
    case Part::Jaw: return left ? Role::LeftJaw : Role::RightJaw;
    case Part::Wrist: return left ? Role::LeftWrist : Role::RightWrist;
    case Part::Shaft: return left ? Role::LeftShaft : Role::RightShaft;
  }
  return Role::RightJaw;
}

Side side_of(Role role) {
  switch (role) {
    case Role::LeftJaw:
    case Role::LeftWrist:
    case Role::LeftShaft: return Side::Left;
    default: return Side::Right;
  }
}

Part part_of(Role role) {
  switch (role) {
    case Role::LeftJaw:
    case Role::RightJaw: return Part::Jaw;
    case Role::LeftWrist:
    case Role::RightWrist: return Part::Wrist;
    default: return Part::Shaft;
  }
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::LeftJaw: return "LeftJaw";
    case Role::RightJaw: return "RightJaw";
    case Role::LeftWrist: return "LeftWrist";
    case Role::RightWrist: return "RightWrist";
    case Role::LeftShaft: return "LeftShaft";
    case Role::RightShaft: return "RightShaft";
  }
  return "";
}

std::string_view to_string(Part part) {
  switch (part) {
    case Part::Jaw: return "jaw";
    case Part::Wrist: return "wrist";
    case Part::Shaft: return "shaft";
  }
  return "";
}

std::optional<Role> role_from_string(std::string_view name) {
  for (Role r : kAllRoles) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

std::vector<Role> roles_for(ObjectsPreset preset) {
  switch (preset) {
    case ObjectsPreset::One: return {Role::RightJaw};
    case ObjectsPreset::Two: return {Role::LeftJaw, Role::RightJaw};
    case ObjectsPreset::Four:
      return {Role::LeftJaw, Role::RightJaw, Role::LeftWrist, Role::RightWrist};
    case ObjectsPreset::Six: return {kAllRoles.begin(), kAllRoles.end()};
  }
  return {};
}

std::optional<ObjectsPreset> objects_preset_from_string(std::string_view name) {
  if (name == "one") return ObjectsPreset::One;
  if (name == "two") return ObjectsPreset::Two;
  if (name == "four") return ObjectsPreset::Four;
  if (name == "six") return ObjectsPreset::Six;
  return std::nullopt;
}

std::string_view to_string(ObjectsPreset preset) {
  switch (preset) {
    case ObjectsPreset::One: return "one";
    case ObjectsPreset::Two: return "two";
    case ObjectsPreset::Four: return "four";
    case ObjectsPreset::Six: return "six";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

struct LineError {
  ErrorKind kind;
  std::string field;
  std::string message;
};

void validate(const DetectionRecord& rec) {
  if (rec.frame_index < 0) {
    throw LineError{ErrorKind::MalformedRecord, "frame", "frame index must be non-negative"};
  }
  if (!ToolCatalog::standard().contains(rec.class_id)) {
    throw LineError{ErrorKind::UnknownClassId, "class_id",
                    "class id " + std::to_string(rec.class_id) + " not in 0..15"};
  }
  if (!std::isfinite(rec.confidence) || rec.confidence < 0.0 || rec.confidence > 1.0) {
    throw LineError{ErrorKind::MalformedRecord, "conf", "confidence must lie in [0,1]"};
  }
  if (rec.track_id && *rec.track_id < 0) {
    throw LineError{ErrorKind::MalformedRecord, "track_id", "track id must be non-negative"};
  }
  if (!rec.polygon.allFinite()) {
    throw LineError{ErrorKind::MalformedRecord, "polygon", "non-finite vertex"};
  }
  try {
    (void)polygon_centroid(rec.polygon);
  } catch (const Error& e) {
    throw LineError{e.kind(), "polygon", e.what()};
  }
}

DetectionRecord parse_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw LineError{ErrorKind::MalformedRecord, "", std::string("invalid JSON: ") + e.what()};
  }
  if (!j.is_object()) throw LineError{ErrorKind::MalformedRecord, "", "expected a JSON object"};

  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw LineError{ErrorKind::MalformedRecord, key, "missing field"};
    return *it;
  };

  DetectionRecord rec;
  const auto& vid = require("video_id");
  if (!vid.is_string()) throw LineError{ErrorKind::MalformedRecord, "video_id", "expected string"};
  rec.video_id = vid.get<std::string>();

  const auto& frame = require("frame");
  if (!frame.is_number_integer())
    throw LineError{ErrorKind::MalformedRecord, "frame", "expected integer"};
  rec.frame_index = frame.get<std::int64_t>();

  const auto& cls = require("class_id");
  if (!cls.is_number_integer())
    throw LineError{ErrorKind::MalformedRecord, "class_id", "expected integer"};
  const auto cls_value = cls.get<std::int64_t>();
  if (cls_value < 0 || cls_value >= kClassCount) {
    throw LineError{ErrorKind::UnknownClassId, "class_id",
                    "class id " + std::to_string(cls_value) + " not in 0..15"};
  }
  rec.class_id = static_cast<int>(cls_value);

  const auto& conf = require("conf");
  if (!conf.is_number()) throw LineError{ErrorKind::MalformedRecord, "conf", "expected number"};
  rec.confidence = conf.get<double>();

  const auto& poly = require("polygon");
  if (!poly.is_array()) throw LineError{ErrorKind::MalformedRecord, "polygon", "expected array"};
  rec.polygon.resize(2, static_cast<Eigen::Index>(poly.size()));
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& v = poly[i];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw LineError{ErrorKind::MalformedRecord, "polygon", "vertex must be [x,y]"};
    }
    rec.polygon(0, static_cast<Eigen::Index>(i)) = v[0].get<double>();
    rec.polygon(1, static_cast<Eigen::Index>(i)) = v[1].get<double>();
  }

  if (auto it = j.find("track_id"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer())
      throw LineError{ErrorKind::MalformedRecord, "track_id", "expected integer or null"};
    rec.track_id = it->get<std::int64_t>();
  }
  validate(rec);
  return rec;
}

constexpr std::string_view kCsvHeader = "video_id,frame,class_id,conf,track_id,polygon";

template <typename T>
T csv_number(std::string_view text, const char* field) {
  T value{};
  if (!text::parse_number(text, value)) {
    throw LineError{ErrorKind::MalformedRecord, field,
                    "cannot parse '" + std::string(text) + "'"};
  }
  return value;
}

DetectionRecord parse_csv_line(std::string_view line) {
  const auto fields = text::split(line, ',');
  if (fields.size() != 6) {
    throw LineError{ErrorKind::MalformedRecord, "",
                    "expected 6 fields, got " + std::to_string(fields.size())};
  }
  DetectionRecord rec;
  if (fields[0].empty()) throw LineError{ErrorKind::MalformedRecord, "video_id", "empty"};
  rec.video_id = std::string(fields[0]);
  rec.frame_index = csv_number<std::int64_t>(fields[1], "frame");
  const auto cls = csv_number<std::int64_t>(fields[2], "class_id");
  if (cls < 0 || cls >= kClassCount) {
    throw LineError{ErrorKind::UnknownClassId, "class_id",
                    "class id " + std::to_string(cls) + " not in 0..15"};
  }
  rec.class_id = static_cast<int>(cls);
  rec.confidence = csv_number<double>(fields[3], "conf");
  if (!fields[4].empty()) rec.track_id = csv_number<std::int64_t>(fields[4], "track_id");

  const auto vertices = text::split(fields[5], ';');
  rec.polygon.resize(2, static_cast<Eigen::Index>(vertices.size()));
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const auto xy = text::split(vertices[i], ':');
    if (xy.size() != 2) throw LineError{ErrorKind::MalformedRecord, "polygon", "vertex must be x:y"};
    rec.polygon(0, static_cast<Eigen::Index>(i)) = csv_number<double>(xy[0], "polygon");
    rec.polygon(1, static_cast<Eigen::Index>(i)) = csv_number<double>(xy[1], "polygon");
  }
  validate(rec);
  return rec;
}

}  // namespace

ParseResult parse_detections(std::string_view stream, DetectionFormat format) {
  if (stream.starts_with("\xEF\xBB\xBF")) stream.remove_prefix(3);
  const auto lines = text::split_lines(stream);

  ParseResult result;
  std::size_t data_lines = 0;
  std::size_t first = 0;

  if (format == DetectionFormat::Csv) {
    while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
    if (first == lines.size()) throw Error(ErrorKind::EmptyStream, "detection stream is empty");
    if (text::trim(lines[first]) != kCsvHeader) {
      throw Error(ErrorKind::MalformedRecord,
                  "line " + std::to_string(first + 1) + ": expected header '" +
                      std::string(kCsvHeader) + "'");
    }
    ++first;
  }

  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty()) continue;
    ++data_lines;
    try {
      result.records.push_back(format == DetectionFormat::Jsonl ? parse_json_line(line)
                                                                : parse_csv_line(line));
    } catch (const LineError& e) {
      result.issues.push_back({i + 1, e.kind, e.field, e.message});
    }
  }
  if (data_lines == 0) throw Error(ErrorKind::EmptyStream, "detection stream has no records");

  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const DetectionRecord& a, const DetectionRecord& b) {
                     return std::tie(a.video_id, a.frame_index) <
                            std::tie(b.video_id, b.frame_index);
                   });
  return result;
}

std::string serialize_detections(std::span<const DetectionRecord> records,
                                 DetectionFormat format) {
  std::string out;
  if (format == DetectionFormat::Jsonl) {
    for (const auto& rec : records) {
      nlohmann::ordered_json j;
      j["video_id"] = rec.video_id;
      j["frame"] = rec.frame_index;
      j["class_id"] = rec.class_id;
      j["conf"] = rec.confidence;
      auto poly = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < rec.polygon.cols(); ++c) {
        poly.push_back({rec.polygon(0, c), rec.polygon(1, c)});
      }
      j["polygon"] = std::move(poly);
      j["track_id"] = rec.track_id ? nlohmann::ordered_json(*rec.track_id) : nullptr;
      out += j.dump();
      out += '\n';
    }
    return out;
  }

  out += kCsvHeader;
  out += '\n';
  for (const auto& rec : records) {
    out += rec.video_id;
    out += ',';
    out += std::to_string(rec.frame_index);
    out += ',';
    out += std::to_string(rec.class_id);
    out += ',';
    out += text::format_double(rec.confidence);
    out += ',';
    if (rec.track_id) out += std::to_string(*rec.track_id);
    out += ',';
    for (Eigen::Index c = 0; c < rec.polygon.cols(); ++c) {
      if (c > 0) out += ';';
      out += text::format_double(rec.polygon(0, c));
      out += ':';
      out += text::format_double(rec.polygon(1, c));
    }
    out += '\n';
  }
  return out;
}

std::vector<DetectionRecord> filter_confidence(std::span<const DetectionRecord> records,
                                               double min_confidence) {
  std::vector<DetectionRecord> kept;
  std::copy_if(records.begin(), records.end(), std::back_inserter(kept),
               [&](const DetectionRecord& r) { return r.confidence > min_confidence; });
  return kept;
}

std::vector<ToolTrack> assign_roles(std::span<const DetectionRecord> records, double image_width,
                                    const std::set<Part>& parts_wanted) {
  if (!(image_width > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "image width must be positive");
  }
  const auto& catalog = ToolCatalog::standard();
  const double midline = image_width / 2.0;

  struct Best {
    Point centroid;
    double confidence;
  };
  // video -> role -> frame -> best candidate so far
  std::map<std::string, std::map<Role, std::map<FrameIndex, Best>>> best;

  for (const auto& rec : records) {
    auto& per_video = best[rec.video_id];
    if (!catalog.is_needle_driver(rec.class_id)) continue;
    const auto part = catalog.entry(rec.class_id).part;
    if (!part || !parts_wanted.contains(*part)) continue;

    const Point c = polygon_centroid(rec.polygon);
    const Role role = make_role(c.x() < midline ? Side::Left : Side::Right, *part);
    auto& slot = per_video[role];
    auto [it, inserted] = slot.try_emplace(rec.frame_index, Best{c, rec.confidence});
    if (!inserted && rec.confidence > it->second.confidence) {
      it->second = Best{c, rec.confidence};
    }
  }

  std::vector<ToolTrack> tracks;
  for (const auto& [video_id, per_role] : best) {
    for (Role role : kAllRoles) {
      if (!parts_wanted.contains(part_of(role))) continue;
      ToolTrack track{video_id, role, {}};
      if (auto it = per_role.find(role); it != per_role.end()) {
        for (const auto& [frame, b] : it->second) track.samples.emplace(frame, b.centroid);
      }
      tracks.push_back(std::move(track));
    }
  }
  return tracks;
}

}  // namespace kafr

#pragma once

// Wire formats: JSON documents, CSV tables and JSONL streams exchanged with
// other tools. Writers are byte-deterministic for a given input.

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kafr/eval.hpp"
#include "kafr/pipeline.hpp"
#include "kafr/selection.hpp"

namespace kafr {

using ordered_json = nlohmann::ordered_json;

ordered_json policy_to_json(const SelectionPolicy& policy);

/// {"video_id","policy","achieved_fraction","selected"} in that order.
ordered_json keyframes_to_json(const KeyFrameSet& keyframes);
std::string keyframes_json(const KeyFrameSet& keyframes);
/// Reads the fields selection consumers need (video_id, selected,
/// achieved_fraction, budget); the policy is restored where present.
KeyFrameSet keyframes_from_json(std::string_view text);

std::vector<PhaseAnnotation> parse_annotations_csv(std::string_view text);
std::string annotations_csv(std::span<const PhaseAnnotation> annotations);

std::vector<FrameManifest> parse_manifest_csv(std::string_view text);
std::string manifest_csv(std::span<const FrameManifest> manifests);

std::string clips_jsonl(std::span<const ClipWindow> clips);
std::vector<ClipWindow> parse_clips_jsonl(std::string_view text);

/// {"accuracy","f1_macro","per_class_f1","confusion","accuracy_change_pct","f1_change_pct"}.
ordered_json metrics_to_json(const MetricReport& report);

/// video_id,frame,label with optional p0..p6 probability columns.
std::vector<PredictionSequence> parse_predictions_csv(std::string_view text);
std::string predictions_csv(std::span<const PredictionSequence> predictions);

ordered_json reduction_to_json(const ReductionReport& report);
ordered_json calibration_to_json(const Calibration& calibration);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace kafr

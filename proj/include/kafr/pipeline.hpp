#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kafr/selection.hpp"

namespace kafr {

inline constexpr int kPhaseCount = 7;  // 0 = idle, 1..6 tasks
inline constexpr int kIdlePhase = 0;
inline constexpr int kDefaultFramesPerStep = 250;
inline constexpr int kDefaultClipLength = 16;

struct PhaseAnnotation {
  std::string video_id;
  int phase_label = 0;
  FrameIndex start_frame = 0;  // inclusive
  FrameIndex end_frame = 0;    // inclusive

  bool covers(FrameIndex f) const { return f >= start_frame && f <= end_frame; }
  friend bool operator==(const PhaseAnnotation&, const PhaseAnnotation&) = default;
};

enum class Provenance { Raw, Resampled, Selected };
std::string_view to_string(Provenance p);

struct ManifestEntry {
  FrameIndex frame_index = 0;
  int phase_label = 0;
  int duplication_count = 1;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct FrameManifest {
  std::string video_id;
  std::vector<ManifestEntry> entries;
  Provenance provenance = Provenance::Raw;

  /// Number of frames a trainer sees, duplicates included.
  std::size_t total_count() const;
  friend bool operator==(const FrameManifest&, const FrameManifest&) = default;
};

struct ClipWindow {
  std::string video_id;
  FrameIndex end_frame = 0;
  std::vector<FrameIndex> members;
  friend bool operator==(const ClipWindow&, const ClipWindow&) = default;
};

/// Checks labels, bounds and overlap; returns the annotations of one video
/// sorted by start frame.
std::vector<PhaseAnnotation> annotations_for(std::span<const PhaseAnnotation> annotations,
                                             std::string_view video_id);

/// Raw manifest: every frame in `range` that some annotation covers, labelled.
FrameManifest manifest_from_annotations(std::span<const PhaseAnnotation> annotations,
                                        std::string_view video_id, FrameRange range);

/// Phase label of a frame; throws UncoveredFrame when no segment covers it.
int phase_at(std::span<const PhaseAnnotation> video_annotations, FrameIndex frame);

struct ResampleOptions {
  int frames_per_step = kDefaultFramesPerStep;
  bool include_idle = true;  // false: idle segments pass through unchanged
};

/// Maps each annotated segment to exactly `frames_per_step` frames:
/// undersampling with the UFS index rule, oversampling by round-robin
/// duplication counts.
FrameManifest resample_phases(const FrameManifest& manifest,
                              std::span<const PhaseAnnotation> annotations,
                              const ResampleOptions& options = {});

/// Keeps only manifest entries whose frame is a key frame.
FrameManifest apply_selection(const FrameManifest& manifest, const KeyFrameSet& keyframes);

/// One window per manifest entry: the entry and the clip_length - 1 entries
/// before it, left-padded with the earliest entry.
std::vector<ClipWindow> build_clips(const FrameManifest& manifest,
                                    int clip_length = kDefaultClipLength);

struct PhaseReduction {
  std::size_t before = 0;  // duplicates included
  std::size_t after = 0;
  std::size_t duplicates_before = 0;
  std::size_t duplicates_after = 0;
};

struct ReductionReport {
  std::string video_id;
  std::map<int, PhaseReduction> per_phase;
  PhaseReduction total;
  double filtered_percent = 0.0;  // share of frames removed
  double reduction_factor = 0.0;  // before / after; 0 when after is empty
};

ReductionReport reduction_report(const FrameManifest& before, const FrameManifest& after);

}  // namespace kafr

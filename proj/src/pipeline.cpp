#include "kafr/pipeline.hpp"

#include <algorithm>
#include <set>

namespace kafr {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Raw: return "raw";
    case Provenance::Resampled: return "resampled";
    case Provenance::Selected: return "selected";
  }
  return "";
}

std::size_t FrameManifest::total_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += static_cast<std::size_t>(e.duplication_count);
  return n;
}

std::vector<PhaseAnnotation> annotations_for(std::span<const PhaseAnnotation> annotations,
                                             std::string_view video_id) {
  std::vector<PhaseAnnotation> out;
  for (const auto& a : annotations) {
    if (a.video_id != video_id) continue;
    if (a.phase_label < 0 || a.phase_label >= kPhaseCount) {
      throw Error(ErrorKind::MalformedRecord,
                  "phase label " + std::to_string(a.phase_label) + " not in 0..6");
    }
    if (a.start_frame > a.end_frame || a.start_frame < 0) {
      throw Error(ErrorKind::MalformedRecord, "segment start must not exceed end");
    }
    out.push_back(a);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.start_frame < b.start_frame; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].start_frame <= out[i - 1].end_frame) {
      throw Error(ErrorKind::MalformedRecord,
                  "overlapping segments in video " + std::string(video_id));
    }
  }
  return out;
}

int phase_at(std::span<const PhaseAnnotation> video_annotations, FrameIndex frame) {
  auto it = std::upper_bound(video_annotations.begin(), video_annotations.end(), frame,
                             [](FrameIndex f, const PhaseAnnotation& a) { return f < a.start_frame; });
  if (it != video_annotations.begin() && std::prev(it)->covers(frame)) {
    return std::prev(it)->phase_label;
  }
  throw Error(ErrorKind::UncoveredFrame, "frame " + std::to_string(frame) + " is not annotated");
}

FrameManifest manifest_from_annotations(std::span<const PhaseAnnotation> annotations,
                                        std::string_view video_id, FrameRange range) {
  FrameManifest m{std::string(video_id), {}, Provenance::Raw};
  for (const auto& a : annotations_for(annotations, video_id)) {
    const FrameIndex lo = std::max(a.start_frame, range.first);
    const FrameIndex hi = std::min(a.end_frame, range.last);
    for (FrameIndex f = lo; f <= hi; ++f) m.entries.push_back({f, a.phase_label, 1});
  }
  return m;
}

FrameManifest resample_phases(const FrameManifest& manifest,
                              std::span<const PhaseAnnotation> annotations,
                              const ResampleOptions& options) {
  if (options.frames_per_step < 1) {
    throw Error(ErrorKind::InvalidParams, "frames_per_step must be >= 1");
  }
  const auto segments = annotations_for(annotations, manifest.video_id);
  const auto target = static_cast<std::size_t>(options.frames_per_step);

  std::vector<std::vector<ManifestEntry>> buckets(segments.size());
  for (const auto& e : manifest.entries) {
    auto it = std::upper_bound(segments.begin(), segments.end(), e.frame_index,
                               [](FrameIndex f, const PhaseAnnotation& a) { return f < a.start_frame; });
    if (it == segments.begin() || !std::prev(it)->covers(e.frame_index)) {
      throw Error(ErrorKind::UncoveredFrame,
                  "frame " + std::to_string(e.frame_index) + " is not annotated");
    }
    const auto seg = static_cast<std::size_t>(std::distance(segments.begin(), std::prev(it)));
    buckets[seg].push_back({e.frame_index, segments[seg].phase_label, 1});
  }

  FrameManifest out{manifest.video_id, {}, Provenance::Resampled};
  for (std::size_t s = 0; s < segments.size(); ++s) {
    auto& bucket = buckets[s];
    std::sort(bucket.begin(), bucket.end(),
              [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    const std::size_t n = bucket.size();
    if (n == 0) continue;
    if (!options.include_idle && segments[s].phase_label == kIdlePhase) {
      out.entries.insert(out.entries.end(), bucket.begin(), bucket.end());
      continue;
    }
    if (n == target) {
      out.entries.insert(out.entries.end(), bucket.begin(), bucket.end());
    } else if (n > target) {
      if (target == 1) {
        out.entries.push_back(bucket.front());
        continue;
      }
      // UFS index rule; strictly increasing because n > target
      for (std::size_t t = 0; t < target; ++t) {
        const std::size_t idx = (2 * t * (n - 1) + (target - 1)) / (2 * (target - 1));
        out.entries.push_back(bucket[idx]);
      }
    } else {
      const int base = static_cast<int>(target / n);
      const std::size_t extra = target % n;
      for (std::size_t i = 0; i < n; ++i) {
        auto e = bucket[i];
        e.duplication_count = base + (i < extra ? 1 : 0);
        out.entries.push_back(e);
      }
    }
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
  return out;
}

FrameManifest apply_selection(const FrameManifest& manifest, const KeyFrameSet& keyframes) {
  if (keyframes.video_id != manifest.video_id) {
    throw Error(ErrorKind::InvalidArgument, "key frames belong to video '" + keyframes.video_id +
                                                "', manifest to '" + manifest.video_id + "'");
  }
  const std::set<FrameIndex> keep(keyframes.selected.begin(), keyframes.selected.end());
  FrameManifest out{manifest.video_id, {}, Provenance::Selected};
  std::copy_if(manifest.entries.begin(), manifest.entries.end(), std::back_inserter(out.entries),
               [&](const ManifestEntry& e) { return keep.contains(e.frame_index); });
  return out;
}

std::vector<ClipWindow> build_clips(const FrameManifest& manifest, int clip_length) {
  if (clip_length < 1) throw Error(ErrorKind::InvalidParams, "clip_length must be >= 1");
  if (manifest.entries.empty()) throw Error(ErrorKind::EmptyInput, "manifest is empty");
  const auto k = static_cast<std::ptrdiff_t>(clip_length);
  std::vector<ClipWindow> clips;
  clips.reserve(manifest.entries.size());
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(manifest.entries.size()); ++i) {
    ClipWindow w{manifest.video_id, manifest.entries[static_cast<std::size_t>(i)].frame_index, {}};
    w.members.reserve(static_cast<std::size_t>(k));
    for (std::ptrdiff_t m = i - k + 1; m <= i; ++m) {
      w.members.push_back(manifest.entries[static_cast<std::size_t>(std::max<std::ptrdiff_t>(m, 0))]
                              .frame_index);
    }
    clips.push_back(std::move(w));
  }
  return clips;
}

ReductionReport reduction_report(const FrameManifest& before, const FrameManifest& after) {
  if (before.video_id != after.video_id) {
    throw Error(ErrorKind::InvalidArgument, "reports compare manifests of one video");
  }
  ReductionReport r;
  r.video_id = before.video_id;
  for (const auto& e : before.entries) {
    auto& p = r.per_phase[e.phase_label];
    p.before += static_cast<std::size_t>(e.duplication_count);
    p.duplicates_before += static_cast<std::size_t>(e.duplication_count - 1);
  }
  for (const auto& e : after.entries) {
    auto& p = r.per_phase[e.phase_label];
    p.after += static_cast<std::size_t>(e.duplication_count);
    p.duplicates_after += static_cast<std::size_t>(e.duplication_count - 1);
  }
  for (const auto& [phase, p] : r.per_phase) {
    r.total.before += p.before;
    r.total.after += p.after;
    r.total.duplicates_before += p.duplicates_before;
    r.total.duplicates_after += p.duplicates_after;
  }
  if (r.total.before > 0) {
    const auto removed = static_cast<double>(r.total.before) - static_cast<double>(r.total.after);
    r.filtered_percent = 100.0 * removed / static_cast<double>(r.total.before);
  }
  if (r.total.after > 0) {
    r.reduction_factor =
        static_cast<double>(r.total.before) / static_cast<double>(r.total.after);
  }
  return r;
}

}  // namespace kafr

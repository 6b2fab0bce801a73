#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <span>
#include <vector>

#include "kfrl/error.hpp"
#include "kfrl/feature_sequence.hpp"

namespace kfrl {

enum class Aggregation { max, mean };
enum class TadMode { sync, async };

// What a zero-norm patch vector should score against its neighbour. A frame
// going blank is treated as a semantic event by default.
enum class ZeroNormPolicy { dissimilar, identical };

struct TadConfig {
    std::size_t budget = 8;   // K: frames (or per-patch slots) to keep
    std::size_t window = 5;   // W: odd sliding window for peak detection, >= 3
    double omega = 2.0;       // score boost added at inflection points
    Aggregation aggregation = Aggregation::max;
    TadMode mode = TadMode::sync;
    ZeroNormPolicy zero_norm = ZeroNormPolicy::dissimilar;

    void validate() const {
        if (budget == 0) raise(Errc::invalid_argument, "budget must be >= 1");
        if (window < 3 || window % 2 == 0) raise(Errc::invalid_argument, "window must be odd and >= 3");
        if (!(omega >= 0.0)) raise(Errc::invalid_argument, "omega must be non-negative");
    }
};

// Temporal variation per frame. frame_scores[t] aggregates the per-patch
// cosine dissimilarities between frames t-1 and t; index 0 has no
// predecessor and scores 0 by convention.
struct VariationProfile {
    std::vector<double> frame_scores;               // V, length T
    std::vector<std::vector<double>> patch_scores;  // T rows of N dissimilarities

    std::size_t num_frames() const noexcept { return frame_scores.size(); }
    std::size_t num_patches() const noexcept {
        return patch_scores.empty() ? 0 : patch_scores.front().size();
    }
};

struct SelectionResult {
    FrameIndexSet indices;       // I: selected frames, ascending
    std::vector<double> scores;  // S = V + omega * 1[inflection]
    FrameIndexSet inflections;   // P: windowed local maxima of V
    VariationProfile variation;
};

namespace detail {

// Rounding slack on the cosine. Parallel and antiparallel vectors must land
// exactly on 1 and -1, whatever per-frame scaling did to the operands:
// downstream tie-breaking is deterministic only if these degenerate scores
// sit on exact lattice points instead of within a few ulps of them.
inline constexpr double kCosineSnap = 1e-12;

inline double cosine_dissimilarity(std::span<const double> a, std::span<const double> b,
                                   ZeroNormPolicy zero_norm) noexcept {
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        dot += a[c] * b[c];
        norm_a += a[c] * a[c];
        norm_b += b[c] * b[c];
    }
    if (norm_a == 0.0 || norm_b == 0.0) {
        return zero_norm == ZeroNormPolicy::dissimilar ? 1.0 : 0.0;
    }
    const double cosine = dot / std::sqrt(norm_a * norm_b);
    if (cosine >= 1.0 - kCosineSnap) return 0.0;
    if (cosine <= -1.0 + kCosineSnap) return 2.0;
    return 1.0 - cosine;
}

}  // namespace detail

// Scores how much each frame's features deviate from the previous frame's,
// per patch, then aggregates across patches (max or mean).
inline VariationProfile variation_scoring(const FeatureSequence& seq, const TadConfig& cfg) {
    cfg.validate();
    const std::size_t t_count = seq.num_frames();
    const std::size_t n_count = seq.num_patches();

    VariationProfile profile;
    profile.frame_scores.assign(t_count, 0.0);
    profile.patch_scores.assign(t_count, std::vector<double>(n_count, 0.0));

    for (std::size_t t = 1; t < t_count; ++t) {
        auto& row = profile.patch_scores[t];
        for (std::size_t n = 0; n < n_count; ++n) {
            row[n] = detail::cosine_dissimilarity(seq.patch(t - 1, n), seq.patch(t, n), cfg.zero_norm);
        }
        if (cfg.aggregation == Aggregation::max) {
            profile.frame_scores[t] = *std::max_element(row.begin(), row.end());
        } else {
            profile.frame_scores[t] =
                std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(n_count);
        }
    }
    return profile;
}

namespace detail {

// Windowed local maxima of a score vector: index t is a peak when it is the
// leftmost argmax of the window [t-W/2, t+W/2] truncated to valid indices.
// Monotonic deque keeps this O(T); ties resolve to the smaller index because
// only strictly smaller back entries are evicted.
inline FrameIndexSet window_peaks(const std::vector<double>& scores, std::size_t window) {
    const std::size_t t_count = scores.size();
    const std::size_t half = window / 2;

    FrameIndexSet peaks;
    std::deque<std::size_t> candidates;
    std::size_t pushed = 0;
    for (std::size_t t = 0; t < t_count; ++t) {
        const std::size_t right = std::min(t + half, t_count - 1);
        while (pushed <= right) {
            while (!candidates.empty() && scores[candidates.back()] < scores[pushed]) {
                candidates.pop_back();
            }
            candidates.push_back(pushed);
            ++pushed;
        }
        const std::size_t left = t >= half ? t - half : 0;
        while (candidates.front() < left) {
            candidates.pop_front();
        }
        if (candidates.front() == t) {
            peaks.indices.push_back(t);
        }
    }
    return peaks;
}

// omega-boosted top-K: deterministic comparator (score desc, index asc),
// result sorted ascending to preserve chronology.
inline SelectionResult boosted_top_k(VariationProfile variation, const FrameIndexSet& peaks,
                                     const TadConfig& cfg) {
    const std::size_t t_count = variation.frame_scores.size();
    peaks.validate_for(t_count, /*require_sorted=*/true, "inflection");

    SelectionResult result;
    result.scores = variation.frame_scores;
    for (std::size_t p : peaks.indices) {
        result.scores[p] += cfg.omega;
    }

    const std::size_t keep = std::min(cfg.budget, t_count);
    std::vector<std::size_t> order(t_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& s = result.scores;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&s](std::size_t a, std::size_t b) {
                          if (s[a] != s[b]) return s[a] > s[b];
                          return a < b;
                      });
    order.resize(keep);
    std::sort(order.begin(), order.end());

    result.indices = FrameIndexSet(std::move(order));
    result.inflections = peaks;
    result.variation = std::move(variation);
    return result;
}

}  // namespace detail

inline FrameIndexSet inflection_detection(const VariationProfile& profile, const TadConfig& cfg) {
    cfg.validate();
    if (profile.frame_scores.empty()) {
        raise(Errc::invalid_argument, "variation profile is empty");
    }
    return detail::window_peaks(profile.frame_scores, cfg.window);
}

inline SelectionResult prioritized_distillation(const VariationProfile& profile,
                                                const FrameIndexSet& peaks, const TadConfig& cfg) {
    cfg.validate();
    if (profile.frame_scores.empty()) {
        raise(Errc::invalid_argument, "variation profile is empty");
    }
    return detail::boosted_top_k(profile, peaks, cfg);
}

// Frame-level (synchronous) selection: variation scoring, inflection
// detection, then boosted top-K. The distilled sequence itself is
// gather_frames(seq, result.indices).
inline SelectionResult tad_select(const FeatureSequence& seq, const TadConfig& cfg) {
    cfg.validate();
    VariationProfile profile = variation_scoring(seq, cfg);
    FrameIndexSet peaks = detail::window_peaks(profile.frame_scores, cfg.window);
    return detail::boosted_top_k(std::move(profile), peaks, cfg);
}

// Runs the inflection + distillation stages on a single patch column of an
// already-computed profile. Shared by async mode and its callers that need
// per-patch scores for reporting.
inline SelectionResult tad_select_patch(const VariationProfile& profile, std::size_t patch,
                                        const TadConfig& cfg) {
    cfg.validate();
    if (patch >= profile.num_patches()) {
        raise(Errc::index_out_of_range, "patch " + std::to_string(patch) + " out of range for " +
                                            std::to_string(profile.num_patches()) + " patches");
    }
    VariationProfile column;
    column.frame_scores.resize(profile.num_frames());
    column.patch_scores.assign(profile.num_frames(), std::vector<double>(1, 0.0));
    for (std::size_t t = 0; t < profile.num_frames(); ++t) {
        column.frame_scores[t] = profile.patch_scores[t][patch];
        column.patch_scores[t][0] = column.frame_scores[t];
    }
    FrameIndexSet peaks = detail::window_peaks(column.frame_scores, cfg.window);
    return detail::boosted_top_k(std::move(column), peaks, cfg);
}

// Patch-level (asynchronous) selection: every patch runs the frame pipeline
// independently along its own dissimilarity column. Returns one ascending
// index list of length min(K, T) per patch; no cross-patch re-packing is
// attempted.
inline std::vector<FrameIndexSet> tad_select_async(const FeatureSequence& seq, const TadConfig& cfg) {
    cfg.validate();
    if (cfg.mode != TadMode::async) {
        raise(Errc::invalid_argument, "tad_select_async requires mode = async");
    }
    const VariationProfile profile = variation_scoring(seq, cfg);
    std::vector<FrameIndexSet> per_patch;
    per_patch.reserve(seq.num_patches());
    for (std::size_t n = 0; n < seq.num_patches(); ++n) {
        per_patch.push_back(tad_select_patch(profile, n, cfg).indices);
    }
    return per_patch;
}

}  // namespace kfrl

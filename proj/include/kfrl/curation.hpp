#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "kfrl/error.hpp"
#include "kfrl/feature_sequence.hpp"
#include "kfrl/rng.hpp"
#include "kfrl/tad.hpp"

namespace kfrl {

// Keyframe curation for one training video: the delta-fraction of frames the
// selector kept, in chronological order, plus the complement.
struct CuratedSample {
    FrameIndexSet keyframes;      // ascending
    FrameIndexSet non_keyframes;  // ascending complement
    double delta = 0.5;

    std::size_t selected_count() const noexcept { return keyframes.size(); }
    std::size_t total_frames() const noexcept { return keyframes.size() + non_keyframes.size(); }
};

enum class Provenance : unsigned char { key, nonkey };

// A disordered counterpart of the keyframe set: roughly half keyframes, half
// non-keyframes, in seeded-shuffled order. Same length as the keyframe set.
struct HybridSample {
    std::vector<std::size_t> frame_ids;
    std::vector<Provenance> provenance;
    std::uint64_t shuffle_seed = 0;
};

// Runs frame-level selection with budget floor(delta * T), clamped to at
// least one frame. The small epsilon counters representation error in
// delta * T (e.g. 0.7 * 10 evaluating just below 7).
inline CuratedSample curate_frames(const FeatureSequence& seq, double delta,
                                   const TadConfig& tad_cfg) {
    if (!(delta > 0.0 && delta <= 1.0)) {
        raise(Errc::invalid_delta, "delta must be in (0, 1], got " + std::to_string(delta));
    }
    const std::size_t t_count = seq.num_frames();
    std::size_t keep =
        static_cast<std::size_t>(std::floor(delta * static_cast<double>(t_count) + 1e-9));
    if (keep == 0) keep = 1;

    TadConfig cfg = tad_cfg;
    cfg.budget = keep;
    cfg.mode = TadMode::sync;  // curation keeps or drops whole frames
    const SelectionResult selection = tad_select(seq, cfg);

    CuratedSample sample;
    sample.delta = delta;
    sample.keyframes = selection.indices;
    sample.non_keyframes.indices.reserve(t_count - sample.keyframes.size());
    std::size_t next_selected = 0;
    for (std::size_t t = 0; t < t_count; ++t) {
        if (next_selected < sample.keyframes.size() &&
            sample.keyframes.indices[next_selected] == t) {
            ++next_selected;
        } else {
            sample.non_keyframes.indices.push_back(t);
        }
    }
    return sample;
}

// Draws ceil(T_s/2) keyframes and floor(T_s/2) non-keyframes uniformly
// without replacement, then shuffles the combined list. When there are no
// non-keyframes the result is a shuffled permutation of the keyframes; when
// there are some but too few, keyframes fill the shortfall so the hybrid
// always has the same length as the keyframe set.
inline HybridSample build_hybrid(const CuratedSample& sample, std::uint64_t seed) {
    const std::size_t t_s = sample.keyframes.size();
    if (t_s == 0) {
        raise(Errc::invalid_argument, "curated sample has no keyframes");
    }
    const std::size_t nonkey_count = std::min(t_s / 2, sample.non_keyframes.size());
    const std::size_t key_count = t_s - nonkey_count;

    Rng rng(seed);
    const std::vector<std::size_t> keys =
        sample_without_replacement(sample.keyframes.indices, key_count, rng);
    const std::vector<std::size_t> nonkeys =
        sample_without_replacement(sample.non_keyframes.indices, nonkey_count, rng);

    std::vector<std::pair<std::size_t, Provenance>> slots;
    slots.reserve(t_s);
    for (std::size_t id : keys) slots.emplace_back(id, Provenance::key);
    for (std::size_t id : nonkeys) slots.emplace_back(id, Provenance::nonkey);
    fisher_yates_shuffle(slots, rng);

    HybridSample hybrid;
    hybrid.shuffle_seed = seed;
    hybrid.frame_ids.reserve(t_s);
    hybrid.provenance.reserve(t_s);
    for (const auto& [id, origin] : slots) {
        hybrid.frame_ids.push_back(id);
        hybrid.provenance.push_back(origin);
    }
    return hybrid;
}

}  // namespace kfrl

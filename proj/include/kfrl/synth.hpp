#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "kfrl/curation.hpp"
#include "kfrl/error.hpp"
#include "kfrl/feature_sequence.hpp"
#include "kfrl/policy.hpp"
#include "kfrl/rng.hpp"

namespace kfrl {

// Fully observable stand-in for real video features: piecewise-constant
// patch prototypes with planted switch points ("events") plus Gaussian
// noise. Every event is a known variation spike the selector should find.
struct SyntheticSpec {
    std::size_t num_frames = 16;
    std::size_t num_patches = 2;
    std::size_t channels = 8;
    std::vector<std::size_t> event_frames;  // strictly increasing, all >= 1
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_frames == 0 || num_patches == 0 || channels == 0) {
            raise(Errc::invalid_argument, "dimensions must be positive");
        }
        if (!(noise_sigma >= 0.0)) {
            raise(Errc::invalid_argument, "noise_sigma must be non-negative");
        }
        for (std::size_t i = 0; i < event_frames.size(); ++i) {
            if (event_frames[i] < 1 || event_frames[i] >= num_frames) {
                raise(Errc::index_out_of_range,
                      "event frame " + std::to_string(event_frames[i]) + " outside [1, " +
                          std::to_string(num_frames) + ")");
            }
            if (i > 0 && event_frames[i] <= event_frames[i - 1]) {
                raise(Errc::invalid_argument, "event frames must be strictly increasing");
            }
        }
    }
};

struct GeneratedSequence {
    FeatureSequence features;
    std::vector<std::size_t> events;  // planted ground truth
};

namespace detail {

inline std::vector<double> random_unit_vector(std::size_t channels, Rng& rng) {
    std::vector<double> v(channels);
    for (;;) {
        double norm_sq = 0.0;
        for (double& x : v) {
            x = rng.normal();
            norm_sq += x * x;
        }
        if (norm_sq > 1e-12) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (double& x : v) x *= inv;
            return v;
        }
    }
}

// Unit vector orthogonal to `previous` (Gram-Schmidt on a fresh draw), so a
// prototype switch scores a full cosine dissimilarity spike.
inline std::vector<double> orthogonal_unit_vector(const std::vector<double>& previous, Rng& rng) {
    for (;;) {
        std::vector<double> v = random_unit_vector(previous.size(), rng);
        double projection = 0.0;
        for (std::size_t c = 0; c < v.size(); ++c) projection += v[c] * previous[c];
        double norm_sq = 0.0;
        for (std::size_t c = 0; c < v.size(); ++c) {
            v[c] -= projection * previous[c];
            norm_sq += v[c] * v[c];
        }
        if (norm_sq > 1e-12) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (double& x : v) x *= inv;
            return v;
        }
    }
}

}  // namespace detail

inline GeneratedSequence generate_sequence(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    // One prototype per (segment, patch); each event starts a new segment
    // with prototypes orthogonal to the previous segment's.
    const std::size_t segments = spec.event_frames.size() + 1;
    std::vector<std::vector<std::vector<double>>> prototypes(segments);
    for (std::size_t s = 0; s < segments; ++s) {
        prototypes[s].resize(spec.num_patches);
        for (std::size_t n = 0; n < spec.num_patches; ++n) {
            prototypes[s][n] = s == 0 ? detail::random_unit_vector(spec.channels, rng)
                                      : detail::orthogonal_unit_vector(prototypes[s - 1][n], rng);
        }
    }

    std::vector<double> data(spec.num_frames * spec.num_patches * spec.channels);
    std::size_t segment = 0;
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
        if (segment < spec.event_frames.size() && t == spec.event_frames[segment]) {
            ++segment;
        }
        for (std::size_t n = 0; n < spec.num_patches; ++n) {
            const auto& proto = prototypes[segment][n];
            const std::size_t base = (t * spec.num_patches + n) * spec.channels;
            for (std::size_t c = 0; c < spec.channels; ++c) {
                data[base + c] = proto[c] + (spec.noise_sigma > 0.0
                                                 ? spec.noise_sigma * rng.normal()
                                                 : 0.0);
            }
        }
    }

    return GeneratedSequence{
        FeatureSequence(spec.num_frames, spec.num_patches, spec.channels, std::move(data)),
        spec.event_frames};
}

// Draws `count` event frames in [1, num_frames) with pairwise gaps of at
// least min_gap, by rejection with an evenly spaced fallback.
inline std::vector<std::size_t> sample_event_frames(std::size_t num_frames, std::size_t count,
                                                    std::size_t min_gap, Rng& rng) {
    if (count == 0) return {};
    if (num_frames < 2) {
        raise(Errc::invalid_argument, "need at least 2 frames to place events");
    }
    const std::size_t lo = 1, hi = num_frames - 1;
    if (lo + (count - 1) * min_gap > hi) {
        raise(Errc::invalid_argument, "cannot place " + std::to_string(count) +
                                          " events with gap " + std::to_string(min_gap) + " in " +
                                          std::to_string(num_frames) + " frames");
    }
    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::vector<std::size_t> events(count);
        for (auto& e : events) e = lo + static_cast<std::size_t>(rng.bounded(hi - lo + 1));
        std::sort(events.begin(), events.end());
        bool ok = true;
        for (std::size_t i = 1; i < count; ++i) {
            if (events[i] - events[i - 1] < min_gap) {
                ok = false;
                break;
            }
        }
        if (ok) return events;
    }
    std::vector<std::size_t> events(count);
    for (std::size_t i = 0; i < count; ++i) events[i] = lo + i * min_gap;
    return events;
}

enum class TaskMode { sequential, hybrid };

// A temporal-ordering question: which permutation of the planted events
// matches their true chronology? Events are labelled chronologically, the
// options enumerate label permutations in lexicographic order, so the true
// order is the identity permutation at index 0. frame_input carries the
// frames shown to the policy (ordered keyframes or a shuffled hybrid).
struct OrderingTask {
    std::string question;
    std::vector<std::vector<int>> options;
    int correct_option = 0;
    std::vector<std::size_t> frame_input;
    std::vector<Provenance> provenance;
    std::vector<std::size_t> event_frames;  // label k -> frame of event k

    std::size_t num_events() const noexcept { return event_frames.size(); }
    std::size_t summary_size() const noexcept {
        return event_frames.size() * (event_frames.size() - 1) / 2;
    }
};

inline constexpr std::size_t kMaxOrderingOptions = 6;

inline OrderingTask make_ordering_task(const std::vector<std::size_t>& events, TaskMode mode,
                                       const CuratedSample& sample, std::uint64_t seed) {
    if (events.size() < 2) {
        raise(Errc::too_few_events, "ordering task needs at least 2 events, got " +
                                        std::to_string(events.size()));
    }

    OrderingTask task;
    task.event_frames = events;
    task.question = "event-order-" + std::to_string(events.size());

    std::vector<int> labels(events.size());
    std::iota(labels.begin(), labels.end(), 0);
    do {
        task.options.push_back(labels);
    } while (task.options.size() < kMaxOrderingOptions &&
             std::next_permutation(labels.begin(), labels.end()));
    task.correct_option = 0;  // identity order is lexicographically first

    if (mode == TaskMode::sequential) {
        task.frame_input = sample.keyframes.indices;
        task.provenance.assign(task.frame_input.size(), Provenance::key);
    } else {
        HybridSample hybrid = build_hybrid(sample, seed);
        task.frame_input = std::move(hybrid.frame_ids);
        task.provenance = std::move(hybrid.provenance);
    }
    return task;
}

// Order-sensitive input summary: one entry per event-label pair (i, j) with
// i < j, +1 when event i's frame precedes event j's in frame_input, -1 when
// it follows, 0 when either frame is absent. Any non-identity arrangement
// of the visible events changes the summary; there is deliberately no bias
// entry, so an input-blind policy cannot encode a constant answer.
inline std::vector<double> order_summary(const OrderingTask& task) {
    const std::size_t event_count = task.event_frames.size();
    std::vector<std::ptrdiff_t> position(event_count, -1);
    for (std::size_t e = 0; e < event_count; ++e) {
        const auto it =
            std::find(task.frame_input.begin(), task.frame_input.end(), task.event_frames[e]);
        if (it != task.frame_input.end()) {
            position[e] = it - task.frame_input.begin();
        }
    }
    std::vector<double> summary;
    summary.reserve(task.summary_size());
    for (std::size_t i = 0; i < event_count; ++i) {
        for (std::size_t j = i + 1; j < event_count; ++j) {
            if (position[i] < 0 || position[j] < 0) {
                summary.push_back(0.0);
            } else {
                summary.push_back(position[i] < position[j] ? 1.0 : -1.0);
            }
        }
    }
    return summary;
}

inline std::vector<double> policy_forward(const PolicyParams& params, const OrderingTask& task) {
    if (params.summary_dim != task.summary_size() || params.num_options != task.options.size()) {
        raise(Errc::support_mismatch,
              "policy expects " + std::to_string(params.summary_dim) + " summary entries and " +
                  std::to_string(params.num_options) + " options; task has " +
                  std::to_string(task.summary_size()) + " and " +
                  std::to_string(task.options.size()));
    }
    return policy_distribution(params, order_summary(task));
}

enum class AnswerMode { sampled, argmax };

// Fraction of tasks answered correctly. Sampled mode draws one answer per
// task from the policy distribution; argmax mode is deterministic.
inline double evaluate_accuracy(const PolicyParams& params, const std::vector<OrderingTask>& tasks,
                                AnswerMode mode, Rng* rng = nullptr) {
    if (tasks.empty()) {
        raise(Errc::invalid_argument, "task list is empty");
    }
    if (mode == AnswerMode::sampled && rng == nullptr) {
        raise(Errc::invalid_argument, "sampled evaluation needs a generator");
    }
    std::size_t correct = 0;
    for (const OrderingTask& task : tasks) {
        const std::vector<double> dist = policy_forward(params, task);
        const int answer =
            mode == AnswerMode::sampled ? sample_action(dist, *rng) : argmax_action(dist);
        if (answer == task.correct_option) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(tasks.size());
}

// Hand-set weights that decode the order summary exactly: each option's
// weight column is the +/-1 pair pattern of its permutation, scaled hard so
// the softmax saturates. Used as a constructed optimum in evaluation.
inline PolicyParams oracle_policy(std::size_t num_events, double scale = 50.0) {
    if (num_events < 2) {
        raise(Errc::too_few_events, "oracle policy needs at least 2 events");
    }
    std::vector<int> labels(num_events);
    std::iota(labels.begin(), labels.end(), 0);
    std::vector<std::vector<int>> options;
    do {
        options.push_back(labels);
    } while (options.size() < kMaxOrderingOptions &&
             std::next_permutation(labels.begin(), labels.end()));

    const std::size_t pairs = num_events * (num_events - 1) / 2;
    PolicyParams params = PolicyParams::zeros(pairs, options.size());
    for (std::size_t o = 0; o < options.size(); ++o) {
        std::vector<std::size_t> rank(num_events);
        for (std::size_t pos = 0; pos < num_events; ++pos) {
            rank[static_cast<std::size_t>(options[o][pos])] = pos;
        }
        std::size_t d = 0;
        for (std::size_t i = 0; i < num_events; ++i) {
            for (std::size_t j = i + 1; j < num_events; ++j, ++d) {
                params.weight(d, o) = rank[i] < rank[j] ? scale : -scale;
            }
        }
    }
    return params;
}

}  // namespace kfrl

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "kfrl/error.hpp"

namespace kfrl {

// One sampled response: an answer (option index) plus a well-formedness
// flag standing in for structural quality of the output.
struct Response {
    int answer = 0;
    bool well_formed = true;
};

struct BaseRewardConfig {
    double correct_weight = 1.0;
    double format_weight = 0.1;
};

// Per-response reward decomposition: total = base + saliency * accuracy.
struct RewardBreakdown {
    double base = 0.0;
    double accuracy = 0.0;  // A(a_j) in [0, 1]
    int saliency = 0;       // r_s, shared by the whole group
    double total = 0.0;     // Q_j
};

// r_s = 1 iff the sequential ensemble strictly outperforms the disordered
// one. Equality earns nothing.
inline int saliency_reward(double seq_accuracy, double hyb_accuracy) noexcept {
    return seq_accuracy > hyb_accuracy ? 1 : 0;
}

inline double aggregate_reward(double base, double accuracy, int saliency) noexcept {
    return base + static_cast<double>(saliency) * accuracy;
}

inline double base_reward(const Response& response, int correct_answer,
                          const BaseRewardConfig& cfg = {}) noexcept {
    double reward = 0.0;
    if (response.answer == correct_answer) reward += cfg.correct_weight;
    if (response.well_formed) reward += cfg.format_weight;
    return reward;
}

// Whether the sigma/2 shift uses the population standard deviation or the
// raw variance.
enum class SpreadMeasure { population_std, variance };

// Group-relative advantages: R_j = Q_j - mean + spread/2. A group with
// identical rewards maps to exact zeros.
inline std::vector<double> relative_advantage(std::span<const double> rewards,
                                              SpreadMeasure spread_measure = SpreadMeasure::population_std) {
    const std::size_t m = rewards.size();
    if (m == 0) {
        raise(Errc::invalid_argument, "reward group is empty");
    }

    bool all_equal = true;
    for (std::size_t j = 1; j < m; ++j) {
        if (rewards[j] != rewards[0]) {
            all_equal = false;
            break;
        }
    }
    if (all_equal) {
        return std::vector<double>(m, 0.0);
    }

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(m);

    double variance = 0.0;
    for (double r : rewards) variance += (r - mean) * (r - mean);
    variance /= static_cast<double>(m);

    const double spread =
        spread_measure == SpreadMeasure::population_std ? std::sqrt(variance) : variance;

    std::vector<double> advantages(m);
    for (std::size_t j = 0; j < m; ++j) {
        advantages[j] = rewards[j] - mean + spread / 2.0;
    }
    return advantages;
}

}  // namespace kfrl

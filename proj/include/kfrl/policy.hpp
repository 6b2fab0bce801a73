#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kfrl/error.hpp"
#include "kfrl/rng.hpp"

namespace kfrl {

// Toy categorical policy: logits = W^T phi / temperature, distribution =
// softmax(logits). Weights are the only trained parameters; the closed-form
// jacobian below keeps gradient checks exact.
struct PolicyParams {
    std::size_t summary_dim = 0;
    std::size_t num_options = 0;
    double temperature = 1.0;
    std::vector<double> weights;  // row-major [d * num_options + o]

    static PolicyParams zeros(std::size_t summary_dim, std::size_t num_options,
                              double temperature = 1.0) {
        PolicyParams p;
        p.summary_dim = summary_dim;
        p.num_options = num_options;
        p.temperature = temperature;
        p.weights.assign(summary_dim * num_options, 0.0);
        return p;
    }

    double weight(std::size_t d, std::size_t o) const noexcept {
        return weights[d * num_options + o];
    }
    double& weight(std::size_t d, std::size_t o) noexcept { return weights[d * num_options + o]; }

    void validate() const {
        if (summary_dim == 0 || num_options == 0) {
            raise(Errc::invalid_argument, "policy dimensions must be positive");
        }
        if (weights.size() != summary_dim * num_options) {
            raise(Errc::shape_mismatch, "weight count " + std::to_string(weights.size()) +
                                            " does not match " + std::to_string(summary_dim) + "x" +
                                            std::to_string(num_options));
        }
        if (!(temperature > 0.0)) {
            raise(Errc::invalid_argument, "temperature must be positive");
        }
        for (double w : weights) {
            if (!std::isfinite(w)) raise(Errc::non_finite_value, "policy weight is not finite");
        }
    }

    bool same_shape(const PolicyParams& other) const noexcept {
        return summary_dim == other.summary_dim && num_options == other.num_options;
    }
};

// Numerically stable softmax; sums to 1 up to rounding.
inline std::vector<double> softmax(std::span<const double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - peak);
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

inline std::vector<double> policy_logits(const PolicyParams& params,
                                         std::span<const double> summary) {
    if (summary.size() != params.summary_dim) {
        raise(Errc::shape_mismatch, "summary length " + std::to_string(summary.size()) +
                                        " does not match policy input dim " +
                                        std::to_string(params.summary_dim));
    }
    std::vector<double> logits(params.num_options, 0.0);
    for (std::size_t d = 0; d < params.summary_dim; ++d) {
        const double x = summary[d];
        if (x == 0.0) continue;
        for (std::size_t o = 0; o < params.num_options; ++o) {
            logits[o] += params.weight(d, o) * x;
        }
    }
    for (double& z : logits) z /= params.temperature;
    return logits;
}

inline std::vector<double> policy_distribution(const PolicyParams& params,
                                               std::span<const double> summary) {
    return softmax(policy_logits(params, summary));
}

// d pi[k] / d W[d][o] = pi[k] * (1[k==o] - pi[o]) * phi[d] / temperature.
// Returned flat, option-major per weight: jac[k][d * num_options + o].
inline std::vector<std::vector<double>> distribution_jacobian(const PolicyParams& params,
                                                              std::span<const double> summary) {
    const std::vector<double> probs = policy_distribution(params, summary);
    std::vector<std::vector<double>> jac(params.num_options,
                                         std::vector<double>(params.weights.size(), 0.0));
    for (std::size_t k = 0; k < params.num_options; ++k) {
        for (std::size_t d = 0; d < params.summary_dim; ++d) {
            const double scale = summary[d] / params.temperature;
            for (std::size_t o = 0; o < params.num_options; ++o) {
                const double indicator = (k == o) ? 1.0 : 0.0;
                jac[k][d * params.num_options + o] = probs[k] * (indicator - probs[o]) * scale;
            }
        }
    }
    return jac;
}

// Accumulates coeff * d log pi(action) / d W into grad_out.
// d log pi(a) / d W[d][o] = (1[o==a] - pi[o]) * phi[d] / temperature.
inline void accumulate_log_prob_grad(const PolicyParams& params, std::span<const double> summary,
                                     std::span<const double> probs, int action, double coeff,
                                     std::vector<double>& grad_out) {
    for (std::size_t d = 0; d < params.summary_dim; ++d) {
        const double scale = coeff * summary[d] / params.temperature;
        if (scale == 0.0) continue;
        for (std::size_t o = 0; o < params.num_options; ++o) {
            const double indicator = (static_cast<int>(o) == action) ? 1.0 : 0.0;
            grad_out[d * params.num_options + o] += scale * (indicator - probs[o]);
        }
    }
}

// Inverse-CDF sampling with a fixed accumulation order.
inline int sample_action(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform01();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

// Deterministic argmax, ties to the smallest index.
inline int argmax_action(std::span<const double> probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return static_cast<int>(best);
}

}  // namespace kfrl

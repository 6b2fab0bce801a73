#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "kfrl/error.hpp"
#include "kfrl/policy.hpp"
#include "kfrl/rewards.hpp"

namespace kfrl {

struct ObjectiveConfig {
    double clip_eta = 0.2;   // ratio clip half-width, in (0, 1)
    double kl_gamma = 0.01;  // KL penalty weight, >= 0
    bool ppo_min_variant = false;
    SpreadMeasure spread = SpreadMeasure::population_std;

    void validate() const {
        if (!(clip_eta > 0.0 && clip_eta < 1.0)) {
            raise(Errc::invalid_argument, "clip_eta must be in (0, 1)");
        }
        if (!(kl_gamma >= 0.0)) {
            raise(Errc::invalid_argument, "kl_gamma must be non-negative");
        }
    }
};

// KL(p || q) = sum p_i ln(p_i / q_i), with 0 * ln(0/q) = 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        raise(Errc::support_mismatch, "distributions have sizes " + std::to_string(p.size()) +
                                          " and " + std::to_string(q.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] <= 0.0) {
            raise(Errc::undefined_divergence,
                  "p is positive where q vanishes (index " + std::to_string(i) + ")");
        }
        total += p[i] * std::log(p[i] / q[i]);
    }
    return total;
}

// One group of rollouts on a shared input. input_summary is the featurized
// input the group's responses were sampled against; advantages are the
// shifted group-relative values driving the update.
struct RolloutGroup {
    std::vector<double> input_summary;
    std::vector<Response> responses;
    std::vector<RewardBreakdown> breakdowns;
    std::vector<double> advantages;
    double seq_accuracy = 0.0;  // c
    double hyb_accuracy = 0.0;  // c-hat

    std::size_t size() const noexcept { return responses.size(); }
};

struct ObjectiveValue {
    double loss = 0.0;       // negated objective (what a minimizer descends)
    double surrogate = 0.0;  // (1/M) sum clip(ratio) * advantage
    double kl = 0.0;         // KL(theta || base) on the group input
    std::vector<double> grad;  // d loss / d theta.weights
};

// Clipped, KL-regularized group objective:
//   J = (1/M) sum_j clip(pi_theta(a_j)/pi_init(a_j), 1-eta, 1+eta) * R_j
//       - gamma * KL(pi_theta || pi_base)
// returned as loss = -J with its analytic weight gradient. A saturated clip
// contributes zero gradient; ratios exactly on a boundary count as interior.
// With ppo_min_variant, each term is min(ratio * R, clip(ratio) * R).
inline ObjectiveValue kf_grpo_objective(const RolloutGroup& group, const PolicyParams& theta,
                                        const PolicyParams& init, const PolicyParams& base,
                                        const ObjectiveConfig& cfg) {
    cfg.validate();
    theta.validate();
    if (!theta.same_shape(init) || !theta.same_shape(base)) {
        raise(Errc::support_mismatch, "policy snapshots have mismatched shapes");
    }
    const std::size_t m = group.size();
    if (m == 0) {
        raise(Errc::invalid_argument, "rollout group is empty");
    }
    if (group.advantages.size() != m) {
        raise(Errc::shape_mismatch, "group has " + std::to_string(m) + " responses but " +
                                        std::to_string(group.advantages.size()) + " advantages");
    }

    const std::span<const double> summary(group.input_summary);
    const std::vector<double> dist_theta = policy_distribution(theta, summary);
    const std::vector<double> dist_init = policy_distribution(init, summary);
    const std::vector<double> dist_base = policy_distribution(base, summary);

    const double lo = 1.0 - cfg.clip_eta;
    const double hi = 1.0 + cfg.clip_eta;

    double surrogate = 0.0;
    std::vector<double> surrogate_grad(theta.weights.size(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        const int action = group.responses[j].answer;
        if (action < 0 || static_cast<std::size_t>(action) >= theta.num_options) {
            raise(Errc::index_out_of_range, "response answer " + std::to_string(action) +
                                                " outside option range");
        }
        const double p_init = dist_init[static_cast<std::size_t>(action)];
        if (p_init <= 0.0) {
            raise(Errc::zero_init_probability,
                  "reference policy assigns zero probability to sampled action " +
                      std::to_string(action));
        }
        const double ratio = dist_theta[static_cast<std::size_t>(action)] / p_init;
        const double clipped = std::clamp(ratio, lo, hi);
        const double advantage = group.advantages[j];

        double term;
        bool ratio_grad_flows;
        if (cfg.ppo_min_variant) {
            const double unclipped_term = ratio * advantage;
            const double clipped_term = clipped * advantage;
            if (unclipped_term <= clipped_term) {
                term = unclipped_term;
                ratio_grad_flows = true;
            } else {
                term = clipped_term;
                ratio_grad_flows = false;  // min picked the saturated branch
            }
        } else {
            term = clipped * advantage;
            ratio_grad_flows = ratio >= lo && ratio <= hi;
        }
        surrogate += term;

        if (ratio_grad_flows) {
            // d ratio / d W = ratio * d log pi_theta(a) / d W
            accumulate_log_prob_grad(theta, summary, dist_theta, action, advantage * ratio,
                                     surrogate_grad);
        }
    }
    surrogate /= static_cast<double>(m);
    for (double& g : surrogate_grad) g /= static_cast<double>(m);

    const double kl = kl_divergence(dist_theta, dist_base);

    ObjectiveValue value;
    value.surrogate = surrogate;
    value.kl = kl;
    value.loss = -(surrogate - cfg.kl_gamma * kl);

    // d KL / d z_o = pi_o * (ln(pi_o / q_o) - KL); chain through z = W^T phi / tau.
    value.grad.assign(theta.weights.size(), 0.0);
    for (std::size_t i = 0; i < value.grad.size(); ++i) {
        value.grad[i] = -surrogate_grad[i];
    }
    if (cfg.kl_gamma > 0.0) {
        for (std::size_t o = 0; o < theta.num_options; ++o) {
            const double p = dist_theta[o];
            if (p <= 0.0) continue;
            const double dkl_dz = p * (std::log(p / dist_base[o]) - kl);
            for (std::size_t d = 0; d < theta.summary_dim; ++d) {
                value.grad[d * theta.num_options + o] +=
                    cfg.kl_gamma * dkl_dz * summary[d] / theta.temperature;
            }
        }
    }
    return value;
}

}  // namespace kfrl

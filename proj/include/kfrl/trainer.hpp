#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kfrl/curation.hpp"
#include "kfrl/error.hpp"
#include "kfrl/objective.hpp"
#include "kfrl/policy.hpp"
#include "kfrl/rewards.hpp"
#include "kfrl/rng.hpp"
#include "kfrl/synth.hpp"
#include "kfrl/tad.hpp"
#include "kfrl/text_format.hpp"

namespace kfrl {

// Synthetic data source used for training and evaluation runs.
struct SynthEnvConfig {
    std::size_t num_frames = 16;
    std::size_t num_patches = 2;
    std::size_t channels = 8;
    std::size_t num_events = 3;
    std::size_t min_event_gap = 3;  // keeps each event a clean windowed peak
    double noise_sigma = 0.05;
};

struct TrainConfig {
    TadConfig tad;           // window/omega/aggregation; budget comes from delta
    double delta = 0.5;      // curation fraction
    ObjectiveConfig objective;
    std::size_t group_size = 8;  // M rollouts per ensemble
    std::size_t batch_size = 2;  // videos per step
    double learning_rate = 0.05;
    double temperature = 1.0;
    std::size_t init_refresh_interval = 1;  // steps between ratio-reference snapshots
    SynthEnvConfig env;
    BaseRewardConfig base_reward;

    void validate() const {
        tad.validate();
        objective.validate();
        if (!(delta > 0.0 && delta <= 1.0)) {
            raise(Errc::invalid_delta, "delta must be in (0, 1]");
        }
        if (group_size == 0) raise(Errc::invalid_argument, "group_size must be >= 1");
        if (batch_size == 0) raise(Errc::invalid_argument, "batch_size must be >= 1");
        if (!(learning_rate > 0.0)) raise(Errc::invalid_argument, "learning rate must be positive");
        if (!(temperature > 0.0)) raise(Errc::invalid_argument, "temperature must be positive");
        if (init_refresh_interval == 0) {
            raise(Errc::invalid_argument, "init_refresh_interval must be >= 1");
        }
        if (env.num_events < 2) {
            raise(Errc::too_few_events, "ordering tasks need at least 2 planted events");
        }
    }
};

struct StepMetrics {
    std::size_t step = 0;
    double mean_reward = 0.0;
    double r_s_rate = 0.0;
    double acc_seq = 0.0;
    double acc_hyb = 0.0;
    double kl = 0.0;
    double loss = 0.0;
    std::uint64_t seed = 0;
};

// One JSONL record per step; fixed key order and formatting so identical
// runs produce identical byte streams.
inline std::string step_metrics_to_json(const StepMetrics& metrics) {
    std::string line = "{\"step\":" + std::to_string(metrics.step);
    line += ",\"mean_reward\":" + fmt_g9(metrics.mean_reward);
    line += ",\"r_s_rate\":" + fmt_g9(metrics.r_s_rate);
    line += ",\"acc_seq\":" + fmt_g9(metrics.acc_seq);
    line += ",\"acc_hyb\":" + fmt_g9(metrics.acc_hyb);
    line += ",\"kl\":" + fmt_g9(metrics.kl);
    line += ",\"loss\":" + fmt_g9(metrics.loss);
    line += ",\"seed\":" + std::to_string(metrics.seed);
    line += "}";
    return line;
}

// A curated synthetic video with its planted ground truth.
struct TrainingSample {
    CuratedSample curated;
    std::vector<std::size_t> events;
};

inline TrainingSample make_training_sample(const TrainConfig& cfg, std::uint64_t sample_seed) {
    Rng placement(split_seed(sample_seed, 0));
    SyntheticSpec spec;
    spec.num_frames = cfg.env.num_frames;
    spec.num_patches = cfg.env.num_patches;
    spec.channels = cfg.env.channels;
    spec.noise_sigma = cfg.env.noise_sigma;
    spec.event_frames =
        sample_event_frames(cfg.env.num_frames, cfg.env.num_events, cfg.env.min_event_gap, placement);
    spec.seed = split_seed(sample_seed, 1);

    GeneratedSequence generated = generate_sequence(spec);
    TrainingSample sample;
    sample.curated = curate_frames(generated.features, cfg.delta, cfg.tad);
    sample.events = std::move(generated.events);
    return sample;
}

inline std::vector<TrainingSample> make_training_batch(const TrainConfig& cfg,
                                                       std::uint64_t step_seed) {
    std::vector<TrainingSample> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        batch.push_back(make_training_sample(cfg, split_seed(step_seed, 2 * i)));
    }
    return batch;
}

namespace detail {

inline std::size_t factorial_capped(std::size_t n, std::size_t cap) {
    std::size_t f = 1;
    for (std::size_t i = 2; i <= n; ++i) {
        f *= i;
        if (f >= cap) return cap;
    }
    return f;
}

}  // namespace detail

// Runs the paired-ensemble training loop on synthetic ordering tasks. The
// policy, its ratio reference (refreshed every init_refresh_interval steps)
// and its fixed KL anchor live here; all randomness derives from the master
// seed, so two trainers with the same configuration and seed produce
// bit-identical metrics streams.
class Trainer {
public:
    Trainer(const TrainConfig& cfg, std::uint64_t master_seed) : cfg_(cfg), master_seed_(master_seed) {
        cfg_.validate();
        const std::size_t pairs = cfg_.env.num_events * (cfg_.env.num_events - 1) / 2;
        const std::size_t options = detail::factorial_capped(cfg_.env.num_events, kMaxOrderingOptions);
        theta_ = PolicyParams::zeros(pairs, options, cfg_.temperature);
        init_ = theta_;
        base_ = theta_;
    }

    const TrainConfig& config() const noexcept { return cfg_; }
    const PolicyParams& params() const noexcept { return theta_; }
    const PolicyParams& ratio_reference() const noexcept { return init_; }
    const PolicyParams& kl_reference() const noexcept { return base_; }
    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::size_t step_index() const noexcept { return step_; }

    // Builds the rollout group for one sample: paired sequential/hybrid
    // tasks, M sampled responses on each, group-wide saliency gate, then
    // shifted advantages over the sequential ensemble's rewards.
    RolloutGroup rollout_group(const TrainingSample& sample, std::uint64_t group_seed) const {
        const OrderingTask seq_task = make_ordering_task(sample.events, TaskMode::sequential,
                                                         sample.curated, split_seed(group_seed, 0));
        const OrderingTask hyb_task = make_ordering_task(sample.events, TaskMode::hybrid,
                                                         sample.curated, split_seed(group_seed, 1));

        const std::vector<double> dist_seq = policy_forward(theta_, seq_task);
        const std::vector<double> dist_hyb = policy_forward(theta_, hyb_task);

        Rng rng_seq(split_seed(group_seed, 2));
        Rng rng_hyb(split_seed(group_seed, 3));

        RolloutGroup group;
        group.input_summary = order_summary(seq_task);
        group.responses.reserve(cfg_.group_size);
        std::size_t seq_correct = 0, hyb_correct = 0;
        for (std::size_t j = 0; j < cfg_.group_size; ++j) {
            const int seq_answer = sample_action(dist_seq, rng_seq);
            const int hyb_answer = sample_action(dist_hyb, rng_hyb);
            if (seq_answer == seq_task.correct_option) ++seq_correct;
            if (hyb_answer == hyb_task.correct_option) ++hyb_correct;
            group.responses.push_back(Response{seq_answer, true});
        }
        group.seq_accuracy = static_cast<double>(seq_correct) / static_cast<double>(cfg_.group_size);
        group.hyb_accuracy = static_cast<double>(hyb_correct) / static_cast<double>(cfg_.group_size);

        const int saliency = saliency_reward(group.seq_accuracy, group.hyb_accuracy);
        std::vector<double> rewards(cfg_.group_size);
        group.breakdowns.resize(cfg_.group_size);
        for (std::size_t j = 0; j < cfg_.group_size; ++j) {
            RewardBreakdown& breakdown = group.breakdowns[j];
            breakdown.base = base_reward(group.responses[j], seq_task.correct_option, cfg_.base_reward);
            breakdown.accuracy =
                group.responses[j].answer == seq_task.correct_option ? 1.0 : 0.0;
            breakdown.saliency = saliency;
            breakdown.total = aggregate_reward(breakdown.base, breakdown.accuracy, saliency);
            rewards[j] = breakdown.total;
        }
        group.advantages = relative_advantage(rewards, cfg_.objective.spread);
        return group;
    }

    // One gradient-ascent step over a batch of curated samples.
    StepMetrics train_step(const std::vector<TrainingSample>& batch) {
        if (batch.empty()) {
            raise(Errc::invalid_argument, "training batch is empty");
        }
        if (step_ % cfg_.init_refresh_interval == 0) {
            init_ = theta_;
        }
        const std::uint64_t step_seed = split_seed(master_seed_, step_);

        StepMetrics metrics;
        metrics.step = step_;
        metrics.seed = master_seed_;

        std::vector<double> grad(theta_.weights.size(), 0.0);
        double reward_sum = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const RolloutGroup group = rollout_group(batch[i], split_seed(step_seed, 2 * i + 1));
            const ObjectiveValue value =
                kf_grpo_objective(group, theta_, init_, base_, cfg_.objective);

            for (std::size_t w = 0; w < grad.size(); ++w) grad[w] += value.grad[w];
            metrics.loss += value.loss;
            metrics.kl += value.kl;
            metrics.acc_seq += group.seq_accuracy;
            metrics.acc_hyb += group.hyb_accuracy;
            metrics.r_s_rate += group.breakdowns.front().saliency;
            for (const RewardBreakdown& b : group.breakdowns) reward_sum += b.total;
        }
        const double inv_batch = 1.0 / static_cast<double>(batch.size());
        metrics.loss *= inv_batch;
        metrics.kl *= inv_batch;
        metrics.acc_seq *= inv_batch;
        metrics.acc_hyb *= inv_batch;
        metrics.r_s_rate *= inv_batch;
        metrics.mean_reward =
            reward_sum / static_cast<double>(batch.size() * cfg_.group_size);

        // Descend the loss = ascend the objective.
        for (std::size_t w = 0; w < grad.size(); ++w) {
            theta_.weights[w] -= cfg_.learning_rate * grad[w] * inv_batch;
        }
        ++step_;
        return metrics;
    }

    // Generates a fresh seeded batch for the current step and trains on it.
    StepMetrics step() {
        const std::uint64_t step_seed = split_seed(master_seed_, step_);
        return train_step(make_training_batch(cfg_, step_seed));
    }

private:
    TrainConfig cfg_;
    PolicyParams theta_;
    PolicyParams init_;
    PolicyParams base_;
    std::uint64_t master_seed_;
    std::size_t step_ = 0;
};

// Freshly generated seeded task set for evaluation, one task per synthetic
// video in the requested mode.
inline std::vector<OrderingTask> make_eval_tasks(const TrainConfig& cfg, TaskMode mode,
                                                 std::size_t count, std::uint64_t seed) {
    std::vector<OrderingTask> tasks;
    tasks.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t task_seed = split_seed(seed, i);
        const TrainingSample sample = make_training_sample(cfg, split_seed(task_seed, 10));
        tasks.push_back(make_ordering_task(sample.events, mode, sample.curated,
                                           split_seed(task_seed, 11)));
    }
    return tasks;
}

}  // namespace kfrl

#include <doctest.h>

#include <cmath>

#include "kfrl/cftf.hpp"
#include "kfrl/serialize.hpp"
#include "kfrl/synth.hpp"
#include "kfrl/tad.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kfrl;

namespace {

SyntheticSpec make_spec(std::size_t t, std::vector<std::size_t> events, double sigma,
                        std::uint64_t seed) {
    SyntheticSpec spec;
    spec.num_frames = t;
    spec.num_patches = 2;
    spec.channels = 8;
    spec.event_frames = std::move(events);
    spec.noise_sigma = sigma;
    spec.seed = seed;
    return spec;
}

CuratedSample curated_for(const GeneratedSequence& generated, double delta) {
    TadConfig tad;
    return curate_frames(generated.features, delta, tad);
}

}  // namespace

TEST_SUITE_BEGIN("synth-env");

TEST_CASE("generate_sequence plants clean variation spikes") {
    TadConfig cfg;

    SUBCASE("no events and no noise gives a constant sequence") {
        const auto generated = generate_sequence(make_spec(8, {}, 0.0, 1));
        const auto profile = variation_scoring(generated.features, cfg);
        for (double v : profile.frame_scores) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("one noiseless event is the only spike") {
        const std::size_t j = 5;
        const auto generated = generate_sequence(make_spec(10, {j}, 0.0, 2));
        const auto profile = variation_scoring(generated.features, cfg);
        for (std::size_t t = 0; t < 10; ++t) {
            if (t == j) {
                CHECK(profile.frame_scores[t] == doctest::Approx(1.0).epsilon(1e-9));
            } else {
                CHECK(profile.frame_scores[t] == doctest::Approx(0.0).epsilon(1e-9));
            }
        }
    }

    SUBCASE("spec validation") {
        CHECK_THROWS_AS(generate_sequence(make_spec(8, {0}, 0.0, 1)), Error);
        CHECK_THROWS_AS(generate_sequence(make_spec(8, {3, 3}, 0.0, 1)), Error);
        CHECK_THROWS_AS(generate_sequence(make_spec(8, {9}, 0.0, 1)), Error);
        CHECK_THROWS_AS(generate_sequence(make_spec(8, {3}, -0.1, 1)), Error);
    }

    SUBCASE("deterministic given the seed") {
        const auto a = generate_sequence(make_spec(12, {4, 8}, 0.05, 77));
        const auto b = generate_sequence(make_spec(12, {4, 8}, 0.05, 77));
        CHECK(a.features == b.features);
    }
}

TEST_CASE("noiseless inflection set is the planted events plus the flat-start tie") {
    // With zero noise the profile is exactly zero away from events, so the
    // leftmost-tie argmax also admits index 0 whenever no event falls inside
    // its truncated window. The detected set is exactly that.
    Rng rng(31);
    TadConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t = 10 + rng.bounded(10);
        Rng placement(split_seed(900, static_cast<std::uint64_t>(trial)));
        const auto events = sample_event_frames(t, 3, 3, placement);
        const auto generated = generate_sequence(make_spec(t, events, 0.0, rng.next_u64()));
        const auto profile = variation_scoring(generated.features, cfg);
        const auto peaks = inflection_detection(profile, cfg);

        std::vector<std::size_t> expected;
        if (events.front() > cfg.window / 2) expected.push_back(0);
        expected.insert(expected.end(), events.begin(), events.end());
        CHECK(peaks.indices == expected);
    }
}

TEST_CASE("selection recovers planted events under light noise") {
    TadConfig cfg;
    cfg.budget = 3;
    int recovered = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        Rng placement(split_seed(71, static_cast<std::uint64_t>(trial)));
        const auto events = sample_event_frames(16, 3, 3, placement);
        const auto generated =
            generate_sequence(make_spec(16, events, 0.01, split_seed(72, trial)));
        const auto result = tad_select(generated.features, cfg);
        bool all = true;
        for (std::size_t e : events) all = all && result.indices.contains(e);
        recovered += all;
    }
    CHECK(recovered >= trials * 99 / 100);
}

TEST_CASE("ordering tasks enumerate label permutations") {
    const auto generated = generate_sequence(make_spec(16, {4, 8, 12}, 0.02, 5));
    const auto sample = curated_for(generated, 0.5);

    SUBCASE("two events give two options") {
        const auto task = make_ordering_task({4, 8}, TaskMode::sequential, sample, 1);
        REQUIRE(task.options.size() == 2);
        CHECK(task.options[0] == std::vector<int>{0, 1});
        CHECK(task.options[1] == std::vector<int>{1, 0});
        CHECK(task.correct_option == 0);
    }
    SUBCASE("three events give six options with the identity first") {
        const auto task = make_ordering_task({4, 8, 12}, TaskMode::sequential, sample, 1);
        REQUIRE(task.options.size() == 6);
        CHECK(task.options[0] == std::vector<int>{0, 1, 2});
        CHECK(task.correct_option == 0);
        for (std::size_t i = 0; i < task.options.size(); ++i) {
            for (std::size_t j = i + 1; j < task.options.size(); ++j) {
                CHECK(task.options[i] != task.options[j]);
            }
        }
    }
    SUBCASE("too few events") {
        CHECK_THROWS_AS(make_ordering_task({4}, TaskMode::sequential, sample, 1), Error);
    }
    SUBCASE("four events cap at six options including the identity") {
        const auto gen4 = generate_sequence(make_spec(20, {3, 7, 11, 15}, 0.02, 6));
        const auto sample4 = curated_for(gen4, 0.5);
        const auto task = make_ordering_task({3, 7, 11, 15}, TaskMode::sequential, sample4, 1);
        CHECK(task.options.size() == 6);
        CHECK(task.options[0] == std::vector<int>{0, 1, 2, 3});
    }
}

TEST_CASE("sequential inputs are chronological; hybrids almost never are") {
    const auto generated = generate_sequence(make_spec(16, {4, 8, 12}, 0.02, 9));
    const auto sample = curated_for(generated, 0.5);
    REQUIRE(sample.selected_count() == 8);

    const auto seq_task = make_ordering_task(generated.events, TaskMode::sequential, sample, 0);
    CHECK(std::is_sorted(seq_task.frame_input.begin(), seq_task.frame_input.end()));
    CHECK(seq_task.frame_input == sample.keyframes.indices);

    int disordered = 0;
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
        const auto hyb_task = make_ordering_task(generated.events, TaskMode::hybrid, sample,
                                                 static_cast<std::uint64_t>(trial));
        REQUIRE(hyb_task.frame_input.size() == 8);
        if (!std::is_sorted(hyb_task.frame_input.begin(), hyb_task.frame_input.end())) {
            ++disordered;
        }
    }
    CHECK(disordered > trials * 95 / 100);
}

TEST_CASE("order summary discriminates arrangements of the visible events") {
    const auto generated = generate_sequence(make_spec(16, {4, 8, 12}, 0.02, 13));
    const auto sample = curated_for(generated, 0.5);
    const auto seq_task = make_ordering_task(generated.events, TaskMode::sequential, sample, 0);
    const auto seq_summary = order_summary(seq_task);
    CHECK(seq_summary == std::vector<double>{1.0, 1.0, 1.0});

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto hyb_task = make_ordering_task(generated.events, TaskMode::hybrid, sample, seed);
        const auto hyb_summary = order_summary(hyb_task);
        // identical summaries only when the events appear complete and in order
        std::vector<std::ptrdiff_t> positions;
        bool all_present = true;
        for (std::size_t e : generated.events) {
            const auto it =
                std::find(hyb_task.frame_input.begin(), hyb_task.frame_input.end(), e);
            if (it == hyb_task.frame_input.end()) {
                all_present = false;
            } else {
                positions.push_back(it - hyb_task.frame_input.begin());
            }
        }
        const bool identity_on_events =
            all_present && std::is_sorted(positions.begin(), positions.end());
        if (!identity_on_events) {
            CHECK(hyb_summary != seq_summary);
        } else {
            CHECK(hyb_summary == seq_summary);
        }
    }
}

TEST_CASE("policy forward pass") {
    const auto generated = generate_sequence(make_spec(16, {4, 8, 12}, 0.02, 17));
    const auto sample = curated_for(generated, 0.5);
    const auto task = make_ordering_task(generated.events, TaskMode::sequential, sample, 0);

    SUBCASE("zero weights give the uniform distribution") {
        const PolicyParams params = PolicyParams::zeros(3, 6);
        const auto dist = policy_forward(params, task);
        for (double p : dist) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
        double total = 0.0;
        for (double p : dist) total += p;
        CHECK(std::abs(total - 1.0) < 1e-12);
    }

    SUBCASE("temperature to zero sharpens to the argmax") {
        PolicyParams params = PolicyParams::zeros(3, 6, 1e-9);
        Rng rng(18);
        for (double& w : params.weights) w = rng.normal();
        const auto dist = policy_forward(params, task);
        const int best = argmax_action(dist);
        CHECK(dist[static_cast<std::size_t>(best)] == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("mismatched policy shape is rejected") {
        const PolicyParams params = PolicyParams::zeros(2, 6);
        CHECK_THROWS_AS(policy_forward(params, task), Error);
    }

    SUBCASE("jacobian matches finite differences") {
        Rng rng(19);
        const double h = 1e-6;
        for (int trial = 0; trial < 50; ++trial) {
            PolicyParams params = PolicyParams::zeros(3, 6, 0.7 + rng.uniform01());
            for (double& w : params.weights) w = rng.normal() * 0.8;
            const auto summary = order_summary(task);
            const auto jac = distribution_jacobian(params, summary);
            for (std::size_t k = 0; k < params.num_options; ++k) {
                for (std::size_t w = 0; w < params.weights.size(); ++w) {
                    PolicyParams plus = params, minus = params;
                    plus.weights[w] += h;
                    minus.weights[w] -= h;
                    const double fd = (policy_distribution(plus, summary)[k] -
                                       policy_distribution(minus, summary)[k]) /
                                      (2.0 * h);
                    const double scale = std::max({std::abs(jac[k][w]), std::abs(fd), 1e-7});
                    CHECK(std::abs(jac[k][w] - fd) / scale < 1e-6);
                }
            }
        }
    }
}

TEST_CASE("evaluate_accuracy") {
    SUBCASE("oracle weights decode sequential tasks perfectly") {
        const PolicyParams oracle_params = oracle_policy(3);
        std::vector<OrderingTask> tasks;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            Rng placement(split_seed(21, seed));
            const auto events = sample_event_frames(16, 3, 3, placement);
            const auto generated = generate_sequence(make_spec(16, events, 0.02, split_seed(22, seed)));
            const auto sample = curated_for(generated, 0.5);
            tasks.push_back(make_ordering_task(events, TaskMode::sequential, sample, seed));
        }
        Rng rng(23);
        CHECK(evaluate_accuracy(oracle_params, tasks, AnswerMode::sampled, &rng) == 1.0);
        CHECK(evaluate_accuracy(oracle_params, tasks, AnswerMode::argmax) == 1.0);
    }

    SUBCASE("uniform policy on four-option tasks lands near 1/4") {
        // hand-built tasks: four options, arbitrary two-event summary
        std::vector<OrderingTask> tasks;
        for (int i = 0; i < 10000; ++i) {
            OrderingTask task;
            task.event_frames = {1, 2};
            task.frame_input = {1, 2};
            task.options = {{0, 1}, {1, 0}, {0, 0}, {1, 1}};
            task.correct_option = i % 4;
            tasks.push_back(std::move(task));
        }
        const PolicyParams params = PolicyParams::zeros(1, 4);
        Rng rng(24);
        const double acc = evaluate_accuracy(params, tasks, AnswerMode::sampled, &rng);
        CHECK(acc == doctest::Approx(0.25).epsilon(0.08));  // 0.25 +/- 0.02
        CHECK(std::abs(acc - 0.25) < 0.02);
    }

    SUBCASE("argmax with zero weights is deterministic") {
        const auto generated = generate_sequence(make_spec(16, {4, 8, 12}, 0.02, 25));
        const auto sample = curated_for(generated, 0.5);
        const std::vector<OrderingTask> tasks{
            make_ordering_task(generated.events, TaskMode::sequential, sample, 0)};
        const PolicyParams params = PolicyParams::zeros(3, 6);
        const double first = evaluate_accuracy(params, tasks, AnswerMode::argmax);
        for (int repeat = 0; repeat < 5; ++repeat) {
            CHECK(evaluate_accuracy(params, tasks, AnswerMode::argmax) == first);
        }
        // flat distribution ties to option 0, which is the correct identity
        CHECK(first == 1.0);
    }

    SUBCASE("empty task list is rejected") {
        const PolicyParams params = PolicyParams::zeros(1, 2);
        CHECK_THROWS_AS(evaluate_accuracy(params, {}, AnswerMode::argmax), Error);
    }
}

TEST_CASE("generated sequences persist with a ground-truth sidecar") {
    testutil::TempDir dir("synth-io");
    const auto spec = make_spec(16, {4, 8, 12}, 0.02, 33);
    const auto generated = generate_sequence(spec);
    save_feature_file(generated.features, dir.file("seq.cftf"));
    save_ground_truth_file(generated.events, spec.seed, dir.file("seq.json"));

    const auto reloaded = load_feature_file(dir.file("seq.cftf"));
    CHECK(reloaded.num_frames() == 16);
    CHECK(reloaded.num_patches() == 2);

    const auto [events, seed] = load_ground_truth_file(dir.file("seq.json"));
    CHECK(events == generated.events);
    CHECK(seed == 33);
    CHECK(testutil::read_text(dir.file("seq.json")) == "{\"events\":[4,8,12],\"seed\":33}\n");
}

TEST_CASE("event placement helper enforces spacing") {
    Rng rng(26);
    for (int trial = 0; trial < 200; ++trial) {
        const auto events = sample_event_frames(16, 3, 3, rng);
        REQUIRE(events.size() == 3);
        CHECK(events.front() >= 1);
        CHECK(events.back() <= 15);
        for (std::size_t i = 1; i < events.size(); ++i) {
            CHECK(events[i] - events[i - 1] >= 3);
        }
    }
    CHECK_THROWS_AS(sample_event_frames(4, 3, 3, rng), Error);
}

TEST_SUITE_END();

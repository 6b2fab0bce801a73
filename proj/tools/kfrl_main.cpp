// Command-line front end: keyframe selection over CFTF feature files, the
// synthetic training loop, hyperparameter sweeps, and policy evaluation.
// Every subcommand is a pure function of (flags, input files, seed); exit
// codes are 0 ok, 2 malformed input, 3 invalid flags, 4 runtime failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kfrl/kfrl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitFlags = 3;
constexpr int kExitRuntime = 4;

struct CommonOptions {
    std::string input;
    std::string output;
    std::string config_path;
    std::size_t budget = 8;
    std::size_t window = 5;
    double omega = 2.0;
    double delta = 0.5;
    std::string aggregation = "max";
    std::string mode = "sync";
    double clip_eta = 0.2;
    double kl_gamma = 0.01;
    std::size_t group_size = 8;
    std::size_t steps = 2000;
    double learning_rate = 0.05;
    std::uint64_t seed = 42;
    bool ppo_min = false;
    std::string params_out = "policy.json";
    std::string sweep_param;
    std::string sweep_grid;
    std::size_t eval_tasks = 200;
};

int flag_error(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return kExitFlags;
}

// Flat key=value training config, keys named after the long flags. Values
// from the file fill in whatever was not given explicitly on the command
// line. Returns 0, or the exit code to fail with.
int apply_config_file(const CLI::App* cmd, CommonOptions& opts) {
    if (opts.config_path.empty()) return kExitOk;
    std::ifstream in(opts.config_path);
    if (!in) {
        std::cerr << "error: cannot open config file '" << opts.config_path << "'\n";
        return kExitInput;
    }

    const auto to_size = [](const std::string& v, std::size_t& out) {
        try {
            std::size_t used = 0;
            out = std::stoull(v, &used);
            return used == v.size();
        } catch (const std::exception&) {
            return false;
        }
    };
    const auto to_double = [](const std::string& v, double& out) {
        try {
            std::size_t used = 0;
            out = std::stod(v, &used);
            return used == v.size();
        } catch (const std::exception&) {
            return false;
        }
    };
    const auto to_u64 = [](const std::string& v, std::uint64_t& out) {
        try {
            std::size_t used = 0;
            out = std::stoull(v, &used);
            return used == v.size();
        } catch (const std::exception&) {
            return false;
        }
    };
    const auto to_bool = [](const std::string& v, bool& out) {
        if (v == "true" || v == "1") {
            out = true;
            return true;
        }
        if (v == "false" || v == "0") {
            out = false;
            return true;
        }
        return false;
    };

    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            return flag_error("config line " + std::to_string(line_number) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        // explicit command-line flags win over the file
        const CLI::Option* option = cmd->get_option_no_throw("--" + key);
        if (option == nullptr) {
            return flag_error("config line " + std::to_string(line_number) + ": unknown key '" +
                              key + "'");
        }
        if (option->count() > 0) continue;

        bool ok = true;
        if (key == "output") opts.output = value;
        else if (key == "params-out") opts.params_out = value;
        else if (key == "input") opts.input = value;
        else if (key == "param") opts.sweep_param = value;
        else if (key == "grid") opts.sweep_grid = value;
        else if (key == "aggregation") opts.aggregation = value;
        else if (key == "mode") opts.mode = value;
        else if (key == "budget") ok = to_size(value, opts.budget);
        else if (key == "window") ok = to_size(value, opts.window);
        else if (key == "group-size") ok = to_size(value, opts.group_size);
        else if (key == "steps") ok = to_size(value, opts.steps);
        else if (key == "tasks") ok = to_size(value, opts.eval_tasks);
        else if (key == "omega") ok = to_double(value, opts.omega);
        else if (key == "delta") ok = to_double(value, opts.delta);
        else if (key == "clip-eta") ok = to_double(value, opts.clip_eta);
        else if (key == "kl-gamma") ok = to_double(value, opts.kl_gamma);
        else if (key == "lr") ok = to_double(value, opts.learning_rate);
        else if (key == "seed") ok = to_u64(value, opts.seed);
        else if (key == "ppo-min") ok = to_bool(value, opts.ppo_min);
        else return flag_error("config key '" + key + "' cannot be set from a file");
        if (!ok) {
            return flag_error("config line " + std::to_string(line_number) + ": bad value '" +
                              value + "' for '" + key + "'");
        }
    }
    return kExitOk;
}

bool parse_aggregation(const std::string& text, kfrl::Aggregation& out) {
    if (text == "max") {
        out = kfrl::Aggregation::max;
        return true;
    }
    if (text == "mean") {
        out = kfrl::Aggregation::mean;
        return true;
    }
    return false;
}

bool parse_mode(const std::string& text, kfrl::TadMode& out) {
    if (text == "sync") {
        out = kfrl::TadMode::sync;
        return true;
    }
    if (text == "async") {
        out = kfrl::TadMode::async;
        return true;
    }
    return false;
}

// Writes to the named path, or stdout when the path is empty.
void emit(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        kfrl::raise(kfrl::Errc::io_failure, "cannot open '" + path + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
        kfrl::raise(kfrl::Errc::io_failure, "write error on '" + path + "'");
    }
}

int build_tad_config(const CommonOptions& opts, kfrl::TadConfig& cfg) {
    cfg.budget = opts.budget;
    cfg.window = opts.window;
    cfg.omega = opts.omega;
    if (!parse_aggregation(opts.aggregation, cfg.aggregation)) {
        return flag_error("aggregation must be 'max' or 'mean'");
    }
    if (!parse_mode(opts.mode, cfg.mode)) {
        return flag_error("mode must be 'sync' or 'async'");
    }
    try {
        cfg.validate();
    } catch (const kfrl::Error& e) {
        return flag_error(e.what());
    }
    return kExitOk;
}

int build_train_config(const CommonOptions& opts, kfrl::TrainConfig& cfg) {
    cfg.tad.window = opts.window;
    cfg.tad.omega = opts.omega;
    if (!parse_aggregation(opts.aggregation, cfg.tad.aggregation)) {
        return flag_error("aggregation must be 'max' or 'mean'");
    }
    cfg.delta = opts.delta;
    cfg.objective.clip_eta = opts.clip_eta;
    cfg.objective.kl_gamma = opts.kl_gamma;
    cfg.objective.ppo_min_variant = opts.ppo_min;
    cfg.group_size = opts.group_size;
    cfg.learning_rate = opts.learning_rate;
    try {
        cfg.validate();
    } catch (const kfrl::Error& e) {
        return flag_error(e.what());
    }
    return kExitOk;
}

int run_select(const CommonOptions& opts) {
    kfrl::TadConfig cfg;
    if (int rc = build_tad_config(opts, cfg); rc != kExitOk) return rc;

    std::optional<kfrl::FeatureSequence> seq;
    try {
        seq = kfrl::load_feature_file(opts.input);
    } catch (const kfrl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    std::string json;
    if (cfg.mode == kfrl::TadMode::sync) {
        json = kfrl::selection_to_json(kfrl::tad_select(*seq, cfg), cfg);
    } else {
        const kfrl::VariationProfile profile = kfrl::variation_scoring(*seq, cfg);
        std::vector<kfrl::SelectionResult> per_patch;
        per_patch.reserve(seq->num_patches());
        for (std::size_t n = 0; n < seq->num_patches(); ++n) {
            per_patch.push_back(kfrl::tad_select_patch(profile, n, cfg));
        }
        json = kfrl::async_selection_to_json(per_patch, seq->num_frames(), cfg);
    }
    emit(opts.output, json + "\n");
    return kExitOk;
}

struct RunSummary {
    double acc_seq = 0.0;
    double acc_hyb = 0.0;
    double r_s_rate = 0.0;
    double mean_reward = 0.0;
    double kl = 0.0;
    double loss = 0.0;
};

// Means over the final min(100, steps) metrics records.
RunSummary summarize_tail(const std::vector<kfrl::StepMetrics>& history) {
    RunSummary summary;
    if (history.empty()) return summary;
    const std::size_t tail = std::min<std::size_t>(100, history.size());
    for (std::size_t i = history.size() - tail; i < history.size(); ++i) {
        summary.acc_seq += history[i].acc_seq;
        summary.acc_hyb += history[i].acc_hyb;
        summary.r_s_rate += history[i].r_s_rate;
        summary.mean_reward += history[i].mean_reward;
        summary.kl += history[i].kl;
        summary.loss += history[i].loss;
    }
    const double inv = 1.0 / static_cast<double>(tail);
    summary.acc_seq *= inv;
    summary.acc_hyb *= inv;
    summary.r_s_rate *= inv;
    summary.mean_reward *= inv;
    summary.kl *= inv;
    summary.loss *= inv;
    return summary;
}

std::vector<kfrl::StepMetrics> run_training(const kfrl::TrainConfig& cfg, std::uint64_t seed,
                                            std::size_t steps, std::ostream* metrics_stream) {
    kfrl::Trainer trainer(cfg, seed);
    std::vector<kfrl::StepMetrics> history;
    history.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        history.push_back(trainer.step());
        if (metrics_stream != nullptr) {
            *metrics_stream << kfrl::step_metrics_to_json(history.back()) << "\n";
        }
    }
    if (metrics_stream != nullptr) metrics_stream->flush();
    return history;
}

int run_train(CommonOptions& opts, const CLI::App* cmd) {
    if (int rc = apply_config_file(cmd, opts); rc != kExitOk) return rc;
    kfrl::TrainConfig cfg;
    if (int rc = build_train_config(opts, cfg); rc != kExitOk) return rc;

    std::ofstream file_stream;
    std::ostream* metrics_stream = &std::cout;
    if (!opts.output.empty()) {
        file_stream.open(opts.output, std::ios::binary | std::ios::trunc);
        if (!file_stream) {
            kfrl::raise(kfrl::Errc::io_failure, "cannot open '" + opts.output + "' for writing");
        }
        metrics_stream = &file_stream;
    }

    kfrl::Trainer trainer(cfg, opts.seed);
    for (std::size_t s = 0; s < opts.steps; ++s) {
        *metrics_stream << kfrl::step_metrics_to_json(trainer.step()) << "\n";
    }
    metrics_stream->flush();
    if (!*metrics_stream) {
        kfrl::raise(kfrl::Errc::io_failure, "write error on metrics stream");
    }
    kfrl::save_policy_file(trainer.params(), opts.params_out);
    return kExitOk;
}

int run_sweep(CommonOptions& opts, const CLI::App* cmd) {
    if (int rc = apply_config_file(cmd, opts); rc != kExitOk) return rc;
    if (opts.sweep_param != "omega" && opts.sweep_param != "delta") {
        return flag_error("--param must be 'omega' or 'delta'");
    }
    std::vector<double> grid;
    {
        std::stringstream ss(opts.sweep_grid);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            try {
                std::size_t consumed = 0;
                const double value = std::stod(item, &consumed);
                if (consumed != item.size()) return flag_error("bad grid value '" + item + "'");
                grid.push_back(value);
            } catch (const std::exception&) {
                return flag_error("bad grid value '" + item + "'");
            }
        }
    }
    if (grid.empty()) {
        return flag_error("--grid must list at least one value");
    }

    kfrl::TrainConfig base_cfg;
    if (int rc = build_train_config(opts, base_cfg); rc != kExitOk) return rc;

    // Validate every grid point up front so a bad grid is a flag error, not
    // a mid-sweep surprise.
    for (double value : grid) {
        kfrl::TrainConfig probe = base_cfg;
        if (opts.sweep_param == "omega") {
            probe.tad.omega = value;
        } else {
            probe.delta = value;
        }
        try {
            probe.validate();
        } catch (const kfrl::Error& e) {
            return flag_error(std::string("grid value ") + kfrl::fmt_g9(value) + ": " + e.what());
        }
    }

    std::string json = "{\"parameter\":\"" + opts.sweep_param + "\"";
    json += ",\"steps\":" + std::to_string(opts.steps);
    json += ",\"master_seed\":" + std::to_string(opts.seed);
    json += ",\"rows\":[";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        kfrl::TrainConfig cfg = base_cfg;
        if (opts.sweep_param == "omega") {
            cfg.tad.omega = grid[i];
        } else {
            cfg.delta = grid[i];
        }
        const std::uint64_t row_seed = kfrl::split_seed(opts.seed, i);

        if (i > 0) json += ',';
        json += "{\"value\":" + kfrl::fmt_g9(grid[i]);
        json += ",\"seed\":" + std::to_string(row_seed);
        try {
            const auto history = run_training(cfg, row_seed, opts.steps, nullptr);
            const RunSummary summary = summarize_tail(history);
            json += ",\"status\":\"ok\"";
            json += ",\"acc_seq\":" + kfrl::fmt_g9(summary.acc_seq);
            json += ",\"acc_hyb\":" + kfrl::fmt_g9(summary.acc_hyb);
            json += ",\"r_s_rate\":" + kfrl::fmt_g9(summary.r_s_rate);
            json += ",\"mean_reward\":" + kfrl::fmt_g9(summary.mean_reward);
            json += ",\"kl\":" + kfrl::fmt_g9(summary.kl);
            json += ",\"loss\":" + kfrl::fmt_g9(summary.loss);
        } catch (const std::exception& e) {
            // A degraded grid point is reported, never fatal to the sweep.
            std::string reason = e.what();
            for (char& ch : reason) {
                if (ch == '"' || ch == '\\') ch = '\'';
            }
            json += ",\"status\":\"failed\",\"error\":\"" + reason + "\"";
        }
        json += "}";
    }
    json += "]}";
    emit(opts.output, json + "\n");
    return kExitOk;
}

int run_eval(const CommonOptions& opts) {
    kfrl::TrainConfig cfg;
    if (int rc = build_train_config(opts, cfg); rc != kExitOk) return rc;
    if (opts.eval_tasks == 0) {
        return flag_error("--tasks must be >= 1");
    }

    kfrl::PolicyParams params;
    try {
        params = kfrl::load_policy_file(opts.input);
    } catch (const kfrl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    const auto seq_tasks =
        kfrl::make_eval_tasks(cfg, kfrl::TaskMode::sequential, opts.eval_tasks,
                              kfrl::split_seed(opts.seed, 1));
    const auto hyb_tasks = kfrl::make_eval_tasks(cfg, kfrl::TaskMode::hybrid, opts.eval_tasks,
                                                 kfrl::split_seed(opts.seed, 1));

    kfrl::Rng rng_seq(kfrl::split_seed(opts.seed, 2));
    kfrl::Rng rng_hyb(kfrl::split_seed(opts.seed, 3));
    const double acc_seq =
        kfrl::evaluate_accuracy(params, seq_tasks, kfrl::AnswerMode::sampled, &rng_seq);
    const double acc_hyb =
        kfrl::evaluate_accuracy(params, hyb_tasks, kfrl::AnswerMode::sampled, &rng_hyb);

    std::string json = "{\"acc_seq\":" + kfrl::fmt_g9(acc_seq);
    json += ",\"acc_hyb\":" + kfrl::fmt_g9(acc_hyb);
    json += ",\"r_s\":" + std::to_string(kfrl::saliency_reward(acc_seq, acc_hyb));
    json += ",\"tasks\":" + std::to_string(opts.eval_tasks);
    json += ",\"seed\":" + std::to_string(opts.seed);
    json += "}";
    emit(opts.output, json + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keyframe selection and keyframe-aware policy optimization toolkit"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::function<int()> action;

    auto add_tad_flags = [&](CLI::App* cmd) {
        cmd->add_option("--budget", opts.budget, "Frames to keep (K)");
        cmd->add_option("--window", opts.window, "Peak-detection window (W), odd and >= 3");
        cmd->add_option("--omega", opts.omega, "Inflection score boost");
        cmd->add_option("--aggregation", opts.aggregation, "Spatial aggregation: max|mean");
    };
    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--delta", opts.delta, "Keyframe selection fraction in (0, 1]");
        cmd->add_option("--clip-eta", opts.clip_eta, "Ratio clip half-width in (0, 1)");
        cmd->add_option("--kl-gamma", opts.kl_gamma, "KL penalty weight");
        cmd->add_option("--group-size", opts.group_size, "Rollouts per ensemble (M)");
        cmd->add_option("--steps", opts.steps, "Training steps");
        cmd->add_option("--lr", opts.learning_rate, "Gradient-ascent step size");
        cmd->add_flag("--ppo-min", opts.ppo_min, "Use min(ratio*A, clip(ratio)*A) per term");
    };

    CLI::App* select = app.add_subcommand("select", "Select keyframes from a CFTF feature file");
    select->add_option("--input", opts.input, "CFTF v1 feature file")->required();
    select->add_option("--output", opts.output, "Selection JSON path (default: stdout)");
    add_tad_flags(select);
    select->add_option("--mode", opts.mode, "Selection mode: sync|async");
    select->add_option("--seed", opts.seed, "Unused by select; accepted for uniformity");
    select->callback([&] { action = [&] { return run_select(opts); }; });

    CLI::App* train = app.add_subcommand("train", "Train the toy policy on synthetic tasks");
    train->add_option("--output", opts.output, "Metrics JSONL path (default: stdout)");
    train->add_option("--params-out", opts.params_out, "Policy snapshot path");
    train->add_option("--window", opts.window, "Peak-detection window (W), odd and >= 3");
    train->add_option("--omega", opts.omega, "Inflection score boost");
    train->add_option("--aggregation", opts.aggregation, "Spatial aggregation: max|mean");
    add_train_flags(train);
    train->add_option("--seed", opts.seed, "Master seed");
    train->add_option("--config", opts.config_path, "Flat key=value file mirroring these flags");
    train->callback([&, train] { action = [&, train] { return run_train(opts, train); }; });

    CLI::App* sweep = app.add_subcommand("sweep", "Run a training grid over omega or delta");
    sweep->add_option("--param", opts.sweep_param, "Swept parameter: omega|delta")->required();
    sweep->add_option("--grid", opts.sweep_grid, "Comma-separated grid values")->required();
    sweep->add_option("--output", opts.output, "Summary JSON path (default: stdout)");
    sweep->add_option("--window", opts.window, "Peak-detection window (W), odd and >= 3");
    sweep->add_option("--omega", opts.omega, "Inflection score boost (base value)");
    sweep->add_option("--aggregation", opts.aggregation, "Spatial aggregation: max|mean");
    add_train_flags(sweep);
    sweep->add_option("--seed", opts.seed, "Master seed; rows use derived sub-seeds");
    sweep->add_option("--config", opts.config_path, "Flat key=value file mirroring these flags");
    sweep->callback([&, sweep] { action = [&, sweep] { return run_sweep(opts, sweep); }; });

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a saved policy snapshot");
    eval->add_option("--input", opts.input, "Policy snapshot JSON")->required();
    eval->add_option("--output", opts.output, "Report path (default: stdout)");
    eval->add_option("--tasks", opts.eval_tasks, "Tasks per mode");
    eval->add_option("--window", opts.window, "Peak-detection window (W), odd and >= 3");
    eval->add_option("--omega", opts.omega, "Inflection score boost");
    eval->add_option("--aggregation", opts.aggregation, "Spatial aggregation: max|mean");
    add_train_flags(eval);
    eval->add_option("--seed", opts.seed, "Evaluation seed");
    eval->callback([&] { action = [&] { return run_eval(opts); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitFlags;
    }

    try {
        return action ? action() : kExitFlags;
    } catch (const kfrl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

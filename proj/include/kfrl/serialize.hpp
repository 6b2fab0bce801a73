#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kfrl/error.hpp"
#include "kfrl/policy.hpp"
#include "kfrl/tad.hpp"
#include "kfrl/text_format.hpp"

namespace kfrl {

namespace detail {

inline const char* aggregation_name(Aggregation a) noexcept {
    return a == Aggregation::max ? "max" : "mean";
}

inline std::string selection_json_prefix(std::size_t num_frames, const TadConfig& cfg) {
    std::string out = "{\"T\":" + std::to_string(num_frames);
    out += ",\"K\":" + std::to_string(cfg.budget);
    out += ",\"W\":" + std::to_string(cfg.window);
    out += ",\"omega\":" + fmt_g9(cfg.omega);
    out += ",\"aggregation\":\"";
    out += aggregation_name(cfg.aggregation);
    out += "\",\"mode\":\"";
    out += cfg.mode == TadMode::sync ? "sync" : "async";
    out += "\"";
    return out;
}

}  // namespace detail

// Frame-level selection report. Scores carry 9 significant digits.
inline std::string selection_to_json(const SelectionResult& result, const TadConfig& cfg) {
    std::string out = detail::selection_json_prefix(result.scores.size(), cfg);
    out += ",\"indices\":";
    append_index_array(out, result.indices.indices);
    out += ",\"inflections\":";
    append_index_array(out, result.inflections.indices);
    out += ",\"scores\":";
    append_double_array(out, result.scores, 9);
    out += "}";
    return out;
}

// Patch-level selection report: indices, inflections and scores become one
// array per patch, in patch order.
inline std::string async_selection_to_json(const std::vector<SelectionResult>& per_patch,
                                           std::size_t num_frames, const TadConfig& cfg) {
    std::string out = detail::selection_json_prefix(num_frames, cfg);
    out += ",\"indices\":[";
    for (std::size_t n = 0; n < per_patch.size(); ++n) {
        if (n > 0) out += ',';
        append_index_array(out, per_patch[n].indices.indices);
    }
    out += "],\"inflections\":[";
    for (std::size_t n = 0; n < per_patch.size(); ++n) {
        if (n > 0) out += ',';
        append_index_array(out, per_patch[n].inflections.indices);
    }
    out += "],\"scores\":[";
    for (std::size_t n = 0; n < per_patch.size(); ++n) {
        if (n > 0) out += ',';
        append_double_array(out, per_patch[n].scores, 9);
    }
    out += "]}";
    return out;
}

// Ground-truth sidecar for a generated sequence: the planted event frames
// and the seed that produced them.
inline std::string ground_truth_to_json(const std::vector<std::size_t>& events,
                                        std::uint64_t seed) {
    std::string out = "{\"events\":";
    append_index_array(out, events);
    out += ",\"seed\":" + std::to_string(seed) + "}";
    return out;
}

inline void save_ground_truth_file(const std::vector<std::size_t>& events, std::uint64_t seed,
                                   const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
    }
    out << ground_truth_to_json(events, seed) << "\n";
    out.flush();
    if (!out) {
        raise(Errc::io_failure, "write error on '" + path.string() + "'");
    }
}

inline std::pair<std::vector<std::size_t>, std::uint64_t> load_ground_truth_file(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
    }
    nlohmann::json doc;
    try {
        in >> doc;
        return {doc.at("events").get<std::vector<std::size_t>>(),
                doc.at("seed").get<std::uint64_t>()};
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::invalid_argument, "'" + path.string() + "' is not a ground-truth sidecar: " +
                                          e.what());
    }
}

// Policy snapshot, written with 17 significant digits so weights round-trip
// exactly through the file.
inline std::string policy_to_json(const PolicyParams& params) {
    std::string out = "{\"summary_dim\":" + std::to_string(params.summary_dim);
    out += ",\"num_options\":" + std::to_string(params.num_options);
    out += ",\"temperature\":" + fmt_g17(params.temperature);
    out += ",\"weights\":[";
    for (std::size_t d = 0; d < params.summary_dim; ++d) {
        if (d > 0) out += ',';
        out += '[';
        for (std::size_t o = 0; o < params.num_options; ++o) {
            if (o > 0) out += ',';
            out += fmt_g17(params.weight(d, o));
        }
        out += ']';
    }
    out += "]}";
    return out;
}

inline void save_policy_file(const PolicyParams& params, const std::filesystem::path& path) {
    params.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
    }
    out << policy_to_json(params) << "\n";
    out.flush();
    if (!out) {
        raise(Errc::io_failure, "write error on '" + path.string() + "'");
    }
}

inline PolicyParams load_policy_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::invalid_argument, "'" + path.string() + "' is not valid JSON: " + e.what());
    }

    PolicyParams params;
    try {
        params.summary_dim = doc.at("summary_dim").get<std::size_t>();
        params.num_options = doc.at("num_options").get<std::size_t>();
        params.temperature = doc.at("temperature").get<double>();
        const auto& rows = doc.at("weights");
        params.weights.reserve(params.summary_dim * params.num_options);
        if (rows.size() != params.summary_dim) {
            raise(Errc::shape_mismatch, "'" + path.string() + "': expected " +
                                            std::to_string(params.summary_dim) + " weight rows");
        }
        for (const auto& row : rows) {
            if (row.size() != params.num_options) {
                raise(Errc::shape_mismatch, "'" + path.string() + "': expected " +
                                                std::to_string(params.num_options) +
                                                " weights per row");
            }
            for (const auto& w : row) {
                params.weights.push_back(w.get<double>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::invalid_argument, "'" + path.string() + "' has malformed fields: " + e.what());
    }
    params.validate();
    return params;
}

}  // namespace kfrl

#pragma once

#include <stdexcept>
#include <string>

namespace kfrl {

// Error categories surfaced by the library. The CLI maps these onto exit
// codes, so every throwing path must pick the category that matches what
// actually went wrong (bad input file vs. bad configuration vs. runtime).
enum class Errc {
    bad_magic,
    version_unsupported,
    dimension_mismatch,
    non_finite_value,
    io_failure,
    index_out_of_range,
    shape_mismatch,
    invalid_argument,
    invalid_delta,
    support_mismatch,
    undefined_divergence,
    zero_init_probability,
    too_few_events,
};

inline const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::bad_magic: return "bad_magic";
        case Errc::version_unsupported: return "version_unsupported";
        case Errc::dimension_mismatch: return "dimension_mismatch";
        case Errc::non_finite_value: return "non_finite_value";
        case Errc::io_failure: return "io_failure";
        case Errc::index_out_of_range: return "index_out_of_range";
        case Errc::shape_mismatch: return "shape_mismatch";
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::invalid_delta: return "invalid_delta";
        case Errc::support_mismatch: return "support_mismatch";
        case Errc::undefined_divergence: return "undefined_divergence";
        case Errc::zero_init_probability: return "zero_init_probability";
        case Errc::too_few_events: return "too_few_events";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace kfrl

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kfrl/error.hpp"

namespace kfrl {

// A set of frame indices. Most producers (selection, inflection detection)
// emit strictly increasing indices; validate_for() enforces that when asked.
struct FrameIndexSet {
    std::vector<std::size_t> indices;

    FrameIndexSet() = default;
    explicit FrameIndexSet(std::vector<std::size_t> idx) : indices(std::move(idx)) {}

    std::size_t size() const noexcept { return indices.size(); }
    bool empty() const noexcept { return indices.empty(); }

    bool strictly_increasing() const noexcept {
        for (std::size_t i = 1; i < indices.size(); ++i) {
            if (indices[i] <= indices[i - 1]) return false;
        }
        return true;
    }

    bool contains(std::size_t frame) const noexcept {
        return std::find(indices.begin(), indices.end(), frame) != indices.end();
    }

    void validate_for(std::size_t num_frames, bool require_sorted, const char* what) const {
        if (require_sorted && !strictly_increasing()) {
            raise(Errc::invalid_argument, std::string(what) + " indices must be strictly increasing");
        }
        for (std::size_t v : indices) {
            if (v >= num_frames) {
                raise(Errc::index_out_of_range, std::string(what) + " index " + std::to_string(v) +
                                                    " out of range for " + std::to_string(num_frames) +
                                                    " frames");
            }
        }
    }
};

// T x N x C feature tensor, frame-major then patch-major then channel.
// Stored as doubles so gradient checks are done at full precision; the
// on-disk format (cftf.hpp) is float32. Immutable after construction.
class FeatureSequence {
public:
    FeatureSequence(std::size_t num_frames, std::size_t num_patches, std::size_t channels,
                    std::vector<double> data)
        : num_frames_(num_frames), num_patches_(num_patches), channels_(channels),
          data_(std::move(data)) {
        if (num_frames_ == 0 || num_patches_ == 0 || channels_ == 0) {
            raise(Errc::dimension_mismatch, "dimensions must be positive, got " + shape_string());
        }
        const std::size_t expected = num_frames_ * num_patches_ * channels_;
        if (data_.size() != expected) {
            raise(Errc::dimension_mismatch, "data length " + std::to_string(data_.size()) +
                                                " does not match shape " + shape_string() + " (" +
                                                std::to_string(expected) + " values)");
        }
    }

    std::size_t num_frames() const noexcept { return num_frames_; }
    std::size_t num_patches() const noexcept { return num_patches_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }
    const std::vector<double>& data() const noexcept { return data_; }

    double at(std::size_t t, std::size_t n, std::size_t c) const noexcept {
        return data_[(t * num_patches_ + n) * channels_ + c];
    }

    std::span<const double> frame(std::size_t t) const noexcept {
        return {data_.data() + t * num_patches_ * channels_, num_patches_ * channels_};
    }

    std::span<const double> patch(std::size_t t, std::size_t n) const noexcept {
        return {data_.data() + (t * num_patches_ + n) * channels_, channels_};
    }

    std::string shape_string() const {
        return std::to_string(num_frames_) + "x" + std::to_string(num_patches_) + "x" +
               std::to_string(channels_);
    }

    bool operator==(const FeatureSequence& other) const noexcept {
        return num_frames_ == other.num_frames_ && num_patches_ == other.num_patches_ &&
               channels_ == other.channels_ && data_ == other.data_;
    }

private:
    std::size_t num_frames_;
    std::size_t num_patches_;
    std::size_t channels_;
    std::vector<double> data_;
};

// Gathers whole frames: output frame k is input frame idx[k]. Patch and
// channel layout is preserved exactly.
inline FeatureSequence gather_frames(const FeatureSequence& seq, const FrameIndexSet& idx) {
    idx.validate_for(seq.num_frames(), /*require_sorted=*/false, "gather");
    if (idx.empty()) {
        raise(Errc::invalid_argument, "gather requires at least one index");
    }
    const std::size_t stride = seq.num_patches() * seq.channels();
    std::vector<double> out;
    out.reserve(idx.size() * stride);
    for (std::size_t src : idx.indices) {
        const auto row = seq.frame(src);
        out.insert(out.end(), row.begin(), row.end());
    }
    return FeatureSequence(idx.size(), seq.num_patches(), seq.channels(), std::move(out));
}

// Backward pass of gather_frames: scatter-adds the upstream gradient rows
// into a T x N x C zero tensor. Non-selected frames stay exactly zero, which
// is what makes the selection gradient local.
inline std::vector<double> gather_backward(std::size_t num_frames, std::size_t num_patches,
                                           std::size_t channels, const FrameIndexSet& idx,
                                           std::span<const double> upstream_grad) {
    idx.validate_for(num_frames, /*require_sorted=*/false, "gather_backward");
    const std::size_t stride = num_patches * channels;
    if (upstream_grad.size() != idx.size() * stride) {
        raise(Errc::shape_mismatch, "upstream gradient has " + std::to_string(upstream_grad.size()) +
                                        " values, expected " + std::to_string(idx.size() * stride));
    }
    std::vector<double> grad(num_frames * stride, 0.0);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::size_t dst = idx.indices[k] * stride;
        for (std::size_t i = 0; i < stride; ++i) {
            grad[dst + i] += upstream_grad[k * stride + i];
        }
    }
    return grad;
}

}  // namespace kfrl

#pragma once

// Offline selection of the foreground/background split for one source image:
// near-duplicate mask merging and the ensemble-based variant score
//
//   score = log(mean_m P[m(fg) = c])
//         + log(1 - mean_m P[m(bg) = c])
//         + lambda * log(1 - |size(fg) / size(bg) - epsilon|)
//
// with size(bg) taken as the full-image pixel count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "foraug/error.hpp"
#include "foraug/image.hpp"

namespace foraug {

inline double mask_iou(const Mask& a, const Mask& b) {
    if (a.width != b.width || a.height != b.height) {
        throw InputError("mask_iou: dimension mismatch " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                         " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
    }
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        const bool x = a.bits[i] != 0;
        const bool y = b.bits[i] != 0;
        inter += (x && y) ? 1 : 0;
        uni += (x || y) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline Mask mask_union(const Mask& a, const Mask& b) {
    Mask out = a;
    for (std::size_t i = 0; i < out.bits.size(); ++i) {
        out.bits[i] = (a.bits[i] != 0 || b.bits[i] != 0) ? 1 : 0;
    }
    return out;
}

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    /// The smaller index stays the root, so roots are first-seen members.
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        if (b < a) {
            std::swap(a, b);
        }
        parent_[b] = a;
        return true;
    }

private:
    std::vector<std::size_t> parent_;
};

/// One pass: transitive grouping of all pairs with IoU >= threshold.
inline std::vector<Mask> merge_pass(const std::vector<Mask>& masks, double threshold, bool& merged_any) {
    const std::size_t n = masks.size();
    DisjointSets sets(n);
    merged_any = false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (mask_iou(masks[i], masks[j]) >= threshold) {
                merged_any = sets.unite(i, j) || merged_any;
            }
        }
    }
    std::vector<Mask> out;
    std::vector<std::size_t> slot(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = sets.find(i);
        if (slot[root] == n) {
            slot[root] = out.size();
            out.push_back(masks[i]);
        } else {
            out[slot[root]] = mask_union(out[slot[root]], masks[i]);
        }
    }
    return out;
}

} // namespace detail

/// Groups masks transitively by pairwise IoU >= threshold and replaces each
/// group with its pixelwise union, in first-seen order. Passes repeat until
/// no two outputs reach the threshold, so the result is a fixed point.
inline std::vector<Mask> merge_masks(const std::vector<Mask>& masks, double threshold = 0.9) {
    std::vector<Mask> current = masks;
    bool merged = true;
    while (merged && current.size() > 1) {
        current = detail::merge_pass(current, threshold, merged);
    }
    return current;
}

struct VariantCandidate {
    Mask mask;
    std::vector<double> fg_probs; // per ensemble member, P(true class | foreground)
    std::vector<double> bg_probs; // per ensemble member, P(true class | infilled background)
    double fg_size = 0.0;         // pixel count of the foreground
    double bg_size = 0.0;         // pixel count of the full image
};

struct ScoreParams {
    double lambda = 2.0;
    double epsilon = 0.1;
    /// Logarithm base; the argmax does not depend on it.
    double log_base = std::numbers::e;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Returns -infinity when the size term's argument is not positive.
inline double variant_score(const VariantCandidate& v, const ScoreParams& params = {}) {
    if (v.fg_probs.empty() || v.fg_probs.size() != v.bg_probs.size()) {
        throw InputError("variant needs equally many (>= 1) foreground and background probabilities");
    }
    if (!(v.bg_size > 0.0)) {
        throw InputError("variant bg_size must be positive");
    }
    if (!(params.lambda >= 0.0) || !(params.epsilon > 0.0 && params.epsilon < 1.0) || !(params.log_base > 1.0)) {
        throw InputError("score parameters out of range");
    }
    const auto mean = [](const std::vector<double>& p) {
        return std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    };
    const double fg = std::clamp(mean(v.fg_probs), kProbabilityFloor, 1.0 - kProbabilityFloor);
    const double bg = std::clamp(mean(v.bg_probs), kProbabilityFloor, 1.0 - kProbabilityFloor);
    const double size_arg = 1.0 - std::abs(v.fg_size / v.bg_size - params.epsilon);
    if (!(size_arg > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double ln_base = std::log(params.log_base);
    return (std::log(fg) + std::log(1.0 - bg) + params.lambda * std::log(size_arg)) / ln_base;
}

/// Index of the highest-scoring variant, lowest index on ties.
inline std::size_t select_best_variant(const std::vector<VariantCandidate>& variants, const ScoreParams& params = {}) {
    if (variants.empty()) {
        throw InputError("select_best_variant: no variants");
    }
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const double s = variant_score(variants[i], params);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    if (std::isinf(best_score)) {
        throw InputError("select_best_variant: every variant is infeasible");
    }
    return best;
}

} // namespace foraug

#pragma once

// Deterministic epoch planning. Every decision for sample (epoch, index) is
// drawn from its own stream keyed by hash(seed, epoch, index), and the
// foreground order is a keyed permutation, so any single plan can be computed
// without the others and results do not depend on worker count or order.
//
// Stream layout of a plan (fixed so positions are known without sampling):
//   1 draw            use_original  (u < mixing probability)
//   then, if recombined:
//   0 or 1 draw       background    (none for the original strategy)
//   1 draw            size
//   |eta| draws       center x
//   |eta| draws       center y
//   0 or 1 draw       blur sigma    (none when sigma_max = 0)

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "foraug/asset_store.hpp"
#include "foraug/distributions.hpp"
#include "foraug/error.hpp"
#include "foraug/rng.hpp"

namespace foraug {

enum class BgStrategy { original, same_class, all };
enum class SizeStrategy { mean, range };
enum class AugOrder { paste_crop_color, crop_paste_color };

struct MixSchedule {
    enum class Kind { none, constant, linear, reverse_linear, cosine };
    Kind kind = Kind::cosine;
    double p = 0.0; // only used by constant

    static MixSchedule none() { return {Kind::none, 0.0}; }
    static MixSchedule constant(double p) { return {Kind::constant, p}; }
    static MixSchedule linear() { return {Kind::linear, 0.0}; }
    static MixSchedule reverse_linear() { return {Kind::reverse_linear, 0.0}; }
    static MixSchedule cosine() { return {Kind::cosine, 0.0}; }

    friend bool operator==(const MixSchedule&, const MixSchedule&) = default;
};

/// Defaults are the final large-scale configuration: range sizes, paste before
/// crop, any background, prune above 0.8 infill, sigma_max 4, cosine mixing.
struct RecombinationConfig {
    BgStrategy bg_strategy = BgStrategy::all;
    SizeStrategy size_strategy = SizeStrategy::range;
    double size_band = 0.3;
    BatesParam eta{1};
    double sigma_max = 4.0;
    MixSchedule mix_schedule = MixSchedule::cosine();
    AugOrder aug_order = AugOrder::paste_crop_color;
    double t_prune = 0.8;
    int total_epochs = 300;
    std::uint64_t seed = 0;
    int image_size = 224;
    std::vector<std::string> augment = {"random_resized_crop", "horizontal_flip", "color_jitter"};

    void validate() const {
        if (!(size_band >= 0.0 && size_band < 1.0)) {
            throw InputError("size_band must lie in [0, 1)");
        }
        if (!(sigma_max >= 0.0) || !std::isfinite(sigma_max)) {
            throw InputError("sigma_max must be nonnegative");
        }
        if (mix_schedule.kind == MixSchedule::Kind::constant && !(mix_schedule.p >= 0.0 && mix_schedule.p <= 1.0)) {
            throw InputError("constant mixing probability must lie in [0, 1]");
        }
        if (!(t_prune > 0.0 && t_prune <= 1.0)) {
            throw InputError("t_prune must lie in (0, 1]");
        }
        if (total_epochs < 1) {
            throw InputError("total_epochs must be positive");
        }
        if (image_size < 8) {
            throw InputError("image_size must be at least 8");
        }
    }

    friend bool operator==(const RecombinationConfig&, const RecombinationConfig&) = default;
};

struct GridCell {
    int row = 1;
    int col = 1;
    friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct SizeFactor {
    double value = 1.0;
    friend bool operator==(const SizeFactor&, const SizeFactor&) = default;
};

/// Probe condition: which background set, which 3x3 cell, or which size factor.
using Condition = std::variant<BgStrategy, GridCell, SizeFactor>;

struct Point {
    double x = 0.5;
    double y = 0.5;
    friend bool operator==(const Point&, const Point&) = default;
};

struct SamplePlan {
    std::string fg_id;
    std::size_t fg_index = 0;
    bool use_original = false;
    std::optional<std::string> bg_id;
    double size = 0.0; // target opaque-area fraction of the canvas; 0 when use_original
    std::optional<Point> center;
    double blur_sigma = 0.0;
    std::int64_t epoch = 0;
    std::uint64_t index = 0;
    std::optional<Condition> probe;

    friend bool operator==(const SamplePlan&, const SamplePlan&) = default;
};

struct EpochPlan {
    std::int64_t epoch = 0;
    std::vector<SamplePlan> plans;
};

/// Probability of rendering the untouched original image in `epoch`.
inline double mixing_probability(const MixSchedule& schedule, int epoch, int total_epochs) {
    if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs) {
        throw InputError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(total_epochs) + ")");
    }
    const double t = total_epochs == 1 ? 0.0 : static_cast<double>(epoch) / (total_epochs - 1);
    switch (schedule.kind) {
    case MixSchedule::Kind::none: return 0.0;
    case MixSchedule::Kind::constant: return schedule.p;
    case MixSchedule::Kind::linear: return t;
    case MixSchedule::Kind::reverse_linear: return 1.0 - t;
    case MixSchedule::Kind::cosine: return 0.5 * (1.0 - std::cos(std::numbers::pi * t));
    }
    return 0.0;
}

/// (s_l, s_u) from the foreground's own size fraction and the size fraction of
/// the foreground originally cut from the chosen background.
inline std::pair<double, double> size_limits(double r_fg, double r_bg, SizeStrategy strategy) {
    if (strategy == SizeStrategy::mean) {
        const double m = 0.5 * (r_fg + r_bg);
        return {m, m};
    }
    return {std::min(r_fg, r_bg), std::max(r_fg, r_bg)};
}

/// Uniform on [(1 - band) s_l, (1 + band) s_u], clamped to at most 1.
inline double sample_size(double s_l, double s_u, double band, Rng& rng) {
    const double lo = (1.0 - band) * s_l;
    const double hi = (1.0 + band) * s_u;
    const double s = lo + (hi - lo) * rng.uniform();
    return std::min(s, 1.0);
}

inline const BackgroundAsset& choose_background(const ForegroundAsset& fg, const AssetManifest& manifest,
                                                BgStrategy strategy, Rng& rng) {
    switch (strategy) {
    case BgStrategy::original: {
        const BackgroundAsset* bg = manifest.original_background(fg);
        if (bg == nullptr) {
            throw InputError("foreground '" + fg.id + "': original background is not available (pruned)");
        }
        return *bg;
    }
    case BgStrategy::same_class: {
        auto it = manifest.class_index.find(fg.class_id);
        if (it == manifest.class_index.end() || it->second.empty()) {
            throw InputError("foreground '" + fg.id + "': no background for class " + std::to_string(fg.class_id));
        }
        const auto& ids = it->second;
        return *manifest.find_background(ids[rng.below(ids.size())]);
    }
    case BgStrategy::all:
        if (manifest.backgrounds.empty()) {
            throw InputError("manifest has no backgrounds");
        }
        return manifest.backgrounds[rng.below(manifest.backgrounds.size())];
    }
    throw InputError("unknown background strategy");
}

inline Point sample_center(BatesParam eta, Rng& rng) {
    Point c;
    c.x = bates_sample(eta, rng);
    c.y = bates_sample(eta, rng);
    return c;
}

inline double sample_blur(double sigma_max, Rng& rng) {
    return sigma_max > 0.0 ? rng.uniform(sigma_max / 10.0, sigma_max) : 0.0;
}

/// Foreground position in the manifest for slot `index` of `epoch`.
inline std::size_t epoch_order(std::size_t n, std::uint64_t seed, std::int64_t epoch, std::uint64_t index) {
    const KeyedPermutation perm(n, hash_key({stream_tag::shuffle, seed, static_cast<std::uint64_t>(epoch)}));
    return static_cast<std::size_t>(perm(index));
}

inline SamplePlan plan_sample(const AssetManifest& manifest, const RecombinationConfig& config, std::int64_t epoch,
                              std::uint64_t index) {
    const std::size_t n = manifest.foregrounds.size();
    if (index >= n) {
        throw InputError("sample index " + std::to_string(index) + " outside [0, " + std::to_string(n) + ")");
    }
    const double p_mix = mixing_probability(config.mix_schedule, static_cast<int>(epoch), config.total_epochs);

    SamplePlan plan;
    plan.epoch = epoch;
    plan.index = index;
    plan.fg_index = epoch_order(n, config.seed, epoch, index);
    const ForegroundAsset& fg = manifest.foregrounds[plan.fg_index];
    plan.fg_id = fg.id;

    Rng rng(hash_key({stream_tag::plan, config.seed, static_cast<std::uint64_t>(epoch), index}));
    plan.use_original = rng.uniform() < p_mix;
    if (plan.use_original) {
        return plan;
    }
    const BackgroundAsset& bg = choose_background(fg, manifest, config.bg_strategy, rng);
    plan.bg_id = bg.id;
    const auto [s_l, s_u] = size_limits(fg.orig_size_fraction, bg.orig_fg_size_fraction, config.size_strategy);
    plan.size = sample_size(s_l, s_u, config.size_band, rng);
    plan.center = sample_center(config.eta, rng);
    plan.blur_sigma = sample_blur(config.sigma_max, rng);
    return plan;
}

inline EpochPlan plan_epoch(const AssetManifest& manifest, const RecombinationConfig& config, std::int64_t epoch) {
    EpochPlan out;
    out.epoch = epoch;
    out.plans.reserve(manifest.foregrounds.size());
    for (std::uint64_t i = 0; i < manifest.foregrounds.size(); ++i) {
        out.plans.push_back(plan_sample(manifest, config, epoch, i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Names and plan records.

inline const char* to_string(BgStrategy s) {
    switch (s) {
    case BgStrategy::original: return "original";
    case BgStrategy::same_class: return "same_class";
    case BgStrategy::all: return "all";
    }
    return "?";
}

inline BgStrategy parse_bg_strategy(const std::string& s) {
    if (s == "original" || s == "orig") return BgStrategy::original;
    if (s == "same_class" || s == "same") return BgStrategy::same_class;
    if (s == "all") return BgStrategy::all;
    throw InputError("unknown background strategy '" + s + "'");
}

inline const char* to_string(SizeStrategy s) { return s == SizeStrategy::mean ? "mean" : "range"; }

inline SizeStrategy parse_size_strategy(const std::string& s) {
    if (s == "mean") return SizeStrategy::mean;
    if (s == "range") return SizeStrategy::range;
    throw InputError("unknown size strategy '" + s + "'");
}

inline const char* to_string(AugOrder o) {
    return o == AugOrder::paste_crop_color ? "paste_crop_color" : "crop_paste_color";
}

inline AugOrder parse_aug_order(const std::string& s) {
    if (s == "paste_crop_color") return AugOrder::paste_crop_color;
    if (s == "crop_paste_color") return AugOrder::crop_paste_color;
    throw InputError("unknown augmentation order '" + s + "'");
}

inline const char* condition_tag(const Condition& c) {
    switch (c.index()) {
    case 0: return "bg_strategy";
    case 1: return "grid_cell";
    default: return "size_factor";
    }
}

inline std::string condition_value(const Condition& c) {
    if (const auto* s = std::get_if<BgStrategy>(&c)) {
        return to_string(*s);
    }
    if (const auto* g = std::get_if<GridCell>(&c)) {
        return std::to_string(g->row) + ":" + std::to_string(g->col);
    }
    return nlohmann::json(std::get<SizeFactor>(c).value).dump();
}

inline Condition parse_condition(const std::string& tag, const std::string& value) {
    if (tag == "bg_strategy") {
        return parse_bg_strategy(value);
    }
    if (tag == "grid_cell") {
        const auto colon = value.find(':');
        if (colon == std::string::npos) {
            throw InputError("grid_cell value must be 'row:col', got '" + value + "'");
        }
        GridCell g;
        try {
            std::size_t used_row = 0;
            std::size_t used_col = 0;
            g.row = std::stoi(value.substr(0, colon), &used_row);
            g.col = std::stoi(value.substr(colon + 1), &used_col);
            if (used_row != colon || used_col != value.size() - colon - 1) {
                throw std::invalid_argument(value);
            }
        } catch (const std::exception&) {
            throw InputError("grid_cell value must be 'row:col', got '" + value + "'");
        }
        if (g.row < 0 || g.row > 2 || g.col < 0 || g.col > 2) {
            throw InputError("grid_cell out of range: '" + value + "'");
        }
        return g;
    }
    if (tag == "size_factor") {
        try {
            std::size_t used = 0;
            const double f = std::stod(value, &used);
            if (used != value.size() || !(f > 0.0)) {
                throw InputError("bad size factor");
            }
            return SizeFactor{f};
        } catch (const std::exception&) {
            throw InputError("size_factor value must be a positive number, got '" + value + "'");
        }
    }
    throw InputError("unknown condition tag '" + tag + "'");
}

/// One JSON object per plan with a fixed key order:
/// epoch, index, fg_id, use_original, bg_id, size, center_x, center_y,
/// blur_sigma, and for probes condition_tag, condition_value.
/// Absent values are null.
inline nlohmann::ordered_json plan_to_json(const SamplePlan& p) {
    nlohmann::ordered_json j;
    j["epoch"] = p.epoch;
    j["index"] = p.index;
    j["fg_id"] = p.fg_id;
    j["use_original"] = p.use_original;
    j["bg_id"] = p.bg_id ? nlohmann::ordered_json(*p.bg_id) : nlohmann::ordered_json(nullptr);
    j["size"] = p.use_original ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(p.size);
    j["center_x"] = p.center ? nlohmann::ordered_json(p.center->x) : nlohmann::ordered_json(nullptr);
    j["center_y"] = p.center ? nlohmann::ordered_json(p.center->y) : nlohmann::ordered_json(nullptr);
    j["blur_sigma"] = p.blur_sigma;
    if (p.probe) {
        j["condition_tag"] = condition_tag(*p.probe);
        j["condition_value"] = condition_value(*p.probe);
    }
    return j;
}

inline std::string plan_to_line(const SamplePlan& p) { return plan_to_json(p).dump(); }

inline SamplePlan plan_from_json(const nlohmann::json& j, const AssetManifest& manifest) {
    SamplePlan p;
    p.epoch = j.at("epoch").get<std::int64_t>();
    p.index = j.at("index").get<std::uint64_t>();
    p.fg_id = j.at("fg_id").get<std::string>();
    const auto idx = manifest.foreground_index(p.fg_id);
    if (!idx) {
        throw InputError("plan references unknown foreground '" + p.fg_id + "'");
    }
    p.fg_index = *idx;
    p.use_original = j.at("use_original").get<bool>();
    if (!j.at("bg_id").is_null()) {
        p.bg_id = j["bg_id"].get<std::string>();
    }
    if (!j.at("size").is_null()) {
        p.size = j["size"].get<double>();
    }
    if (!j.at("center_x").is_null()) {
        p.center = Point{j["center_x"].get<double>(), j.at("center_y").get<double>()};
    }
    p.blur_sigma = j.at("blur_sigma").get<double>();
    if (j.contains("condition_tag")) {
        p.probe = parse_condition(j["condition_tag"].get<std::string>(), j.at("condition_value").get<std::string>());
    }
    return p;
}

} // namespace foraug

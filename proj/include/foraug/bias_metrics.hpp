#pragma once

// Model-bias metrics over evaluation records:
//   background robustness  Acc(all backgrounds) / Acc(same-class backgrounds)
//   foreground focus       (Area(img) Importance(fg)) / (Area(fg) Importance(img))
//   center bias            1 - (min corner + min side) / (2 center), 3x3 grid
//   size bias curve        Acc(f_size) / Acc(f_size = 1)
// plus the deterministic probe plans that produce the records.
//
// EvalRecord files are CSV with header
//   sample_id,true_class,predicted_class,condition_tag,condition_value[,probability]
// where condition_tag is bg_strategy | grid_cell | size_factor and the value is
// a strategy name, "row:col", or a positive real.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "foraug/asset_store.hpp"
#include "foraug/error.hpp"
#include "foraug/image.hpp"
#include "foraug/recombiner.hpp"
#include "foraug/rng.hpp"

namespace foraug {

struct EvalRecord {
    std::string sample_id;
    int true_class = 0;
    int predicted_class = 0;
    Condition condition = BgStrategy::same_class;
    std::optional<double> probability;
};

using CellGrid = std::array<std::array<double, 3>, 3>;

struct BiasReport {
    std::optional<double> background_robustness;
    std::optional<double> foreground_focus;
    std::optional<double> center_bias;
    std::optional<CellGrid> cell_grid;
    std::vector<std::pair<double, double>> size_curve;
    std::map<std::string, std::size_t> sample_counts;
};

inline double accuracy(const std::vector<EvalRecord>& records) {
    if (records.empty()) {
        throw InputError("accuracy of an empty record set");
    }
    std::size_t correct = 0;
    for (const auto& r : records) {
        correct += r.predicted_class == r.true_class ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

inline double background_robustness(const std::vector<EvalRecord>& records_all,
                                    const std::vector<EvalRecord>& records_same) {
    if (records_all.empty() || records_same.empty()) {
        throw InputError("background robustness needs both all- and same-class-background records");
    }
    const double same = accuracy(records_same);
    if (same == 0.0) {
        throw InputError("background robustness undefined: same-class accuracy is zero");
    }
    return accuracy(records_all) / same;
}

/// Importance(S) is the sum of per-pixel importance over S.
inline double foreground_focus(const ImportanceMap& importance, const Mask& fg_mask) {
    if (importance.width != fg_mask.width || importance.height != fg_mask.height) {
        throw InputError("importance map and mask dimensions differ");
    }
    double peak = 0.0;
    for (const double v : importance.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InputError("importance map contains a negative or non-finite value");
        }
        peak = std::max(peak, v);
    }
    // Scaling by the peak makes a constant map all ones, so its sums are exact integers.
    double total = 0.0;
    double inside = 0.0;
    std::size_t fg_area = 0;
    for (std::size_t i = 0; i < importance.values.size(); ++i) {
        const double v = peak > 0.0 ? importance.values[i] / peak : 0.0;
        total += v;
        if (fg_mask.bits[i] != 0) {
            inside += v;
            ++fg_area;
        }
    }
    if (fg_area == 0) {
        throw InputError("foreground mask is empty");
    }
    if (!(total > 0.0)) {
        throw InputError("importance map has zero total importance");
    }
    const double area = static_cast<double>(importance.values.size());
    return (area * inside) / (static_cast<double>(fg_area) * total);
}

/// Arithmetic mean of per-image foreground focus.
inline double mean_foreground_focus(const std::vector<std::pair<ImportanceMap, Mask>>& samples) {
    if (samples.empty()) {
        throw InputError("foreground focus of an empty sample set");
    }
    double sum = 0.0;
    for (const auto& [imp, mask] : samples) {
        sum += foreground_focus(imp, mask);
    }
    return sum / static_cast<double>(samples.size());
}

/// Takes per-cell accuracies (absolute or relative); only ratios to the center matter.
inline double center_bias(const CellGrid& cell_acc) {
    const double center = cell_acc[1][1];
    if (!(center > 0.0)) {
        throw InputError("center bias undefined: center-cell accuracy is zero");
    }
    const double corner = std::min({cell_acc[0][0], cell_acc[0][2], cell_acc[2][0], cell_acc[2][2]});
    const double side = std::min({cell_acc[0][1], cell_acc[1][0], cell_acc[1][2], cell_acc[2][1]});
    return 1.0 - (corner + side) / (2.0 * center);
}

inline CellGrid relative_cell_grid(const CellGrid& cell_acc) {
    if (!(cell_acc[1][1] > 0.0)) {
        throw InputError("center-cell accuracy is zero");
    }
    CellGrid rel{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            rel[r][c] = r == 1 && c == 1 ? 1.0 : cell_acc[r][c] / cell_acc[1][1];
        }
    }
    return rel;
}

/// Accuracy per size factor normalised by the f_size = 1 group, ascending in f_size.
inline std::vector<std::pair<double, double>> size_bias_curve(const std::map<double, std::vector<EvalRecord>>& groups) {
    auto anchor = groups.find(1.0);
    if (anchor == groups.end() || anchor->second.empty()) {
        throw InputError("size bias curve needs a nonempty f_size = 1.0 group");
    }
    const double base = accuracy(anchor->second);
    if (base == 0.0) {
        throw InputError("size bias curve undefined: accuracy at f_size = 1.0 is zero");
    }
    std::vector<std::pair<double, double>> curve;
    for (const auto& [f, recs] : groups) {
        curve.emplace_back(f, f == 1.0 ? 1.0 : accuracy(recs) / base);
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Record-set front ends.

inline std::pair<std::vector<EvalRecord>, std::vector<EvalRecord>> split_by_background(
    const std::vector<EvalRecord>& records) {
    std::vector<EvalRecord> all;
    std::vector<EvalRecord> same;
    for (const auto& r : records) {
        if (const auto* s = std::get_if<BgStrategy>(&r.condition)) {
            if (*s == BgStrategy::all) {
                all.push_back(r);
            } else if (*s == BgStrategy::same_class) {
                same.push_back(r);
            }
        }
    }
    return {all, same};
}

inline CellGrid cell_accuracies(const std::vector<EvalRecord>& records, std::map<std::string, std::size_t>* counts = nullptr) {
    std::array<std::array<std::vector<EvalRecord>, 3>, 3> cells;
    for (const auto& r : records) {
        if (const auto* g = std::get_if<GridCell>(&r.condition)) {
            cells[g->row][g->col].push_back(r);
        }
    }
    CellGrid acc{};
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) {
            if (cells[row][col].empty()) {
                throw InputError("no records for grid cell " + std::to_string(row) + ":" + std::to_string(col));
            }
            acc[row][col] = accuracy(cells[row][col]);
            if (counts != nullptr) {
                (*counts)["grid_cell=" + std::to_string(row) + ":" + std::to_string(col)] = cells[row][col].size();
            }
        }
    }
    return acc;
}

inline std::map<double, std::vector<EvalRecord>> group_by_size(const std::vector<EvalRecord>& records) {
    std::map<double, std::vector<EvalRecord>> groups;
    for (const auto& r : records) {
        if (const auto* f = std::get_if<SizeFactor>(&r.condition)) {
            groups[f->value].push_back(r);
        }
    }
    return groups;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
            field.pop_back();
        }
        const auto start = field.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? std::string() : field.substr(start));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

inline int parse_int(const std::string& s) {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) {
        throw std::invalid_argument(s);
    }
    return v;
}

} // namespace detail

inline std::vector<EvalRecord> parse_eval_records(std::istream& in, const std::string& source = "<records>") {
    std::vector<EvalRecord> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') {
            continue;
        }
        const auto fields = detail::split_csv(line);
        if (!header_seen && !fields.empty() && fields[0] == "sample_id") {
            header_seen = true;
            continue;
        }
        header_seen = true;
        const auto fail = [&](const std::string& why) {
            return InputError(source + ":" + std::to_string(line_no) + ": malformed record (" + why + ")");
        };
        if (fields.size() != 5 && fields.size() != 6) {
            throw fail("expected 5 or 6 fields, got " + std::to_string(fields.size()));
        }
        EvalRecord r;
        r.sample_id = fields[0];
        try {
            r.true_class = detail::parse_int(fields[1]);
            r.predicted_class = detail::parse_int(fields[2]);
        } catch (const std::exception&) {
            throw fail("class ids must be integers");
        }
        try {
            r.condition = parse_condition(fields[3], fields[4]);
        } catch (const InputError& e) {
            throw fail(e.what());
        }
        if (fields.size() == 6 && !fields[5].empty()) {
            try {
                r.probability = std::stod(fields[5]);
            } catch (const std::exception&) {
                throw fail("probability must be a real number");
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<EvalRecord> load_eval_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open record file " + path);
    }
    return parse_eval_records(in, path);
}

inline void write_eval_records(std::ostream& out, const std::vector<EvalRecord>& records) {
    out << "sample_id,true_class,predicted_class,condition_tag,condition_value,probability\n";
    for (const auto& r : records) {
        out << r.sample_id << ',' << r.true_class << ',' << r.predicted_class << ',' << condition_tag(r.condition) << ','
            << condition_value(r.condition) << ',';
        if (r.probability) {
            out << nlohmann::json(*r.probability).dump();
        }
        out << '\n';
    }
}

inline nlohmann::ordered_json report_to_json(const BiasReport& r) {
    nlohmann::ordered_json j;
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    j["background_robustness"] = opt(r.background_robustness);
    j["foreground_focus"] = opt(r.foreground_focus);
    j["center_bias"] = opt(r.center_bias);
    if (r.cell_grid) {
        j["cell_grid"] = *r.cell_grid;
    } else {
        j["cell_grid"] = nullptr;
    }
    j["size_curve"] = nlohmann::ordered_json::array();
    for (const auto& [f, a] : r.size_curve) {
        j["size_curve"].push_back({{"f_size", f}, {"relative_accuracy", a}});
    }
    j["sample_counts"] = r.sample_counts;
    return j;
}

// ---------------------------------------------------------------------------
// Probe plans.

enum class ProbeKind { bg_swap, grid, size_sweep };

inline ProbeKind parse_probe_kind(const std::string& s) {
    if (s == "bg_swap") return ProbeKind::bg_swap;
    if (s == "grid") return ProbeKind::grid;
    if (s == "size_sweep") return ProbeKind::size_sweep;
    throw InputError("unknown probe kind '" + s + "'");
}

/// Deterministic evaluation plans, equal counts per condition and foreground.
///   bg_swap    one same-class and one all-background plan per foreground; both
///              share size and position draws, only the background differs
///   grid       nine plans per foreground, one per 3x3 cell, mean size
///   size_sweep one plan per factor, mean size times the factor (capped at 1)
/// Plans carry epoch 0, consecutive indices and the probe condition; no mixing.
inline std::vector<SamplePlan> probe_set(const AssetManifest& manifest, const RecombinationConfig& config,
                                         ProbeKind kind, const std::vector<double>& size_factors = {0.5, 1.0, 2.0}) {
    std::vector<SamplePlan> out;
    const auto kind_key = static_cast<std::uint64_t>(kind);
    for (std::size_t fi = 0; fi < manifest.foregrounds.size(); ++fi) {
        const ForegroundAsset& fg = manifest.foregrounds[fi];
        auto base = [&](Condition cond) {
            SamplePlan p;
            p.fg_id = fg.id;
            p.fg_index = fi;
            p.epoch = 0;
            p.index = out.size();
            p.probe = cond;
            return p;
        };
        Rng shared(hash_key({stream_tag::probe, config.seed, kind_key, fi}));
        const double u_size = shared.uniform();
        const Point center = sample_center(config.eta, shared);
        const double sigma = sample_blur(config.sigma_max, shared);

        if (kind == ProbeKind::bg_swap) {
            for (BgStrategy strategy : {BgStrategy::same_class, BgStrategy::all}) {
                Rng pick(hash_key({stream_tag::probe, config.seed, kind_key, fi, static_cast<std::uint64_t>(strategy)}));
                const BackgroundAsset& bg = choose_background(fg, manifest, strategy, pick);
                SamplePlan p = base(strategy);
                p.bg_id = bg.id;
                const auto [s_l, s_u] = size_limits(fg.orig_size_fraction, bg.orig_fg_size_fraction, config.size_strategy);
                const double lo = (1.0 - config.size_band) * s_l;
                const double hi = (1.0 + config.size_band) * s_u;
                p.size = std::min(1.0, lo + (hi - lo) * u_size);
                p.center = center;
                p.blur_sigma = sigma;
                out.push_back(std::move(p));
            }
            continue;
        }

        Rng pick(hash_key({stream_tag::probe, config.seed, kind_key, fi, 0xb9ULL}));
        const BackgroundAsset& bg = choose_background(fg, manifest, config.bg_strategy, pick);
        const double mean_size = size_limits(fg.orig_size_fraction, bg.orig_fg_size_fraction, SizeStrategy::mean).first;
        if (kind == ProbeKind::grid) {
            for (int row = 0; row < 3; ++row) {
                for (int col = 0; col < 3; ++col) {
                    SamplePlan p = base(GridCell{row, col});
                    p.bg_id = bg.id;
                    p.size = mean_size;
                    p.center = Point{(2 * col + 1) / 6.0, (2 * row + 1) / 6.0};
                    p.blur_sigma = sigma;
                    out.push_back(std::move(p));
                }
            }
        } else {
            for (double f : size_factors) {
                if (!(f > 0.0)) {
                    throw InputError("size factors must be positive");
                }
                SamplePlan p = base(SizeFactor{f});
                p.bg_id = bg.id;
                p.size = std::min(1.0, mean_size * f);
                p.center = center;
                p.blur_sigma = sigma;
                out.push_back(std::move(p));
            }
        }
    }
    return out;
}

} // namespace foraug

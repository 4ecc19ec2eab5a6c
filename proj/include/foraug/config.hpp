#pragma once

// Flat key=value configuration for RecombinationConfig.
//
//   # comment
//   bg_strategy   = all              original | same_class | all
//   size_strategy = range            mean | range
//   size_band     = 0.3
//   eta           = 1                nonzero integer
//   sigma_max     = 4.0
//   mix_schedule  = cosine           none | constant | constant(p) | linear | reverse_linear | cosine
//   mix_p         = 0.0              probability for mix_schedule = constant
//   aug_order     = paste_crop_color paste_crop_color | crop_paste_color
//   t_prune       = 0.8
//   total_epochs  = 300
//   seed          = 0
//   image_size    = 224
//   augment       = random_resized_crop,horizontal_flip,color_jitter   (or none)

#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "foraug/error.hpp"
#include "foraug/recombiner.hpp"

namespace foraug {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) {
            return d;
        }
    } catch (const std::exception&) {
    }
    throw InputError("config key '" + key + "': expected a number, got '" + v + "'");
}

inline long long to_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long n = std::stoll(v, &used);
        if (used == v.size()) {
            return n;
        }
    } catch (const std::exception&) {
    }
    throw InputError("config key '" + key + "': expected an integer, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty() && item != "none") {
            out.push_back(item);
        }
    }
    return out;
}

} // namespace detail

inline MixSchedule parse_mix_schedule(const std::string& s) {
    if (s == "none") return MixSchedule::none();
    if (s == "linear") return MixSchedule::linear();
    if (s == "reverse_linear") return MixSchedule::reverse_linear();
    if (s == "cosine" || s == "cos") return MixSchedule::cosine();
    if (s == "constant") return MixSchedule::constant(0.0);
    if (s.rfind("constant(", 0) == 0 && s.back() == ')') {
        return MixSchedule::constant(detail::to_real("mix_schedule", s.substr(9, s.size() - 10)));
    }
    throw InputError("unknown mixing schedule '" + s + "'");
}

inline std::string to_string(const MixSchedule& m) {
    switch (m.kind) {
    case MixSchedule::Kind::none: return "none";
    case MixSchedule::Kind::constant: return "constant(" + nlohmann::json(m.p).dump() + ")";
    case MixSchedule::Kind::linear: return "linear";
    case MixSchedule::Kind::reverse_linear: return "reverse_linear";
    case MixSchedule::Kind::cosine: return "cosine";
    }
    return "?";
}

/// Applies one key=value assignment. Unknown keys are errors.
inline void apply_setting(RecombinationConfig& c, const std::string& key_in, const std::string& value_in) {
    const std::string key = detail::trim(key_in);
    const std::string v = detail::trim(value_in);
    if (key == "bg_strategy") {
        c.bg_strategy = parse_bg_strategy(v);
    } else if (key == "size_strategy") {
        c.size_strategy = parse_size_strategy(v);
    } else if (key == "size_band") {
        c.size_band = detail::to_real(key, v);
    } else if (key == "eta") {
        c.eta = BatesParam(static_cast<int>(detail::to_integer(key, v)));
    } else if (key == "sigma_max") {
        c.sigma_max = detail::to_real(key, v);
    } else if (key == "mix_schedule") {
        const double keep_p = c.mix_schedule.p;
        c.mix_schedule = parse_mix_schedule(v);
        if (v == "constant") {
            c.mix_schedule.p = keep_p;
        }
    } else if (key == "mix_p") {
        c.mix_schedule.p = detail::to_real(key, v);
    } else if (key == "aug_order") {
        c.aug_order = parse_aug_order(v);
    } else if (key == "t_prune") {
        c.t_prune = detail::to_real(key, v);
    } else if (key == "total_epochs") {
        c.total_epochs = static_cast<int>(detail::to_integer(key, v));
    } else if (key == "seed") {
        try {
            std::size_t used = 0;
            c.seed = std::stoull(v, &used, 0);
            if (used != v.size() || v.front() == '-') {
                throw std::invalid_argument(v);
            }
        } catch (const std::exception&) {
            throw InputError("config key 'seed': expected an unsigned integer, got '" + v + "'");
        }
    } else if (key == "image_size") {
        c.image_size = static_cast<int>(detail::to_integer(key, v));
    } else if (key == "augment") {
        c.augment = detail::split_list(v);
    } else {
        throw InputError("unknown config key '" + key + "'");
    }
}

/// "key=value" form, as used by --set.
inline void apply_assignment(RecombinationConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw InputError("expected key=value, got '" + assignment + "'");
    }
    apply_setting(c, assignment.substr(0, eq), assignment.substr(eq + 1));
}

inline RecombinationConfig parse_config(std::istream& in, RecombinationConfig base = {},
                                        const std::string& source = "<config>") {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        try {
            apply_assignment(base, line);
        } catch (const InputError& e) {
            throw InputError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    base.validate();
    return base;
}

inline RecombinationConfig load_config(const std::string& path, RecombinationConfig base = {}) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path);
    }
    return parse_config(in, std::move(base), path);
}

/// Resolved config in the same format parse_config reads; round-trips exactly.
inline std::string config_to_string(const RecombinationConfig& c) {
    std::ostringstream out;
    auto real = [](double d) { return nlohmann::json(d).dump(); };
    out << "bg_strategy = " << to_string(c.bg_strategy) << '\n'
        << "size_strategy = " << to_string(c.size_strategy) << '\n'
        << "size_band = " << real(c.size_band) << '\n'
        << "eta = " << c.eta.eta() << '\n'
        << "sigma_max = " << real(c.sigma_max) << '\n'
        << "mix_schedule = " << to_string(c.mix_schedule) << '\n'
        << "aug_order = " << to_string(c.aug_order) << '\n'
        << "t_prune = " << real(c.t_prune) << '\n'
        << "total_epochs = " << c.total_epochs << '\n'
        << "seed = " << c.seed << '\n'
        << "image_size = " << c.image_size << '\n'
        << "augment = ";
    if (c.augment.empty()) {
        out << "none";
    }
    for (std::size_t i = 0; i < c.augment.size(); ++i) {
        out << (i ? "," : "") << c.augment[i];
    }
    out << '\n';
    return out.str();
}

} // namespace foraug

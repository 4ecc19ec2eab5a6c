#pragma once

// Foreground/background asset corpus: sidecar ingestion, manifest
// (de)serialization, validation and infill-based pruning.
//
// Sidecar: UTF-8 JSON Lines, one object per asset.
//   id               string, unique per kind
//   kind             "foreground" | "fg" | "background" | "bg"
//   class_id         integer
//   source_image_id  string linking a foreground to the background cut from
//                    the same original image
//   size_fraction    foreground: opaque-pixel count / source pixel count
//                    background: same quantity for the foreground removed
//                    from it
//   infill_ratio     backgrounds only, fraction of inpainted pixels
//   file             optional; image path relative to the kind's root
//                    (default "<id>.png", backgrounds also try "<id>.jpg")
//   original_file    optional, foregrounds only; the untouched source image,
//                    relative to the originals root (used by mixing)
//
// Manifest: a directory holding foregrounds.jsonl and backgrounds.jsonl. The
// first line of each file is a header object carrying schema_version; image
// paths are stored relative to the manifest directory.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "foraug/error.hpp"
#include "foraug/image.hpp"
#include "foraug/image_io.hpp"

namespace foraug {

namespace fs = std::filesystem;

inline constexpr int kManifestSchemaVersion = 1;

struct ForegroundAsset {
    std::string id;
    int class_id = 0;
    std::string image_ref;
    double orig_size_fraction = 0.0;
    std::string source_image_id;
    std::string original_ref; // empty when no original image is available

    friend bool operator==(const ForegroundAsset&, const ForegroundAsset&) = default;
};

struct BackgroundAsset {
    std::string id;
    int class_id = 0;
    std::string image_ref;
    double orig_fg_size_fraction = 0.0;
    double infill_ratio = 0.0;
    std::string source_image_id;

    friend bool operator==(const BackgroundAsset&, const BackgroundAsset&) = default;
};

class AssetManifest {
public:
    int schema_version = kManifestSchemaVersion;
    std::vector<ForegroundAsset> foregrounds;
    std::vector<BackgroundAsset> backgrounds;
    /// class_id -> background ids, each list sorted.
    std::map<int, std::vector<std::string>> class_index;
    /// Source ids whose background was removed by pruning.
    std::vector<std::string> pruned_source_ids;

    /// Sorts assets by id and rebuilds class_index and the lookup tables.
    /// Must be called after any mutation of the asset lists.
    void reindex() {
        auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
        std::sort(foregrounds.begin(), foregrounds.end(), by_id);
        std::sort(backgrounds.begin(), backgrounds.end(), by_id);
        std::sort(pruned_source_ids.begin(), pruned_source_ids.end());
        pruned_source_ids.erase(std::unique(pruned_source_ids.begin(), pruned_source_ids.end()),
                                pruned_source_ids.end());
        class_index = compute_class_index();
        fg_by_id_.clear();
        bg_by_id_.clear();
        bg_by_source_.clear();
        for (std::size_t i = 0; i < foregrounds.size(); ++i) {
            fg_by_id_.emplace(foregrounds[i].id, i);
        }
        for (std::size_t i = 0; i < backgrounds.size(); ++i) {
            bg_by_id_.emplace(backgrounds[i].id, i);
            bg_by_source_.emplace(backgrounds[i].source_image_id, i);
        }
    }

    std::map<int, std::vector<std::string>> compute_class_index() const {
        std::map<int, std::vector<std::string>> index;
        for (const auto& bg : backgrounds) {
            index[bg.class_id].push_back(bg.id);
        }
        for (auto& [cls, ids] : index) {
            std::sort(ids.begin(), ids.end());
        }
        return index;
    }

    const ForegroundAsset* find_foreground(const std::string& id) const {
        auto it = fg_by_id_.find(id);
        return it == fg_by_id_.end() ? nullptr : &foregrounds[it->second];
    }

    const BackgroundAsset* find_background(const std::string& id) const {
        auto it = bg_by_id_.find(id);
        return it == bg_by_id_.end() ? nullptr : &backgrounds[it->second];
    }

    std::optional<std::size_t> foreground_index(const std::string& id) const {
        auto it = fg_by_id_.find(id);
        return it == fg_by_id_.end() ? std::nullopt : std::optional(it->second);
    }

    std::optional<std::size_t> background_index(const std::string& id) const {
        auto it = bg_by_id_.find(id);
        return it == bg_by_id_.end() ? std::nullopt : std::optional(it->second);
    }

    /// The background cut from the same source image, if it survived pruning.
    const BackgroundAsset* original_background(const ForegroundAsset& fg) const {
        auto it = bg_by_source_.find(fg.source_image_id);
        return it == bg_by_source_.end() ? nullptr : &backgrounds[it->second];
    }

    bool source_was_pruned(const std::string& source_id) const {
        return std::binary_search(pruned_source_ids.begin(), pruned_source_ids.end(), source_id);
    }

    /// Foregrounds whose original background is present (Table-3 style count).
    std::size_t pair_count() const {
        std::size_t n = 0;
        for (const auto& fg : foregrounds) {
            n += original_background(fg) != nullptr ? 1 : 0;
        }
        return n;
    }

    friend bool operator==(const AssetManifest& a, const AssetManifest& b) {
        return a.schema_version == b.schema_version && a.foregrounds == b.foregrounds &&
               a.backgrounds == b.backgrounds && a.class_index == b.class_index &&
               a.pruned_source_ids == b.pruned_source_ids;
    }

private:
    std::unordered_map<std::string, std::size_t> fg_by_id_;
    std::unordered_map<std::string, std::size_t> bg_by_id_;
    std::unordered_multimap<std::string, std::size_t> bg_by_source_;
};

struct Violation {
    std::string asset_id;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    std::string to_string() const {
        std::ostringstream os;
        for (const auto& v : violations) {
            os << v.asset_id << ": " << v.message << '\n';
        }
        return os.str();
    }
};

/// Reports every invariant violation. Image checks decode each asset.
inline ValidationReport validate(const AssetManifest& m, bool check_images = true) {
    ValidationReport report;
    auto add = [&](const std::string& id, std::string msg) { report.violations.push_back({id, std::move(msg)}); };

    std::set<std::string> seen;
    for (const auto& fg : m.foregrounds) {
        if (!seen.insert(fg.id).second) {
            add(fg.id, "duplicate foreground id");
        }
        if (!(fg.orig_size_fraction > 0.0 && fg.orig_size_fraction <= 1.0)) {
            add(fg.id, "orig_size_fraction " + std::to_string(fg.orig_size_fraction) + " outside (0, 1]");
        }
    }
    seen.clear();
    std::map<std::string, int> bg_per_source;
    for (const auto& bg : m.backgrounds) {
        if (!seen.insert(bg.id).second) {
            add(bg.id, "duplicate background id");
        }
        if (!(bg.orig_fg_size_fraction > 0.0 && bg.orig_fg_size_fraction <= 1.0)) {
            add(bg.id, "orig_fg_size_fraction " + std::to_string(bg.orig_fg_size_fraction) + " outside (0, 1]");
        }
        if (!(bg.infill_ratio >= 0.0 && bg.infill_ratio <= 1.0)) {
            add(bg.id, "infill_ratio " + std::to_string(bg.infill_ratio) + " outside [0, 1]");
        }
        ++bg_per_source[bg.source_image_id];
    }

    std::map<std::string, int> fg_per_source;
    for (const auto& fg : m.foregrounds) {
        ++fg_per_source[fg.source_image_id];
        auto it = bg_per_source.find(fg.source_image_id);
        const int links = it == bg_per_source.end() ? 0 : it->second;
        if (links == 0 && !m.source_was_pruned(fg.source_image_id)) {
            add(fg.id, "source_image_id '" + fg.source_image_id + "' has no background");
        } else if (links > 1) {
            add(fg.id, "source_image_id '" + fg.source_image_id + "' links " + std::to_string(links) + " backgrounds");
        }
    }
    for (const auto& bg : m.backgrounds) {
        auto it = fg_per_source.find(bg.source_image_id);
        const int links = it == fg_per_source.end() ? 0 : it->second;
        if (links != 1) {
            add(bg.id, "source_image_id '" + bg.source_image_id + "' links " + std::to_string(links) +
                           " foregrounds, expected 1");
        }
    }
    if (m.class_index != m.compute_class_index()) {
        add("<manifest>", "class_index does not match the background classes");
    }

    if (check_images) {
        for (const auto& fg : m.foregrounds) {
            try {
                const RgbaImage img = load_rgba(fg.image_ref);
                if (opaque_count(img) == 0) {
                    add(fg.id, "alpha channel has no pixel with alpha > 0.5");
                }
            } catch (const Error& e) {
                add(fg.id, e.what());
            }
        }
        for (const auto& bg : m.backgrounds) {
            try {
                (void)load_rgb(bg.image_ref);
            } catch (const Error& e) {
                add(bg.id, e.what());
            }
        }
    }
    return report;
}

struct BuildOptions {
    bool verify_images = true;
    /// Root for `original_file` entries; defaults to the sidecar's directory.
    std::string originals_root;
};

namespace detail {

inline bool is_kind(const std::string& kind, const char* long_name, const char* short_name) {
    return kind == long_name || kind == short_name;
}

template <typename T>
T require_field(const nlohmann::json& rec, const char* field, const std::string& who) {
    auto it = rec.find(field);
    if (it == rec.end() || it->is_null()) {
        throw InputError("asset '" + who + "': missing sidecar field '" + field + "'");
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InputError("asset '" + who + "': sidecar field '" + field + "' has the wrong type");
    }
}

inline std::string resolve_image(const fs::path& root, const nlohmann::json& rec, const std::string& id,
                                 bool background) {
    if (auto it = rec.find("file"); it != rec.end()) {
        return (root / it->get<std::string>()).lexically_normal().string();
    }
    const fs::path png = root / (id + ".png");
    if (background && !fs::exists(png)) {
        for (const char* ext : {".jpg", ".jpeg"}) {
            const fs::path alt = root / (id + ext);
            if (fs::exists(alt)) {
                return alt.lexically_normal().string();
            }
        }
    }
    return png.lexically_normal().string();
}

inline std::string absolute_path(const fs::path& p) {
    return fs::weakly_canonical(fs::absolute(p)).string();
}

} // namespace detail

/// Ingests a sidecar stream. Image paths resolve against `fg_root` / `bg_root`.
inline AssetManifest build_manifest(const std::string& fg_root, const std::string& bg_root, std::istream& sidecar,
                                    const BuildOptions& options = {}, const std::string& sidecar_dir = ".") {
    const fs::path fg_dir = detail::absolute_path(fg_root);
    const fs::path bg_dir = detail::absolute_path(bg_root);
    const fs::path orig_dir =
        detail::absolute_path(options.originals_root.empty() ? sidecar_dir : options.originals_root);

    AssetManifest m;
    std::set<std::string> fg_ids;
    std::set<std::string> bg_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(sidecar, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError("sidecar line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string who = rec.contains("id") && rec["id"].is_string() ? rec["id"].get<std::string>()
                                                                             : "line " + std::to_string(line_no);
        const auto id = detail::require_field<std::string>(rec, "id", who);
        const auto kind = detail::require_field<std::string>(rec, "kind", who);
        if (detail::is_kind(kind, "foreground", "fg")) {
            if (!fg_ids.insert(id).second) {
                throw InputError("duplicate foreground id '" + id + "'");
            }
            ForegroundAsset fg;
            fg.id = id;
            fg.class_id = detail::require_field<int>(rec, "class_id", who);
            fg.source_image_id = detail::require_field<std::string>(rec, "source_image_id", who);
            fg.orig_size_fraction = detail::require_field<double>(rec, "size_fraction", who);
            fg.image_ref = detail::resolve_image(fg_dir, rec, id, false);
            if (auto it = rec.find("original_file"); it != rec.end()) {
                fg.original_ref = (orig_dir / it->get<std::string>()).lexically_normal().string();
            }
            m.foregrounds.push_back(std::move(fg));
        } else if (detail::is_kind(kind, "background", "bg")) {
            if (!bg_ids.insert(id).second) {
                throw InputError("duplicate background id '" + id + "'");
            }
            BackgroundAsset bg;
            bg.id = id;
            bg.class_id = detail::require_field<int>(rec, "class_id", who);
            bg.source_image_id = detail::require_field<std::string>(rec, "source_image_id", who);
            bg.orig_fg_size_fraction = detail::require_field<double>(rec, "size_fraction", who);
            bg.infill_ratio = detail::require_field<double>(rec, "infill_ratio", who);
            bg.image_ref = detail::resolve_image(bg_dir, rec, id, true);
            m.backgrounds.push_back(std::move(bg));
        } else {
            throw InputError("asset '" + who + "': unknown kind '" + kind + "'");
        }
    }
    if (m.foregrounds.empty() && m.backgrounds.empty()) {
        throw InputError("no assets");
    }
    m.reindex();

    if (options.verify_images) {
        for (const auto& fg : m.foregrounds) {
            if (!fs::exists(fg.image_ref)) {
                throw IoError("foreground '" + fg.id + "': image not found at " + fg.image_ref);
            }
            try {
                (void)load_rgba(fg.image_ref);
            } catch (const IoError& e) {
                throw IoError("foreground '" + fg.id + "': " + e.what());
            }
        }
        for (const auto& bg : m.backgrounds) {
            if (!fs::exists(bg.image_ref)) {
                throw IoError("background '" + bg.id + "': image not found at " + bg.image_ref);
            }
            try {
                (void)load_rgb(bg.image_ref);
            } catch (const IoError& e) {
                throw IoError("background '" + bg.id + "': " + e.what());
            }
        }
    }
    const ValidationReport report = validate(m, options.verify_images);
    if (!report.ok()) {
        throw InputError("manifest invalid:\n" + report.to_string());
    }
    return m;
}

inline AssetManifest build_manifest(const std::string& fg_root, const std::string& bg_root,
                                    const std::string& sidecar_path, const BuildOptions& options = {}) {
    std::ifstream in(sidecar_path);
    if (!in) {
        throw IoError("cannot open sidecar " + sidecar_path);
    }
    const std::string dir = fs::path(sidecar_path).parent_path().empty()
                                ? std::string(".")
                                : fs::path(sidecar_path).parent_path().string();
    return build_manifest(fg_root, bg_root, in, options, dir);
}

/// Keeps the backgrounds with infill_ratio <= t_prune. Throws if any class
/// loses all of its backgrounds.
inline AssetManifest prune_backgrounds(const AssetManifest& m, double t_prune) {
    if (!(t_prune > 0.0 && t_prune <= 1.0)) {
        throw InputError("t_prune must lie in (0, 1], got " + std::to_string(t_prune));
    }
    AssetManifest out = m;
    out.backgrounds.clear();
    for (const auto& bg : m.backgrounds) {
        if (bg.infill_ratio > t_prune) {
            out.pruned_source_ids.push_back(bg.source_image_id);
        } else {
            out.backgrounds.push_back(bg);
        }
    }
    out.reindex();
    std::string emptied;
    for (const auto& [cls, ids] : m.class_index) {
        if (!out.class_index.contains(cls)) {
            emptied += (emptied.empty() ? "" : ", ") + std::to_string(cls);
        }
    }
    if (!emptied.empty()) {
        throw InputError("pruning at t_prune=" + std::to_string(t_prune) +
                         " leaves no background for class(es): " + emptied);
    }
    return out;
}

inline constexpr const char* kForegroundFile = "foregrounds.jsonl";
inline constexpr const char* kBackgroundFile = "backgrounds.jsonl";

namespace detail {

inline std::string relative_ref(const std::string& ref, const fs::path& dir) {
    if (ref.empty()) {
        return ref;
    }
    return fs::path(ref).lexically_proximate(dir).generic_string();
}

inline std::string absolute_ref(const std::string& ref, const fs::path& dir) {
    if (ref.empty()) {
        return ref;
    }
    const fs::path p(ref);
    return (p.is_absolute() ? p : (dir / p)).lexically_normal().string();
}

} // namespace detail

inline void save_manifest(const AssetManifest& m, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path base = detail::absolute_path(dir);

    std::ofstream fg_out(base / kForegroundFile);
    std::ofstream bg_out(base / kBackgroundFile);
    if (!fg_out || !bg_out) {
        throw IoError("cannot write manifest into " + dir);
    }
    nlohmann::ordered_json header;
    header["schema_version"] = m.schema_version;
    header["kind"] = "foregrounds";
    header["count"] = m.foregrounds.size();
    fg_out << header.dump() << '\n';
    for (const auto& fg : m.foregrounds) {
        nlohmann::ordered_json rec;
        rec["id"] = fg.id;
        rec["class_id"] = fg.class_id;
        rec["source_image_id"] = fg.source_image_id;
        rec["size_fraction"] = fg.orig_size_fraction;
        rec["image"] = detail::relative_ref(fg.image_ref, base);
        if (!fg.original_ref.empty()) {
            rec["original"] = detail::relative_ref(fg.original_ref, base);
        }
        fg_out << rec.dump() << '\n';
    }

    header = nlohmann::ordered_json();
    header["schema_version"] = m.schema_version;
    header["kind"] = "backgrounds";
    header["count"] = m.backgrounds.size();
    header["pruned_source_ids"] = m.pruned_source_ids;
    bg_out << header.dump() << '\n';
    for (const auto& bg : m.backgrounds) {
        nlohmann::ordered_json rec;
        rec["id"] = bg.id;
        rec["class_id"] = bg.class_id;
        rec["source_image_id"] = bg.source_image_id;
        rec["size_fraction"] = bg.orig_fg_size_fraction;
        rec["infill_ratio"] = bg.infill_ratio;
        rec["image"] = detail::relative_ref(bg.image_ref, base);
        bg_out << rec.dump() << '\n';
    }
    if (!fg_out.flush() || !bg_out.flush()) {
        throw IoError("cannot write manifest into " + dir);
    }
}

inline AssetManifest load_manifest(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw IoError("manifest directory not found: " + dir);
    }
    const fs::path base = detail::absolute_path(dir);
    AssetManifest m;

    auto read_file = [&](const char* name, const char* kind, auto&& on_record) {
        std::ifstream in(base / name);
        if (!in) {
            throw IoError("cannot open " + (base / name).string());
        }
        std::string line;
        std::size_t line_no = 0;
        bool have_header = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) {
                continue;
            }
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw IoError(std::string(name) + ":" + std::to_string(line_no) + ": " + e.what());
            }
            try {
                if (!have_header) {
                    if (rec.value("kind", "") != kind) {
                        throw IoError(std::string(name) + ": missing header line");
                    }
                    const int version = rec.at("schema_version").get<int>();
                    if (version != kManifestSchemaVersion) {
                        throw IoError(std::string(name) + ": unsupported schema_version " + std::to_string(version));
                    }
                    m.schema_version = version;
                    if (rec.contains("pruned_source_ids")) {
                        m.pruned_source_ids = rec["pruned_source_ids"].get<std::vector<std::string>>();
                    }
                    have_header = true;
                    continue;
                }
                on_record(rec);
            } catch (const nlohmann::json::exception& e) {
                throw IoError(std::string(name) + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (!have_header) {
            throw IoError(std::string(name) + ": empty manifest file");
        }
    };

    read_file(kForegroundFile, "foregrounds", [&](const nlohmann::json& rec) {
        ForegroundAsset fg;
        fg.id = rec.at("id").get<std::string>();
        fg.class_id = rec.at("class_id").get<int>();
        fg.source_image_id = rec.at("source_image_id").get<std::string>();
        fg.orig_size_fraction = rec.at("size_fraction").get<double>();
        fg.image_ref = detail::absolute_ref(rec.at("image").get<std::string>(), base);
        fg.original_ref = detail::absolute_ref(rec.value("original", std::string()), base);
        m.foregrounds.push_back(std::move(fg));
    });
    read_file(kBackgroundFile, "backgrounds", [&](const nlohmann::json& rec) {
        BackgroundAsset bg;
        bg.id = rec.at("id").get<std::string>();
        bg.class_id = rec.at("class_id").get<int>();
        bg.source_image_id = rec.at("source_image_id").get<std::string>();
        bg.orig_fg_size_fraction = rec.at("size_fraction").get<double>();
        bg.infill_ratio = rec.at("infill_ratio").get<double>();
        bg.image_ref = detail::absolute_ref(rec.at("image").get<std::string>(), base);
        m.backgrounds.push_back(std::move(bg));
    });
    m.reindex();
    return m;
}

/// Decoded-image provider for rendering. Entries registered up front (or
/// preloaded) are immutable afterwards, so concurrent readers need no locks;
/// anything else is decoded from disk on each request.
class AssetImages {
public:
    explicit AssetImages(const AssetManifest& manifest) : manifest_(&manifest) {}

    const AssetManifest& manifest() const noexcept { return *manifest_; }

    /// Decodes every asset once. Call before sharing across threads.
    void preload() {
        for (const auto& fg : manifest_->foregrounds) {
            foregrounds_.try_emplace(fg.id, std::make_shared<const RgbaImage>(load_fg(fg)));
        }
        for (const auto& bg : manifest_->backgrounds) {
            backgrounds_.try_emplace(bg.id, std::make_shared<const RgbImage>(load_bg(bg)));
        }
    }

    void add_foreground(const std::string& id, RgbaImage img) {
        foregrounds_.insert_or_assign(id, std::make_shared<const RgbaImage>(std::move(img)));
    }
    void add_background(const std::string& id, RgbImage img) {
        backgrounds_.insert_or_assign(id, std::make_shared<const RgbImage>(std::move(img)));
    }
    void add_original(const std::string& fg_id, RgbImage img) {
        originals_.insert_or_assign(fg_id, std::make_shared<const RgbImage>(std::move(img)));
    }

    std::shared_ptr<const RgbaImage> foreground(const ForegroundAsset& fg) const {
        if (auto it = foregrounds_.find(fg.id); it != foregrounds_.end()) {
            return it->second;
        }
        return std::make_shared<const RgbaImage>(load_fg(fg));
    }

    std::shared_ptr<const RgbImage> background(const BackgroundAsset& bg) const {
        if (auto it = backgrounds_.find(bg.id); it != backgrounds_.end()) {
            return it->second;
        }
        return std::make_shared<const RgbImage>(load_bg(bg));
    }

    std::shared_ptr<const RgbImage> original(const ForegroundAsset& fg) const {
        if (auto it = originals_.find(fg.id); it != originals_.end()) {
            return it->second;
        }
        if (fg.original_ref.empty()) {
            throw InputError("foreground '" + fg.id + "': no original image recorded for mixing");
        }
        try {
            return std::make_shared<const RgbImage>(load_rgb(fg.original_ref));
        } catch (const IoError& e) {
            throw IoError("original of foreground '" + fg.id + "': " + e.what());
        }
    }

private:
    static RgbaImage load_fg(const ForegroundAsset& fg) {
        try {
            return load_rgba(fg.image_ref);
        } catch (const IoError& e) {
            throw IoError("foreground '" + fg.id + "': " + e.what());
        }
    }
    static RgbImage load_bg(const BackgroundAsset& bg) {
        try {
            return load_rgb(bg.image_ref);
        } catch (const IoError& e) {
            throw IoError("background '" + bg.id + "': " + e.what());
        }
    }

    const AssetManifest* manifest_;
    std::map<std::string, std::shared_ptr<const RgbaImage>> foregrounds_;
    std::map<std::string, std::shared_ptr<const RgbImage>> backgrounds_;
    std::map<std::string, std::shared_ptr<const RgbImage>> originals_;
};

} // namespace foraug

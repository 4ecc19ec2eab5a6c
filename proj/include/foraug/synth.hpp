#pragma once

// Desk-scale synthetic asset corpus with exactly known ground truth.
// Class c draws shape c % 4 (circle, square, triangle, diamond) in a class
// colour over a class-tinted gradient texture. The foreground is the shape's
// bounding box with binary alpha; its size fraction is the exact opaque pixel
// count over the source image area. The background is the bare texture.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "foraug/asset_store.hpp"
#include "foraug/image.hpp"
#include "foraug/image_io.hpp"
#include "foraug/rng.hpp"

namespace foraug {

struct SynthOptions {
    int n_classes = 2;
    int per_class = 10;
    std::uint64_t seed = 0;
    /// Every n-th background per class gets an infill ratio above 0.8; 0 disables.
    int heavy_infill_every = 10;
};

struct SynthItem {
    ForegroundAsset fg;
    BackgroundAsset bg;
    RgbaImage fg_image;
    RgbImage bg_image;
    RgbImage original;
};

namespace detail {

struct Rgb {
    double r, g, b;
};

inline Rgb hsv(double h, double s, double v) {
    h = h - std::floor(h);
    const double k[3] = {5.0, 3.0, 1.0};
    double out[3];
    for (int i = 0; i < 3; ++i) {
        const double kk = std::fmod(k[i] + h * 6.0, 6.0);
        out[i] = v - v * s * std::max(0.0, std::min({kk, 4.0 - kk, 1.0}));
    }
    return {out[0] * 255.0, out[1] * 255.0, out[2] * 255.0};
}

inline std::uint8_t byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); }

/// Shape membership of pixel centre (px, py) for a shape of half-extent r at (cx, cy).
inline bool inside_shape(int shape, double px, double py, double cx, double cy, double r) {
    const double dx = px - cx;
    const double dy = py - cy;
    switch (shape) {
    case 0: return dx * dx + dy * dy <= r * r;
    case 1: return std::abs(dx) <= r && std::abs(dy) <= r;
    case 2: {
        // apex up, base at cy + r, height 2r, base width 2r
        if (dy < -r || dy > r) return false;
        const double half = (dy + r) / 2.0;
        return std::abs(dx) <= half;
    }
    default: return std::abs(dx) + std::abs(dy) <= r;
    }
}

/// Half-extent giving area `area` for each shape.
inline double shape_radius(int shape, double area) {
    switch (shape) {
    case 0: return std::sqrt(area / std::numbers::pi);
    case 1: return std::sqrt(area) / 2.0;
    case 2: return std::sqrt(area / 2.0);
    default: return std::sqrt(area / 2.0);
    }
}

inline std::string synth_id(const char* prefix, int cls, int i) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%s_%03d_%04d", prefix, cls, i);
    return buf;
}

} // namespace detail

inline SynthItem synth_item(const SynthOptions& opt, int cls, int i) {
    Rng rng(hash_key({stream_tag::synth, opt.seed, static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(i)}));
    const int W = 160 + static_cast<int>(rng.below(97));
    const int H = 128 + static_cast<int>(rng.below(129));
    const double target = rng.uniform(0.06, 0.22);
    const int shape = cls % 4;
    const double r = detail::shape_radius(shape, target * W * H);
    const double cx = rng.uniform(r + 1.0, W - r - 1.0);
    const double cy = rng.uniform(r + 1.0, H - r - 1.0);

    const detail::Rgb fg_col = detail::hsv(cls * 0.618034, 0.85, 0.95);
    const detail::Rgb bg_a = detail::hsv(cls * 0.618034 + 0.5, 0.35, 0.75);
    const detail::Rgb bg_b = detail::hsv(cls * 0.618034 + 0.3, 0.25, 0.45);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double freq = rng.uniform(0.05, 0.2);

    RgbImage texture(W, H);
    RgbImage original(W, H);
    int x_lo = W, x_hi = -1, y_lo = H, y_hi = -1;
    std::size_t opaque = 0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double u = (x * std::cos(angle) + y * std::sin(angle)) / std::hypot(W, H) + 0.5;
            const double stripe = 0.5 + 0.5 * std::sin(freq * (x - y));
            const double t = std::clamp(0.7 * u + 0.3 * stripe, 0.0, 1.0);
            std::uint8_t* p = texture.pixel(x, y);
            p[0] = detail::byte(bg_a.r * (1 - t) + bg_b.r * t);
            p[1] = detail::byte(bg_a.g * (1 - t) + bg_b.g * t);
            p[2] = detail::byte(bg_a.b * (1 - t) + bg_b.b * t);
            std::uint8_t* o = original.pixel(x, y);
            if (detail::inside_shape(shape, x + 0.5, y + 0.5, cx, cy, r)) {
                const double shade = 0.8 + 0.2 * (y - (cy - r)) / (2.0 * r);
                o[0] = detail::byte(fg_col.r * shade);
                o[1] = detail::byte(fg_col.g * shade);
                o[2] = detail::byte(fg_col.b * shade);
                x_lo = std::min(x_lo, x);
                x_hi = std::max(x_hi, x);
                y_lo = std::min(y_lo, y);
                y_hi = std::max(y_hi, y);
                ++opaque;
            } else {
                std::copy_n(p, 3, o);
            }
        }
    }

    RgbaImage fg_image(x_hi - x_lo + 1, y_hi - y_lo + 1);
    for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
            std::uint8_t* q = fg_image.pixel(x - x_lo, y - y_lo);
            // transparent pixels carry the shape colour so blurred edges show no halo
            const double shade = 0.8 + 0.2 * (y - (cy - r)) / (2.0 * r);
            q[0] = detail::byte(fg_col.r * shade);
            q[1] = detail::byte(fg_col.g * shade);
            q[2] = detail::byte(fg_col.b * shade);
            q[3] = detail::inside_shape(shape, x + 0.5, y + 0.5, cx, cy, r) ? 255 : 0;
        }
    }

    const double fraction = static_cast<double>(opaque) / (static_cast<double>(W) * H);
    double infill = std::min(1.0, fraction * rng.uniform(1.0, 3.0));
    if (opt.heavy_infill_every > 0 && i % opt.heavy_infill_every == opt.heavy_infill_every - 1) {
        infill = rng.uniform(0.82, 0.97);
    }

    SynthItem item;
    const std::string source = detail::synth_id("img", cls, i);
    item.fg = {detail::synth_id("fg", cls, i), cls, "", fraction, source, ""};
    item.bg = {detail::synth_id("bg", cls, i), cls, "", fraction, infill, source};
    item.fg_image = std::move(fg_image);
    item.bg_image = std::move(texture);
    item.original = std::move(original);
    return item;
}

/// In-memory corpus. Image references are empty; register the pixels with
/// an AssetImages via add_to().
struct SynthCorpus {
    AssetManifest manifest;
    std::map<std::string, RgbaImage> fg_images;
    std::map<std::string, RgbImage> bg_images;
    std::map<std::string, RgbImage> originals; // keyed by foreground id

    void add_to(AssetImages& images) const {
        for (const auto& [id, img] : fg_images) images.add_foreground(id, img);
        for (const auto& [id, img] : bg_images) images.add_background(id, img);
        for (const auto& [id, img] : originals) images.add_original(id, img);
    }
};

inline SynthCorpus synth_corpus(const SynthOptions& opt) {
    if (opt.n_classes < 1 || opt.per_class < 1) {
        throw InputError("synthetic corpus needs at least one class and one image per class");
    }
    SynthCorpus c;
    for (int cls = 0; cls < opt.n_classes; ++cls) {
        for (int i = 0; i < opt.per_class; ++i) {
            SynthItem item = synth_item(opt, cls, i);
            c.fg_images.emplace(item.fg.id, std::move(item.fg_image));
            c.bg_images.emplace(item.bg.id, std::move(item.bg_image));
            c.originals.emplace(item.fg.id, std::move(item.original));
            c.manifest.foregrounds.push_back(std::move(item.fg));
            c.manifest.backgrounds.push_back(std::move(item.bg));
        }
    }
    c.manifest.reindex();
    return c;
}

/// Writes the corpus as it would arrive from an upstream segmentation run:
///   out/foregrounds/*.png, out/backgrounds/*.{png,jpg}, out/originals/*.png,
///   out/sidecar.jsonl
/// then builds and saves the manifest to out/manifest. Every third background
/// is stored as JPEG.
inline AssetManifest write_synth_corpus(const std::string& out_dir, const SynthOptions& opt) {
    const fs::path root(out_dir);
    fs::create_directories(root / "foregrounds");
    fs::create_directories(root / "backgrounds");
    fs::create_directories(root / "originals");
    const fs::path sidecar_path = root / "sidecar.jsonl";
    {
        std::ofstream sidecar(sidecar_path);
        if (!sidecar) {
            throw IoError("cannot write " + sidecar_path.string());
        }
        for (int cls = 0; cls < opt.n_classes; ++cls) {
            for (int i = 0; i < opt.per_class; ++i) {
                const SynthItem item = synth_item(opt, cls, i);
                const std::string fg_file = item.fg.id + ".png";
                const bool jpeg = i % 3 == 2;
                const std::string bg_file = item.bg.id + (jpeg ? ".jpg" : ".png");
                const std::string orig_file = "originals/" + item.fg.source_image_id + ".png";
                save_png((root / "foregrounds" / fg_file).string(), item.fg_image);
                save_rgb((root / "backgrounds" / bg_file).string(), item.bg_image,
                         jpeg ? ImageFormat::jpeg : ImageFormat::png);
                save_png((root / orig_file).string(), item.original);

                nlohmann::ordered_json f;
                f["id"] = item.fg.id;
                f["kind"] = "foreground";
                f["class_id"] = cls;
                f["source_image_id"] = item.fg.source_image_id;
                f["size_fraction"] = item.fg.orig_size_fraction;
                f["file"] = fg_file;
                f["original_file"] = orig_file;
                sidecar << f.dump() << '\n';
                nlohmann::ordered_json b;
                b["id"] = item.bg.id;
                b["kind"] = "background";
                b["class_id"] = cls;
                b["source_image_id"] = item.bg.source_image_id;
                b["size_fraction"] = item.bg.orig_fg_size_fraction;
                b["infill_ratio"] = item.bg.infill_ratio;
                b["file"] = bg_file;
                sidecar << b.dump() << '\n';
            }
        }
        if (!sidecar) {
            throw IoError("write failed for " + sidecar_path.string());
        }
    }
    AssetManifest m = build_manifest((root / "foregrounds").string(), (root / "backgrounds").string(),
                                     sidecar_path.string());
    save_manifest(m, (root / "manifest").string());
    return m;
}

} // namespace foraug

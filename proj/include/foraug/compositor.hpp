#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "foraug/asset_store.hpp"
#include "foraug/error.hpp"
#include "foraug/image.hpp"
#include "foraug/recombiner.hpp"
#include "foraug/rng.hpp"

namespace foraug {

/// Bilinear resampling with pixel-center alignment and edge clamping. All
/// channels, alpha included, are interpolated independently. Resizing to the
/// same dimensions is an exact copy.
template <int C>
Image<C> resize_bilinear(const Image<C>& src, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw InputError("resize target smaller than 1x1");
    }
    if (out_w == src.width() && out_h == src.height()) {
        return src;
    }
    Image<C> dst(out_w, out_h);
    const double sx = static_cast<double>(src.width()) / out_w;
    const double sy = static_cast<double>(src.height()) / out_h;

    struct Tap {
        int i0;
        int i1;
        double w1;
    };
    auto taps = [](int n_out, int n_in, double scale) {
        std::vector<Tap> t(static_cast<std::size_t>(n_out));
        for (int o = 0; o < n_out; ++o) {
            double f = (o + 0.5) * scale - 0.5;
            f = std::clamp(f, 0.0, static_cast<double>(n_in - 1));
            const int i0 = static_cast<int>(std::floor(f));
            const int i1 = std::min(i0 + 1, n_in - 1);
            t[static_cast<std::size_t>(o)] = {i0, i1, f - i0};
        }
        return t;
    };
    const auto tx = taps(out_w, src.width(), sx);
    const auto ty = taps(out_h, src.height(), sy);

    for (int y = 0; y < out_h; ++y) {
        const Tap& v = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w; ++x) {
            const Tap& h = tx[static_cast<std::size_t>(x)];
            const std::uint8_t* p00 = src.pixel(h.i0, v.i0);
            const std::uint8_t* p01 = src.pixel(h.i1, v.i0);
            const std::uint8_t* p10 = src.pixel(h.i0, v.i1);
            const std::uint8_t* p11 = src.pixel(h.i1, v.i1);
            std::uint8_t* d = dst.pixel(x, y);
            for (int c = 0; c < C; ++c) {
                const double top = p00[c] + (p01[c] - p00[c]) * h.w1;
                const double bottom = p10[c] + (p11[c] - p10[c]) * h.w1;
                const double value = top + (bottom - top) * v.w1;
                d[c] = static_cast<std::uint8_t>(std::clamp(std::floor(value + 0.5), 0.0, 255.0));
            }
        }
    }
    return dst;
}

/// Scales the foreground (aspect preserved) so that its opaque-pixel count is
/// `s * bg_w * bg_h`. The scale is capped so the result fits the canvas; when
/// the cap binds the achieved fraction is smaller than `s`.
inline RgbaImage resize_foreground(const RgbaImage& fg, double s, int bg_w, int bg_h) {
    if (!(s > 0.0 && s <= 1.0)) {
        throw InputError("target size fraction must lie in (0, 1]");
    }
    const std::size_t count = opaque_count(fg);
    if (count == 0) {
        throw InputError("foreground has no opaque pixel");
    }
    const double target = s * static_cast<double>(bg_w) * bg_h;
    const double cap = std::min(static_cast<double>(bg_w) / fg.width(), static_cast<double>(bg_h) / fg.height());

    auto dims_for = [&](double k) {
        k = std::min(k, cap);
        const int w = std::min(bg_w, static_cast<int>(std::lround(fg.width() * k)));
        const int h = std::min(bg_h, static_cast<int>(std::lround(fg.height() * k)));
        return std::pair{w, h};
    };

    double k = std::sqrt(target / static_cast<double>(count));
    auto [w, h] = dims_for(k);
    if (w < 1 || h < 1) {
        throw InputError("resized foreground would be smaller than 1x1");
    }
    bool binary_alpha = true;
    for (std::size_t i = 3; i < fg.bytes().size() && binary_alpha; i += 4) {
        binary_alpha = fg.bytes()[i] == 0 || fg.bytes()[i] == 255;
    }
    // A binary mask stays binary after resampling; soft edges come from smooth_alpha only.
    auto finish = [&](RgbaImage img) {
        if (binary_alpha) {
            auto bytes = img.bytes();
            for (std::size_t i = 3; i < bytes.size(); i += 4) {
                bytes[i] = bytes[i] >= kOpaqueThreshold ? 255 : 0;
            }
        }
        return img;
    };

    RgbaImage best = resize_bilinear(fg, w, h);
    double best_err = std::abs(static_cast<double>(opaque_count(best)) - target);
    if (best_err <= 0.005 * target) {
        return finish(std::move(best));
    }

    // Area quantisation from rounding and alpha thresholding: correct the scale
    // once, then try the +-1 pixel neighbours of the corrected size.
    const double achieved = std::max<double>(1.0, static_cast<double>(opaque_count(best)));
    k *= std::sqrt(target / achieved);
    const auto [w1, h1] = dims_for(k);
    for (int dw = -1; dw <= 1; ++dw) {
        for (int dh = -1; dh <= 1; ++dh) {
            const int cw = w1 + dw;
            const int ch = h1 + dh;
            if (cw < 1 || ch < 1 || cw > bg_w || ch > bg_h || (cw == w && ch == h)) {
                continue;
            }
            RgbaImage candidate = resize_bilinear(fg, cw, ch);
            const double err = std::abs(static_cast<double>(opaque_count(candidate)) - target);
            if (err < best_err) {
                best_err = err;
                best = std::move(candidate);
            }
        }
    }
    return finish(std::move(best));
}

/// Normalised Gaussian taps for offsets -radius..radius, radius = ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

/// Gaussian blur of the alpha channel only (separable, edge-clamped).
inline RgbaImage smooth_alpha(const RgbaImage& fg, double sigma) {
    if (sigma < 0.0) {
        throw InputError("blur sigma must be nonnegative");
    }
    if (sigma == 0.0) {
        return fg;
    }
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = fg.width();
    const int h = fg.height();

    std::vector<double> tmp(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::clamp(x + i, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] * fg.at(xx, y, 3);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    RgbaImage out = fg;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::clamp(y + i, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            out.at(x, y, 3) = static_cast<std::uint8_t>(std::clamp(std::floor(acc + 0.5), 0.0, 255.0));
        }
    }
    return out;
}

/// Adds a transparent border (edge-replicated color) of up to `pad` pixels per
/// side without exceeding max_w x max_h; keeps the content centered.
inline RgbaImage pad_transparent(const RgbaImage& fg, int pad, int max_w, int max_h) {
    const int px = std::max(0, std::min(pad, (max_w - fg.width()) / 2));
    const int py = std::max(0, std::min(pad, (max_h - fg.height()) / 2));
    if (px == 0 && py == 0) {
        return fg;
    }
    RgbaImage out(fg.width() + 2 * px, fg.height() + 2 * py);
    for (int y = 0; y < out.height(); ++y) {
        const int sy = std::clamp(y - py, 0, fg.height() - 1);
        const bool inside_y = y - py >= 0 && y - py < fg.height();
        for (int x = 0; x < out.width(); ++x) {
            const int sx = std::clamp(x - px, 0, fg.width() - 1);
            const bool inside = inside_y && x - px >= 0 && x - px < fg.width();
            const std::uint8_t* s = fg.pixel(sx, sy);
            std::uint8_t* d = out.pixel(x, y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
            d[3] = inside ? s[3] : 0;
        }
    }
    return out;
}

/// out = a*fg + (1-a)*bg in 8-bit integer arithmetic, rounded half up.
inline std::uint8_t blend(std::uint8_t fg, std::uint8_t bg, std::uint8_t alpha) {
    const unsigned num = static_cast<unsigned>(alpha) * fg + static_cast<unsigned>(255 - alpha) * bg;
    return static_cast<std::uint8_t>((2 * num + 255) / 510);
}

/// Pastes `fg` with its top-left corner at (x0, y0); pixels outside the canvas are dropped.
inline RgbImage composite_at(const RgbaImage& fg, const RgbImage& bg, int x0, int y0) {
    RgbImage out = bg;
    const int ys = std::max(0, -y0);
    const int ye = std::min(fg.height(), bg.height() - y0);
    const int xs = std::max(0, -x0);
    const int xe = std::min(fg.width(), bg.width() - x0);
    for (int y = ys; y < ye; ++y) {
        for (int x = xs; x < xe; ++x) {
            const std::uint8_t* f = fg.pixel(x, y);
            std::uint8_t* d = out.pixel(x + x0, y + y0);
            const std::uint8_t a = f[3];
            if (a == 0) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                d[c] = blend(f[c], d[c], a);
            }
        }
    }
    return out;
}

/// Top-left offset for a normalized center: the center is remapped onto
/// [w/2, W - w/2] so the foreground always lies inside the canvas.
inline std::pair<int, int> placement_offset(int fg_w, int fg_h, int bg_w, int bg_h, Point center) {
    const int x0 = static_cast<int>(std::floor(center.x * (bg_w - fg_w) + 0.5));
    const int y0 = static_cast<int>(std::floor(center.y * (bg_h - fg_h) + 0.5));
    return {x0, y0};
}

inline RgbImage composite(const RgbaImage& fg, const RgbImage& bg, Point center) {
    if (fg.width() > bg.width() || fg.height() > bg.height()) {
        throw InputError("foreground " + std::to_string(fg.width()) + "x" + std::to_string(fg.height()) +
                         " larger than background " + std::to_string(bg.width()) + "x" + std::to_string(bg.height()));
    }
    const auto [x0, y0] = placement_offset(fg.width(), fg.height(), bg.width(), bg.height(), center);
    return composite_at(fg, bg, x0, y0);
}

/// Downscales `fg` if needed so it fits one third of the canvas per axis.
inline RgbaImage fit_to_cell(const RgbaImage& fg, int bg_w, int bg_h) {
    const int cell_w = std::max(1, bg_w / 3);
    const int cell_h = std::max(1, bg_h / 3);
    if (fg.width() <= cell_w && fg.height() <= cell_h) {
        return fg;
    }
    const double k = std::min(static_cast<double>(cell_w) / fg.width(), static_cast<double>(cell_h) / fg.height());
    const int w = std::clamp(static_cast<int>(std::floor(fg.width() * k)), 1, cell_w);
    const int h = std::clamp(static_cast<int>(std::floor(fg.height() * k)), 1, cell_h);
    return resize_bilinear(fg, w, h);
}

/// Pixel center of a 3x3 grid cell: ((2 col + 1) W / 6, (2 row + 1) H / 6).
inline std::pair<double, double> cell_center(GridCell cell, int bg_w, int bg_h) {
    return {(2 * cell.col + 1) * bg_w / 6.0, (2 * cell.row + 1) * bg_h / 6.0};
}

/// Centers the foreground in a grid cell, clamped to stay inside the canvas.
inline RgbImage place_in_cell(const RgbaImage& fg_in, const RgbImage& bg, GridCell cell) {
    if (cell.row < 0 || cell.row > 2 || cell.col < 0 || cell.col > 2) {
        throw InputError("grid cell out of range");
    }
    const RgbaImage fg = fit_to_cell(fg_in, bg.width(), bg.height());
    const auto [cx, cy] = cell_center(cell, bg.width(), bg.height());
    const int x0 = std::clamp(static_cast<int>(std::floor(cx - fg.width() / 2.0 + 0.5)), 0, bg.width() - fg.width());
    const int y0 = std::clamp(static_cast<int>(std::floor(cy - fg.height() / 2.0 + 0.5)), 0, bg.height() - fg.height());
    return composite_at(fg, bg, x0, y0);
}

// ---------------------------------------------------------------------------
// Augmentation stages.

class AugStage {
public:
    enum class Kind { geometric_crop, color };

    virtual ~AugStage() = default;
    virtual std::string name() const = 0;
    virtual Kind kind() const = 0;
    /// Color stages must preserve the image dimensions.
    virtual RgbImage apply(const RgbImage& img, Rng& rng) const = 0;
};

using AugPipeline = std::vector<std::shared_ptr<const AugStage>>;

/// Inception-style random resized crop, output out_size x out_size.
class RandomResizedCrop final : public AugStage {
public:
    explicit RandomResizedCrop(int out_size, double scale_lo = 0.08, double scale_hi = 1.0,
                               double ratio_lo = 3.0 / 4.0, double ratio_hi = 4.0 / 3.0)
        : out_size_(out_size), scale_lo_(scale_lo), scale_hi_(scale_hi), ratio_lo_(ratio_lo), ratio_hi_(ratio_hi) {}

    std::string name() const override { return "random_resized_crop"; }
    Kind kind() const override { return Kind::geometric_crop; }

    RgbImage apply(const RgbImage& img, Rng& rng) const override {
        const int W = img.width();
        const int H = img.height();
        const double area = static_cast<double>(W) * H;
        for (int attempt = 0; attempt < 10; ++attempt) {
            const double target = area * rng.uniform(scale_lo_, scale_hi_);
            const double ratio = std::exp(rng.uniform(std::log(ratio_lo_), std::log(ratio_hi_)));
            const int w = static_cast<int>(std::lround(std::sqrt(target * ratio)));
            const int h = static_cast<int>(std::lround(std::sqrt(target / ratio)));
            if (w > 0 && h > 0 && w <= W && h <= H) {
                const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(W - w + 1)));
                const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(H - h + 1)));
                return resize_bilinear(crop(img, x0, y0, w, h), out_size_, out_size_);
            }
        }
        const int side = std::min(W, H);
        return resize_bilinear(crop(img, (W - side) / 2, (H - side) / 2, side, side), out_size_, out_size_);
    }

    static RgbImage crop(const RgbImage& img, int x0, int y0, int w, int h) {
        RgbImage out(w, h);
        for (int y = 0; y < h; ++y) {
            std::copy_n(img.pixel(x0, y0 + y), static_cast<std::size_t>(w) * 3, out.pixel(0, y));
        }
        return out;
    }

private:
    int out_size_;
    double scale_lo_;
    double scale_hi_;
    double ratio_lo_;
    double ratio_hi_;
};

class HorizontalFlip final : public AugStage {
public:
    explicit HorizontalFlip(double p = 0.5) : p_(p) {}

    std::string name() const override { return "horizontal_flip"; }
    Kind kind() const override { return Kind::geometric_crop; }

    RgbImage apply(const RgbImage& img, Rng& rng) const override {
        if (!rng.bernoulli(p_)) {
            return img;
        }
        RgbImage out(img.width(), img.height());
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                std::copy_n(img.pixel(img.width() - 1 - x, y), 3, out.pixel(x, y));
            }
        }
        return out;
    }

private:
    double p_;
};

/// Brightness then contrast jitter with factors drawn from [1 - s, 1 + s].
class ColorJitter final : public AugStage {
public:
    explicit ColorJitter(double brightness = 0.3, double contrast = 0.3)
        : brightness_(brightness), contrast_(contrast) {}

    std::string name() const override { return "color_jitter"; }
    Kind kind() const override { return Kind::color; }

    RgbImage apply(const RgbImage& img, Rng& rng) const override {
        const double b = rng.uniform(1.0 - brightness_, 1.0 + brightness_);
        const double c = rng.uniform(1.0 - contrast_, 1.0 + contrast_);
        RgbImage out = img;
        auto bytes = out.bytes();
        double mean = 0.0;
        for (std::size_t i = 0; i < bytes.size(); i += 3) {
            mean += 0.299 * bytes[i] + 0.587 * bytes[i + 1] + 0.114 * bytes[i + 2];
        }
        mean = mean * b / static_cast<double>(img.pixel_count());
        for (auto& v : bytes) {
            const double bright = v * b;
            const double contrasted = (bright - mean) * c + mean;
            v = static_cast<std::uint8_t>(std::clamp(std::floor(contrasted + 0.5), 0.0, 255.0));
        }
        return out;
    }

private:
    double brightness_;
    double contrast_;
};

inline AugPipeline make_pipeline(const std::vector<std::string>& names, int image_size) {
    AugPipeline p;
    for (const auto& n : names) {
        if (n == "random_resized_crop" || n == "rrc") {
            p.push_back(std::make_shared<RandomResizedCrop>(image_size));
        } else if (n == "horizontal_flip" || n == "hflip") {
            p.push_back(std::make_shared<HorizontalFlip>());
        } else if (n == "color_jitter" || n == "jitter") {
            p.push_back(std::make_shared<ColorJitter>());
        } else if (n != "none") {
            throw InputError("unknown augmentation stage '" + n + "'");
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Rendering.

namespace detail {

inline Rng stage_rng(const RecombinationConfig& config, const SamplePlan& plan, std::size_t stage) {
    return Rng(hash_key({stream_tag::stage, config.seed, static_cast<std::uint64_t>(plan.epoch), plan.index,
                         static_cast<std::uint64_t>(stage)}));
}

inline RgbImage run_stages(RgbImage img, const AugPipeline& pipeline, AugStage::Kind kind,
                           const RecombinationConfig& config, const SamplePlan& plan) {
    for (std::size_t i = 0; i < pipeline.size(); ++i) {
        if (pipeline[i]->kind() != kind) {
            continue;
        }
        Rng rng = stage_rng(config, plan, i);
        img = pipeline[i]->apply(img, rng);
    }
    return img;
}

inline RgbImage to_canvas(const RgbImage& img, int size) { return resize_bilinear(img, size, size); }

} // namespace detail

/// Resizes, smooths and pastes the planned foreground onto `canvas` (the
/// background already at its final resolution). No augmentation stages.
inline RgbImage paste_planned(const SamplePlan& plan, const RgbaImage& fg_image, const RgbImage& canvas) {
    const GridCell* cell = plan.probe ? std::get_if<GridCell>(&*plan.probe) : nullptr;
    RgbaImage fg = resize_foreground(fg_image, plan.size, canvas.width(), canvas.height());
    if (cell != nullptr) {
        fg = fit_to_cell(fg, canvas.width(), canvas.height());
    }
    if (plan.blur_sigma > 0.0) {
        const int pad = static_cast<int>(std::ceil(3.0 * plan.blur_sigma));
        const int max_w = cell != nullptr ? std::max(1, canvas.width() / 3) : canvas.width();
        const int max_h = cell != nullptr ? std::max(1, canvas.height() / 3) : canvas.height();
        fg = smooth_alpha(pad_transparent(fg, pad, max_w, max_h), plan.blur_sigma);
    }
    if (cell != nullptr) {
        return place_in_cell(fg, canvas, *cell);
    }
    return composite(fg, canvas, plan.center.value_or(Point{}));
}

/// Renders a resolved plan to a config.image_size square image.
inline RgbImage render(const SamplePlan& plan, const AssetManifest& manifest, const RecombinationConfig& config,
                       const AugPipeline& pipeline, const AssetImages& images) {
    using Kind = AugStage::Kind;
    const ForegroundAsset* fg = manifest.find_foreground(plan.fg_id);
    if (fg == nullptr) {
        throw InputError("plan references unknown foreground '" + plan.fg_id + "'");
    }
    const int size = config.image_size;

    if (plan.use_original) {
        RgbImage img = detail::to_canvas(*images.original(*fg), size);
        for (std::size_t i = 0; i < pipeline.size(); ++i) {
            Rng rng = detail::stage_rng(config, plan, i);
            img = pipeline[i]->apply(img, rng);
        }
        return img;
    }

    if (!plan.bg_id) {
        throw InputError("recombined plan for '" + plan.fg_id + "' has no background");
    }
    const BackgroundAsset* bg = manifest.find_background(*plan.bg_id);
    if (bg == nullptr) {
        throw InputError("plan references unknown background '" + *plan.bg_id + "'");
    }
    const auto fg_image = images.foreground(*fg);
    RgbImage canvas = detail::to_canvas(*images.background(*bg), size);

    if (config.aug_order == AugOrder::crop_paste_color) {
        canvas = detail::run_stages(std::move(canvas), pipeline, Kind::geometric_crop, config, plan);
        canvas = paste_planned(plan, *fg_image, canvas);
    } else {
        canvas = paste_planned(plan, *fg_image, canvas);
        canvas = detail::run_stages(std::move(canvas), pipeline, Kind::geometric_crop, config, plan);
    }
    return detail::run_stages(std::move(canvas), pipeline, Kind::color, config, plan);
}

} // namespace foraug

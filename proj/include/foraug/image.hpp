#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "foraug/error.hpp"

namespace foraug {

/// Interleaved 8-bit image with a compile-time channel count. RgbaImage uses
/// straight (non-premultiplied) alpha.
template <int Channels>
class Image {
    static_assert(Channels >= 1 && Channels <= 4);

public:
    static constexpr int channels = Channels;

    Image() = default;

    Image(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height),
          data_(checked_size(width, height), fill) {}

    Image(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_size(width, height)) {
            throw InputError("image buffer length does not match " + std::to_string(width) + "x" +
                             std::to_string(height) + "x" + std::to_string(Channels));
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    std::uint8_t& at(int x, int y, int c) noexcept { return data_[offset(x, y) + c]; }
    std::uint8_t at(int x, int y, int c) const noexcept { return data_[offset(x, y) + c]; }

    std::uint8_t* pixel(int x, int y) noexcept { return data_.data() + offset(x, y); }
    const std::uint8_t* pixel(int x, int y) const noexcept { return data_.data() + offset(x, y); }

    std::span<std::uint8_t> bytes() noexcept { return data_; }
    std::span<const std::uint8_t> bytes() const noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    static std::size_t checked_size(int width, int height) {
        if (width <= 0 || height <= 0) {
            throw InputError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                             std::to_string(height));
        }
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * Channels;
    }

    std::size_t offset(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * Channels;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

using GrayImage = Image<1>;
using RgbImage = Image<3>;
using RgbaImage = Image<4>;

/// Binary bitmap, foreground = true.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    Mask(int w, int h, bool value = false)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), value ? 1 : 0) {}

    bool get(int x, int y) const noexcept { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) noexcept { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
    }
    std::size_t area() const noexcept { return bits.size(); }

    friend bool operator==(const Mask&, const Mask&) = default;
};

/// Per-pixel nonnegative importance (e.g. a rectified attribution map).
struct ImportanceMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ImportanceMap() = default;
    ImportanceMap(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& at(int x, int y) noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Opaque means alpha > 0.5, i.e. an 8-bit alpha of at least 128.
inline constexpr std::uint8_t kOpaqueThreshold = 128;

inline std::size_t opaque_count(const RgbaImage& img) {
    std::size_t n = 0;
    const auto bytes = img.bytes();
    for (std::size_t i = 3; i < bytes.size(); i += 4) {
        n += bytes[i] >= kOpaqueThreshold ? 1 : 0;
    }
    return n;
}

inline Mask alpha_mask(const RgbaImage& img) {
    Mask m(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            m.set(x, y, img.at(x, y, 3) >= kOpaqueThreshold);
        }
    }
    return m;
}

inline RgbImage drop_alpha(const RgbaImage& img) {
    RgbImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = img.at(x, y, c);
            }
        }
    }
    return out;
}

} // namespace foraug

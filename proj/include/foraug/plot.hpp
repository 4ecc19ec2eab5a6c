#pragma once

// Minimal raster plots for metric reports (no font dependency; numbers are
// drawn with a built-in 3x5 digit font).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "foraug/image.hpp"

namespace foraug::plot {

struct Color {
    std::uint8_t r, g, b;
};

inline constexpr Color kWhite{255, 255, 255};
inline constexpr Color kBlack{0, 0, 0};
inline constexpr Color kGrid{220, 220, 220};
inline constexpr Color kLine{31, 119, 180};

inline void put(RgbImage& img, int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) {
        return;
    }
    std::uint8_t* p = img.pixel(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
}

inline void fill_rect(RgbImage& img, int x0, int y0, int x1, int y1, Color c) {
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            put(img, x, y, c);
        }
    }
}

inline void line(RgbImage& img, int x0, int y0, int x1, int y1, Color c, int thickness = 1) {
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    const int h = thickness / 2;
    while (true) {
        fill_rect(img, x0 - h, y0 - h, x0 - h + thickness, y0 - h + thickness, c);
        if (x0 == x1 && y0 == y1) {
            break;
        }
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

namespace detail {

// Rows of 3 bits, top to bottom.
inline const std::array<std::uint8_t, 5>* glyph(char ch) {
    static const std::array<std::array<std::uint8_t, 5>, 13> font = {{
        {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
        {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
        {0, 0, 0, 0, 2}, {0, 0, 7, 0, 0}, {0, 0, 0, 0, 0},
    }};
    if (ch >= '0' && ch <= '9') return &font[ch - '0'];
    if (ch == '.') return &font[10];
    if (ch == '-') return &font[11];
    if (ch == ' ') return &font[12];
    return nullptr;
}

} // namespace detail

/// Draws text (digits, '.', '-', ' ') with its top-left at (x, y).
inline void text(RgbImage& img, int x, int y, const std::string& s, Color c, int scale = 2) {
    for (char ch : s) {
        if (const auto* g = detail::glyph(ch)) {
            for (int row = 0; row < 5; ++row) {
                for (int col = 0; col < 3; ++col) {
                    if ((*g)[row] & (4 >> col)) {
                        fill_rect(img, x + col * scale, y + row * scale, x + (col + 1) * scale, y + (row + 1) * scale, c);
                    }
                }
            }
        }
        x += 4 * scale;
    }
}

inline std::string fmt(double v, int decimals = 2) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

/// Line chart of (x, y) points with axes, tick labels at the data x values
/// and at the y range ends.
inline RgbImage line_chart(const std::vector<std::pair<double, double>>& pts, int width = 480, int height = 320) {
    RgbImage img(width, height, 255);
    const int left = 60, right = width - 20, top = 20, bottom = height - 40;
    if (pts.empty()) {
        return img;
    }
    double x_lo = pts.front().first, x_hi = x_lo, y_lo = 0.0, y_hi = 0.0;
    for (const auto& [x, y] : pts) {
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_hi = std::max(y_hi, y);
    }
    y_hi = y_hi > 0.0 ? y_hi * 1.1 : 1.0;
    if (x_hi == x_lo) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    auto px = [&](double x) { return left + static_cast<int>(std::lround((x - x_lo) / (x_hi - x_lo) * (right - left))); };
    auto py = [&](double y) { return bottom - static_cast<int>(std::lround((y - y_lo) / (y_hi - y_lo) * (bottom - top))); };

    for (int k = 0; k <= 4; ++k) {
        const double y = y_lo + (y_hi - y_lo) * k / 4.0;
        line(img, left, py(y), right, py(y), kGrid);
        text(img, 4, py(y) - 5, fmt(y), kBlack);
    }
    line(img, left, top, left, bottom, kBlack);
    line(img, left, bottom, right, bottom, kBlack);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const int x = px(pts[i].first);
        const int y = py(pts[i].second);
        line(img, x, bottom, x, bottom + 4, kBlack);
        text(img, x - 12, bottom + 10, fmt(pts[i].first), kBlack);
        fill_rect(img, x - 3, y - 3, x + 4, y + 4, kLine);
        if (i + 1 < pts.size()) {
            line(img, x, y, px(pts[i + 1].first), py(pts[i + 1].second), kLine, 2);
        }
    }
    return img;
}

/// 3x3 heatmap; colour runs from red (lo) to green (hi), value printed per cell.
inline RgbImage heatmap3(const std::array<std::array<double, 3>, 3>& v, int cell = 100) {
    RgbImage img(3 * cell, 3 * cell, 255);
    double lo = v[0][0], hi = v[0][0];
    for (const auto& row : v) {
        for (double x : row) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            const double t = hi > lo ? (v[r][c] - lo) / (hi - lo) : 1.0;
            const Color col{static_cast<std::uint8_t>(std::lround(230 - 180 * t)),
                            static_cast<std::uint8_t>(std::lround(80 + 150 * t)), 90};
            fill_rect(img, c * cell + 1, r * cell + 1, (c + 1) * cell - 1, (r + 1) * cell - 1, col);
            text(img, c * cell + cell / 2 - 16, r * cell + cell / 2 - 5, fmt(v[r][c]), kBlack);
        }
    }
    return img;
}

/// Vertical bars with the value printed above each bar.
inline RgbImage bar_chart(const std::vector<double>& values, int width = 360, int height = 280) {
    RgbImage img(width, height, 255);
    if (values.empty()) {
        return img;
    }
    const int left = 20, bottom = height - 20, top = 30;
    double hi = 0.0;
    for (double v : values) hi = std::max(hi, v);
    hi = hi > 0.0 ? hi : 1.0;
    const int slot = (width - 2 * left) / static_cast<int>(values.size());
    line(img, left, bottom, width - left, bottom, kBlack);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int x0 = left + static_cast<int>(i) * slot + slot / 6;
        const int x1 = x0 + slot * 2 / 3;
        const int y = bottom - static_cast<int>(std::lround(std::max(0.0, values[i]) / hi * (bottom - top)));
        fill_rect(img, x0, y, x1, bottom, kLine);
        text(img, x0, y - 14, fmt(values[i]), kBlack);
    }
    return img;
}

} // namespace foraug::plot

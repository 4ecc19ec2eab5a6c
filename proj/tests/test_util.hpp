#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "foraug/foraug.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("foraug_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

struct RunResult {
    int code = -1;
    std::string output; // stdout and stderr interleaved
};

inline RunResult run(const std::string& args) {
    RunResult r;
    const std::string cmd = std::string(FORAUG_CLI) + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        r.output.append(buf.data(), n);
    }
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

/// Metadata-only manifest: `classes` x `per_class` linked pairs with fixed
/// fractions; image refs are empty.
inline foraug::AssetManifest metadata_manifest(int classes, int per_class, double infill = 0.1) {
    foraug::AssetManifest m;
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i) {
            const std::string tail = std::to_string(c) + "_" + std::to_string(i);
            const double f = 0.05 + 0.01 * ((c * 7 + i) % 20);
            m.foregrounds.push_back({"fg_" + tail, c, "", f, "img_" + tail, ""});
            m.backgrounds.push_back({"bg_" + tail, c, "", f * 1.1, infill, "img_" + tail});
        }
    }
    m.reindex();
    return m;
}

/// Solid-colour RGBA block with a fully opaque w x h rectangle inset by `border`.
inline foraug::RgbaImage opaque_block(int w, int h, int border = 0, std::uint8_t r = 200, std::uint8_t g = 30,
                                      std::uint8_t b = 40) {
    foraug::RgbaImage img(w + 2 * border, h + 2 * border);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            std::uint8_t* p = img.pixel(x, y);
            p[0] = r;
            p[1] = g;
            p[2] = b;
            const bool in = x >= border && y >= border && x < border + w && y < border + h;
            p[3] = in ? 255 : 0;
        }
    }
    return img;
}

inline foraug::RgbImage gradient(int w, int h) {
    foraug::RgbImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t* p = img.pixel(x, y);
            p[0] = static_cast<std::uint8_t>((x * 255) / std::max(1, w - 1));
            p[1] = static_cast<std::uint8_t>((y * 255) / std::max(1, h - 1));
            p[2] = static_cast<std::uint8_t>((x + y) % 256);
        }
    }
    return img;
}

} // namespace testutil

#pragma once

// PNG (libpng) and JPEG (libjpeg) codecs plus the importance-map formats.
//
// Importance maps are read from either
//   * a single-channel 8- or 16-bit PNG (sample value = importance), or
//   * a float binary: 16-byte header then width*height float32 values,
//     little-endian, row-major:
//       bytes 0..3   ASCII "FIMP"
//       bytes 4..7   uint32 version (= 1)
//       bytes 8..11  uint32 width
//       bytes 12..15 uint32 height

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "foraug/error.hpp"
#include "foraug/image.hpp"

namespace foraug {

enum class ImageFormat { png, jpeg };

/// Decoded samples in native order; 8-bit data is stored widened.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};

inline bool has_png_signature(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

inline bool has_jpeg_signature(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char sig[3] = {};
    in.read(reinterpret_cast<char*>(sig), 3);
    return in.gcount() == 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF;
}

inline void png_quiet_warning(png_structp, png_const_charp) {}

inline RawImage read_png(const std::string& path) {
    RawImage out;
    std::vector<std::uint8_t> buffer;
    std::vector<png_bytep> rows;

    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (fp == nullptr) {
        throw IoError("cannot open " + path);
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_quiet_warning);
    png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("libpng initialisation failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("cannot decode PNG " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS) != 0) {
        png_set_tRNS_to_alpha(png);
    }
    if (depth == 16) {
        png_set_swap(png);
    }
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    buffer.resize(row_bytes * static_cast<std::size_t>(out.height));
    rows.resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) {
        rows[static_cast<std::size_t>(y)] = buffer.data() + row_bytes * static_cast<std::size_t>(y);
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
    out.samples.resize(n);
    if (out.bit_depth == 16) {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint16_t v;
            std::memcpy(&v, buffer.data() + 2 * i, 2);
            out.samples[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            out.samples[i] = buffer[i];
        }
    }
    return out;
}

/// `data` holds width*height*channels samples; 16-bit samples in native order.
inline void write_png(const std::string& path, int width, int height, int channels, int bit_depth,
                      const void* data) {
    static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA,
                                          PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGB_ALPHA};
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);

    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (fp == nullptr) {
        throw IoError("cannot open " + path + " for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_quiet_warning);
    png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng initialisation failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("cannot write PNG " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 kColorTypes[channels - 1], PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    if (bit_depth == 16) {
        png_set_swap(png);
    }
    auto* base = static_cast<png_bytep>(const_cast<void*>(data));
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] = base + row_bytes * static_cast<std::size_t>(y);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0) {
        throw IoError("cannot finish writing " + path);
    }
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

inline void jpeg_silent(j_common_ptr) {}

inline RgbImage read_jpeg(const std::string& path) {
    std::vector<std::uint8_t> pixels;
    int width = 0;
    int height = 0;
    jpeg_decompress_struct cinfo{};
    JpegErrorManager jerr{};

    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (fp == nullptr) {
        throw IoError("cannot open " + path);
    }
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit;
    jerr.base.output_message = jpeg_silent;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        std::fclose(fp);
        throw IoError("cannot decode JPEG " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    pixels.resize(static_cast<std::size_t>(width) * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    return RgbImage(width, height, std::move(pixels));
}

inline void write_jpeg(const std::string& path, const RgbImage& img, int quality) {
    jpeg_compress_struct cinfo{};
    JpegErrorManager jerr{};

    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (fp == nullptr) {
        throw IoError("cannot open " + path + " for writing");
    }
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit;
    jerr.base.output_message = jpeg_silent;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::fclose(fp);
        throw IoError("cannot write JPEG " + path);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, fp);
    cinfo.image_width = static_cast<JDIMENSION>(img.width());
    cinfo.image_height = static_cast<JDIMENSION>(img.height());
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPROW>(img.pixel(0, static_cast<int>(cinfo.next_scanline)));
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    if (std::fclose(fp) != 0) {
        throw IoError("cannot finish writing " + path);
    }
}

inline std::uint8_t to8(std::uint16_t v, int depth) {
    return depth == 16 ? static_cast<std::uint8_t>(v >> 8) : static_cast<std::uint8_t>(v);
}

} // namespace detail

inline RgbaImage load_rgba(const std::string& path) {
    const RawImage raw = detail::read_png(path);
    RgbaImage out(raw.width, raw.height);
    for (int y = 0; y < raw.height; ++y) {
        for (int x = 0; x < raw.width; ++x) {
            const std::uint16_t* s = raw.samples.data() + (static_cast<std::size_t>(y) * raw.width + x) * raw.channels;
            std::uint8_t* d = out.pixel(x, y);
            switch (raw.channels) {
            case 1: d[0] = d[1] = d[2] = detail::to8(s[0], raw.bit_depth); d[3] = 255; break;
            case 2: d[0] = d[1] = d[2] = detail::to8(s[0], raw.bit_depth); d[3] = detail::to8(s[1], raw.bit_depth); break;
            case 3:
                for (int c = 0; c < 3; ++c) d[c] = detail::to8(s[c], raw.bit_depth);
                d[3] = 255;
                break;
            default:
                for (int c = 0; c < 4; ++c) d[c] = detail::to8(s[c], raw.bit_depth);
            }
        }
    }
    return out;
}

/// Decodes PNG or JPEG (sniffed by signature); any alpha channel is dropped.
inline RgbImage load_rgb(const std::string& path) {
    if (detail::has_jpeg_signature(path)) {
        return detail::read_jpeg(path);
    }
    if (!detail::has_png_signature(path)) {
        std::ifstream probe(path);
        if (!probe) {
            throw IoError("cannot open " + path);
        }
        throw IoError("unsupported image format: " + path);
    }
    return drop_alpha(load_rgba(path));
}

template <int C>
void save_png(const std::string& path, const Image<C>& img) {
    detail::write_png(path, img.width(), img.height(), C, 8, img.bytes().data());
}

inline void save_jpeg(const std::string& path, const RgbImage& img, int quality = 95) {
    detail::write_jpeg(path, img, quality);
}

inline void save_rgb(const std::string& path, const RgbImage& img, ImageFormat format) {
    if (format == ImageFormat::jpeg) {
        save_jpeg(path, img);
    } else {
        save_png(path, img);
    }
}

/// Mask pixels are true where the alpha channel (if any) or the first channel
/// exceeds half of the sample range.
inline Mask load_mask(const std::string& path) {
    const RawImage raw = detail::read_png(path);
    const int channel = (raw.channels == 2 || raw.channels == 4) ? raw.channels - 1 : 0;
    const std::uint16_t half = raw.bit_depth == 16 ? 32767 : 127;
    Mask m(raw.width, raw.height);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        m.bits[i] = raw.samples[i * raw.channels + channel] > half ? 1 : 0;
    }
    return m;
}

inline void save_mask(const std::string& path, const Mask& m) {
    GrayImage g(m.width, m.height);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        g.bytes()[i] = m.bits[i] != 0 ? 255 : 0;
    }
    save_png(path, g);
}

inline constexpr char kImportanceMagic[4] = {'F', 'I', 'M', 'P'};

inline ImportanceMap load_importance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() == 4 && std::memcmp(magic, kImportanceMagic, 4) == 0) {
        std::uint32_t header[3] = {};
        in.read(reinterpret_cast<char*>(header), sizeof(header));
        if (!in || header[0] != 1 || header[1] == 0 || header[2] == 0) {
            throw IoError("bad importance-map header in " + path);
        }
        ImportanceMap map(static_cast<int>(header[1]), static_cast<int>(header[2]));
        std::vector<float> values(map.values.size());
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
        if (!in) {
            throw IoError("truncated importance map " + path);
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            map.values[i] = values[i];
        }
        return map;
    }
    in.close();
    const RawImage raw = detail::read_png(path);
    if (raw.channels != 1) {
        throw IoError("importance PNG must be single-channel: " + path);
    }
    ImportanceMap map(raw.width, raw.height);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        map.values[i] = raw.samples[i];
    }
    return map;
}

inline void save_importance_f32(const std::string& path, const ImportanceMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    const std::uint32_t header[3] = {1, static_cast<std::uint32_t>(map.width), static_cast<std::uint32_t>(map.height)};
    out.write(kImportanceMagic, 4);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (double v : map.values) {
        const auto f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
    if (!out) {
        throw IoError("cannot write " + path);
    }
}

/// Values are rounded and saturated to the 16-bit range.
inline void save_importance_png16(const std::string& path, const ImportanceMap& map) {
    std::vector<std::uint16_t> samples(map.values.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = std::clamp(map.values[i], 0.0, 65535.0);
        samples[i] = static_cast<std::uint16_t>(v + 0.5);
    }
    detail::write_png(path, map.width, map.height, 1, 16, samples.data());
}

} // namespace foraug

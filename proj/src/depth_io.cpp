#include "densify/depth_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

#include "densify/errors.hpp"

namespace densify {

namespace {

uint32_t read_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
}

void write_u32_le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void atomic_rename(const std::string& tmp, const std::string& final_path) {
    std::error_code ec;
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) throw IoError("rename failed: " + tmp + " -> " + final_path);
}

}  // namespace

DepthMap load_depth_raw(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("depth raw: cannot open " + path);
    const uint32_t w = read_u32_le(is);
    const uint32_t h = read_u32_le(is);
    if (!is) throw IoError("depth raw: truncated header in " + path);
    if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) {
        throw IoError("depth raw: implausible dimensions in " + path);
    }
    std::vector<float> buf(static_cast<size_t>(w) * h);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!is) throw IoError("depth raw: truncated data in " + path);

    DepthMap d(static_cast<int>(w), static_cast<int>(h));
    for (uint32_t y = 0; y < h; ++y) {
        for (uint32_t x = 0; x < w; ++x) {
            d.set(static_cast<int>(x), static_cast<int>(y),
                  buf[static_cast<size_t>(y) * w + x]);
        }
    }
    return d;
}

void save_depth_raw(const DepthMap& d, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("depth raw: cannot open for writing " + tmp);
        write_u32_le(os, static_cast<uint32_t>(d.width()));
        write_u32_le(os, static_cast<uint32_t>(d.height()));
        std::vector<float> buf(d.size());
        for (int y = 0; y < d.height(); ++y) {
            for (int x = 0; x < d.width(); ++x) {
                buf[static_cast<size_t>(y) * d.width() + x] =
                    d.is_valid(x, y) ? d.at(x, y) : 0.0f;
            }
        }
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!os) throw IoError("depth raw: write failed " + tmp);
    }
    atomic_rename(tmp, path);
}

DepthMap load_depth_png16(const std::string& path, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ValidationError("depth png: scale must be positive for " + path);
    }
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("depth png: cannot open " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("depth png: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("depth png: libpng init failed");
    }
    std::vector<uint16_t> buf;
    png_uint_32 w = 0, h = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("depth png: decode error in " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("depth png: expected 16-bit grayscale in " + path);
    }
    png_set_swap(png);  // PNG stores big-endian samples
    buf.resize(static_cast<size_t>(w) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        rows[y] = reinterpret_cast<png_bytep>(buf.data() + static_cast<size_t>(y) * w);
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    DepthMap d(static_cast<int>(w), static_cast<int>(h));
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            const uint16_t raw = buf[static_cast<size_t>(y) * w + x];
            if (raw == 0) {
                d.set_invalid(static_cast<int>(x), static_cast<int>(y));
            } else {
                d.set(static_cast<int>(x), static_cast<int>(y),
                      static_cast<float>(raw / scale));
            }
        }
    }
    return d;
}

void save_depth_png16(const DepthMap& d, const std::string& path, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ValidationError("depth png: scale must be positive for " + path);
    }
    const std::string tmp = path + ".tmp";
    {
        FilePtr fp(std::fopen(tmp.c_str(), "wb"));
        if (!fp) throw IoError("depth png: cannot open for writing " + tmp);
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                                  nullptr, nullptr);
        if (!png) throw IoError("depth png: libpng init failed");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            throw IoError("depth png: libpng init failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw IoError("depth png: encode error for " + tmp);
        }
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(d.width()),
                     static_cast<png_uint_32>(d.height()), 16,
                     PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_set_swap(png);

        std::vector<uint16_t> row(static_cast<size_t>(d.width()));
        for (int y = 0; y < d.height(); ++y) {
            for (int x = 0; x < d.width(); ++x) {
                uint16_t raw = 0;
                if (d.is_valid(x, y)) {
                    long q = std::lround(static_cast<double>(d.at(x, y)) * scale);
                    if (q < 0) q = 0;
                    if (q > 65535) q = 65535;
                    raw = static_cast<uint16_t>(q);
                }
                row[static_cast<size_t>(x)] = raw;
            }
            png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    atomic_rename(tmp, path);
}

DepthMap load_depth_auto(const std::string& path, double png_scale) {
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".png" || ext == ".PNG") return load_depth_png16(path, png_scale);
    return load_depth_raw(path);
}

RgbImage load_image_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("image png: cannot open " + path);
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("image png: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("image png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("image png: decode error in " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize everything to 8-bit RGB.
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    RgbImage img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.pixels.resize(3 * static_cast<size_t>(img.width) * img.height);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<size_t>(y)] =
            img.pixels.data() + 3 * static_cast<size_t>(y) * img.width;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_image_png(const RgbImage& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0 ||
        img.pixels.size() != 3 * static_cast<size_t>(img.width) * img.height) {
        throw ValidationError("image png: inconsistent image buffer");
    }
    const std::string tmp = path + ".tmp";
    {
        FilePtr fp(std::fopen(tmp.c_str(), "wb"));
        if (!fp) throw IoError("image png: cannot open for writing " + tmp);
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                                  nullptr, nullptr);
        if (!png) throw IoError("image png: libpng init failed");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            throw IoError("image png: libpng init failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw IoError("image png: encode error for " + tmp);
        }
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                     static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < img.height; ++y) {
            png_write_row(png, const_cast<png_bytep>(
                                   img.pixels.data() +
                                   3 * static_cast<size_t>(y) * img.width));
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    atomic_rename(tmp, path);
}

}  // namespace densify

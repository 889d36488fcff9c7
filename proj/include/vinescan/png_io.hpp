// SPDX-License-Identifier: Apache-2.0
//
// PNG I/O via libpng. RGB images for color frames and overlays; indexed
// (palette) PNG for ground-truth class-label maps with the fixed palette
// {0:background, 1:leaves, 2:wood, 3:pole, 4:bunch}.

#pragma once

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "vinescan/image.hpp"

namespace vinescan {

namespace png_detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace png_detail

inline RgbImage load_png_rgb(const std::string& path) {
    png_detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: decode failure in " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_expand(png);          // palette/gray -> rgb, bit depth up
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    RgbImage img(w, h);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            img.at(x, y) = {row[3 * static_cast<std::size_t>(x)],
                            row[3 * static_cast<std::size_t>(x) + 1],
                            row[3 * static_cast<std::size_t>(x) + 2]};
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void save_png_rgb(const RgbImage& img, const std::string& path) {
    png_detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("png: cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: encode failure on " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()) * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const RgbPixel& p = img.at(x, y);
            row[3 * static_cast<std::size_t>(x)] = p.r;
            row[3 * static_cast<std::size_t>(x) + 1] = p.g;
            row[3 * static_cast<std::size_t>(x) + 2] = p.b;
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Load an indexed PNG as a per-pixel class-id map (palette indices kept
/// verbatim, no RGB expansion).
inline LabelImage load_png_indexed(const std::string& path) {
    png_detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: decode failure in " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    if (color_type != PNG_COLOR_TYPE_PALETTE && color_type != PNG_COLOR_TYPE_GRAY)
        throw IoError("png: " + path + " is not indexed/gray");
    if (png_get_bit_depth(png, info) < 8) png_set_packing(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    LabelImage img(w, h);
    for (int y = 0; y < h; ++y)
        png_read_row(png, img.data().data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w),
                     nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

/// Save a class-id map as an indexed PNG with the fixed 5-entry palette.
inline void save_png_indexed(const LabelImage& img, const std::string& path) {
    png_detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("png: cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: encode failure on " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_PALETTE,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

    // 0 background (black), 1 leaves (green), 2 wood (blue), 3 pole (red),
    // 4 bunch (white)
    png_color palette[5] = {{0, 0, 0}, {0, 255, 0}, {0, 0, 255}, {255, 0, 0}, {255, 255, 255}};
    png_set_PLTE(png, info, palette, 5);
    png_write_info(png, info);

    for (int y = 0; y < img.height(); ++y)
        png_write_row(png,
                      const_cast<png_bytep>(img.data().data() +
                                            static_cast<std::size_t>(y) *
                                                static_cast<std::size_t>(img.width())));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace vinescan

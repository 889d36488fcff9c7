// SPDX-License-Identifier: Apache-2.0
//
// Minimal image containers plus PGM/PPM (binary P5/P6) I/O.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vinescan/errors.hpp"

namespace vinescan {

template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
        if (width <= 0 || height <= 0) throw ParameterError("Image: non-positive size");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    T& at(int x, int y) { return data_[idx(x, y)]; }
    const T& at(int x, int y) const { return data_[idx(x, y)]; }
    bool inside(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<float>;
using BinaryImage = Image<std::uint8_t>;  // values 0/1
using LabelImage = Image<std::uint8_t>;   // per-pixel class ids

struct RgbPixel {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const RgbPixel&) const = default;
};
using RgbImage = Image<RgbPixel>;

namespace pnm_detail {

inline int read_pnm_token(std::istream& in) {
    // skips whitespace and '#' comments
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string dummy;
            std::getline(in, dummy);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v;
    if (!(in >> v)) throw IoError("pnm: malformed header token");
    return v;
}

inline void read_pnm_header(std::istream& in, const char* magic, int& w, int& h,
                            const std::string& path) {
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != magic[0] || m1 != magic[1])
        throw IoError("pnm: bad magic in " + path);
    w = read_pnm_token(in);
    h = read_pnm_token(in);
    const int maxval = read_pnm_token(in);
    if (maxval != 255) throw IoError("pnm: only maxval 255 supported: " + path);
    in.get();  // single whitespace before raster
    if (w <= 0 || h <= 0) throw IoError("pnm: bad dimensions in " + path);
}

}  // namespace pnm_detail

inline GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("pgm: cannot open " + path);
    int w, h;
    pnm_detail::read_pnm_header(in, "P5", w, h, path);
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data().data()),
            static_cast<std::streamsize>(img.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.size())
        throw IoError("pgm: truncated raster in " + path);
    return img;
}

inline void save_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("pgm: cannot write " + path);
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()),
              static_cast<std::streamsize>(img.size()));
    if (!out) throw IoError("pgm: write failure on " + path);
}

inline RgbImage load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("ppm: cannot open " + path);
    int w, h;
    pnm_detail::read_pnm_header(in, "P6", w, h, path);
    RgbImage img(w, h);
    std::vector<std::uint8_t> buf(img.size() * 3);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
        throw IoError("ppm: truncated raster in " + path);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = {buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]};
    return img;
}

inline void save_ppm(const RgbImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("ppm: cannot write " + path);
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    for (const RgbPixel& p : img.data()) {
        const std::uint8_t rgb[3] = {p.r, p.g, p.b};
        out.write(reinterpret_cast<const char*>(rgb), 3);
    }
    if (!out) throw IoError("ppm: write failure on " + path);
}

}  // namespace vinescan

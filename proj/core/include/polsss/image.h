// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "polsss/errors.h"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace polsss {

/// Row-major RGB image, row 0 at the top.
template <typename T>
class Image {
  public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height * 3, fill) {
        if (width < 0 || height < 0) throw InputError("image dimensions must be non-negative");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t pixel_count() const { return static_cast<size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    T &at(int x, int y, int c) { return data_[index(x, y, c)]; }
    const T &at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    T &at(size_t pixel, int c) { return data_[pixel * 3 + c]; }
    const T &at(size_t pixel, int c) const { return data_[pixel * 3 + c]; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }

    bool same_size(const Image &o) const { return width_ == o.width_ && height_ == o.height_; }
    bool operator==(const Image &o) const = default;

  private:
    size_t index(int x, int y, int c) const {
        return (static_cast<size_t>(y) * width_ + x) * 3 + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ImageD = Image<double>;
using ImageF = Image<float>;

/// Binary per-pixel mask (single channel).
class Mask {
  public:
    Mask() = default;
    Mask(int width, int height, bool fill = false)
        : width_(width), height_(height), bits_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool operator()(int x, int y) const { return bits_[static_cast<size_t>(y) * width_ + x] != 0; }
    bool operator[](size_t pixel) const { return bits_[pixel] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0; }
    void set(size_t pixel, bool v) { bits_[pixel] = v ? 1 : 0; }
    size_t count() const {
        size_t n = 0;
        for (auto b : bits_) n += b;
        return n;
    }
    size_t size() const { return bits_.size(); }
    bool operator==(const Mask &o) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<unsigned char> bits_;
};

/// The four polarizer-angle captures I_0, I_45, I_90, I_135.
struct CaptureSet {
    std::array<ImageD, 4> images;  // indexed by angle: 0, 45, 90, 135 degrees

    static constexpr std::array<int, 4> kAnglesDeg = {0, 45, 90, 135};

    int width() const { return images[0].width(); }
    int height() const { return images[0].height(); }
    ImageD &operator[](int i) { return images[i]; }
    const ImageD &operator[](int i) const { return images[i]; }
    bool consistent() const {
        for (const auto &im : images)
            if (!im.same_size(images[0])) return false;
        return true;
    }
};

}  // namespace polsss

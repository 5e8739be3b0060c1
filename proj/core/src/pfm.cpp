// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#include "polsss/pfm.h"

#include <bit>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace polsss {

namespace {

void put_le(std::vector<unsigned char> &out, float v) {
    uint32_t u = std::bit_cast<uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((u >> (8 * i)) & 0xffu));
}

float get_le(const unsigned char *p, bool little) {
    uint32_t u = 0;
    for (int i = 0; i < 4; ++i) {
        const int shift = little ? 8 * i : 8 * (3 - i);
        u |= static_cast<uint32_t>(p[i]) << shift;
    }
    return std::bit_cast<float>(u);
}

// Reads one whitespace-delimited header token.
std::string token(const std::vector<unsigned char> &b, size_t &pos) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    std::string t;
    while (pos < b.size() && !std::isspace(b[pos])) t.push_back(static_cast<char>(b[pos++]));
    return t;
}

}  // namespace

std::vector<unsigned char> encode_pfm(const ImageF &image) {
    const std::string header =
        "PF\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n-1.0\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(out.size() + image.pixel_count() * 12);
    for (int y = image.height() - 1; y >= 0; --y)
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < 3; ++c) put_le(out, image.at(x, y, c));
    return out;
}

ImageF decode_pfm(const std::vector<unsigned char> &bytes) {
    size_t pos = 0;
    const std::string magic = token(bytes, pos);
    if (magic != "PF") throw InputError("PFM: expected colour header 'PF', got '" + magic + "'");
    int w = 0, h = 0;
    double scale = 0.0;
    try {
        w = std::stoi(token(bytes, pos));
        h = std::stoi(token(bytes, pos));
        scale = std::stod(token(bytes, pos));
    } catch (const std::exception &) {
        throw InputError("PFM: malformed header");
    }
    if (w <= 0 || h <= 0) throw InputError("PFM: invalid dimensions");
    if (scale == 0.0) throw InputError("PFM: zero scale");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw InputError("PFM: malformed header");
    ++pos;  // single whitespace byte after the scale
    const size_t need = static_cast<size_t>(w) * h * 12;
    if (bytes.size() - pos != need) throw InputError("PFM: payload size does not match the header");
    const bool little = scale < 0.0;
    ImageF img(w, h);
    const unsigned char *p = bytes.data() + pos;
    for (int y = h - 1; y >= 0; --y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c, p += 4) img.at(x, y, c) = get_le(p, little);
    return img;
}

void write_pfm(const std::string &path, const ImageF &image) {
    const auto bytes = encode_pfm(image);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw InputError("cannot open '" + tmp + "' for writing");
        f.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw InputError("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

void write_pfm(const std::string &path, const ImageD &image) { write_pfm(path, to_float(image)); }

ImageF read_pfm(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NotFoundError("PFM file not found: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    try {
        return decode_pfm(bytes);
    } catch (const InputError &e) {
        throw InputError(path + ": " + e.what());
    }
}

ImageF to_float(const ImageD &image) {
    ImageF out(image.width(), image.height());
    auto src = image.data();
    auto dst = out.data();
    for (size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i]);
    return out;
}

ImageD to_double(const ImageF &image) {
    ImageD out(image.width(), image.height());
    auto src = image.data();
    auto dst = out.data();
    for (size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
    return out;
}

ImageD mask_image(const Mask &mask) {
    ImageD out(mask.width(), mask.height());
    for (size_t p = 0; p < mask.size(); ++p)
        for (int c = 0; c < 3; ++c) out.at(p, c) = mask[p] ? 1.0 : 0.0;
    return out;
}

}  // namespace polsss

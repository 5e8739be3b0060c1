// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

// Portable Float Map, colour variant: "PF\n<w> <h>\n-1.0\n" followed by
// little-endian float32 RGB triples, rows stored bottom-to-top.

#pragma once

#include "polsss/image.h"

#include <string>
#include <vector>

namespace polsss {

std::vector<unsigned char> encode_pfm(const ImageF &image);
/// Throws InputError on a malformed header or truncated payload.
ImageF decode_pfm(const std::vector<unsigned char> &bytes);

/// Writes via a temporary file and rename. Doubles are rounded to float.
void write_pfm(const std::string &path, const ImageF &image);
void write_pfm(const std::string &path, const ImageD &image);
/// Throws NotFoundError if the file is missing.
ImageF read_pfm(const std::string &path);

ImageF to_float(const ImageD &image);
ImageD to_double(const ImageF &image);

/// Single-channel mask replicated to RGB as 0/1.
ImageD mask_image(const Mask &mask);

}  // namespace polsss

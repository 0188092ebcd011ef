// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace sirilab::report {

// Minimal truecolor PNG writer (8-bit RGB, zlib-compressed).
void write_png(const std::string& path, int width, int height,
               const std::vector<unsigned char>& rgb);

}  // namespace sirilab::report

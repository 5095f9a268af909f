// Copyright 2026 The fgseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fgseg/raster.hpp"

#include <filesystem>

namespace fgseg {

/// Decodes any format OpenCV understands into an RGB raster. Throws IoError.
Image read_image(const std::filesystem::path& path);

/// Encodes by file extension, creating parent directories. RGBA rasters
/// require a format with alpha (png). Output bytes are deterministic.
void write_image(const std::filesystem::path& path, const Image& image);

bool is_image_extension(const std::filesystem::path& path);

} // namespace fgseg

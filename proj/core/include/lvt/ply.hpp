// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// Binary little-endian PLY in the common Gaussian splat layout:
//
//   x y z nx ny nz f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3
//
// followed by op_rest_* (higher opacity SH), srot_0..3 (source camera
// rotation) and source_view. Scales are stored as ln(scale); f_rest is
// channel-major as in common viewers.

#pragma once

#include <string>

#include "lvt/splat.hpp"

namespace lvt {

// Throws FrameMismatch for local-frame splats.
template <typename T>
void export_ply(const GaussianSplatSet<T>& splats, const std::string& path);

// Throws MalformedPly with the byte offset of the first problem.
GaussianSplatSet<float> import_ply(const std::string& path);

}  // namespace lvt

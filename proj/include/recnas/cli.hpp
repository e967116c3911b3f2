// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <ostream>

#include "recnas/config.hpp"

namespace recnas {

// Exit status: 0 success, 1 runtime or validation error, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Human-readable summary of a manifest's winners and metrics.
void print_manifest(const ArtifactManifest& manifest, std::ostream& out);

}  // namespace recnas

// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

namespace sfolab::harness {

inline constexpr const char* kManifestName = "manifest.txt";

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Rewrites <dir>/manifest.txt listing every regular file in `dir` (except
/// the manifest) as "<sha256>  <name>", sorted by name. Same format as
/// sha256sum, so `sha256sum -c manifest.txt` verifies it.
void write_manifest(const std::filesystem::path& dir);

}  // namespace sfolab::harness

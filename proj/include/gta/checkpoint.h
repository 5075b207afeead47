// Copyright 2026 The GTA Authors
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

#ifndef GTA_CHECKPOINT_H_
#define GTA_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gta/nn/layers.h"

namespace gta {

// Lowercase hex SHA-256 of a byte buffer / file / directory tree. Directory
// hashes cover relative paths and file contents in sorted order.
std::string Sha256Hex(const void* data, size_t size);
std::string Sha256File(const std::filesystem::path& path);
std::string Sha256Tree(const std::filesystem::path& root,
                       const std::vector<std::string>& exclude_names = {});

// Parameter container layout:
//   8-byte magic "GTAPARM1"
//   u64 little-endian header length, then the JSON header
//   float32 little-endian payload, arrays in header order
// The header carries `kind`, caller metadata, the array table (name, rows,
// cols) and the payload SHA-256.
struct ParameterArchive {
  std::string kind;
  nlohmann::ordered_json metadata;
  std::vector<std::string> names;
  std::vector<std::pair<int64_t, int64_t>> shapes;
  std::vector<std::vector<float>> arrays;
};

void WriteParameterArchive(const std::filesystem::path& path,
                           const std::string& kind,
                           const nlohmann::ordered_json& metadata,
                           const nn::ParameterList& parameters);

// Throws IntegrityError on bad magic, truncation or hash mismatch, and
// ValidationError when `expected_kind` differs.
ParameterArchive ReadParameterArchive(const std::filesystem::path& path,
                                      const std::string& expected_kind);

// Copies archive arrays into `parameters`. Names and shapes must match.
void LoadParameters(const ParameterArchive& archive,
                    const nn::ParameterList& parameters);

}  // namespace gta

#endif  // GTA_CHECKPOINT_H_

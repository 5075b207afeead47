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

#include "gta/checkpoint.h"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "gta/errors.h"

namespace gta {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr std::array<char, 8> kMagic = {'G', 'T', 'A', 'P', 'A', 'R', 'M', '1'};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw Error("sha256 init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void Update(const void* data, size_t size) {
    if (size > 0 && EVP_DigestUpdate(ctx_, data, size) != 1) throw Error("sha256 update failed");
  }
  std::string HexDigest() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, digest, &len) != 1) throw Error("sha256 final failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
      out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

void HashFileInto(Sha256& sha, const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string(), "cannot open for hashing");
  std::array<char, 1 << 16> buffer;
  while (in) {
    in.read(buffer.data(), buffer.size());
    sha.Update(buffer.data(), static_cast<size_t>(in.gcount()));
  }
}

}  // namespace

std::string Sha256Hex(const void* data, size_t size) {
  Sha256 sha;
  sha.Update(data, size);
  return sha.HexDigest();
}

std::string Sha256File(const fs::path& path) {
  Sha256 sha;
  HashFileInto(sha, path);
  return sha.HexDigest();
}

std::string Sha256Tree(const fs::path& root,
                       const std::vector<std::string>& exclude_names) {
  if (fs::is_regular_file(root)) return Sha256File(root);
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (std::find(exclude_names.begin(), exclude_names.end(), name) != exclude_names.end()) {
      continue;
    }
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Sha256 sha;
  for (const auto& f : files) {
    const std::string rel = fs::relative(f, root).generic_string();
    sha.Update(rel.data(), rel.size() + 1);  // include the terminator as a separator
    HashFileInto(sha, f);
  }
  return sha.HexDigest();
}

void WriteParameterArchive(const fs::path& path, const std::string& kind,
                           const Json& metadata,
                           const nn::ParameterList& parameters) {
  std::vector<float> payload;
  payload.reserve(parameters.NumScalars());
  Json table = Json::array();
  for (const auto& [name, p] : parameters) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      payload.push_back(static_cast<float>(p->value.data()[i]));
    }
    table.push_back({{"name", name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  const size_t payload_bytes = payload.size() * sizeof(float);
  Json header;
  header["kind"] = kind;
  header["metadata"] = metadata;
  header["arrays"] = table;
  header["payload_bytes"] = payload_bytes;
  header["payload_sha256"] = Sha256Hex(payload.data(), payload_bytes);
  const std::string text = header.dump();
  const uint64_t header_len = text.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(path.string(), "cannot open for writing");
  out.write(kMagic.data(), kMagic.size());
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload_bytes));
  if (!out) throw ValidationError(path.string(), "write failed");
}

ParameterArchive ReadParameterArchive(const fs::path& path,
                                      const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string(), "missing checkpoint");
  std::array<char, 8> magic;
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IntegrityError(path.string() + ": bad magic");
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || header_len > (uint64_t{1} << 30)) {
    throw IntegrityError(path.string() + ": truncated header");
  }
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw IntegrityError(path.string() + ": truncated header");
  Json header;
  try {
    header = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(path.string() + ": corrupt header");
  }

  ParameterArchive archive;
  archive.kind = header.at("kind").get<std::string>();
  if (archive.kind != expected_kind) {
    throw ValidationError("kind", "expected '" + expected_kind + "' archive, found '" +
                                      archive.kind + "'");
  }
  archive.metadata = header.at("metadata");
  const size_t payload_bytes = header.at("payload_bytes").get<size_t>();
  std::vector<float> payload(payload_bytes / sizeof(float));
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload_bytes));
  if (static_cast<size_t>(in.gcount()) != payload_bytes) {
    throw IntegrityError(path.string() + ": truncated payload");
  }
  in.peek();
  if (!in.eof()) throw IntegrityError(path.string() + ": trailing bytes");
  if (Sha256Hex(payload.data(), payload_bytes) != header.at("payload_sha256").get<std::string>()) {
    throw IntegrityError(path.string() + ": payload hash mismatch");
  }
  size_t offset = 0;
  for (const auto& entry : header.at("arrays")) {
    const int64_t rows = entry.at("rows").get<int64_t>();
    const int64_t cols = entry.at("cols").get<int64_t>();
    const size_t count = static_cast<size_t>(rows * cols);
    if (offset + count > payload.size()) throw IntegrityError(path.string() + ": array table overruns payload");
    archive.names.push_back(entry.at("name").get<std::string>());
    archive.shapes.emplace_back(rows, cols);
    archive.arrays.emplace_back(payload.begin() + offset, payload.begin() + offset + count);
    offset += count;
  }
  if (offset != payload.size()) throw IntegrityError(path.string() + ": array table does not cover payload");
  return archive;
}

void LoadParameters(const ParameterArchive& archive,
                    const nn::ParameterList& parameters) {
  if (archive.names.size() != parameters.size()) {
    throw ValidationError("parameters", "archive holds " + std::to_string(archive.names.size()) +
                                            " arrays, model expects " +
                                            std::to_string(parameters.size()));
  }
  for (size_t i = 0; i < parameters.size(); ++i) {
    const auto& [name, p] = parameters[i];
    if (archive.names[i] != name || archive.shapes[i].first != p->value.rows() ||
        archive.shapes[i].second != p->value.cols()) {
      throw ValidationError(name, "array layout differs from the model");
    }
    for (Eigen::Index j = 0; j < p->value.size(); ++j) {
      p->value.data()[j] = static_cast<nn::Scalar>(archive.arrays[i][j]);
    }
  }
}

}  // namespace gta

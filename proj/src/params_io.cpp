// Copyright 2026 The HAT Authors
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

#include "hat/params_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "hat/error.hpp"

namespace hat {
namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void write_parameter_file(const std::string& path, nlohmann::json manifest,
                          const nn::ParameterList& params) {
  nlohmann::json blobs = nlohmann::json::array();
  std::uint64_t offset = 0;
  std::set<std::string> names;
  for (const auto& [name, t] : params) {
    if (!names.insert(name).second) throw ContractError("duplicate parameter name " + name);
    blobs.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}, {"count", t.size()}});
    offset += t.size();
  }
  manifest["format"] = "hatp";
  manifest["format_version"] = 1;
  manifest["blobs"] = blobs;
  const std::string text = manifest.dump();

  std::string bytes(kParameterMagic, 8);
  put_u64(bytes, text.size());
  bytes += text;
  bytes.reserve(bytes.size() + offset * 8);
  for (const auto& [name, t] : params) {
    for (double v : t.values()) put_u64(bytes, std::bit_cast<std::uint64_t>(v));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("failed writing " + path);
}

ParameterFile read_parameter_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingInputError("parameter file not found: " + path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kParameterMagic, 8) != 0) {
    throw ValidationError(path + ": not a parameter file (bad magic)");
  }
  const std::uint64_t manifest_len = get_u64(data + 8);
  if (manifest_len > bytes.size() - 16) throw ValidationError(path + ": truncated manifest");
  ParameterFile file;
  try {
    file.manifest = nlohmann::json::parse(bytes.substr(16, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": manifest is not valid JSON: " + e.what());
  }
  const std::size_t blob_start = 16 + manifest_len;
  const std::uint64_t available = (bytes.size() - blob_start) / 8;
  if ((bytes.size() - blob_start) % 8 != 0) throw ValidationError(path + ": blob section misaligned");
  std::uint64_t expected_total = 0;
  try {
    for (const auto& b : file.manifest.at("blobs")) {
      const std::string name = b.at("name").get<std::string>();
      ParameterBlob blob;
      blob.shape = b.at("shape").get<tensor::Shape>();
      const std::uint64_t offset = b.at("offset").get<std::uint64_t>();
      const std::uint64_t count = b.at("count").get<std::uint64_t>();
      if (tensor::element_count(blob.shape) != count || offset != expected_total ||
          offset + count > available) {
        throw ValidationError(path + ": blob '" + name + "' has inconsistent length/offset");
      }
      blob.values.resize(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        blob.values[i] = std::bit_cast<double>(get_u64(data + blob_start + (offset + i) * 8));
      }
      expected_total += count;
      if (!file.blobs.emplace(name, std::move(blob)).second) {
        throw ValidationError(path + ": duplicate blob '" + name + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed manifest: " + e.what());
  }
  if (expected_total != available) throw ValidationError(path + ": trailing or missing blob data");
  return file;
}

void assign_parameters(const ParameterFile& file, const nn::ParameterList& params,
                       const std::string& prefix) {
  std::set<std::string> used;
  for (const auto& [name, t] : params) {
    const auto it = file.blobs.find(name);
    if (it == file.blobs.end()) throw ValidationError("parameter file lacks blob '" + name + "'");
    if (it->second.shape != t.shape()) {
      throw ValidationError("blob '" + name + "' has shape " + tensor::to_string(it->second.shape) +
                            ", expected " + tensor::to_string(t.shape()));
    }
    Tensor handle = t;
    auto dst = handle.mutable_values();
    std::copy(it->second.values.begin(), it->second.values.end(), dst.begin());
    used.insert(name);
  }
  for (const auto& [name, blob] : file.blobs) {
    if (name.rfind(prefix, 0) == 0 && !used.count(name)) {
      throw ValidationError("unexpected blob '" + name + "' in parameter file");
    }
  }
}

nlohmann::json dims_to_json(const HatDims& dims) {
  nlohmann::json models = nlohmann::json::array();
  for (auto m : dims.models) models.push_back(std::string(to_string(m)));
  return {{"channels", dims.channels},
          {"models", models},
          {"position_scale", dims.position_scale},
          {"velocity_scale", dims.velocity_scale}};
}

HatDims dims_from_json(const nlohmann::json& j) {
  HatDims d;
  try {
    d.channels = j.at("channels").get<std::size_t>();
    d.models.clear();
    for (const auto& m : j.at("models")) d.models.push_back(parse_motion_model(m.get<std::string>()));
    d.position_scale = j.at("position_scale").get<double>();
    d.velocity_scale = j.at("velocity_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad dims in manifest: ") + e.what());
  }
  d.validate();
  return d;
}

void save_hat_parameters(const std::string& path, const HatParameters& params,
                         nlohmann::json manifest, const nn::ParameterList& extra) {
  params.validate();
  manifest["kind"] = manifest.value("kind", std::string("hat"));
  manifest["dims"] = dims_to_json(params.dims);
  manifest["init_seed"] = params.seed;
  nn::ParameterList all;
  for (const auto& p : params.parameters()) all.emplace_back("hat." + p.first, p.second);
  all.insert(all.end(), extra.begin(), extra.end());
  write_parameter_file(path, std::move(manifest), all);
}

HatParameters load_hat_parameters(const ParameterFile& file) {
  const HatDims dims = dims_from_json(file.manifest.at("dims"));
  HatParameters p = HatParameters::create(dims, file.manifest.value("init_seed", std::uint64_t{0}));
  nn::ParameterList named;
  for (const auto& q : p.parameters()) named.emplace_back("hat." + q.first, q.second);
  assign_parameters(file, named, "hat.");
  return p;
}

HatParameters load_hat_parameters(const std::string& path) {
  return load_hat_parameters(read_parameter_file(path));
}

}  // namespace hat

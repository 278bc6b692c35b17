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

/// \file
/// Parameter files (.hatp): a JSON manifest followed by little-endian
/// float64 blobs.
///
///   bytes 0..7    magic "HATPARM1"
///   bytes 8..15   manifest length N (uint64, little-endian)
///   next N bytes  manifest, UTF-8 JSON
///   remainder     blobs, in manifest order
///
/// The manifest carries a "blobs" array of {name, shape, offset, count}
/// (offset and count in doubles, relative to the blob section). Readers
/// check every offset/count and the total file length.

#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hat/align.hpp"
#include "hat/layers.hpp"

namespace hat {

inline constexpr char kParameterMagic[9] = "HATPARM1";

struct ParameterBlob {
  tensor::Shape shape;
  std::vector<double> values;
};

struct ParameterFile {
  nlohmann::json manifest;
  std::map<std::string, ParameterBlob> blobs;
};

/// Writes `params` after `manifest` (a "blobs" key is added/overwritten).
void write_parameter_file(const std::string& path, nlohmann::json manifest,
                          const nn::ParameterList& params);
/// Throws MissingInputError if the file is absent, ValidationError if malformed.
ParameterFile read_parameter_file(const std::string& path);
/// Copies blobs into `params` by name. Every parameter must be present with
/// the same shape; blobs with `prefix` not matched by any parameter are an error.
void assign_parameters(const ParameterFile& file, const nn::ParameterList& params,
                       const std::string& prefix = "");

nlohmann::json dims_to_json(const HatDims& dims);
HatDims dims_from_json(const nlohmann::json& j);

/// Saves HAT parameters; `extra` parameters (e.g. a query encoder) are
/// stored alongside under their own names.
void save_hat_parameters(const std::string& path, const HatParameters& params,
                         nlohmann::json manifest = nlohmann::json::object(),
                         const nn::ParameterList& extra = {});
HatParameters load_hat_parameters(const ParameterFile& file);
HatParameters load_hat_parameters(const std::string& path);

}  // namespace hat

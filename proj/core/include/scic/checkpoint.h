// Copyright 2026 The SCIC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCIC_CHECKPOINT_H_
#define SCIC_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scic/model.h"

namespace scic::checkpoint {

inline constexpr uint32_t kFormatVersion = 1;

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
};

struct Header {
  uint32_t version = kFormatVersion;
  codec::ModelConfig model;
  std::string train_config_json = "null";  // echo of the training config
  std::string metadata_json = "null";      // epoch, losses, ...
  std::vector<TensorInfo> tensors;
};

// "SCKP", u32 version, u64 header length, JSON header, then every tensor as
// little-endian float64 in directory order. Output is a pure function of the
// arguments.
std::vector<uint8_t> Serialize(const codec::Model& model, const std::string& train_config_json,
                               const std::string& metadata_json);
// Writes through a temporary file and renames it into place.
void Save(const std::filesystem::path& path, const codec::Model& model,
          const std::string& train_config_json, const std::string& metadata_json);

// Reads the header without touching the tensor data.
Header ReadHeader(const std::filesystem::path& path);
codec::Model Load(const std::filesystem::path& path, Header* header = nullptr);

std::string ModelConfigToJson(const codec::ModelConfig& config);
codec::ModelConfig ModelConfigFromJson(const std::string& json);

}  // namespace scic::checkpoint

#endif  // SCIC_CHECKPOINT_H_

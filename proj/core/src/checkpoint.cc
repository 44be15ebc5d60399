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

#include "scic/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "scic/error.h"

namespace scic::checkpoint {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'C', 'K', 'P'};
constexpr uint64_t kMaxHeader = 64ull << 20;

json ConfigJson(const codec::ModelConfig& c) {
  return {{"backbone", codec::BackboneTag(c.backbone)},
          {"decoders", c.decoders},
          {"stages", c.stages},
          {"transform_channels", c.transform_channels},
          {"latent_channels", c.latent_channels},
          {"hyper_channels", c.hyper_channels},
          {"slices", c.slices},
          {"kernel", c.kernel},
          {"hyper_kernel", c.hyper_kernel}};
}

codec::ModelConfig ConfigFrom(const json& j) {
  codec::ModelConfig c;
  c.backbone = codec::ParseBackbone(j.at("backbone").get<std::string>());
  c.decoders = j.at("decoders").get<int>();
  c.stages = j.at("stages").get<int>();
  c.transform_channels = j.at("transform_channels").get<int>();
  c.latent_channels = j.at("latent_channels").get<int>();
  c.hyper_channels = j.at("hyper_channels").get<int>();
  c.slices = j.at("slices").get<int>();
  c.kernel = j.at("kernel").get<int>();
  c.hyper_kernel = j.at("hyper_kernel").get<int>();
  c.Validate();
  return c;
}

struct Parsed {
  Header header;
  uint64_t data_offset = 0;
};

Parsed ParseHeader(std::istream& in, const std::string& where) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(where + ": not a checkpoint (bad magic)");
  }
  uint32_t version = 0;
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&len), 8);
  if (!in) throw FormatError(where + ": truncated checkpoint header");
  if (version != kFormatVersion) {
    throw FormatError(where + ": unsupported checkpoint version " + std::to_string(version));
  }
  if (len > kMaxHeader) throw FormatError(where + ": implausible header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw FormatError(where + ": truncated checkpoint header");
  }
  Parsed p;
  p.data_offset = 16 + len;
  try {
    const json j = json::parse(text);
    p.header.version = version;
    p.header.model = ConfigFrom(j.at("model"));
    p.header.train_config_json = j.at("train_config").dump();
    p.header.metadata_json = j.at("metadata").dump();
    for (const json& t : j.at("tensors")) {
      p.header.tensors.push_back(
          {t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>()});
    }
  } catch (const json::exception& e) {
    throw FormatError(where + ": malformed checkpoint header: " + e.what());
  }
  return p;
}

}  // namespace

std::string ModelConfigToJson(const codec::ModelConfig& config) {
  return ConfigJson(config).dump();
}

codec::ModelConfig ModelConfigFromJson(const std::string& text) {
  try {
    return ConfigFrom(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model config: ") + e.what());
  }
}

std::vector<uint8_t> Serialize(const codec::Model& model, const std::string& train_config_json,
                               const std::string& metadata_json) {
  json header;
  header["format"] = "scic-checkpoint";
  header["model"] = ConfigJson(model.config());
  header["train_config"] = json::parse(train_config_json);
  header["metadata"] = json::parse(metadata_json);
  json tensors = json::array();
  for (const nn::Parameter& p : model.parameters()) {
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}});
  }
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  std::vector<uint8_t> out;
  auto put = [&out](const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  };
  const uint32_t version = kFormatVersion;
  const uint64_t len = text.size();
  put(kMagic, 4);
  put(&version, 4);
  put(&len, 8);
  put(text.data(), text.size());
  for (const nn::Parameter& p : model.parameters()) {
    put(p.value.data(), p.value.size() * sizeof(double));
  }
  return out;
}

void Save(const std::filesystem::path& path, const codec::Model& model,
          const std::string& train_config_json, const std::string& metadata_json) {
  const auto bytes = Serialize(model, train_config_json, metadata_json);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw UserError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Header ReadHeader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  return ParseHeader(in, path.string()).header;
}

codec::Model Load(const std::filesystem::path& path, Header* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  Parsed parsed = ParseHeader(in, path.string());
  codec::Model model = codec::Model::Create(parsed.header.model, 0);
  auto& params = model.parameters();
  if (params.size() != parsed.header.tensors.size()) {
    throw FormatError(path.string() + ": tensor count does not match the model layout");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const TensorInfo& info = parsed.header.tensors[i];
    if (info.name != params[i].name || info.shape != params[i].value.shape()) {
      throw FormatError(path.string() + ": unexpected tensor " + info.name + " " +
                        ShapeToString(info.shape));
    }
    const auto bytes = static_cast<std::streamsize>(params[i].value.size() * sizeof(double));
    if (!in.read(reinterpret_cast<char*>(params[i].value.data()), bytes)) {
      throw FormatError(path.string() + ": truncated tensor data");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after tensor data");
  }
  if (header != nullptr) *header = std::move(parsed.header);
  return model;
}

}  // namespace scic::checkpoint

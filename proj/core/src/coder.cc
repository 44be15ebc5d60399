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

#include "scic/coder.h"

#include <dlfcn.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>

#include "scic/error.h"
#include "scic/native_coder_abi.h"

namespace scic::entropy {
namespace {

class ReferenceSession final : public CoderSession {
 public:
  explicit ReferenceSession(std::span<const CdfTable> tables)
      : tables_(tables.begin(), tables.end()) {
    for (const CdfTable& t : tables_) t.Validate();
  }
  std::vector<uint8_t> Encode(std::span<const int32_t> symbols,
                              std::span<const int32_t> contexts) const override {
    return EncodeSymbols(symbols, contexts, tables_);
  }
  std::vector<int32_t> Decode(std::span<const uint8_t> bytes,
                              std::span<const int32_t> contexts) const override {
    return DecodeSymbols(bytes, contexts, tables_);
  }

 private:
  std::vector<CdfTable> tables_;
};

class ReferenceBackend final : public CoderBackend {
 public:
  std::string name() const override { return "reference"; }
  std::unique_ptr<CoderSession> BuildTables(std::span<const CdfTable> tables) const override {
    return std::make_unique<ReferenceSession>(tables);
  }
};

struct NativeApi {
  decltype(&scic_coder_abi_version) abi_version = nullptr;
  decltype(&scic_coder_build_tables) build_tables = nullptr;
  decltype(&scic_coder_encode) encode = nullptr;
  decltype(&scic_coder_decode) decode = nullptr;
  decltype(&scic_coder_destroy) destroy = nullptr;
};

[[noreturn]] void ThrowStatus(int status, const std::string& what) {
  switch (status) {
    case SCIC_CODER_CORRUPT_STREAM:
      throw CorruptStreamError(what + ": corrupt stream");
    case SCIC_CODER_CONTEXT_RANGE:
      throw UserError(what + ": context index out of range");
    case SCIC_CODER_INVALID_TABLE:
      throw UserError(what + ": invalid frequency table");
    default:
      throw Error(what + ": native coder status " + std::to_string(status));
  }
}

class NativeSession final : public CoderSession {
 public:
  NativeSession(std::shared_ptr<void> library, const NativeApi& api, scic_coder* handle)
      : library_(std::move(library)), api_(api), handle_(handle) {}
  ~NativeSession() override { api_.destroy(handle_); }

  std::vector<uint8_t> Encode(std::span<const int32_t> symbols,
                              std::span<const int32_t> contexts) const override {
    if (symbols.size() != contexts.size()) throw UserError("symbol and context counts differ");
    std::vector<uint8_t> out(symbols.size() * 2 + 16);
    size_t len = 0;
    int st = api_.encode(handle_, symbols.data(), contexts.data(), symbols.size(), out.data(),
                         out.size(), &len);
    if (st == SCIC_CODER_CAPACITY) {
      out.resize(len);
      st = api_.encode(handle_, symbols.data(), contexts.data(), symbols.size(), out.data(),
                       out.size(), &len);
    }
    if (st != SCIC_CODER_OK) ThrowStatus(st, "native encode");
    out.resize(len);
    return out;
  }

  std::vector<int32_t> Decode(std::span<const uint8_t> bytes,
                              std::span<const int32_t> contexts) const override {
    std::vector<int32_t> out(contexts.size());
    const int st = api_.decode(handle_, bytes.data(), bytes.size(), contexts.data(),
                               contexts.size(), out.data());
    if (st != SCIC_CODER_OK) ThrowStatus(st, "native decode");
    return out;
  }

 private:
  std::shared_ptr<void> library_;
  NativeApi api_;
  scic_coder* handle_;
};

class NativeBackend final : public CoderBackend {
 public:
  NativeBackend(std::shared_ptr<void> library, NativeApi api, std::string path)
      : library_(std::move(library)), api_(api), path_(std::move(path)) {}

  std::string name() const override { return "native:" + path_; }

  std::unique_ptr<CoderSession> BuildTables(std::span<const CdfTable> tables) const override {
    std::vector<int32_t> offsets;
    std::vector<uint32_t> lengths, freqs;
    for (const CdfTable& t : tables) {
      offsets.push_back(t.offset);
      lengths.push_back(static_cast<uint32_t>(t.freq.size()));
      freqs.insert(freqs.end(), t.freq.begin(), t.freq.end());
    }
    scic_coder* handle = nullptr;
    const int st = api_.build_tables(offsets.data(), lengths.data(), freqs.data(),
                                     static_cast<uint32_t>(tables.size()), &handle);
    if (st != SCIC_CODER_OK) ThrowStatus(st, "native build_tables");
    return std::make_unique<NativeSession>(library_, api_, handle);
  }

 private:
  std::shared_ptr<void> library_;
  NativeApi api_;
  std::string path_;
};

template <typename Fn>
void Resolve(void* lib, const char* symbol, Fn& fn) {
  fn = reinterpret_cast<Fn>(dlsym(lib, symbol));
  if (fn == nullptr) throw CapabilityError(std::string("native coder lacks ") + symbol);
}

std::mutex g_mutex;
std::shared_ptr<const CoderBackend> g_active;

}  // namespace

const CoderBackend& ReferenceCoder() {
  static const ReferenceBackend backend;
  return backend;
}

std::shared_ptr<const CoderBackend> LoadNativeCoder(const std::filesystem::path& library) {
  void* raw = dlopen(library.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (raw == nullptr) {
    const char* err = dlerror();
    throw CapabilityError("cannot load native coder " + library.string() + ": " +
                          (err ? err : "unknown error"));
  }
  std::shared_ptr<void> lib(raw, [](void* h) { dlclose(h); });
  NativeApi api;
  Resolve(raw, "scic_coder_abi_version", api.abi_version);
  Resolve(raw, "scic_coder_build_tables", api.build_tables);
  Resolve(raw, "scic_coder_encode", api.encode);
  Resolve(raw, "scic_coder_decode", api.decode);
  Resolve(raw, "scic_coder_destroy", api.destroy);
  if (api.abi_version() != SCIC_CODER_ABI_VERSION) {
    throw CapabilityError("native coder ABI version " + std::to_string(api.abi_version()) +
                          " != " + std::to_string(SCIC_CODER_ABI_VERSION));
  }
  return std::make_shared<NativeBackend>(std::move(lib), api, library.string());
}

std::string NativeCoderLibraryName() {
  const char* env = std::getenv("SCIC_NATIVE_CODER");
  if (env != nullptr && *env != '\0') return env;
  return "libscic_native_coder.so";
}

const CoderBackend& ActiveCoder() {
  std::lock_guard lock(g_mutex);
  if (!g_active) {
    const std::string name = NativeCoderLibraryName();
    try {
      g_active = LoadNativeCoder(name);
      spdlog::debug("using native entropy coder {}", name);
    } catch (const CapabilityError& e) {
      spdlog::info("native entropy coder unavailable, using reference coder ({})", e.what());
      g_active = std::shared_ptr<const CoderBackend>(&ReferenceCoder(), [](const CoderBackend*) {});
    }
  }
  return *g_active;
}

void ResetCoderDetectionForTesting() {
  std::lock_guard lock(g_mutex);
  g_active.reset();
}

}  // namespace scic::entropy

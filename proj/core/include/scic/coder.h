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

#ifndef SCIC_CODER_H_
#define SCIC_CODER_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scic/rans.h"

namespace scic::entropy {

// A set of immutable coding tables bound to one backend.
class CoderSession {
 public:
  virtual ~CoderSession() = default;
  virtual std::vector<uint8_t> Encode(std::span<const int32_t> symbols,
                                      std::span<const int32_t> contexts) const = 0;
  virtual std::vector<int32_t> Decode(std::span<const uint8_t> bytes,
                                      std::span<const int32_t> contexts) const = 0;
};

class CoderBackend {
 public:
  virtual ~CoderBackend() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<CoderSession> BuildTables(std::span<const CdfTable> tables) const = 0;
};

// The portable implementation in rans.h.
const CoderBackend& ReferenceCoder();

// Loads a library exporting the native_coder_abi.h functions. Throws
// CapabilityError if the library or a symbol is missing or the ABI version
// differs.
std::shared_ptr<const CoderBackend> LoadNativeCoder(const std::filesystem::path& library);

// Library searched by ActiveCoder(): $SCIC_NATIVE_CODER if set, otherwise
// libscic_native_coder.so on the loader path.
std::string NativeCoderLibraryName();

// Native coder when one can be loaded, else the reference. Detection runs
// once per process; a fallback is logged once.
const CoderBackend& ActiveCoder();

// Forgets the cached detection so the next ActiveCoder() probes again.
void ResetCoderDetectionForTesting();

}  // namespace scic::entropy

#endif  // SCIC_CODER_H_

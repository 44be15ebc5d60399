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

// Exposes the reference rANS coder through the native coder ABI so the
// loader and the differential harness can be exercised without a native
// build.
#include <algorithm>
#include <cstring>
#include <new>
#include <vector>

#include "scic/error.h"
#include "scic/native_coder_abi.h"
#include "scic/rans.h"

struct scic_coder {
  std::vector<scic::entropy::CdfTable> tables;
};

namespace {

int StatusOf(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const scic::CorruptStreamError&) {
    return SCIC_CODER_CORRUPT_STREAM;
  } catch (const scic::UserError& err) {
    if (std::strstr(err.what(), "context index") != nullptr) return SCIC_CODER_CONTEXT_RANGE;
    return SCIC_CODER_INVALID_TABLE;
  } catch (...) {
    return SCIC_CODER_INTERNAL;
  }
}

}  // namespace

extern "C" {

uint32_t scic_coder_abi_version(void) { return SCIC_CODER_ABI_VERSION; }

int scic_coder_build_tables(const int32_t* offsets, const uint32_t* lengths, const uint32_t* freqs,
                            uint32_t num_tables, scic_coder** out) {
  try {
    auto coder = std::make_unique<scic_coder>();
    size_t pos = 0;
    for (uint32_t t = 0; t < num_tables; ++t) {
      std::vector<uint32_t> f(freqs + pos, freqs + pos + lengths[t]);
      pos += lengths[t];
      coder->tables.push_back(scic::entropy::CdfTable::FromFrequencies(offsets[t], std::move(f)));
    }
    *out = coder.release();
    return SCIC_CODER_OK;
  } catch (...) {
    return SCIC_CODER_INVALID_TABLE;
  }
}

int scic_coder_encode(const scic_coder* coder, const int32_t* symbols, const int32_t* contexts,
                      size_t count, uint8_t* out, size_t capacity, size_t* out_len) {
  try {
    const auto bytes =
        scic::entropy::EncodeSymbols({symbols, count}, {contexts, count}, coder->tables);
    *out_len = bytes.size();
    if (bytes.size() > capacity) return SCIC_CODER_CAPACITY;
    std::copy(bytes.begin(), bytes.end(), out);
    return SCIC_CODER_OK;
  } catch (...) {
    return StatusOf(std::current_exception());
  }
}

int scic_coder_decode(const scic_coder* coder, const uint8_t* bytes, size_t length,
                      const int32_t* contexts, size_t count, int32_t* symbols) {
  try {
    const auto decoded =
        scic::entropy::DecodeSymbols({bytes, length}, {contexts, count}, coder->tables);
    std::copy(decoded.begin(), decoded.end(), symbols);
    return SCIC_CODER_OK;
  } catch (...) {
    return StatusOf(std::current_exception());
  }
}

void scic_coder_destroy(scic_coder* coder) { delete coder; }

}  // extern "C"

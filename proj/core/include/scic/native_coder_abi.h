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

/* Flat-array boundary between the codec and an external entropy coder.
 *
 * A conforming library exports the functions below with C linkage. Tables
 * are passed as concatenated frequency arrays (escape symbol last in each
 * table); the coder must produce bytes identical to the reference rANS coder
 * and reject corrupt streams exactly when the reference does.
 */
#ifndef SCIC_NATIVE_CODER_ABI_H_
#define SCIC_NATIVE_CODER_ABI_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SCIC_CODER_ABI_VERSION 1u

enum scic_coder_status {
  SCIC_CODER_OK = 0,
  SCIC_CODER_INVALID_TABLE = 1,
  SCIC_CODER_CONTEXT_RANGE = 2,
  SCIC_CODER_CORRUPT_STREAM = 3,
  SCIC_CODER_CAPACITY = 4,
  SCIC_CODER_INTERNAL = 5
};

typedef struct scic_coder scic_coder;

uint32_t scic_coder_abi_version(void);

/* offsets[t] is the value of symbol 0 of table t; lengths[t] is the number
 * of frequencies of table t including the escape. freqs holds all tables
 * back to back and each table must sum to 65536. */
int scic_coder_build_tables(const int32_t* offsets, const uint32_t* lengths, const uint32_t* freqs,
                            uint32_t num_tables, scic_coder** out);

/* Writes at most `capacity` bytes. On SCIC_CODER_CAPACITY, *out_len holds
 * the required size. */
int scic_coder_encode(const scic_coder* coder, const int32_t* symbols, const int32_t* contexts,
                      size_t count, uint8_t* out, size_t capacity, size_t* out_len);

int scic_coder_decode(const scic_coder* coder, const uint8_t* bytes, size_t length,
                      const int32_t* contexts, size_t count, int32_t* symbols);

void scic_coder_destroy(scic_coder* coder);

#ifdef __cplusplus
}
#endif

#endif /* SCIC_NATIVE_CODER_ABI_H_ */

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

#ifndef SCIC_HASH_H_
#define SCIC_HASH_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace scic {

// Lower-case hex SHA-256.
std::string Sha256Hex(std::span<const uint8_t> bytes);
std::string Sha256Hex(const std::string& text);
std::string Sha256File(const std::filesystem::path& path);

}  // namespace scic

#endif  // SCIC_HASH_H_

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

#ifndef SCIC_ERROR_H_
#define SCIC_ERROR_H_

#include <stdexcept>
#include <string>

namespace scic {

// Base for every error raised by the library. The CLI maps UserError to
// exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input supplied by the caller: malformed files, invalid configs,
// precondition violations that the user can fix.
class UserError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public UserError {
 public:
  using UserError::UserError;
};

class FormatError : public UserError {
 public:
  using UserError::UserError;
};

// Entropy-coded payload is truncated or otherwise undecodable.
class CorruptStreamError : public UserError {
 public:
  using UserError::UserError;
};

// Requested operation is not supported by the loaded model (e.g. asking a
// single-decoder checkpoint for a segmentation map).
class CapabilityError : public UserError {
 public:
  using UserError::UserError;
};

class HashMismatchError : public UserError {
 public:
  using UserError::UserError;
};

// Broken internal invariant; indicates a bug rather than bad input.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace scic

#endif  // SCIC_ERROR_H_

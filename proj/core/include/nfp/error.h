// Copyright 2026 The nfp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NFP_ERROR_H_
#define NFP_ERROR_H_

#include <stdexcept>
#include <string>

namespace nfp {

// Root of every exception thrown by the library. Callers that only need to
// report a failure can catch this; tests and tools that branch on the cause
// catch the specific subclass.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Byte sink/source failures (open, short write, read error).
class IoError : public Error {
 public:
  using Error::Error;
};

// Wrong magic, unknown enum tag, trailing data.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// Stream ended before the declared payload was complete.
class TruncationError : public Error {
 public:
  using Error::Error;
};

// A value violates a type invariant (non-finite activation, bad stats, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Two inputs that must be commensurate are not (class, kind, dimension).
class PairingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class InsufficientBankError : public Error {
 public:
  using Error::Error;
};

// Decision rule needs attack statistics the bank does not carry.
class RuleUnavailableError : public Error {
 public:
  using Error::Error;
};

// Bank file is structurally wrong; the message names the JSON path.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Index outside [0, n_neurons).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Digest mismatch or stored values that disagree with their recomputation.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace nfp

#endif  // NFP_ERROR_H_

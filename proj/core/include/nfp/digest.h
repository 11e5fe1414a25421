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

#ifndef NFP_DIGEST_H_
#define NFP_DIGEST_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace nfp {

// Lower-case hex SHA-256 of `bytes`.
std::string Sha256Hex(std::string_view bytes);

// Lower-case hex SHA-256 of a file's contents, streamed.
std::string Sha256FileHex(const std::filesystem::path& path);

}  // namespace nfp

#endif  // NFP_DIGEST_H_

/* Copyright 2026 The hetnas Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HETNAS_SHA256_H_
#define HETNAS_SHA256_H_

#include <string>
#include <string_view>

namespace hetnas {

// Lowercase hex SHA-256 digest (64 characters) of `data`.
std::string Sha256Hex(std::string_view data);

}  // namespace hetnas

#endif  // HETNAS_SHA256_H_

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

#ifndef HETNAS_ERROR_H_
#define HETNAS_ERROR_H_

#include <stdexcept>
#include <string>

namespace hetnas {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class InvalidCardError : public Error {
 public:
  using Error::Error;
};

// Raised when a full enumeration would exceed the configured cap.
class CombinatorialOverflowError : public Error {
 public:
  using Error::Error;
};

class CyclicGraphError : public Error {
 public:
  using Error::Error;
};

class UnknownHashError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during gradient-based training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed input files (JSON, JSONL, ledgers, configs).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace hetnas

#endif  // HETNAS_ERROR_H_

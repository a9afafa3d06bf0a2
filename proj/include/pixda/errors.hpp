/* Copyright 2026 The pixda Authors. All Rights Reserved.

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
#ifndef PIXDA_ERRORS_HPP_
#define PIXDA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pixda {

// Base class for every error raised by the library. The subclasses map onto
// the CLI exit codes (config = 2, data = 3, training = 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed argument or inconsistent shapes passed to a pure function.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace pixda

#endif  // PIXDA_ERRORS_HPP_

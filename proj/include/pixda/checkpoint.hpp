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
#ifndef PIXDA_CHECKPOINT_HPP_
#define PIXDA_CHECKPOINT_HPP_

// Versioned parameter container.
//
//   bytes 0..7    "PIXDACKP"
//   bytes 8..11   format version, u32 little endian
//   bytes 12..19  header length in bytes, u64 little endian
//   header        UTF-8 JSON: {"kind", "config", "rng_state", "arrays":
//                 [{"name", "shape", "offset", "count"}]}
//   payload       float32 little endian values; offsets count floats from
//                 the start of the payload

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pixda/models.hpp"
#include "pixda/tensor.hpp"

namespace pixda {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::string kind;  // "segmenter"
  nlohmann::ordered_json config;
  std::uint64_t rng_state = 0;
  std::vector<NamedArray> arrays;

  const Tensor* find(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws DataError on a malformed or truncated file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// config holds {"model": SegmenterConfig, ...extra}.
Checkpoint snapshot(Segmenter& model, nlohmann::ordered_json extra = {},
                    std::uint64_t rng_state = 0);
SegmenterConfig checkpoint_model_config(const Checkpoint& ckpt);
// Builds a segmenter from the stored config and copies every array in.
Segmenter restore_segmenter(const Checkpoint& ckpt);
void load_parameters(Segmenter& model, const Checkpoint& ckpt);

// FNV-1a over names, shapes and values.
std::uint64_t checkpoint_hash(const Checkpoint& ckpt);

}  // namespace pixda

#endif  // PIXDA_CHECKPOINT_HPP_

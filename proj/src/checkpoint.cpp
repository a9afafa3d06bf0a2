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
#include "pixda/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "pixda/config.hpp"
#include "pixda/errors.hpp"

namespace pixda {
namespace {

constexpr char kMagic[8] = {'P', 'I', 'X', 'D', 'A', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw DataError(path.string() + ": truncated checkpoint header");
  }
  return v;
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a.value;
  }
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::ordered_json header;
  header["kind"] = ckpt.kind;
  header["config"] = ckpt.config;
  header["rng_state"] = ckpt.rng_state;
  header["arrays"] = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& a : ckpt.arrays) {
    header["arrays"].push_back({{"name", a.name},
                                {"shape", a.value.shape()},
                                {"offset", offset},
                                {"count", a.value.size()}});
    offset += a.value.size();
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : ckpt.arrays) {
    out.write(reinterpret_cast<const char*>(a.value.data()),
              static_cast<std::streamsize>(a.value.size() * sizeof(float)));
  }
  if (!out) throw DataError(path.string() + ": write failed");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open checkpoint");
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path.string() + ": not a checkpoint file");
  }
  const auto version = take<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto length = take<std::uint64_t>(in, path);
  if (length > (1ull << 30)) throw DataError(path.string() + ": implausible header length");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw DataError(path.string() + ": truncated checkpoint header");
  }
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  const auto payload_start = in.tellg();
  Checkpoint ckpt;
  try {
    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.config = header.at("config");
    ckpt.rng_state = header.at("rng_state").get<std::uint64_t>();
    for (const auto& entry : header.at("arrays")) {
      NamedArray a;
      a.name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<std::vector<int>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto count = entry.at("count").get<std::uint64_t>();
      a.value = Tensor(shape);
      if (a.value.size() != count) {
        throw DataError(path.string() + ": array " + a.name + " count does not match shape");
      }
      in.seekg(payload_start + static_cast<std::streamoff>(offset * sizeof(float)));
      if (!in.read(reinterpret_cast<char*>(a.value.data()),
                   static_cast<std::streamsize>(count * sizeof(float)))) {
        throw DataError(path.string() + ": truncated payload for " + a.name);
      }
      ckpt.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  return ckpt;
}

Checkpoint snapshot(Segmenter& model, nlohmann::ordered_json extra, std::uint64_t rng_state) {
  Checkpoint ckpt;
  ckpt.kind = "segmenter";
  ckpt.config = nlohmann::ordered_json::object();
  ckpt.config["model"] = to_json(model.config());
  if (extra.is_object()) {
    for (auto it = extra.begin(); it != extra.end(); ++it) ckpt.config[it.key()] = it.value();
  }
  ckpt.rng_state = rng_state;
  for (Parameter* p : model.parameters()) ckpt.arrays.push_back({p->name, p->value});
  return ckpt;
}

SegmenterConfig checkpoint_model_config(const Checkpoint& ckpt) {
  if (ckpt.kind != "segmenter") throw DataError("checkpoint kind '" + ckpt.kind + "' is not a segmenter");
  if (!ckpt.config.contains("model")) throw DataError("checkpoint has no model config");
  try {
    return segmenter_config_from_json(ckpt.config.at("model"));
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint model config: ") + e.what());
  }
}

void load_parameters(Segmenter& model, const Checkpoint& ckpt) {
  for (Parameter* p : model.parameters()) {
    const Tensor* t = ckpt.find(p->name);
    if (t == nullptr) throw DataError("checkpoint is missing array " + p->name);
    if (t->shape() != p->value.shape()) {
      throw DataError("checkpoint array " + p->name + " has shape " + t->shape_string() +
                      ", expected " + p->value.shape_string());
    }
    p->value = *t;
  }
}

Segmenter restore_segmenter(const Checkpoint& ckpt) {
  Segmenter model(checkpoint_model_config(ckpt));
  load_parameters(model, ckpt);
  return model;
}

std::uint64_t checkpoint_hash(const Checkpoint& ckpt) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& a : ckpt.arrays) {
    fnv(h, a.name.data(), a.name.size());
    for (int d : a.value.shape()) fnv(h, &d, sizeof(d));
    fnv(h, a.value.data(), a.value.size() * sizeof(float));
  }
  return h;
}

}  // namespace pixda

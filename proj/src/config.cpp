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
#include "pixda/config.hpp"

#include <fstream>
#include <set>

namespace pixda {
namespace {

// Walks one JSON object, remembering which keys were consumed so that
// leftovers can be reported.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    read(*it, name(key), out);
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!j_.contains(key)) fail(name(key), "missing required field");
    get(key, out);
  }

  bool has(const char* key) const { return j_.contains(key); }

  Reader child(const char* key) {
    seen_.insert(key);
    return Reader(j_.at(key), name(key));
  }
  const nlohmann::json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(name(it.key().c_str()), "unknown field");
    }
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
  }

 private:
  static void read(const nlohmann::json& v, const std::string& field, double& out) {
    if (!v.is_number()) fail(field, "expected a number");
    out = v.get<double>();
  }
  static void read(const nlohmann::json& v, const std::string& field, int& out) {
    if (!v.is_number_integer()) fail(field, "expected an integer");
    out = v.get<int>();
  }
  static void read(const nlohmann::json& v, const std::string& field, std::uint64_t& out) {
    if (!v.is_number_unsigned()) fail(field, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void read(const nlohmann::json& v, const std::string& field, bool& out) {
    if (!v.is_boolean()) fail(field, "expected true or false");
    out = v.get<bool>();
  }
  static void read(const nlohmann::json& v, const std::string& field, std::string& out) {
    if (!v.is_string()) fail(field, "expected a string");
    out = v.get<std::string>();
  }
  static void read(const nlohmann::json& v, const std::string& field,
                   std::filesystem::path& out) {
    std::string s;
    read(v, field, s);
    out = s;
  }
  template <typename T>
  static void read(const nlohmann::json& v, const std::string& field, std::vector<T>& out) {
    if (!v.is_array()) fail(field, "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      T item{};
      read(v[i], field + "[" + std::to_string(i) + "]", item);
      out.push_back(item);
    }
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) Reader::fail(field, what);
}

SgdSettings read_sgd(Reader r) {
  SgdSettings s;
  std::string kind = "SGD";
  r.get("kind", kind);
  if (kind != "SGD") Reader::fail(r.name("kind"), "only SGD is supported for the segmenter");
  r.get("lr", s.lr);
  r.get("momentum", s.momentum);
  r.get("weight_decay", s.weight_decay);
  r.get("poly_power", s.poly_power);
  r.finish();
  return s;
}

AdamSettings read_adam(Reader r) {
  AdamSettings s;
  std::string kind = "Adam";
  r.get("kind", kind);
  if (kind != "Adam") Reader::fail(r.name("kind"), "only Adam is supported for the discriminators");
  r.get("lr", s.lr);
  std::vector<double> betas{s.beta1, s.beta2};
  r.get("betas", betas);
  if (betas.size() != 2) Reader::fail(r.name("betas"), "expected two values");
  s.beta1 = betas[0];
  s.beta2 = betas[1];
  r.get("eps", s.eps);
  r.get("poly_power", s.poly_power);
  r.finish();
  return s;
}

SegmenterConfig read_segmenter(Reader r) {
  SegmenterConfig c;
  r.get("class_count", c.class_count);
  r.get("base_channels", c.base_channels);
  r.get("depth", c.depth);
  r.get("output_stride", c.output_stride);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return c;
}

ToySceneSpec read_spec(Reader r) {
  ToySceneSpec s;
  r.get("class_count", s.class_count);
  r.get("class_frequency_targets", s.class_frequency_targets);
  r.get("rare_object_classes", s.rare_object_classes);
  if (r.has("domain_shift")) {
    Reader d = r.child("domain_shift");
    d.get("hue_shift", s.domain_shift.hue_shift);
    d.get("noise_sigma", s.domain_shift.noise_sigma);
    d.get("horizon_offset", s.domain_shift.horizon_offset);
    d.finish();
  }
  if (r.has("image_size")) {
    std::vector<int> size;
    r.get("image_size", size);
    if (size.size() != 2) Reader::fail(r.name("image_size"), "expected [H, W]");
    s.height = size[0];
    s.width = size[1];
  }
  r.get("seed", s.seed);
  r.get("city_style_jitter", s.city_style_jitter);
  r.get("object_size", s.object_size);
  r.get("colour_cast", s.colour_cast);
  r.get("image_style_jitter", s.image_style_jitter);
  r.get("source_outlier_fraction", s.source_outlier_fraction);
  r.get("source_outlier_hue", s.source_outlier_hue);
  r.finish();
  try {
    s.validate();
  } catch (const DataError& e) {
    throw ConfigError(r.name("") + e.what());
  }
  return s;
}

GenerateSettings read_generate(Reader r) {
  GenerateSettings g;
  g.spec = read_spec(r.child("spec"));
  r.get("n_source", g.n_source);
  r.get("n_target", g.n_target);
  r.get("n_cities", g.n_cities);
  r.finish();
  check(g.n_source >= 1, r.name("n_source"), "must be >= 1");
  check(g.n_cities >= 1, r.name("n_cities"), "must be >= 1");
  check(g.n_target >= g.n_cities && g.n_target % g.n_cities == 0, r.name("n_target"),
        "must be a positive multiple of n_cities");
  return g;
}

DataSettings read_data(Reader r) {
  DataSettings d;
  int sources = 0;
  if (r.has("toy_dir")) {
    std::filesystem::path p;
    r.get("toy_dir", p);
    d.toy_dir = p;
    ++sources;
  }
  if (r.has("generate")) {
    d.generate = read_generate(r.child("generate"));
    ++sources;
  }
  if (r.has("cityscapes")) {
    Reader c = r.child("cityscapes");
    DataSettings::Cityscapes cs;
    c.require("source_images", cs.source_images);
    c.require("source_labels", cs.source_labels);
    c.require("target_images", cs.target_images);
    c.require("target_labels", cs.target_labels);
    c.require("eval_images", cs.eval_images);
    c.require("eval_labels", cs.eval_labels);
    c.finish();
    d.cityscapes = cs;
    ++sources;
  }
  r.finish();
  if (sources != 1) {
    Reader::fail("data", "exactly one of toy_dir, generate, cityscapes is required");
  }
  return d;
}

ClassPartition read_partition(Reader r) {
  ClassPartition p;
  r.get("well", p.well);
  r.get("under", p.under);
  r.finish();
  return p;
}

}  // namespace

void TrainConfig::validate() const {
  auto positive = [](double v, const char* field) {
    check(v > 0.0, field, "must be > 0");
  };
  check(lambda_adv >= 0.0, "train.lambda_adv", "must be >= 0");
  check(lambda_kd >= 0.0, "train.lambda_kd", "must be >= 0");
  positive(tau, "train.tau");
  positive(focal.alpha, "train.focal.alpha");
  check(focal.gamma >= 0.0, "train.focal.gamma", "must be >= 0");
  positive(delta0, "train.delta0");
  check(delta_max >= delta0, "train.delta_max", "must be >= delta0");
  check(seg_optimizer.lr >= 0.0, "train.seg_optimizer.lr", "must be >= 0");
  check(seg_optimizer.momentum >= 0.0 && seg_optimizer.momentum < 1.0,
        "train.seg_optimizer.momentum", "must lie in [0, 1)");
  check(seg_optimizer.weight_decay >= 0.0, "train.seg_optimizer.weight_decay", "must be >= 0");
  positive(seg_optimizer.poly_power, "train.seg_optimizer.poly_power");
  check(disc_optimizer.lr >= 0.0, "train.disc_optimizer.lr", "must be >= 0");
  check(disc_optimizer.beta1 >= 0.0 && disc_optimizer.beta1 < 1.0 &&
            disc_optimizer.beta2 >= 0.0 && disc_optimizer.beta2 < 1.0,
        "train.disc_optimizer.betas", "must lie in [0, 1)");
  positive(disc_optimizer.eps, "train.disc_optimizer.eps");
  positive(disc_optimizer.poly_power, "train.disc_optimizer.poly_power");
  check(batch_size >= 1, "train.batch_size", "must be >= 1");
  check(kd_iterations >= 1, "train.kd_iterations", "must be >= 1");
  check(finetune_lr >= 0.0, "train.finetune_lr", "must be >= 0");
  check(max_adv_epochs >= 1, "train.max_adv_epochs", "must be >= 1");
  check(iterations_per_epoch >= 0, "train.iterations_per_epoch", "must be >= 0");
  check(pretrain.epochs >= 0, "train.pretrain.epochs", "must be >= 0");
  check(pretrain.lr >= 0.0, "train.pretrain.lr", "must be >= 0");
  check(fda_beta >= 0.0 && fda_beta <= 0.5, "train.fda_beta", "must lie in [0, 0.5]");
  try {
    model.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("train.model: ") + e.what());
  }
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kPixDA: return "pixda";
    case Method::kSourceOnly: return "source_only";
    case Method::kJointTraining: return "joint_training";
    case Method::kFineTuning: return "fine_tuning";
    case Method::kImageWiseAdversarial: return "image_wise_adversarial";
  }
  return "pixda";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kPixDA, Method::kSourceOnly, Method::kJointTraining,
                   Method::kFineTuning, Method::kImageWiseAdversarial}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("method: unknown method '" + name +
                    "' (valid: pixda, source_only, joint_training, fine_tuning, "
                    "image_wise_adversarial)");
}

void RunConfig::validate() const {
  train.validate();
  check(k_shot >= 1, "k_shot", "must be >= 1");
  const int c = train.model.class_count;
  for (int k : partition.well) check(k >= 0 && k < c, "partition.well", "class outside [0, C)");
  for (int k : partition.under) check(k >= 0 && k < c, "partition.under", "class outside [0, C)");
  if (data.generate) {
    check(data.generate->spec.class_count == c, "data.generate.spec.class_count",
          "must equal train.model.class_count");
  }
}

void AblationConfig::validate() const {
  train.validate();
  check(k_shot >= 1, "k_shot", "must be >= 1");
  check(!seeds.empty(), "seeds", "must list at least one seed");
  check(!variants.empty(), "variants", "must list at least one variant");
  const int c = train.model.class_count;
  for (int k : rare_classes) check(k >= 0 && k < c, "rare_classes", "class outside [0, C)");
}

Json to_json(const FocalParams& p) { return Json{{"alpha", p.alpha}, {"gamma", p.gamma}}; }

Json to_json(const SegmenterConfig& c) {
  return Json{{"class_count", c.class_count},
              {"base_channels", c.base_channels},
              {"depth", c.depth},
              {"output_stride", c.output_stride}};
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["lambda_adv"] = c.lambda_adv;
  j["lambda_kd"] = c.lambda_kd;
  j["tau"] = c.tau;
  j["focal"] = to_json(c.focal);
  j["delta0"] = c.delta0;
  j["delta_max"] = c.delta_max;
  j["seg_optimizer"] = Json{{"kind", "SGD"},
                            {"lr", c.seg_optimizer.lr},
                            {"momentum", c.seg_optimizer.momentum},
                            {"weight_decay", c.seg_optimizer.weight_decay},
                            {"poly_power", c.seg_optimizer.poly_power}};
  j["disc_optimizer"] = Json{{"kind", "Adam"},
                             {"lr", c.disc_optimizer.lr},
                             {"betas", {c.disc_optimizer.beta1, c.disc_optimizer.beta2}},
                             {"eps", c.disc_optimizer.eps},
                             {"poly_power", c.disc_optimizer.poly_power}};
  j["batch_size"] = c.batch_size;
  j["kd_iterations"] = c.kd_iterations;
  j["finetune_lr"] = c.finetune_lr;
  j["max_adv_epochs"] = c.max_adv_epochs;
  j["iterations_per_epoch"] = c.iterations_per_epoch;
  j["seed"] = c.seed;
  j["pretrain"] = Json{{"epochs", c.pretrain.epochs}, {"lr", c.pretrain.lr}};
  j["fda_beta"] = c.fda_beta;
  j["model"] = to_json(c.model);
  return j;
}

Json to_json(const ToySceneSpec& s) {
  Json j;
  j["class_count"] = s.class_count;
  j["class_frequency_targets"] = s.class_frequency_targets;
  j["rare_object_classes"] = s.rare_object_classes;
  j["domain_shift"] = Json{{"hue_shift", s.domain_shift.hue_shift},
                           {"noise_sigma", s.domain_shift.noise_sigma},
                           {"horizon_offset", s.domain_shift.horizon_offset}};
  j["image_size"] = {s.height, s.width};
  j["seed"] = s.seed;
  j["city_style_jitter"] = s.city_style_jitter;
  j["object_size"] = s.object_size;
  j["colour_cast"] = s.colour_cast;
  j["image_style_jitter"] = s.image_style_jitter;
  j["source_outlier_fraction"] = s.source_outlier_fraction;
  j["source_outlier_hue"] = s.source_outlier_hue;
  return j;
}

Json to_json(const ClassPartition& p) { return Json{{"well", p.well}, {"under", p.under}}; }

Json to_json(const GenerateSettings& g) {
  return Json{{"spec", to_json(g.spec)},
              {"n_source", g.n_source},
              {"n_target", g.n_target},
              {"n_cities", g.n_cities}};
}

Json to_json(const DataSettings& d) {
  Json j = Json::object();
  if (d.toy_dir) j["toy_dir"] = d.toy_dir->string();
  if (d.generate) j["generate"] = to_json(*d.generate);
  if (d.cityscapes) {
    const auto& c = *d.cityscapes;
    j["cityscapes"] = Json{{"source_images", c.source_images.string()},
                           {"source_labels", c.source_labels.string()},
                           {"target_images", c.target_images.string()},
                           {"target_labels", c.target_labels.string()},
                           {"eval_images", c.eval_images.string()},
                           {"eval_labels", c.eval_labels.string()}};
  }
  return j;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["method"] = method_name(c.method);
  j["train"] = to_json(c.train);
  j["data"] = to_json(c.data);
  j["k_shot"] = c.k_shot;
  j["partition"] = to_json(c.partition);
  j["zero_union"] = policy_name(c.zero_union);
  j["class_names"] = c.class_names;
  j["init_checkpoint"] = c.init_checkpoint ? Json(c.init_checkpoint->string()) : Json(nullptr);
  j["plot"] = c.plot;
  return j;
}

Json to_json(const AblationConfig& c) {
  Json j;
  j["train"] = to_json(c.train);
  j["data"] = to_json(c.data);
  j["k_shot"] = c.k_shot;
  j["seeds"] = c.seeds;
  j["variants"] = c.variants;
  j["partition"] = to_json(c.partition);
  j["rare_classes"] = c.rare_classes;
  return j;
}

SegmenterConfig segmenter_config_from_json(const nlohmann::json& j) {
  return read_segmenter(Reader(j, "model"));
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  Reader r(j, "train");
  TrainConfig c;
  r.get("lambda_adv", c.lambda_adv);
  r.get("lambda_kd", c.lambda_kd);
  r.get("tau", c.tau);
  if (r.has("focal")) {
    Reader f = r.child("focal");
    f.get("alpha", c.focal.alpha);
    f.get("gamma", c.focal.gamma);
    f.finish();
  }
  r.get("delta0", c.delta0);
  r.get("delta_max", c.delta_max);
  if (r.has("seg_optimizer")) c.seg_optimizer = read_sgd(r.child("seg_optimizer"));
  if (r.has("disc_optimizer")) c.disc_optimizer = read_adam(r.child("disc_optimizer"));
  r.get("batch_size", c.batch_size);
  r.get("kd_iterations", c.kd_iterations);
  r.get("finetune_lr", c.finetune_lr);
  r.get("max_adv_epochs", c.max_adv_epochs);
  r.get("iterations_per_epoch", c.iterations_per_epoch);
  r.get("seed", c.seed);
  if (r.has("pretrain")) {
    Reader p = r.child("pretrain");
    p.get("epochs", c.pretrain.epochs);
    p.get("lr", c.pretrain.lr);
    p.finish();
  }
  r.get("fda_beta", c.fda_beta);
  if (r.has("model")) {
    Reader m = r.child("model");
    m.get("class_count", c.model.class_count);
    m.get("base_channels", c.model.base_channels);
    m.get("depth", c.model.depth);
    m.get("output_stride", c.model.output_stride);
    m.finish();
  }
  r.finish();
  c.validate();
  return c;
}

ToySceneSpec toy_spec_from_json(const nlohmann::json& j) { return read_spec(Reader(j, "spec")); }

GenerateSettings generate_settings_from_json(const nlohmann::json& j) {
  return read_generate(Reader(j, ""));
}

ClassPartition partition_from_json(const nlohmann::json& j) {
  return read_partition(Reader(j, "partition"));
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  Reader r(j, "");
  RunConfig c;
  std::string method = "pixda";
  r.get("method", method);
  c.method = parse_method(method);
  if (r.has("train")) c.train = train_config_from_json(r.raw("train"));
  if (!r.has("data")) Reader::fail("data", "missing required field");
  c.data = read_data(r.child("data"));
  r.get("k_shot", c.k_shot);
  if (r.has("partition")) c.partition = read_partition(r.child("partition"));
  std::string policy = "exclude";
  r.get("zero_union", policy);
  try {
    c.zero_union = parse_policy(policy);
  } catch (const InvalidArgument& e) {
    Reader::fail("zero_union", e.what());
  }
  r.get("class_names", c.class_names);
  if (r.has("init_checkpoint") && !r.raw("init_checkpoint").is_null()) {
    std::filesystem::path p;
    r.get("init_checkpoint", p);
    c.init_checkpoint = p;
  }
  r.get("plot", c.plot);
  r.finish();
  c.validate();
  return c;
}

AblationConfig ablation_config_from_json(const nlohmann::json& j) {
  Reader r(j, "");
  AblationConfig c;
  if (r.has("train")) c.train = train_config_from_json(r.raw("train"));
  if (!r.has("data")) Reader::fail("data", "missing required field");
  c.data = read_data(r.child("data"));
  r.get("k_shot", c.k_shot);
  r.get("seeds", c.seeds);
  r.require("variants", c.variants);
  if (r.has("partition")) c.partition = read_partition(r.child("partition"));
  r.get("rare_classes", c.rare_classes);
  r.finish();
  c.validate();
  return c;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace pixda

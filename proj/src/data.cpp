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
#include "pixda/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "pixda/config.hpp"
#include "pixda/png_io.hpp"
#include "pixda/random.hpp"

namespace pixda {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kSourceStream = 1;
constexpr std::uint64_t kTargetStream = 2;
constexpr std::uint64_t kCityStream = 3;
constexpr std::uint64_t kImageStyleStream = 4;
constexpr std::uint64_t kOutlierStream = 5;
constexpr double kBaseNoise = 0.04;
constexpr double kTextureAmplitude = 0.06;

using Rgb = std::array<double, 3>;

Rgb hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  Rgb rgb{};
  switch (static_cast<int>(h / 60.0)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  return {rgb[0] + m, rgb[1] + m, rgb[2] + m};
}

// Rotation by `degrees` about the grey axis of RGB space.
Rgb rotate_hue(const Rgb& c, double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(a), sn = std::sin(a);
  const double k = (1.0 - cs) / 3.0, r = std::sqrt(1.0 / 3.0) * sn;
  return {c[0] * (cs + k) + c[1] * (k - r) + c[2] * (k + r),
          c[0] * (k + r) + c[1] * (cs + k) + c[2] * (k - r),
          c[0] * (k - r) + c[1] * (k + r) + c[2] * (cs + k)};
}

struct Style {
  double hue = 0.0;
  double gain = 1.0;
  Rgb cast{};
  double noise = kBaseNoise;
  double horizon = 0.0;  // pixels
};

Style city_style(const ToySceneSpec& spec, int city) {
  Rng rng(derive_seed(spec.seed, kCityStream, static_cast<std::uint64_t>(city)));
  const double j = spec.city_style_jitter;
  Style s;
  s.hue = spec.domain_shift.hue_shift + j * 60.0 * (2.0 * uniform01(rng) - 1.0);
  s.gain = 1.0 + j * (2.0 * uniform01(rng) - 1.0);
  s.noise = kBaseNoise + spec.domain_shift.noise_sigma;
  s.horizon = spec.domain_shift.horizon_offset * spec.height * (2.0 * uniform01(rng) - 1.0);
  for (double& v : s.cast) v = spec.colour_cast * (2.0 * uniform01(rng) - 1.0);
  return s;
}

Style image_style(const ToySceneSpec& spec, Style s, int index) {
  const double j = spec.image_style_jitter;
  if (j == 0.0) return s;
  Rng rng(derive_seed(spec.seed, kImageStyleStream, static_cast<std::uint64_t>(index)));
  s.hue += j * 60.0 * (2.0 * uniform01(rng) - 1.0);
  s.gain *= 1.0 + j * (2.0 * uniform01(rng) - 1.0);
  for (double& v : s.cast) v += j * spec.colour_cast * (2.0 * uniform01(rng) - 1.0);
  return s;
}

float quantize(double v) {
  return static_cast<float>(std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0);
}

LabeledImage render(const ToySceneSpec& spec, const Style& style, Rng& rng) {
  const int h = spec.height, w = spec.width, c = spec.class_count;
  double total = 0.0;
  for (double f : spec.class_frequency_targets) total += f;
  const std::set<int> rare(spec.rare_object_classes.begin(), spec.rare_object_classes.end());

  // Bands: non-rare classes from the highest index at the top down to the
  // lowest index at the bottom.
  std::vector<int> bands;
  double band_total = 0.0;
  for (int k = c - 1; k >= 0; --k) {
    if (!rare.count(k)) {
      bands.push_back(k);
      band_total += spec.class_frequency_targets[static_cast<std::size_t>(k)];
    }
  }
  const double shift = (2.0 * uniform01(rng) - 1.0) * 1.5 + style.horizon;
  const double amp = 1.0;
  const double period = w * (0.5 + uniform01(rng));
  const double phase = 2.0 * std::numbers::pi * uniform01(rng);
  std::vector<double> cuts;
  double cum = 0.0;
  for (std::size_t b = 0; b + 1 < bands.size(); ++b) {
    cum += spec.class_frequency_targets[static_cast<std::size_t>(bands[b])] / band_total;
    cuts.push_back(cum * h);
  }

  LabeledImage img{Tensor({3, h, w}), LabelMap(h, w), std::nullopt, ""};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double off = shift + amp * std::sin(2.0 * std::numbers::pi * x / period + phase);
      int b = 0;
      while (b < static_cast<int>(cuts.size()) &&
             y + 0.5 >= cuts[static_cast<std::size_t>(b)] + off) {
        ++b;
      }
      img.labels.values.at(y, x) = bands.empty() ? 0 : bands[static_cast<std::size_t>(b)];
    }
  }

  const int s = spec.object_size;
  for (int r : spec.rare_object_classes) {
    const double lambda =
        spec.class_frequency_targets[static_cast<std::size_t>(r)] / total * h * w / (s * s);
    int count = static_cast<int>(std::floor(lambda));
    if (uniform01(rng) < lambda - count) ++count;
    for (int o = 0; o < count; ++o) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        const int oy = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(h - s + 1)));
        const int ox = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(w - s + 1)));
        bool clear = true;
        for (int y = oy; y < oy + s && clear; ++y)
          for (int x = ox; x < ox + s; ++x)
            if (rare.count(img.labels.values.at(y, x))) clear = false;
        if (!clear) continue;
        for (int y = oy; y < oy + s; ++y)
          for (int x = ox; x < ox + s; ++x) img.labels.values.at(y, x) = r;
        break;
      }
    }
  }

  // Appearance: per-class base colour, an oriented stripe texture, noise.
  std::vector<Rgb> colors;
  std::vector<std::array<double, 3>> texture;  // (fx, fy, phase)
  for (int k = 0; k < c; ++k) {
    colors.push_back(rotate_hue(hsv_to_rgb(360.0 * k / c + 15.0, 0.55, 0.62), style.hue));
    const double theta = std::numbers::pi * uniform01(rng);
    const double freq = 2.0 * std::numbers::pi / (3.0 + 4.0 * uniform01(rng));
    texture.push_back({freq * std::cos(theta), freq * std::sin(theta),
                       2.0 * std::numbers::pi * uniform01(rng)});
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int k = img.labels.values.at(y, x);
      const auto& t = texture[static_cast<std::size_t>(k)];
      const double tex = kTextureAmplitude * std::sin(t[0] * x + t[1] * y + t[2]);
      for (int ch = 0; ch < 3; ++ch) {
        const double v = style.gain * (colors[static_cast<std::size_t>(k)][static_cast<std::size_t>(ch)] + tex) +
                         style.cast[static_cast<std::size_t>(ch)] + style.noise * gaussian(rng);
        img.image.at(ch, y, x) = quantize(v);
      }
    }
  }
  return img;
}

std::string make_id(const std::string& city, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_000000_%06d", city.c_str(), index);
  return buf;
}

LabeledImage from_png(const fs::path& image_path, const fs::path& label_path) {
  const PngImage img = read_png(image_path);
  const PngImage lab = read_png(label_path);
  if (lab.channels != 1) {
    throw DataError(label_path.string() + ": label file must be single-channel");
  }
  if (img.width != lab.width || img.height != lab.height) {
    throw DataError(label_path.string() + ": label size differs from its image");
  }
  LabeledImage out{Tensor({3, img.height, img.width}), LabelMap(img.height, img.width),
                   std::nullopt, ""};
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const std::uint8_t v = img.channels == 3 ? img.pixels[i * 3 + ch] : img.pixels[i];
      out.image[static_cast<std::size_t>(ch) * n + i] = static_cast<float>(v / 255.0);
    }
    out.labels.values[i] = lab.pixels[i];
  }
  return out;
}

void to_png(const LabeledImage& item, const fs::path& image_path, const fs::path& label_path) {
  const int h = item.height(), w = item.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  PngImage img{w, h, 3, std::vector<std::uint8_t>(n * 3)};
  PngImage lab{w, h, 1, std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const double v = item.image[static_cast<std::size_t>(ch) * n + i];
      img.pixels[i * 3 + ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    const std::int32_t l = item.labels.values[i];
    if (l < 0 || l > 255) throw DataError(item.id + ": label does not fit in 8 bits");
    lab.pixels[i] = static_cast<std::uint8_t>(l);
  }
  write_png(image_path, img);
  write_png(label_path, lab);
}

}  // namespace

void ToySceneSpec::validate() const {
  if (class_count < 1) throw DataError("class_count: must be >= 1");
  if (class_frequency_targets.size() != static_cast<std::size_t>(class_count)) {
    throw DataError("class_frequency_targets: expected " + std::to_string(class_count) +
                    " weights");
  }
  double total = 0.0;
  for (double f : class_frequency_targets) {
    if (!(f > 0.0)) throw DataError("class_frequency_targets: weights must be positive");
    total += f;
  }
  std::set<int> seen;
  for (int r : rare_object_classes) {
    if (r < 0 || r >= class_count) {
      throw DataError("rare_object_classes: class " + std::to_string(r) +
                      " is not in the class set");
    }
    if (!seen.insert(r).second) throw DataError("rare_object_classes: duplicate class");
  }
  if (static_cast<int>(seen.size()) == class_count) {
    throw DataError("rare_object_classes: at least one class must be a background band");
  }
  if (height < 4 || width < 4) throw DataError("image_size: must be at least 4x4");
  if (object_size < 1 || object_size > std::min(height, width) / 2) {
    throw DataError("object_size: must lie in [1, min(H, W) / 2]");
  }
  if (!(city_style_jitter >= 0.0)) throw DataError("city_style_jitter: must be >= 0");
  if (!(colour_cast >= 0.0)) throw DataError("colour_cast: must be >= 0");
  if (!(image_style_jitter >= 0.0)) throw DataError("image_style_jitter: must be >= 0");
  if (!(source_outlier_fraction >= 0.0 && source_outlier_fraction <= 1.0)) {
    throw DataError("source_outlier_fraction: must lie in [0, 1]");
  }
  if (!(domain_shift.noise_sigma >= 0.0)) throw DataError("domain_shift.noise_sigma: must be >= 0");
  double rare_cover = 0.0;
  for (int r : rare_object_classes) {
    rare_cover += class_frequency_targets[static_cast<std::size_t>(r)] / total;
  }
  if (rare_cover > kMaxRareCoverage) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "class_frequency_targets: infeasible, rare classes would cover %.3f of "
                  "each image (at most %.2f can be placed as %dx%d objects)",
                  rare_cover, kMaxRareCoverage, object_size, object_size);
    throw DataError(buf);
  }
}

ToyPair generate_toy_pair(const ToySceneSpec& spec, int n_source, int n_target, int n_cities) {
  spec.validate();
  if (n_source < 0 || n_target < 0) throw DataError("image counts must be >= 0");
  if (n_cities < 1) throw DataError("n_cities: must be >= 1");
  if (n_target % n_cities != 0) {
    throw DataError("n_target (" + std::to_string(n_target) +
                    ") must be divisible by n_cities (" + std::to_string(n_cities) + ")");
  }
  ToyPair pair;
  const Style source_style;
  Style outlier_style;
  outlier_style.hue = spec.source_outlier_hue;
  for (int i = 0; i < n_source; ++i) {
    Rng pick(derive_seed(spec.seed, kOutlierStream, static_cast<std::uint64_t>(i)));
    const bool outlier = uniform01(pick) < spec.source_outlier_fraction;
    Rng rng(derive_seed(spec.seed, kSourceStream, static_cast<std::uint64_t>(i)));
    LabeledImage img = render(spec, outlier ? outlier_style : source_style, rng);
    img.id = make_id("synth", i);
    pair.source.push_back(std::move(img));
  }
  const int per_city = n_target / n_cities;
  for (int k = 0; k < n_cities; ++k) {
    const Style style = city_style(spec, k);
    for (int j = 0; j < per_city; ++j) {
      const int i = k * per_city + j;
      Rng rng(derive_seed(spec.seed, kTargetStream, static_cast<std::uint64_t>(i)));
      LabeledImage img = render(spec, image_style(spec, style, i), rng);
      img.city = "city" + std::to_string(k);
      img.id = make_id(*img.city, i);
      pair.target.push_back(std::move(img));
    }
  }
  return pair;
}

std::vector<LabeledImage> kshot_select(std::span<const LabeledImage> dataset, int k,
                                       std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("kshot_select: k must be >= 1");
  std::map<std::string, std::vector<std::size_t>> by_city;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!dataset[i].city) {
      throw DataError("kshot_select: image " + dataset[i].id + " has no city metadata");
    }
    by_city[*dataset[i].city].push_back(i);
  }
  Rng rng(derive_seed(seed, 0x6b73686f74ull));
  std::vector<LabeledImage> out;
  for (auto& [city, idx] : by_city) {
    if (static_cast<int>(idx.size()) < k) {
      throw DataError("kshot_select: city '" + city + "' has " + std::to_string(idx.size()) +
                      " images, fewer than k = " + std::to_string(k));
    }
    std::vector<std::size_t> order = idx;
    shuffle(order.begin(), order.end(), rng);
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());
    for (std::size_t i : order) out.push_back(dataset[i]);
  }
  return out;
}

std::vector<LabeledImage> exclude(std::span<const LabeledImage> dataset,
                                  std::span<const LabeledImage> taken) {
  std::set<std::string> ids;
  for (const auto& t : taken) ids.insert(t.id);
  std::vector<LabeledImage> out;
  for (const auto& d : dataset) {
    if (!ids.count(d.id)) out.push_back(d);
  }
  return out;
}

std::string cityscapes_stem(const std::string& filename) {
  std::string base = fs::path(filename).stem().string();
  std::size_t pos = 0;
  for (int t = 0; t < 3; ++t) {
    pos = base.find('_', pos);
    if (pos == std::string::npos) {
      if (t == 2) return base;
      throw DataError(filename + ": not a Cityscapes stem (city_seq_frame)");
    }
    if (t < 2) ++pos;
  }
  return base.substr(0, pos);
}

std::string city_of_stem(const std::string& stem) {
  const auto pos = stem.find('_');
  if (pos == std::string::npos || pos == 0) {
    throw DataError(stem + ": not a Cityscapes stem (city_seq_frame)");
  }
  return stem.substr(0, pos);
}

std::vector<LabeledImage> load_cityscapes_format(const fs::path& image_dir,
                                                 const fs::path& label_dir) {
  auto scan = [](const fs::path& dir) {
    std::map<std::string, std::vector<fs::path>> files;
    if (!fs::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (!e.is_regular_file() || e.path().extension() != ".png") continue;
      files[cityscapes_stem(e.path().filename().string())].push_back(e.path());
    }
    return files;
  };
  const auto images = scan(image_dir);
  const auto labels = scan(label_dir);
  std::vector<LabeledImage> out;
  for (const auto& [stem, paths] : images) {
    if (paths.size() != 1) throw DataError(paths.front().string() + ": duplicate image stem");
    auto it = labels.find(stem);
    if (it == labels.end()) throw DataError(paths.front().string() + ": no label file for stem " + stem);
    fs::path label = it->second.front();
    if (it->second.size() > 1) {
      auto train_ids = std::find_if(it->second.begin(), it->second.end(), [](const fs::path& p) {
        return p.filename().string().find("labelTrainIds") != std::string::npos;
      });
      if (train_ids == it->second.end()) {
        throw DataError(label.string() + ": several label files share stem " + stem);
      }
      label = *train_ids;
    }
    LabeledImage item = from_png(paths.front(), label);
    item.id = stem;
    item.city = city_of_stem(stem);
    out.push_back(std::move(item));
  }
  for (const auto& [stem, paths] : labels) {
    if (!images.count(stem)) throw DataError(paths.front().string() + ": no image file for stem " + stem);
  }
  return out;
}

void write_toy_dataset(const fs::path& dir, const ToyDataset& data) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "labels");
  nlohmann::ordered_json meta;
  meta["schema"] = "pixda.toy_dataset/1";
  meta["spec"] = to_json(data.spec);
  meta["n_cities"] = data.n_cities;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  auto put = [&](const LabeledImage& item, const char* domain) {
    to_png(item, dir / "images" / (item.id + ".png"), dir / "labels" / (item.id + ".png"));
    nlohmann::ordered_json e;
    e["id"] = item.id;
    e["domain"] = domain;
    e["city"] = item.city ? nlohmann::ordered_json(*item.city) : nlohmann::ordered_json(nullptr);
    entries.push_back(e);
  };
  for (const auto& s : data.source) put(s, "source");
  for (const auto& t : data.target) put(t, "target");
  meta["images"] = entries;
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
}

ToyDataset read_toy_dataset(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw DataError((dir / "meta.json").string() + ": cannot open");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }
  if (meta.value("schema", "") != "pixda.toy_dataset/1") {
    throw DataError((dir / "meta.json").string() + ": unknown schema");
  }
  ToyDataset data;
  data.spec = toy_spec_from_json(meta.at("spec"));
  data.n_cities = meta.at("n_cities").get<int>();
  for (const auto& e : meta.at("images")) {
    const std::string id = e.at("id").get<std::string>();
    LabeledImage item = from_png(dir / "images" / (id + ".png"), dir / "labels" / (id + ".png"));
    item.id = id;
    if (!e.at("city").is_null()) item.city = e.at("city").get<std::string>();
    const std::string domain = e.at("domain").get<std::string>();
    if (domain == "source") {
      data.source.push_back(std::move(item));
    } else if (domain == "target") {
      data.target.push_back(std::move(item));
    } else {
      throw DataError(id + ": unknown domain '" + domain + "'");
    }
  }
  return data;
}

std::vector<double> class_frequencies(std::span<const LabeledImage> images, int class_count) {
  std::vector<double> counts(static_cast<std::size_t>(class_count), 0.0);
  double total = 0.0;
  for (const auto& img : images) {
    for (std::size_t i = 0; i < img.labels.size(); ++i) {
      if (!img.labels.is_valid(i)) continue;
      const int k = img.labels.values[i];
      if (k >= 0 && k < class_count) {
        counts[static_cast<std::size_t>(k)] += 1.0;
        total += 1.0;
      }
    }
  }
  if (total > 0) {
    for (double& c : counts) c /= total;
  }
  return counts;
}

}  // namespace pixda

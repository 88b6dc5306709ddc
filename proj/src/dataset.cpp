// Copyright 2026 The xylid Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xylid/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "xylid/error.hpp"

namespace xylid {

namespace {

constexpr std::string_view kManifestMagic = "#xylid-manifest 1";

// Texture parameter grid the class designs are drawn from.
constexpr std::array<double, 6> kAngles{0, 30, 60, 90, 120, 150};
constexpr std::array<double, 4> kPeriods{6, 9, 14, 22};
constexpr std::array<double, 4> kDensities{0, 6, 15, 30};
constexpr std::array<double, 2> kRadii{1.6, 3.0};
constexpr std::array<std::pair<double, double>, 3> kRays{{{40, 0}, {24, 2}, {48, 3}}};
constexpr std::array<double, 2> kNoise{0.02, 0.06};
constexpr std::array<double, 2> kAmplitudes{0.06, 0.14};
constexpr std::array<std::size_t, 7> kRadix{kAngles.size(), kPeriods.size(), kDensities.size(), kRadii.size(),
                                            kRays.size(),   kNoise.size(),   kAmplitudes.size()};

// Same-family pairs from the default taxonomy, preferred for siblings.
constexpr std::array<std::pair<std::string_view, std::string_view>, 8> kPreferredSiblings{{
    {"dark-red-meranti", "light-red-meranti"},
    {"white-meranti", "yellow-meranti"},
    {"balau", "red-balau"},
    {"keledang", "terap"},
    {"kempas", "tualang"},
    {"merawan", "giam"},
    {"nyatoh", "bitis"},
    {"mata-ulat", "perupok"},
}};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::array<std::size_t, 7> decode_levels(std::size_t code) {
  std::array<std::size_t, 7> levels{};
  for (std::size_t f = 0; f < kRadix.size(); ++f) {
    levels[f] = code % kRadix[f];
    code /= kRadix[f];
  }
  return levels;
}

SynthClassParams params_from_levels(const std::array<std::size_t, 7>& l, double base) {
  SynthClassParams p;
  p.grain_angle = kAngles[l[0]];
  p.grain_period = kPeriods[l[1]];
  p.pore_density = kDensities[l[2]];
  p.pore_radius_mean = kRadii[l[3]];
  p.pore_radius_std = 0.2 * p.pore_radius_mean;
  p.ray_spacing = kRays[l[4]].first;
  p.ray_width = kRays[l[4]].second;
  p.noise_std = kNoise[l[5]];
  p.grain_amplitude = kAmplitudes[l[6]];
  p.base_intensity = base;
  return p;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find('\t', start);
    if (end == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

std::uint64_t parse_u64(std::string_view s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": bad integer '" + std::string(s) + "'");
  }
}

SynthClassParams parse_params(std::string_view s, std::size_t line_no) {
  SynthClassParams p;
  const std::string text(s);
  const int n = std::sscanf(text.c_str(),
                            "angle=%lf period=%lf amplitude=%lf pore_density=%lf pore_r=%lf pore_r_std=%lf "
                            "ray_spacing=%lf ray_width=%lf base=%lf noise=%lf",
                            &p.grain_angle, &p.grain_period, &p.grain_amplitude, &p.pore_density,
                            &p.pore_radius_mean, &p.pore_radius_std, &p.ray_spacing, &p.ray_width,
                            &p.base_intensity, &p.noise_std);
  if (n != 10) fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": bad texture parameters");
  return p;
}

}  // namespace

std::uint64_t image_seed(std::uint64_t dataset_seed, std::size_t class_index, std::size_t image_index) {
  return splitmix64(splitmix64(dataset_seed ^ 0x5851f42d4c957f2dULL) + (class_index << 20) + image_index);
}

GrayImage render_dataset_image(const SynthClass& cls, std::uint64_t seed, int width, int height) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SynthClassParams p = cls.params;
  // Specimen-to-specimen variation.
  p.grain_angle += 3.0 * u(rng);
  p.grain_period *= 1.0 + 0.06 * u(rng);
  p.grain_amplitude *= 1.0 + 0.12 * u(rng);
  p.pore_density *= 1.0 + 0.12 * u(rng);
  p.pore_radius_mean *= 1.0 + 0.08 * u(rng);
  p.ray_spacing *= 1.0 + 0.08 * u(rng);
  p.noise_std *= 1.0 + 0.12 * u(rng);
  p.base_intensity = std::clamp(p.base_intensity + 0.05 * u(rng), 0.0, 1.0);
  GrayImage img = synth_texture(p, width, height, rng());

  // Uncontrolled illumination: global gain plus a linear ramp.
  const double gain = 1.0 + 0.2 * u(rng);
  const double ramp = 0.15 * u(rng);
  const double dir = 3.14159265358979323846 * u(rng);
  const double cx = std::cos(dir) / width;
  const double cy = std::sin(dir) / height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double& v = img.at(x, y);
      v = std::clamp(gain * v + ramp * ((x - 0.5 * width) * cx + (y - 0.5 * height) * cy), 0.0, 1.0);
    }
  return img;
}

Manifest design_dataset(const SynthDatasetOptions& o) {
  if (o.classes < 2) fail(ErrorCode::kInvalidArgument, "need at least 2 classes");
  if (o.per_class < 1) fail(ErrorCode::kInvalidArgument, "need at least 1 image per class");
  if (o.sibling_pairs < 0 || 2 * o.sibling_pairs > o.classes) {
    fail(ErrorCode::kInvalidArgument, "sibling pairs must be between 0 and classes/2");
  }
  if (o.width < 64 || o.height < 64) fail(ErrorCode::kInvalidArgument, "images must be at least 64x64");

  Manifest m;
  m.seed = o.seed;
  m.width = o.width;
  m.height = o.height;
  const Taxonomy& tax = default_taxonomy();
  for (int i = 0; i < o.classes; ++i) {
    SynthClass c;
    if (static_cast<std::size_t>(i) < tax.size()) {
      c.class_id = tax.classes()[i].class_id;
      c.family = tax.classes()[i].family;
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "synthetic-%03d", i + 1);
      c.class_id = buf;
    }
    m.classes.push_back(std::move(c));
  }

  // Spread classes over the grid: greedy pick in seeded order, keeping as
  // many differing factors between any two classes as the grid allows.
  std::size_t grid = 1;
  for (auto r : kRadix) grid *= r;
  std::vector<std::size_t> order(grid);
  for (std::size_t i = 0; i < grid; ++i) order[i] = i;
  std::mt19937_64 rng(splitmix64(o.seed));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::array<std::size_t, 7>> picked;
  std::set<std::size_t> used;
  for (int min_distance = 3; min_distance >= 0 && picked.size() < m.classes.size(); --min_distance) {
    for (std::size_t code : order) {
      if (picked.size() == m.classes.size()) break;
      if (used.count(code)) continue;
      const auto levels = decode_levels(code);
      bool ok = true;
      for (const auto& other : picked) {
        int distance = 0;
        for (std::size_t f = 0; f < levels.size(); ++f) distance += levels[f] != other[f];
        if (distance < min_distance) {
          ok = false;
          break;
        }
      }
      if (ok) {
        picked.push_back(levels);
        used.insert(code);
      }
    }
  }
  std::uniform_real_distribution<double> base(0.35, 0.65);
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    // Grids smaller than the class count repeat designs; cycle defensively.
    m.classes[i].params = params_from_levels(picked[i % picked.size()], base(rng));
  }

  std::set<std::string> in_pair;
  auto index_of = [&](std::string_view id) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < m.classes.size(); ++i)
      if (m.classes[i].class_id == id) return i;
    return std::nullopt;
  };
  auto add_pair = [&](std::size_t a, std::size_t b, std::string family) {
    SynthClass& sb = m.classes[b];
    sb.params = m.classes[a].params;
    sb.params.grain_angle += o.sibling_angle_delta;
    if (sb.params.pore_density > 0) {
      sb.params.pore_density *= o.sibling_density_factor;
    } else {
      sb.params.grain_amplitude *= o.sibling_density_factor;
    }
    m.classes[a].family = family;
    sb.family = family;
    in_pair.insert(m.classes[a].class_id);
    in_pair.insert(sb.class_id);
    m.siblings.push_back({m.classes[a].class_id, sb.class_id, std::move(family)});
  };
  for (const auto& [a, b] : kPreferredSiblings) {
    if (static_cast<int>(m.siblings.size()) == o.sibling_pairs) break;
    const auto ia = index_of(a);
    const auto ib = index_of(b);
    if (!ia || !ib || in_pair.count(std::string(a)) || in_pair.count(std::string(b))) continue;
    const auto fa = m.classes[*ia].family;
    add_pair(*ia, *ib, fa.value_or("sibling-" + std::to_string(m.siblings.size() + 1)));
  }
  for (std::size_t i = 0; i + 1 < m.classes.size() && static_cast<int>(m.siblings.size()) < o.sibling_pairs; ++i) {
    if (in_pair.count(m.classes[i].class_id)) continue;
    std::size_t j = i + 1;
    while (j < m.classes.size() && in_pair.count(m.classes[j].class_id)) ++j;
    if (j == m.classes.size()) break;
    add_pair(i, j, "sibling-" + std::to_string(m.siblings.size() + 1));
  }

  // The manifest text is authoritative: snap parameters to their printed
  // form so a re-read manifest renders bit-identical images.
  for (auto& c : m.classes) c.params = parse_params(canonical_string(c.params), 0);

  for (std::size_t ci = 0; ci < m.classes.size(); ++ci) {
    const std::string hash = hex64(params_hash(m.classes[ci].params));
    for (int k = 0; k < o.per_class; ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "%04d.png", k);
      m.rows.push_back({m.classes[ci].class_id + "/" + name, m.classes[ci].class_id,
                        image_seed(o.seed, ci, static_cast<std::size_t>(k)), hash});
    }
  }
  return m;
}

std::string serialize_manifest(const Manifest& m) {
  std::ostringstream out;
  out << kManifestMagic << "\n";
  out << "@seed\t" << m.seed << "\n";
  out << "@size\t" << m.width << "\t" << m.height << "\n";
  for (const auto& c : m.classes) {
    out << "@class\t" << c.class_id << "\t" << hex64(params_hash(c.params)) << "\t" << canonical_string(c.params)
        << "\n";
  }
  for (const auto& s : m.siblings) out << "@sibling\t" << s.a << "\t" << s.b << "\t" << s.family << "\n";
  for (const auto& r : m.rows) out << r.path << "\t" << r.class_id << "\t" << r.seed << "\t" << r.params_hash << "\n";
  return out.str();
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::size_t start = 0;
  std::size_t line_no = 0;
  bool header = false;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kManifestMagic) fail(ErrorCode::kFormat, "manifest line 1: bad header");
      header = true;
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_tabs(line);
    auto want = [&](std::size_t n) {
      if (f.size() != n) fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": expected " +
                                                     std::to_string(n) + " fields");
    };
    if (f[0] == "@seed") {
      want(2);
      m.seed = parse_u64(f[1], line_no);
    } else if (f[0] == "@size") {
      want(3);
      m.width = static_cast<int>(parse_u64(f[1], line_no));
      m.height = static_cast<int>(parse_u64(f[2], line_no));
    } else if (f[0] == "@class") {
      want(4);
      SynthClass c;
      c.class_id = std::string(f[1]);
      c.params = parse_params(f[3], line_no);
      m.classes.push_back(std::move(c));
    } else if (f[0] == "@sibling") {
      want(4);
      m.siblings.push_back({std::string(f[1]), std::string(f[2]), std::string(f[3])});
    } else if (f[0].front() == '@') {
      fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": unknown directive");
    } else {
      want(4);
      m.rows.push_back({std::string(f[0]), std::string(f[1]), parse_u64(f[2], line_no), std::string(f[3])});
    }
  }
  if (!header) fail(ErrorCode::kFormat, "empty manifest");
  for (const auto& s : m.siblings) {
    for (auto& c : m.classes)
      if (c.class_id == s.a || c.class_id == s.b) c.family = s.family;
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& root) {
  return parse_manifest(read_text_file(root / "manifest.tsv"));
}

Taxonomy dataset_taxonomy(const Manifest& m) {
  const Taxonomy& tax = default_taxonomy();
  std::vector<TimberClass> classes;
  for (const auto& c : m.classes) {
    TimberClass t;
    if (const TimberClass* known = tax.find(c.class_id)) {
      t = *known;
    } else {
      t.class_id = c.class_id;
      t.trade_name = "Synthetic " + c.class_id.substr(c.class_id.rfind('-') + 1);
    }
    for (const auto& s : m.siblings) {
      if (s.a == c.class_id || s.b == c.class_id) t.family = s.family;
    }
    classes.push_back(std::move(t));
  }
  return Taxonomy(std::move(classes), tax.version() + "+synthetic");
}

Manifest write_synth_dataset(const std::filesystem::path& root, const SynthDatasetOptions& options) {
  Manifest m = design_dataset(options);
  std::filesystem::create_directories(root);
  for (const auto& c : m.classes) std::filesystem::create_directories(root / c.class_id);
  std::vector<std::size_t> class_of(m.rows.size());
  for (std::size_t i = 0, ci = 0; ci < m.classes.size(); ++ci)
    for (int k = 0; k < options.per_class; ++k) class_of[i++] = ci;
  parallel_for(
      m.rows.size(),
      [&](std::size_t i) {
        const auto& row = m.rows[i];
        const GrayImage img = render_dataset_image(m.classes[class_of[i]], row.seed, m.width, m.height);
        const Bytes png = encode_png(img);
        write_file_atomic(root / row.path, png);
      },
      options.threads);
  write_file_atomic(root / "manifest.tsv", serialize_manifest(m));
  write_file_atomic(root / "taxonomy.tsv", serialize_taxonomy(dataset_taxonomy(m)));
  return m;
}

std::vector<LabeledVector> load_dataset_features(const std::filesystem::path& root,
                                                 const std::vector<std::string>& class_ids,
                                                 const FeatureSpec& spec, unsigned threads) {
  struct Item {
    std::filesystem::path path;
    std::string class_id;
  };
  std::vector<Item> items;
  for (const auto& id : class_ids) {
    const auto dir = root / id;
    if (!std::filesystem::is_directory(dir)) fail(ErrorCode::kNotFound, "missing class directory for '" + id + "'");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
    }
    if (files.empty()) fail(ErrorCode::kNotFound, "class directory for '" + id + "' has no images");
    std::sort(files.begin(), files.end());
    for (auto& f : files) items.push_back({std::move(f), id});
  }
  std::vector<LabeledVector> out(items.size());
  parallel_for(
      items.size(),
      [&](std::size_t i) {
        const RawImage raw = decode_image(read_file(items[i].path));
        out[i].features = extract_features(preprocess(raw, spec), spec);
        out[i].class_id = items[i].class_id;
      },
      threads);
  return out;
}

}  // namespace xylid

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

#include <gtest/gtest.h>

#include <map>

#include "test_support.hpp"
#include "xylid/dataset.hpp"
#include "xylid/error.hpp"
#include "xylid/util.hpp"

namespace xylid {
namespace {

SynthDatasetOptions small_options() {
  SynthDatasetOptions o;
  o.classes = 4;
  o.per_class = 3;
  o.sibling_pairs = 1;
  o.seed = 5;
  o.width = 128;
  o.height = 128;
  return o;
}

TEST(Dataset, DesignIsDeterministic) {
  const Manifest a = design_dataset(small_options());
  const Manifest b = design_dataset(small_options());
  EXPECT_EQ(serialize_manifest(a), serialize_manifest(b));
  SynthDatasetOptions other = small_options();
  other.seed = 6;
  EXPECT_NE(serialize_manifest(a), serialize_manifest(design_dataset(other)));
}

TEST(Dataset, ManifestRoundTrip) {
  SynthDatasetOptions o = small_options();
  o.classes = 70;  // past the bundled taxonomy, so synthetic ids appear
  o.sibling_pairs = 4;
  const Manifest m = design_dataset(o);
  const Manifest back = parse_manifest(serialize_manifest(m));
  EXPECT_EQ(serialize_manifest(back), serialize_manifest(m));
  ASSERT_EQ(back.classes.size(), 70u);
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    EXPECT_EQ(back.classes[i].class_id, m.classes[i].class_id);
    EXPECT_EQ(back.classes[i].params, m.classes[i].params);
  }
  EXPECT_EQ(back.rows.size(), 70u * 3);
  EXPECT_EQ(m.classes.back().class_id, "synthetic-070");
}

TEST(Dataset, SiblingsShareFamilyAndNearParams) {
  SynthDatasetOptions o = small_options();
  o.classes = 60;
  o.sibling_pairs = 4;
  const Manifest m = design_dataset(o);
  ASSERT_EQ(m.siblings.size(), 4u);
  EXPECT_EQ(m.siblings[0].a, "dark-red-meranti");
  EXPECT_EQ(m.siblings[0].b, "light-red-meranti");
  const Taxonomy tax = dataset_taxonomy(m);
  for (const auto& s : m.siblings) {
    EXPECT_EQ(tax.family_of(s.a), tax.family_of(s.b));
    EXPECT_TRUE(tax.family_of(s.a).has_value());
  }
}

TEST(Dataset, OptionValidation) {
  SynthDatasetOptions o = small_options();
  o.classes = 1;
  EXPECT_THROW(design_dataset(o), Error);
  o = small_options();
  o.sibling_pairs = 3;
  EXPECT_THROW(design_dataset(o), Error);
  o = small_options();
  o.width = 32;
  EXPECT_THROW(design_dataset(o), Error);
  EXPECT_THROW(parse_manifest(""), Error);
  EXPECT_THROW(parse_manifest("not a manifest\n"), Error);
}

TEST(Dataset, WriteAndLoad) {
  testing::TempDir dir;
  const Manifest m = write_synth_dataset(dir.path(), small_options());
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.tsv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "taxonomy.tsv"));
  EXPECT_EQ(serialize_manifest(read_manifest(dir.path())), serialize_manifest(m));
  std::vector<std::string> ids;
  for (const auto& c : m.classes) ids.push_back(c.class_id);
  const FeatureSpec spec;
  const auto data = load_dataset_features(dir.path(), ids, spec, 2);
  ASSERT_EQ(data.size(), 12u);
  std::map<std::string, int> per;
  for (const auto& e : data) {
    ++per[e.class_id];
    EXPECT_EQ(e.features.values.size(), feature_dim(spec));
  }
  for (const auto& id : ids) EXPECT_EQ(per[id], 3);
  // Rendering again from the manifest reproduces the stored file.
  const auto& row = m.rows[4];
  EXPECT_EQ(encode_png(render_dataset_image(m.classes[1], row.seed, m.width, m.height)), read_file(dir / row.path));
}

TEST(Dataset, MissingClassDirectoryNamesTheClass) {
  testing::TempDir dir;
  const Manifest m = write_synth_dataset(dir.path(), small_options());
  std::filesystem::remove_all(dir / m.classes[2].class_id);
  std::vector<std::string> ids;
  for (const auto& c : m.classes) ids.push_back(c.class_id);
  try {
    load_dataset_features(dir.path(), ids, FeatureSpec{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find(m.classes[2].class_id), std::string::npos);
  }
}

}  // namespace
}  // namespace xylid

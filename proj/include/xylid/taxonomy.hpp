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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xylid {

struct TimberClass {
  std::string class_id;
  std::string trade_name;
  std::optional<std::string> genus;
  std::optional<std::string> family;
  std::optional<std::string> description;

  bool operator==(const TimberClass&) const = default;
};

/// Ordered, immutable set of timber classes. Safe to share between threads
/// once constructed.
class Taxonomy {
 public:
  Taxonomy() = default;
  /// Throws Error(kFormat) on an empty/duplicate class_id or empty trade_name.
  Taxonomy(std::vector<TimberClass> classes, std::string version);

  const std::vector<TimberClass>& classes() const { return classes_; }
  const std::string& version() const { return version_; }
  std::size_t size() const { return classes_.size(); }

  const TimberClass* find(std::string_view class_id) const;
  std::optional<std::size_t> index_of(std::string_view class_id) const;

  /// Full record for `class_id`; throws Error(kNotFound) for unknown ids.
  const TimberClass& wood_info(std::string_view class_id) const;
  /// Family if assigned, std::nullopt when unassigned. Throws Error(kNotFound)
  /// for unknown ids.
  std::optional<std::string> family_of(std::string_view class_id) const;

  bool operator==(const Taxonomy& other) const {
    return version_ == other.version_ && classes_ == other.classes_;
  }

 private:
  std::vector<TimberClass> classes_;
  std::string version_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Taxonomy document (UTF-8, LF line endings):
//
//   #xylid-taxonomy 1                       first line, required
//   # free text                             comment, ignored
//   @version<TAB><version>                  exactly once, before any record
//   <class_id><TAB><trade_name><TAB><genus><TAB><family><TAB><description>
//
// Every record has exactly five fields; an empty genus/family/description
// is absent. class_id matches [a-z0-9-]+. Inside fields, backslash escapes
// \t, \n and \\ stand for tab, newline and backslash. Blank lines are skipped.
Taxonomy load_taxonomy(std::string_view document);
std::string serialize_taxonomy(const Taxonomy& taxonomy);

// Family document:
//   #xylid-families 1
//   <class_id><TAB><genus><TAB><family>
// Overrides genus/family of the listed classes; unknown ids are an error.
Taxonomy apply_family_assignments(const Taxonomy& taxonomy, std::string_view document);

/// Lowercase ASCII trade name with spaces turned into hyphens.
std::string class_id_from_trade_name(std::string_view trade_name);

std::string_view default_taxonomy_document();
std::string_view default_families_document();
/// The bundled 60-class taxonomy with curated families applied.
const Taxonomy& default_taxonomy();

}  // namespace xylid

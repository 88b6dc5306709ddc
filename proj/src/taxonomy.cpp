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

#include "xylid/taxonomy.hpp"

#include <cctype>

#include "xylid/error.hpp"

namespace xylid {

namespace {

constexpr std::string_view kTaxonomyMagic = "#xylid-taxonomy 1";
constexpr std::string_view kFamiliesMagic = "#xylid-families 1";

bool valid_class_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
  }
  return true;
}

std::vector<std::string_view> split_lines(std::string_view doc) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < doc.size()) {
    std::size_t end = doc.find('\n', start);
    if (end == std::string_view::npos) end = doc.size();
    std::string_view line = doc.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
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

std::string unescape(std::string_view field, std::size_t line_no) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\') {
      out.push_back(field[i]);
      continue;
    }
    if (i + 1 == field.size()) {
      fail(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": dangling backslash");
    }
    switch (field[++i]) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case '\\': out.push_back('\\'); break;
      default:
        fail(ErrorCode::kFormat,
             "line " + std::to_string(line_no) + ": unknown escape '\\" + field[i] + "'");
    }
  }
  return out;
}

std::string escape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (char c : field) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\\': out += "\\\\"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::optional<std::string> optional_field(std::string_view field, std::size_t line_no) {
  if (field.empty()) return std::nullopt;
  return unescape(field, line_no);
}

std::string line_context(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

}  // namespace

Taxonomy::Taxonomy(std::vector<TimberClass> classes, std::string version)
    : classes_(std::move(classes)), version_(std::move(version)) {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const auto& c = classes_[i];
    if (c.class_id.empty()) {
      fail(ErrorCode::kFormat, "entry " + std::to_string(i) + ": empty class_id");
    }
    if (c.trade_name.empty()) {
      fail(ErrorCode::kFormat, "entry " + std::to_string(i) + " (" + c.class_id + "): missing trade_name");
    }
    if (!index_.emplace(c.class_id, i).second) {
      fail(ErrorCode::kFormat,
           "entry " + std::to_string(i) + ": duplicate class_id '" + c.class_id + "'");
    }
  }
}

const TimberClass* Taxonomy::find(std::string_view class_id) const {
  const auto it = index_.find(std::string(class_id));
  return it == index_.end() ? nullptr : &classes_[it->second];
}

std::optional<std::size_t> Taxonomy::index_of(std::string_view class_id) const {
  const auto it = index_.find(std::string(class_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const TimberClass& Taxonomy::wood_info(std::string_view class_id) const {
  const TimberClass* c = find(class_id);
  if (c == nullptr) fail(ErrorCode::kNotFound, "unknown class_id '" + std::string(class_id) + "'");
  return *c;
}

std::optional<std::string> Taxonomy::family_of(std::string_view class_id) const {
  return wood_info(class_id).family;
}

Taxonomy load_taxonomy(std::string_view document) {
  const auto lines = split_lines(document);
  if (lines.empty() || lines.front() != kTaxonomyMagic) {
    fail(ErrorCode::kFormat, "line 1: expected header '" + std::string(kTaxonomyMagic) + "'");
  }
  std::optional<std::string> version;
  std::vector<TimberClass> classes;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (line.front() == '@') {
      if (fields.size() != 2 || fields[0] != "@version") {
        fail(ErrorCode::kFormat, line_context(line_no) + "unknown directive");
      }
      if (version) fail(ErrorCode::kFormat, line_context(line_no) + "duplicate @version");
      if (!classes.empty()) {
        fail(ErrorCode::kFormat, line_context(line_no) + "@version must precede records");
      }
      version = unescape(fields[1], line_no);
      continue;
    }
    if (fields.size() != 5) {
      fail(ErrorCode::kFormat, line_context(line_no) + "expected 5 tab-separated fields, got " +
                                   std::to_string(fields.size()));
    }
    TimberClass c;
    c.class_id = std::string(fields[0]);
    if (!valid_class_id(c.class_id)) {
      fail(ErrorCode::kFormat, line_context(line_no) + "invalid class_id '" + c.class_id + "'");
    }
    c.trade_name = unescape(fields[1], line_no);
    if (c.trade_name.empty()) {
      fail(ErrorCode::kFormat, line_context(line_no) + "missing trade_name for '" + c.class_id + "'");
    }
    c.genus = optional_field(fields[2], line_no);
    c.family = optional_field(fields[3], line_no);
    c.description = optional_field(fields[4], line_no);
    if (const auto [it, inserted] = seen.emplace(c.class_id, line_no); !inserted) {
      fail(ErrorCode::kFormat, line_context(line_no) + "duplicate class_id '" + c.class_id +
                                   "' (first defined on line " + std::to_string(it->second) + ")");
    }
    classes.push_back(std::move(c));
  }
  if (!version) fail(ErrorCode::kFormat, "missing @version directive");
  return Taxonomy(std::move(classes), std::move(*version));
}

std::string serialize_taxonomy(const Taxonomy& taxonomy) {
  std::string out;
  out += kTaxonomyMagic;
  out += "\n@version\t" + escape(taxonomy.version()) + "\n";
  for (const auto& c : taxonomy.classes()) {
    out += c.class_id;
    out += '\t' + escape(c.trade_name);
    out += '\t' + escape(c.genus.value_or(""));
    out += '\t' + escape(c.family.value_or(""));
    out += '\t' + escape(c.description.value_or(""));
    out += '\n';
  }
  return out;
}

Taxonomy apply_family_assignments(const Taxonomy& taxonomy, std::string_view document) {
  const auto lines = split_lines(document);
  if (lines.empty() || lines.front() != kFamiliesMagic) {
    fail(ErrorCode::kFormat, "line 1: expected header '" + std::string(kFamiliesMagic) + "'");
  }
  std::vector<TimberClass> classes = taxonomy.classes();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      fail(ErrorCode::kFormat, line_context(line_no) + "expected 3 tab-separated fields");
    }
    const auto idx = taxonomy.index_of(fields[0]);
    if (!idx) {
      fail(ErrorCode::kFormat,
           line_context(line_no) + "unknown class_id '" + std::string(fields[0]) + "'");
    }
    classes[*idx].genus = optional_field(fields[1], line_no);
    classes[*idx].family = optional_field(fields[2], line_no);
  }
  return Taxonomy(std::move(classes), taxonomy.version());
}

std::string class_id_from_trade_name(std::string_view trade_name) {
  std::string id;
  for (char c : trade_name) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80) continue;
    if (std::isspace(u)) {
      if (!id.empty() && id.back() != '-') id.push_back('-');
    } else if (std::isalnum(u)) {
      id.push_back(static_cast<char>(std::tolower(u)));
    } else if (c == '-') {
      id.push_back('-');
    }
  }
  while (!id.empty() && id.back() == '-') id.pop_back();
  return id;
}

const Taxonomy& default_taxonomy() {
  static const Taxonomy instance =
      apply_family_assignments(load_taxonomy(default_taxonomy_document()),
                               default_families_document());
  return instance;
}

}  // namespace xylid

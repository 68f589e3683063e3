/*
 * Copyright 2026 The Fair SA Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairsa/dataset.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "fairsa/common.h"

namespace fairsa {
namespace {

std::vector<std::string> SplitWhitespace(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string token;
  while (in >> token) tokens.push_back(token);
  return tokens;
}

bool IsBlank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

[[noreturn]] void Malformed(const std::filesystem::path& file, std::size_t line_no,
                            const std::string& what) {
  throw Error(file.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::int64_t ParseInt(const std::string& token, const std::filesystem::path& file,
                      std::size_t line_no) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    Malformed(file, line_no, "expected integer, got '" + token + "'");
  }
  return value;
}

std::ifstream OpenText(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open annotation file: " + file.string());
  return in;
}

std::map<std::string, std::int64_t> ReadIdentityFile(const std::filesystem::path& file) {
  auto in = OpenText(file);
  std::map<std::string, std::int64_t> identities;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    const auto tokens = SplitWhitespace(line);
    if (tokens.size() != 2) Malformed(file, line_no, "expected '<filename> <integer>'");
    if (!identities.emplace(tokens[0], ParseInt(tokens[1], file, line_no)).second) {
      Malformed(file, line_no, "duplicate filename '" + tokens[0] + "'");
    }
  }
  return identities;
}

struct AttributeTable {
  std::vector<std::string> names;
  std::map<std::string, std::vector<bool>> rows;
};

AttributeTable ReadAttributeFile(const std::filesystem::path& file) {
  auto in = OpenText(file);
  AttributeTable table;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t declared = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      const auto tokens = SplitWhitespace(line);
      if (tokens.size() != 1) Malformed(file, line_no, "expected record count");
      declared = ParseInt(tokens[0], file, line_no);
      if (declared < 0) Malformed(file, line_no, "negative record count");
      continue;
    }
    if (line_no == 2) {
      table.names = SplitWhitespace(line);
      if (table.names.empty()) Malformed(file, line_no, "expected attribute names");
      continue;
    }
    if (IsBlank(line)) continue;
    const auto tokens = SplitWhitespace(line);
    if (tokens.size() != table.names.size() + 1) {
      Malformed(file, line_no,
                "expected filename and " + std::to_string(table.names.size()) + " flags");
    }
    std::vector<bool> flags;
    flags.reserve(table.names.size());
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      if (tokens[i] == "1") {
        flags.push_back(true);
      } else if (tokens[i] == "-1") {
        flags.push_back(false);
      } else {
        Malformed(file, line_no, "attribute flag must be 1 or -1, got '" + tokens[i] + "'");
      }
    }
    if (!table.rows.emplace(tokens[0], std::move(flags)).second) {
      Malformed(file, line_no, "duplicate filename '" + tokens[0] + "'");
    }
  }
  if (line_no < 2) Malformed(file, line_no, "missing header lines");
  if (static_cast<std::int64_t>(table.rows.size()) != declared) {
    Malformed(file, 1,
              "declared " + std::to_string(declared) + " records, found " +
                  std::to_string(table.rows.size()));
  }
  return table;
}

}  // namespace

Dataset::Dataset(std::vector<ImageRecord> records, std::vector<std::string> attribute_names)
    : records_(std::move(records)), attribute_names_(std::move(attribute_names)) {
  if (records_.empty()) throw Error("dataset is empty");
  std::set<std::string> names(attribute_names_.begin(), attribute_names_.end());
  if (names.size() != attribute_names_.size()) throw Error("duplicate attribute name");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].attributes.size() != attribute_names_.size()) {
      throw Error("record '" + records_[i].id + "' has " +
                  std::to_string(records_[i].attributes.size()) + " attributes, expected " +
                  std::to_string(attribute_names_.size()));
    }
    if (i > 0 && !(records_[i - 1].id < records_[i].id)) {
      throw Error("record ids must be unique and sorted: '" + records_[i - 1].id + "', '" +
                  records_[i].id + "'");
    }
  }
}

std::size_t Dataset::AttributeIndex(const std::string& name) const {
  const auto it = std::find(attribute_names_.begin(), attribute_names_.end(), name);
  if (it == attribute_names_.end()) throw Error("unknown attribute '" + name + "'");
  return static_cast<std::size_t>(it - attribute_names_.begin());
}

std::vector<std::int64_t> Dataset::Identities() const {
  std::vector<std::int64_t> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.identity);
  return out;
}

Image Dataset::LoadImage(std::size_t index) const { return ReadImage(records_.at(index).path); }

std::string Dataset::Serialize() const {
  std::ostringstream out;
  out << "attributes";
  for (const auto& name : attribute_names_) out << ' ' << name;
  out << '\n';
  for (const auto& r : records_) {
    out << r.id << '\t' << r.path.generic_string() << '\t' << r.identity << '\t';
    for (bool flag : r.attributes) out << (flag ? '1' : '0');
    out << '\n';
  }
  return out.str();
}

std::string Dataset::Digest() const { return DigestHex(Serialize()); }

LoadedDataset LoadDataset(const std::filesystem::path& image_dir,
                          const std::filesystem::path& identity_file,
                          const std::filesystem::path& attr_file) {
  if (!std::filesystem::is_directory(image_dir)) {
    throw Error("image directory not found: " + image_dir.string());
  }
  const auto identities = ReadIdentityFile(identity_file);
  auto attrs = ReadAttributeFile(attr_file);

  LoadReport report;
  std::map<std::string, ImageRecord> by_id;
  for (const auto& [filename, identity] : identities) {
    auto row = attrs.rows.find(filename);
    if (row == attrs.rows.end()) {
      ++report.identity_only;
      continue;
    }
    const auto path = image_dir / filename;
    if (!std::filesystem::is_regular_file(path)) {
      ++report.missing_images;
      continue;
    }
    ImageRecord record{std::filesystem::path(filename).stem().string(), path, identity,
                       std::move(row->second)};
    const std::string id = record.id;
    if (!by_id.emplace(id, std::move(record)).second) {
      throw Error("two annotated files share the id '" + id + "'");
    }
  }
  for (const auto& [filename, flags] : attrs.rows) {
    if (!identities.contains(filename)) ++report.attributes_only;
  }

  std::vector<ImageRecord> records;
  records.reserve(by_id.size());
  for (auto& [id, record] : by_id) records.push_back(std::move(record));
  if (records.empty()) throw Error("no annotated images found under " + image_dir.string());
  return {Dataset(std::move(records), std::move(attrs.names)), report};
}

std::string SubgroupSpec::Label() const { return attribute + (value ? "=1" : "=0"); }

SubgroupPartition Partition(const Dataset& dataset, const SubgroupSpec& spec) {
  const std::size_t column = dataset.AttributeIndex(spec.attribute);
  SubgroupPartition part;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].attributes[column] == spec.value) {
      part.protected_indices.push_back(i);
    } else {
      part.unprotected_indices.push_back(i);
    }
  }
  if (part.protected_indices.empty() || part.unprotected_indices.empty()) {
    throw SubgroupDegenerate("subgroup " + spec.Label() + " leaves an empty side (" +
                             std::to_string(part.protected_indices.size()) + " protected, " +
                             std::to_string(part.unprotected_indices.size()) + " unprotected)");
  }
  return part;
}

}  // namespace fairsa

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

#ifndef FAIRSA_DATASET_H_
#define FAIRSA_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairsa/image.h"

namespace fairsa {

struct ImageRecord {
  std::string id;  // file stem
  std::filesystem::path path;
  std::int64_t identity = 0;
  std::vector<bool> attributes;  // aligned with Dataset::attribute_names

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// Immutable after construction. Record order (lexicographic by id) defines
// the row and column order of every downstream matrix.
class Dataset {
 public:
  // Validates: non-empty, unique ids sorted ascending, attribute vectors
  // aligned to `attribute_names`, attribute names unique.
  Dataset(std::vector<ImageRecord> records, std::vector<std::string> attribute_names);

  const std::vector<ImageRecord>& records() const { return records_; }
  const std::vector<std::string>& attribute_names() const { return attribute_names_; }
  std::size_t size() const { return records_.size(); }
  const ImageRecord& operator[](std::size_t i) const { return records_[i]; }

  // Column of `name` in attribute_names; throws Error if absent.
  std::size_t AttributeIndex(const std::string& name) const;
  std::vector<std::int64_t> Identities() const;
  Image LoadImage(std::size_t index) const;

  // Canonical text form: identical datasets serialize to identical bytes.
  std::string Serialize() const;
  std::string Digest() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<ImageRecord> records_;
  std::vector<std::string> attribute_names_;
};

struct LoadReport {
  std::size_t missing_images = 0;      // annotated in both files, no file on disk
  std::size_t identity_only = 0;       // present only in the identity file
  std::size_t attributes_only = 0;     // present only in the attribute file
};

struct LoadedDataset {
  Dataset dataset;
  LoadReport report;
};

// Loads the intersection of an identity file ("<filename> <id>" per line) and
// a CelebA-format attribute file, keeping records whose image exists under
// `image_dir`. Malformed lines are fatal and name the offending line.
LoadedDataset LoadDataset(const std::filesystem::path& image_dir,
                          const std::filesystem::path& identity_file,
                          const std::filesystem::path& attr_file);

struct SubgroupSpec {
  std::string attribute;
  bool value = true;

  std::string Label() const;  // "Male=1"
  friend bool operator==(const SubgroupSpec&, const SubgroupSpec&) = default;
  friend auto operator<=>(const SubgroupSpec&, const SubgroupSpec&) = default;
};

struct SubgroupPartition {
  std::vector<std::size_t> protected_indices;    // ascending
  std::vector<std::size_t> unprotected_indices;  // ascending

  SubgroupPartition Swapped() const { return {unprotected_indices, protected_indices}; }
};

// Throws Error for an unknown attribute and SubgroupDegenerate when either
// side of the split is empty.
SubgroupPartition Partition(const Dataset& dataset, const SubgroupSpec& spec);

}  // namespace fairsa

#endif  // FAIRSA_DATASET_H_

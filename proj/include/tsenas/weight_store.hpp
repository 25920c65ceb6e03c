// Copyright 2026 The tsenas Authors.
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

#ifndef TSENAS_WEIGHT_STORE_HPP_
#define TSENAS_WEIGHT_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsenas/evaluation.hpp"

namespace tsenas {

struct WeightBlob {
  StructuralKey key;
  std::string bytes;
  std::int64_t version = 0;
  bool updated_this_cycle = false;

  friend bool operator==(const WeightBlob&, const WeightBlob&) = default;
};

// Outcome of one update cycle, for provenance checks.
struct UpdateReport {
  // key -> index (into the caller's individual list) of the source.
  std::map<StructuralKey, std::size_t> sources;
  std::size_t individuals_visited = 0;
};

// Cell-keyed weight registry seeded by the SuperNet and refreshed from the
// best individuals of a generation.
class WeightStore {
 public:
  bool contains(const StructuralKey& key) const {
    return blobs_.count(key) != 0;
  }
  const WeightBlob& at(const StructuralKey& key) const { return blobs_.at(key); }
  const std::map<StructuralKey, WeightBlob>& blobs() const { return blobs_; }
  std::size_t size() const { return blobs_.size(); }
  bool empty() const { return blobs_.empty(); }
  std::int64_t cycle() const { return cycle_; }

  // Inserts or overwrites; an overwrite bumps the version.
  void put(const StructuralKey& key, std::string bytes);

  // Visits individuals best-first and copies each one's blobs into entries
  // that exist and were not yet written this cycle, stopping once every
  // entry is updated. Flags are reset first; the cycle counter increments.
  UpdateReport update_from_population(std::span<const Individual> individuals);

  // Checkpoint layout: manifest.json + blobs/<hex-key>-<digest>.bin. The
  // manifest is replaced atomically, so readers see the old or the new
  // state. `after_blobs` runs between blob writes and the manifest commit
  // (crash-injection hook for tests).
  void save(const std::filesystem::path& directory,
            const std::function<void()>& after_blobs = {}) const;
  // Throws CheckpointError on a corrupt manifest or a missing/damaged blob.
  static WeightStore load(const std::filesystem::path& directory);

  friend bool operator==(const WeightStore&, const WeightStore&) = default;

 private:
  std::map<StructuralKey, WeightBlob> blobs_;
  std::int64_t cycle_ = 0;
};

// The stacked SuperNet genome: one instance of every template, in code
// order, each taking the previous cell and the one before it.
Stage2Genome supernet_genome(const CellLibrary& library);

// Asks the evaluator to train the SuperNet and records one blob per template
// (version 1). Throws EvaluatorError if the reply misses a template key.
WeightStore init_from_supernet(const CellLibrary& library, Evaluator& evaluator,
                               int epochs, const EvalBudget& budget = {});

WeightAssignment inherit_weights(const Stage2Genome& genome,
                                 const WeightStore& store);

std::string payload_digest(std::string_view bytes);

}  // namespace tsenas

#endif  // TSENAS_WEIGHT_STORE_HPP_

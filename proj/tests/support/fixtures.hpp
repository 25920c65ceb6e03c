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

#ifndef TSENAS_TESTS_FIXTURES_HPP_
#define TSENAS_TESTS_FIXTURES_HPP_

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsenas/evolution.hpp"
#include "tsenas/genome.hpp"
#include "tsenas/search_space.hpp"

namespace fixtures {

inline const tsenas::CellLibrary& lib() { return tsenas::default_cell_library(); }

// Chain with prev = j-1 and skip = max(0, j-2).
inline tsenas::Stage1Genome chain(const std::vector<int>& codes) {
  tsenas::Stage1Genome g;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const int j = static_cast<int>(i) + 1;
    g.genes.push_back({j - 1, j >= 2 ? j - 2 : 0, codes[i]});
  }
  return g;
}

inline tsenas::Individual individual(tsenas::Genome g, double fitness) {
  tsenas::Individual ind;
  ind.genome = std::move(g);
  ind.fitness = fitness;
  return ind;
}

// A stage-2 genome with some structural edits applied.
inline tsenas::Stage2Genome random_stage2(tsenas::Rng& rng,
                                          tsenas::DepthBounds bounds = {4, 12}) {
  tsenas::Stage2Genome g =
      tsenas::expand_to_stage2(tsenas::random_stage1(bounds, lib(), rng), lib());
  const int edits = static_cast<int>(rng.uniform_int(0, 4));
  for (int e = 0; e < edits; ++e) {
    g = rng.bernoulli(0.5) ? tsenas::fine_mutation(g, rng)
                           : tsenas::prune(g, rng).genome;
  }
  return g;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("tsenas_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace fixtures

#endif  // TSENAS_TESTS_FIXTURES_HPP_

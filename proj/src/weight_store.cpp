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

#include "tsenas/weight_store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tsenas {

namespace fs = std::filesystem;

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kManifestFormat = 1;

std::string blob_file_name(const WeightBlob& blob) {
  return blob.key.hex() + "-" + payload_digest(blob.bytes).substr(0, 16) +
         ".bin";
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw CheckpointError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string payload_digest(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) !=
      1) {
    throw std::runtime_error("sha256 digest failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += to_hex(md[i], 2);
  return out;
}

void WeightStore::put(const StructuralKey& key, std::string bytes) {
  auto [it, inserted] = blobs_.try_emplace(key);
  WeightBlob& blob = it->second;
  blob.key = key;
  blob.bytes = std::move(bytes);
  blob.version = inserted ? 1 : blob.version + 1;
}

UpdateReport WeightStore::update_from_population(
    std::span<const Individual> individuals) {
  UpdateReport report;
  for (auto& [key, blob] : blobs_) blob.updated_this_cycle = false;
  std::vector<std::size_t> order(individuals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitter(individuals[a], individuals[b]);
  });
  std::size_t remaining = blobs_.size();
  for (std::size_t idx : order) {
    if (remaining == 0) break;
    ++report.individuals_visited;
    for (const auto& [key, payload] : individuals[idx].blobs) {
      auto it = blobs_.find(key);
      if (it == blobs_.end() || it->second.updated_this_cycle) continue;
      it->second.bytes = payload;
      ++it->second.version;
      it->second.updated_this_cycle = true;
      report.sources[key] = idx;
      --remaining;
    }
  }
  ++cycle_;
  return report;
}

void WeightStore::save(const fs::path& directory,
                       const std::function<void()>& after_blobs) const {
  std::error_code ec;
  fs::create_directories(directory / "blobs", ec);
  if (ec) {
    throw CheckpointError("cannot create " + directory.string() + ": " +
                          ec.message());
  }
  ordered_json manifest;
  manifest["format"] = kManifestFormat;
  manifest["cycle"] = cycle_;
  ordered_json entries = ordered_json::array();
  std::set<std::string> referenced;
  for (const auto& [key, blob] : blobs_) {
    const std::string name = blob_file_name(blob);
    const fs::path path = directory / "blobs" / name;
    if (!fs::exists(path)) write_file_atomic(path, blob.bytes);
    referenced.insert(name);
    ordered_json entry;
    entry["key"] = key.hex();
    entry["version"] = blob.version;
    entry["digest"] = payload_digest(blob.bytes);
    entry["updated"] = blob.updated_this_cycle;
    entry["file"] = "blobs/" + name;
    entries.push_back(std::move(entry));
  }
  manifest["entries"] = std::move(entries);
  if (after_blobs) after_blobs();
  write_file_atomic(directory / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& file : fs::directory_iterator(directory / "blobs")) {
    if (!referenced.count(file.path().filename().string())) {
      fs::remove(file.path(), ec);
    }
  }
}

WeightStore WeightStore::load(const fs::path& directory) {
  const std::string text = read_file(directory / "manifest.json");
  WeightStore store;
  try {
    const json manifest = json::parse(text);
    if (manifest.at("format").get<int>() != kManifestFormat) {
      throw CheckpointError("unsupported weight manifest format");
    }
    store.cycle_ = manifest.at("cycle").get<std::int64_t>();
    for (const auto& entry : manifest.at("entries")) {
      WeightBlob blob;
      blob.key = StructuralKey::from_hex(entry.at("key").get<std::string>());
      blob.version = entry.at("version").get<std::int64_t>();
      blob.updated_this_cycle = entry.at("updated").get<bool>();
      const fs::path path = directory / entry.at("file").get<std::string>();
      if (!fs::exists(path)) {
        throw CheckpointError("missing blob file for key " + blob.key.hex() +
                              " (" + path.string() + ")");
      }
      blob.bytes = read_file(path);
      if (payload_digest(blob.bytes) != entry.at("digest").get<std::string>()) {
        throw CheckpointError("digest mismatch for key " + blob.key.hex());
      }
      store.blobs_.emplace(blob.key, std::move(blob));
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError("corrupt weight manifest in " + directory.string() +
                          ": " + e.what());
  }
  return store;
}

Stage2Genome supernet_genome(const CellLibrary& library) {
  Stage1Genome chain;
  for (const auto& cell : library.cells()) {
    const int j = chain.depth() + 1;
    chain.genes.push_back({j - 1, j == 1 ? 0 : j - 2, cell.code});
  }
  return expand_to_stage2(chain, library);
}

WeightStore init_from_supernet(const CellLibrary& library, Evaluator& evaluator,
                               int epochs, const EvalBudget& budget) {
  EvalRequest req;
  req.kind = RequestKind::kTrainSupernet;
  req.genome = supernet_genome(library);
  req.assignment.entries.resize(req.genome.genes.size());
  req.epochs = epochs;
  req.dataset_id = budget.dataset_id;
  req.seed = budget.seed;
  const EvalResponse resp = evaluator.run(req);
  if (resp.error) {
    throw EvaluatorError("SuperNet training failed: " + *resp.error);
  }
  std::map<StructuralKey, std::string> received(resp.blob_updates.begin(),
                                                resp.blob_updates.end());
  WeightStore store;
  for (const auto& cell : library.cells()) {
    const StructuralKey key = template_key(library, cell.code);
    auto it = received.find(key);
    if (it == received.end()) {
      throw EvaluatorError("SuperNet reply is missing template key " +
                           key.hex() + " (cell " + std::to_string(cell.code) +
                           ")");
    }
    store.put(key, it->second);
  }
  return store;
}

WeightAssignment inherit_weights(const Stage2Genome& genome,
                                 const WeightStore& store) {
  WeightAssignment out;
  for (const StructuralKey& key : structural_keys(genome)) {
    if (store.contains(key)) {
      out.entries.push_back(key);
    } else {
      out.entries.emplace_back();
    }
  }
  return out;
}

}  // namespace tsenas

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

#include <openssl/evp.h>

#include "json.hpp"
#include "tsenas/evaluation.hpp"

namespace tsenas {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const char* kind_name(RequestKind kind) {
  return kind == RequestKind::kEvaluate ? "evaluate" : "train_supernet";
}

}  // namespace

std::size_t WeightAssignment::inherited_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.has_value() ? 1 : 0;
  return n;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) {
    throw std::invalid_argument("base64 length must be a multiple of 4");
  }
  std::string out(3 * text.size() / 4, '\0');
  if (text.empty()) return out;
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("invalid base64 payload");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string protocol_encode(const ProtocolMessage& message) {
  ordered_json doc;
  if (const auto* req = std::get_if<EvalRequest>(&message)) {
    doc["id"] = req->id;
    doc["kind"] = kind_name(req->kind);
    doc["genome"] = genome_to_json(req->genome);
    ordered_json assignment = ordered_json::array();
    for (const auto& entry : req->assignment.entries) {
      if (entry) {
        assignment.push_back(entry->hex());
      } else {
        assignment.push_back(nullptr);
      }
    }
    doc["assignment"] = std::move(assignment);
    // Structural key of every position, so workers can label blobs.
    ordered_json keys = ordered_json::array();
    for (const auto& key : structural_keys(req->genome)) keys.push_back(key.hex());
    doc["keys"] = std::move(keys);
    doc["epochs"] = req->epochs;
    doc["dataset"] = req->dataset_id;
    doc["seed"] = req->seed;
  } else {
    const auto& resp = std::get<EvalResponse>(message);
    doc["id"] = resp.id;
    if (resp.error) {
      doc["error"] = *resp.error;
    } else {
      doc["fitness"] = resp.fitness.value_or(0.0);
      doc["param_count"] = resp.param_count;
      ordered_json blobs = ordered_json::array();
      for (const auto& [key, payload] : resp.blob_updates) {
        blobs.push_back({key.hex(), base64_encode(payload)});
      }
      doc["blob_updates"] = std::move(blobs);
    }
  }
  return doc.dump(-1, ' ', false, json::error_handler_t::strict) + "\n";
}

ProtocolMessage protocol_decode(std::string_view line,
                                std::size_t line_number) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what(),
                        line_number);
  }
  try {
    if (!doc.is_object()) throw ProtocolError("message is not an object", line_number);
    if (doc.contains("kind")) {
      EvalRequest req;
      req.id = doc.at("id").get<std::uint64_t>();
      const auto kind = doc.at("kind").get<std::string>();
      if (kind == "evaluate") {
        req.kind = RequestKind::kEvaluate;
      } else if (kind == "train_supernet") {
        req.kind = RequestKind::kTrainSupernet;
      } else {
        throw ProtocolError("unknown message kind '" + kind + "'", line_number);
      }
      req.genome = std::get<Stage2Genome>(
          genome_from_json_unchecked(doc.at("genome"), 2));
      for (const auto& entry : doc.at("assignment")) {
        if (entry.is_null()) {
          req.assignment.entries.emplace_back();
        } else {
          req.assignment.entries.push_back(
              StructuralKey::from_hex(entry.get<std::string>()));
        }
      }
      req.epochs = doc.at("epochs").get<int>();
      req.dataset_id = doc.at("dataset").get<std::string>();
      req.seed = doc.at("seed").get<std::uint64_t>();
      return req;
    }
    EvalResponse resp;
    resp.id = doc.at("id").get<std::uint64_t>();
    if (doc.contains("error") && !doc["error"].is_null()) {
      resp.error = doc["error"].get<std::string>();
      return resp;
    }
    resp.fitness = doc.at("fitness").get<double>();
    resp.param_count = doc.value("param_count", std::int64_t{0});
    if (doc.contains("blob_updates")) {
      for (const auto& item : doc["blob_updates"]) {
        if (!item.is_array() || item.size() != 2) {
          throw ProtocolError("blob_updates entries must be [key, payload]",
                              line_number);
        }
        resp.blob_updates.emplace_back(
            StructuralKey::from_hex(item[0].get<std::string>()),
            base64_decode(item[1].get<std::string>()));
      }
    }
    return resp;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what(),
                        line_number);
  }
}

void ProtocolReader::feed(std::string_view chunk) { buffer_.append(chunk); }

std::optional<ProtocolMessage> ProtocolReader::next() {
  const std::size_t end = buffer_.find('\n');
  if (end == std::string::npos) return std::nullopt;
  std::string line = buffer_.substr(0, end);
  buffer_.erase(0, end + 1);
  ++lines_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return protocol_decode(line, lines_);
}

void ProtocolReader::finish() const {
  if (!buffer_.empty()) {
    throw ProtocolError("truncated message (no line terminator)", lines_ + 1);
  }
}

}  // namespace tsenas

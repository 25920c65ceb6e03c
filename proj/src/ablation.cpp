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

#include <cmath>
#include <cstdio>
#include <sstream>

#include "tsenas/engine.hpp"

namespace tsenas {

namespace {

VariantSummary finish(std::string name, std::vector<double> best,
                      const std::vector<std::vector<double>>& trajectories) {
  VariantSummary out;
  out.name = std::move(name);
  out.best = std::move(best);
  const double n = static_cast<double>(out.best.size());
  for (double b : out.best) out.mean += b;
  out.mean /= n;
  if (out.best.size() > 1) {
    double ss = 0.0;
    for (double b : out.best) ss += (b - out.mean) * (b - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  std::size_t length = 0;
  for (const auto& t : trajectories) length = std::max(length, t.size());
  out.mean_trajectory.assign(length, 0.0);
  for (std::size_t g = 0; g < length; ++g) {
    double sum = 0.0;
    int count = 0;
    for (const auto& t : trajectories) {
      if (g < t.size()) {
        sum += t[g];
        ++count;
      }
    }
    out.mean_trajectory[g] = sum / count;
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string AblationReport::to_text() const {
  std::ostringstream out;
  out << "ablation: " << to_string(mode) << "\n";
  out << "seeds: " << seeds.size();
  if (!seeds.empty()) out << " (" << seeds.front() << ".." << seeds.back() << ")";
  out << "\n";
  for (const VariantSummary* v : {&baseline, &ablated}) {
    out << v->name << ": mean best " << fmt(v->mean) << " +- " << fmt(v->sd)
        << " over " << v->best.size() << " runs\n";
  }
  out << "difference (baseline - ablated): " << fmt(baseline.mean - ablated.mean)
      << "\n";
  return out.str();
}

std::string AblationReport::trajectories_csv() const {
  std::ostringstream out;
  out << "generation," << baseline.name << "," << ablated.name << "\n";
  const std::size_t length =
      std::max(baseline.mean_trajectory.size(), ablated.mean_trajectory.size());
  for (std::size_t g = 0; g < length; ++g) {
    out << g + 1 << ",";
    if (g < baseline.mean_trajectory.size()) {
      out << fmt(baseline.mean_trajectory[g]);
    }
    out << ",";
    if (g < ablated.mean_trajectory.size()) out << fmt(ablated.mean_trajectory[g]);
    out << "\n";
  }
  return out.str();
}

AblationReport ablate(const SearchConfig& config, AblationMode mode,
                      int repeats, const CellLibrary& library,
                      const std::function<std::unique_ptr<Evaluator>(
                          const SearchConfig&)>& make_backend) {
  if (mode == AblationMode::kNone) {
    throw ConfigError("ablate needs an ablation mode other than 'none'");
  }
  if (repeats < 1) throw ConfigError("ablate needs at least one seed");
  AblationReport report;
  report.mode = mode;
  std::vector<double> base_best;
  std::vector<double> abl_best;
  std::vector<std::vector<double>> base_traj;
  std::vector<std::vector<double>> abl_traj;
  for (int r = 0; r < repeats; ++r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    report.seeds.push_back(seed);
    for (bool ablated : {false, true}) {
      SearchConfig cfg = config;
      cfg.seed = seed;
      cfg.ablation = ablated ? mode : AblationMode::kNone;
      std::unique_ptr<Evaluator> backend = make_backend(cfg);
      SearchResult res = run_search(cfg, library, *backend);
      std::vector<double> traj;
      for (const auto& h : res.history) traj.push_back(h.best);
      (ablated ? abl_best : base_best).push_back(res.best.fitness.value_or(0.0));
      (ablated ? abl_traj : base_traj).push_back(std::move(traj));
    }
  }
  report.baseline = finish("full", std::move(base_best), base_traj);
  report.ablated = finish(to_string(mode), std::move(abl_best), abl_traj);
  return report;
}

}  // namespace tsenas

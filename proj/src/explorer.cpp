//===- explorer.cpp - Flow / permutation / tile search ----------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/explorer.h"
#include "accelhost/error.h"

#include <algorithm>
#include <optional>
#include <thread>

namespace accelhost {

namespace {

/// Tile options for one dim: every multiple of the granularity that divides
/// the extent, capped by the on-chip capacity when the accelerator declares
/// one (a single transfer can never exceed the buffer, so larger tiles are
/// unplannable anyway).
std::vector<int64_t> tileOptions(int64_t extent, int64_t granularity,
                                 int64_t maxTile) {
  std::vector<int64_t> options;
  for (int64_t t = granularity; t <= extent && t <= maxTile;
       t += granularity)
    if (extent % t == 0)
      options.push_back(t);
  if (options.empty())
    options.push_back(std::min(extent, maxTile));
  return options;
}

std::vector<Candidate> enumerate(const KernelSpec &spec,
                                 const AcceleratorConfig &cfg,
                                 const ExploreOptions &options) {
  // Permutations: exhaustive in lexicographic order for small nests, just
  // the configured order otherwise.
  std::vector<std::vector<std::string>> perms;
  if (static_cast<int>(cfg.dims.size()) <= options.maxPermutationDims) {
    std::vector<std::string> dims = cfg.dims;
    std::sort(dims.begin(), dims.end());
    do {
      perms.push_back(dims);
    } while (std::next_permutation(dims.begin(), dims.end()));
  } else {
    perms.push_back(!cfg.permutation.empty() ? cfg.permutation : cfg.dims);
  }

  // Tile lattice (flexible accelerators only; fixed devices have exactly
  // one geometry).
  std::vector<std::string> tiledDims;
  std::vector<std::vector<int64_t>> perDim;
  if (cfg.flexibleTiles) {
    for (const std::string &dim : cfg.dims) {
      int64_t configured = cfg.accelDims.at(dim);
      if (configured == 0)
        continue; // Streamed: host keeps a step-1 loop.
      int64_t cap = cfg.bufferWords > 0 ? cfg.bufferWords
                                        : spec.dimExtent(dim);
      tiledDims.push_back(dim);
      perDim.push_back(tileOptions(spec.dimExtent(dim), cfg.tileGranularity,
                                   cap));
    }
  }

  std::vector<Candidate> candidates;
  for (const auto &[flowId, flowNode] : cfg.opcodeFlows) {
    (void)flowNode;
    for (const auto &perm : perms) {
      if (!cfg.flexibleTiles) {
        candidates.push_back({flowId, perm, {}});
        continue;
      }
      std::vector<size_t> pick(perDim.size(), 0);
      bool exhausted = false;
      while (!exhausted) {
        Candidate c{flowId, perm, {}};
        for (size_t d = 0; d < tiledDims.size(); ++d)
          c.tiles[tiledDims[d]] = perDim[d][pick[d]];
        candidates.push_back(std::move(c));
        exhausted = true;
        for (size_t d = perDim.size(); d-- > 0;) {
          if (++pick[d] < perDim[d].size()) {
            exhausted = false;
            break;
          }
          pick[d] = 0;
        }
      }
    }
  }
  return candidates;
}

std::optional<CandidateResult> evaluate(const KernelSpec &spec,
                                        const AcceleratorConfig &cfg,
                                        const CpuConfig &cpu,
                                        const Candidate &candidate) {
  PipelineOptions options;
  options.tileOverride = candidate.tiles;
  options.permutation = candidate.permutation;
  options.flow = candidate.flow;
  try {
    AccelProgram program = buildProgram(spec, cfg, cpu, options);
    CandidateResult result;
    result.candidate = candidate;
    result.effTiles = program.nest.effTiles;
    result.sentWords = predictSentWords(program);
    result.recvWords = predictRecvWords(program);
    result.totalWords = result.sentWords + result.recvWords;
    result.tileVolume = 1;
    for (const auto &[dim, tile] : program.nest.effTiles)
      if (tile > 0)
        result.tileVolume *= tile;
    return result;
  } catch (const Error &) {
    return std::nullopt; // Illegal candidate (placement, capacity, tiling).
  }
}

bool betterThan(const CandidateResult &a, const CandidateResult &b) {
  if (a.totalWords != b.totalWords)
    return a.totalWords < b.totalWords;
  if (a.tileVolume != b.tileVolume)
    return a.tileVolume > b.tileVolume;
  if (a.candidate.flow != b.candidate.flow)
    return a.candidate.flow < b.candidate.flow;
  if (a.candidate.permutation != b.candidate.permutation)
    return a.candidate.permutation < b.candidate.permutation;
  return a.candidate.tiles < b.candidate.tiles;
}

} // namespace

std::vector<CandidateResult> explore(const KernelSpec &spec,
                                     const AcceleratorConfig &cfg,
                                     const CpuConfig &cpu,
                                     const ExploreOptions &options) {
  std::vector<Candidate> candidates = enumerate(spec, cfg, options);
  std::vector<std::optional<CandidateResult>> evaluated(candidates.size());

  int threads = std::max(1, options.threads);
  if (threads == 1 || candidates.size() < 2) {
    for (size_t i = 0; i < candidates.size(); ++i)
      evaluated[i] = evaluate(spec, cfg, cpu, candidates[i]);
  } else {
    std::vector<std::thread> workers;
    for (int t = 0; t < threads; ++t)
      workers.emplace_back([&, t]() {
        for (size_t i = static_cast<size_t>(t); i < candidates.size();
             i += static_cast<size_t>(threads))
          evaluated[i] = evaluate(spec, cfg, cpu, candidates[i]);
      });
    for (std::thread &worker : workers)
      worker.join();
  }

  std::vector<CandidateResult> results;
  for (auto &result : evaluated)
    if (result)
      results.push_back(std::move(*result));
  std::stable_sort(results.begin(), results.end(), betterThan);
  return results;
}

} // namespace accelhost

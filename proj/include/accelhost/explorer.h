//===- explorer.h - Flow / permutation / tile search ------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Enumerates candidate lowerings — every configured opcode flow, loop
// permutation, and (for flexible accelerators) tile-size combination — plans
// each one, and ranks the legal candidates by their predicted data movement.
// The prediction is the planner's symbolic word count, which matches the
// runtime counters exactly, so the ranking is exact rather than a model.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/pipeline.h"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace accelhost {

struct Candidate {
  std::string flow;
  std::vector<std::string> permutation;
  /// Targeted tile per non-streamed dim (the effective tiles after
  /// clamping appear in the evaluated result's nest).
  std::map<std::string, int64_t> tiles;
};

struct CandidateResult {
  Candidate candidate;
  /// Effective accelerator tile per dim after clamping (streamed dims: 1).
  std::map<std::string, int64_t> effTiles;
  int64_t sentWords = 0;
  int64_t recvWords = 0;
  int64_t totalWords = 0;
  int64_t tileVolume = 0;
};

struct ExploreOptions {
  /// Worker threads for candidate evaluation. Results are identical for any
  /// thread count; 1 evaluates inline.
  int threads = 1;
  /// Permutations are enumerated exhaustively up to this many iteration
  /// dims; beyond it only the configured order is tried (factorial blowup).
  int maxPermutationDims = 4;
};

/// Evaluates all candidates and returns the legal ones ranked best-first:
/// ascending total words moved, then descending tile volume, then
/// lexicographic (flow, permutation, tiles) to break ties deterministically.
std::vector<CandidateResult> explore(const KernelSpec &spec,
                                     const AcceleratorConfig &cfg,
                                     const CpuConfig &cpu,
                                     const ExploreOptions &options = {});

} // namespace accelhost

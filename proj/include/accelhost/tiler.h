//===- tiler.h - Loop nest construction and tiling -------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Turns a kernel's iteration space into an explicit loop nest: one
// accelerator-level loop per iteration dim (step = tile extent), optionally
// wrapped by cache-level loops so the working set of the innermost
// accelerator loops fits in the last-level cache. Loop lower bounds chain:
// an accelerator loop for dim d starts at the surrounding cache loop's
// current index (or 0), so loop variables always hold absolute origins.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/accel_config.h"
#include "accelhost/kernel_model.h"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace accelhost {

struct Loop {
  std::string dim;
  bool cacheLevel = false; // true = cache tiling loop, false = accel loop.
  int64_t span = 0;        // Length of the iteration range.
  int64_t step = 0;        // Advance per iteration (tile extent).

  int64_t trips() const { return span / step; }
};

struct LoopNest {
  /// Outermost first. Cache loops (if any) precede all accel loops.
  std::vector<Loop> loops;
  /// Index of the first accel-level loop.
  int firstAccelLoop = 0;
  /// Effective accelerator tile per dim (= accel loop step).
  std::map<std::string, int64_t> effTiles;

  int numAccelLoops() const {
    return static_cast<int>(loops.size()) - firstAccelLoop;
  }
  /// Index of the accel loop for `dim`, -1 when absent.
  int accelLoopIndex(const std::string &dim) const;
  /// Index of the cache loop for `dim`, -1 when absent.
  int cacheLoopIndex(const std::string &dim) const;
};

/// Builds the accel-level nest for `spec` under `cfg`. Loop order follows
/// cfg.dims. Per dim: tile = accelDims[dim] (0 = step-1 streamed loop);
/// flexible accelerators clamp the tile to the extent and accept overrides.
/// Every tile must divide its extent (strict mode, Error{NonDivisibleTile})
/// and respect the granularity for flexible accelerators
/// (Error{BadTileGranularity}). `tileOverride` entries are only legal on
/// flexible accelerators.
LoopNest tileForAccelerator(
    const KernelSpec &spec, const AcceleratorConfig &cfg,
    const std::map<std::string, int64_t> &tileOverride = {});

/// Wraps the nest in square cache-tiling loops when profitable: picks the
/// largest T that is a multiple of every eligible dim's accel tile, divides
/// every eligible extent, and keeps the per-tile working set within half the
/// last-level cache. Dims eligible for cache tiling appear in at least two
/// arguments. No-op when no such T exists or the best T spans the whole
/// problem.
LoopNest tileForCache(LoopNest nest, const KernelSpec &spec,
                      const CpuConfig &cpu);

/// Reorders the accel-level loops to `perm` (dim names). Cache loops keep
/// their positions. Throws Error{NotAPermutation}.
LoopNest applyPermutation(LoopNest nest, const std::vector<std::string> &perm);

/// Human-readable nest dump, one indented "for" line per loop.
std::string printNest(const LoopNest &nest);

} // namespace accelhost

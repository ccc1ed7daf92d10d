//===- tiler.cpp - Loop nest construction and tiling ----------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/tiler.h"
#include "accelhost/error.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace accelhost {

int LoopNest::accelLoopIndex(const std::string &dim) const {
  for (size_t i = firstAccelLoop; i < loops.size(); ++i)
    if (loops[i].dim == dim)
      return static_cast<int>(i);
  return -1;
}

int LoopNest::cacheLoopIndex(const std::string &dim) const {
  for (int i = 0; i < firstAccelLoop; ++i)
    if (loops[i].dim == dim)
      return i;
  return -1;
}

LoopNest tileForAccelerator(const KernelSpec &spec,
                            const AcceleratorConfig &cfg,
                            const std::map<std::string, int64_t> &tileOverride) {
  // The accelerator must speak this kernel.
  std::string specKernel =
      spec.kind == KernelKind::Matmul ? "matmul" : "conv2d_nchw_fchw";
  if (cfg.kernel != specKernel)
    throw Error(Error::Kind::KernelMismatch,
                "accelerator '" + cfg.name + "' implements " + cfg.kernel +
                    " but the kernel is " + specKernel);

  std::set<std::string> specDims;
  for (const auto &d : spec.dims)
    specDims.insert(d.name);
  std::set<std::string> cfgDims(cfg.dims.begin(), cfg.dims.end());
  if (specDims != cfgDims)
    throw Error(Error::Kind::UnknownDim,
                "accelerator '" + cfg.name +
                    "' dims do not match the kernel's iteration dims");

  for (const auto &[dim, tile] : tileOverride) {
    if (!cfgDims.count(dim))
      throw Error(Error::Kind::UnknownDim,
                  "tile override references unknown dim '" + dim + "'");
    if (!cfg.flexibleTiles)
      throw Error(Error::Kind::BadTileGranularity,
                  "accelerator '" + cfg.name +
                      "' has fixed tile sizes; overrides are not supported");
    if (tile <= 0)
      throw Error(Error::Kind::BadValue,
                  "tile override for '" + dim + "' must be positive");
  }

  LoopNest nest;
  for (const auto &dim : cfg.dims) {
    int64_t extent = spec.dimExtent(dim);
    int64_t configured = cfg.accelDims.at(dim);
    int64_t tile;
    if (configured == 0) {
      // Streamed dim: the accelerator consumes it one element at a time.
      tile = 1;
      if (tileOverride.count(dim) && tileOverride.at(dim) != 1)
        throw Error(Error::Kind::BadTileGranularity,
                    "dim '" + dim + "' is streamed; its tile is fixed at 1");
    } else if (cfg.flexibleTiles) {
      tile = tileOverride.count(dim) ? tileOverride.at(dim)
                                     : std::min(configured, extent);
      if (tile > extent)
        throw Error(Error::Kind::NonDivisibleTile,
                    "tile " + std::to_string(tile) + " for dim '" + dim +
                        "' exceeds its extent " + std::to_string(extent));
      if (tile % cfg.tileGranularity != 0)
        throw Error(Error::Kind::BadTileGranularity,
                    "tile " + std::to_string(tile) + " for dim '" + dim +
                        "' is not a multiple of the accelerator granularity " +
                        std::to_string(cfg.tileGranularity));
    } else {
      tile = configured;
      if (tile > extent)
        throw Error(Error::Kind::NonDivisibleTile,
                    "accelerator tile " + std::to_string(tile) + " for dim '" +
                        dim + "' exceeds its extent " + std::to_string(extent));
    }
    if (extent % tile != 0)
      throw Error(Error::Kind::NonDivisibleTile,
                  "dim '" + dim + "' extent " + std::to_string(extent) +
                      " is not divisible by tile " + std::to_string(tile));
    nest.loops.push_back({dim, false, extent, tile});
    nest.effTiles[dim] = tile;
  }
  nest.firstAccelLoop = 0;
  return nest;
}

LoopNest tileForCache(LoopNest nest, const KernelSpec &spec,
                      const CpuConfig &cpu) {
  if (cpu.cacheLevels.empty())
    return nest;
  int64_t budget = cpu.cacheLevels.back() / 2;

  // Dims worth blocking: referenced by at least two arguments.
  std::map<std::string, int> refCount;
  for (const auto &arg : spec.args) {
    std::set<std::string> argDims;
    for (const auto &expr : arg.map.results)
      for (const auto &d : expr.referencedDims())
        argDims.insert(d);
    for (const auto &d : argDims)
      ++refCount[d];
  }
  std::vector<std::string> eligible;
  for (const auto &loop : nest.loops)
    if (refCount[loop.dim] >= 2)
      eligible.push_back(loop.dim);
  if (eligible.empty())
    return nest;

  // T must be a common multiple of the eligible accel tiles and divide every
  // eligible extent.
  int64_t lcmTiles = 1;
  for (const auto &dim : eligible)
    lcmTiles = std::lcm(lcmTiles, nest.effTiles.at(dim));
  int64_t gcdExtents = 0;
  for (const auto &dim : eligible)
    gcdExtents = std::gcd(gcdExtents, spec.dimExtent(dim));
  if (gcdExtents % lcmTiles != 0)
    return nest;

  auto footprint = [&](int64_t T) {
    int64_t bytes = 0;
    for (const auto &arg : spec.args) {
      int64_t words = 1;
      for (const auto &expr : arg.map.results) {
        // Window covered along this argument dim for a TxT...xT block.
        int64_t window = 1;
        for (const auto &[dim, coeff] : expr.terms) {
          int64_t len = refCount[dim] >= 2 ? std::min(T, spec.dimExtent(dim))
                                           : spec.dimExtent(dim);
          window += std::abs(coeff) * (len - 1);
        }
        words *= window;
      }
      bytes += words * 4;
    }
    return bytes;
  };

  int64_t bestT = 0;
  for (int64_t T = lcmTiles; T <= gcdExtents; T += lcmTiles)
    if (gcdExtents % T == 0 && footprint(T) <= budget)
      bestT = T;
  if (bestT == 0)
    return nest;

  // Cache loops only where they create real blocking.
  std::vector<Loop> cacheLoops;
  for (const auto &loop : nest.loops) {
    if (refCount[loop.dim] < 2)
      continue;
    int64_t extent = spec.dimExtent(loop.dim);
    if (bestT < extent && bestT > nest.effTiles.at(loop.dim))
      cacheLoops.push_back({loop.dim, true, extent, bestT});
  }
  if (cacheLoops.empty())
    return nest;

  LoopNest tiled;
  tiled.loops = cacheLoops;
  tiled.firstAccelLoop = static_cast<int>(cacheLoops.size());
  tiled.effTiles = nest.effTiles;
  for (Loop loop : nest.loops) {
    for (const auto &cacheLoop : cacheLoops)
      if (cacheLoop.dim == loop.dim)
        loop.span = cacheLoop.step; // Accel loop sweeps one cache block.
    tiled.loops.push_back(loop);
  }
  return tiled;
}

LoopNest applyPermutation(LoopNest nest, const std::vector<std::string> &perm) {
  if (perm.empty())
    return nest;
  std::vector<Loop> accelLoops(nest.loops.begin() + nest.firstAccelLoop,
                               nest.loops.end());
  if (perm.size() != accelLoops.size())
    throw Error(Error::Kind::NotAPermutation,
                "permutation has " + std::to_string(perm.size()) +
                    " dims but the nest has " +
                    std::to_string(accelLoops.size()) + " accel loops");
  std::vector<Loop> reordered;
  std::set<std::string> used;
  for (const auto &dim : perm) {
    if (!used.insert(dim).second)
      throw Error(Error::Kind::NotAPermutation,
                  "permutation repeats dim '" + dim + "'");
    auto it = std::find_if(accelLoops.begin(), accelLoops.end(),
                           [&](const Loop &l) { return l.dim == dim; });
    if (it == accelLoops.end())
      throw Error(Error::Kind::NotAPermutation,
                  "permutation references dim '" + dim +
                      "' which is not an accel loop");
    reordered.push_back(*it);
  }
  std::copy(reordered.begin(), reordered.end(),
            nest.loops.begin() + nest.firstAccelLoop);
  return nest;
}

std::string printNest(const LoopNest &nest) {
  std::ostringstream os;
  std::string indent;
  for (size_t i = 0; i < nest.loops.size(); ++i) {
    const Loop &loop = nest.loops[i];
    std::string var = loop.cacheLevel ? loop.dim + "_c" : loop.dim;
    std::string lb = "0";
    if (!loop.cacheLevel && nest.cacheLoopIndex(loop.dim) >= 0)
      lb = loop.dim + "_c";
    os << indent << "for " << var << " in [" << lb << ", " << lb << "+"
       << loop.span << ") step " << loop.step << "  // "
       << (loop.cacheLevel ? "cache" : "accel") << ", " << loop.trips()
       << " trip" << (loop.trips() == 1 ? "" : "s") << "\n";
    indent += "  ";
  }
  return os.str();
}

} // namespace accelhost

//===- pipeline.h - End-to-end lowering pipeline ----------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Convenience layer tying the stages together: accelerator tiling, cache
// tiling, loop permutation and flow placement in their canonical order, plus
// helpers to execute a planned program and check it against the reference
// kernel semantics.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/flow_planner.h"
#include "accelhost/interpreter.h"
#include "accelhost/tiler.h"

#include <map>
#include <string>
#include <vector>

namespace accelhost {

struct PipelineOptions {
  /// Per-dim tile overrides (flexible accelerators only).
  std::map<std::string, int64_t> tileOverride;
  /// Loop permutation; empty = the accelerator's configured permutation
  /// (or the natural dim order when none is configured).
  std::vector<std::string> permutation;
  /// Flow to place; empty = the accelerator's selected flow.
  std::string flow;
  /// Wrap the nest in cache-level loops when profitable.
  bool cacheTiling = true;
};

/// Tiles, cache-tiles and permutes the loop nest for `spec` on `cfg`.
LoopNest buildNest(const KernelSpec &spec, const AcceleratorConfig &cfg,
                   const CpuConfig &cpu, const PipelineOptions &options = {});

/// Full pipeline: buildNest + flow placement.
/// Throws Error{UnknownFlow} when the requested flow does not exist.
AccelProgram buildProgram(const KernelSpec &spec, const AcceleratorConfig &cfg,
                          const CpuConfig &cpu,
                          const PipelineOptions &options = {});

/// Deep copy: fresh buffers with identical contents, same views and maps.
KernelSpec cloneKernel(const KernelSpec &spec);

/// Zero-fills the elements reachable through the output view.
void zeroOutput(const KernelSpec &spec);

/// First element where the two kernels' output views differ ("O[1,2]: 5 vs
/// 7"), empty when they match. Views must have identical shapes.
std::string compareOutputs(const KernelSpec &a, const KernelSpec &b);

struct RunComparison {
  InterpretResult run;
  bool match = false;
  std::string firstDiff;
};

/// Zero-fills the program's output, executes it, and checks the result
/// against the reference semantics run on a pristine copy of the inputs.
RunComparison runAndCompare(const AccelProgram &program,
                            const InterpretOptions &options = {});

} // namespace accelhost

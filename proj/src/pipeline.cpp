//===- pipeline.cpp - End-to-end lowering pipeline --------------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/pipeline.h"
#include "accelhost/error.h"

#include <map>

namespace accelhost {

LoopNest buildNest(const KernelSpec &spec, const AcceleratorConfig &cfg,
                   const CpuConfig &cpu, const PipelineOptions &options) {
  LoopNest nest = tileForAccelerator(spec, cfg, options.tileOverride);
  if (options.cacheTiling)
    nest = tileForCache(std::move(nest), spec, cpu);
  const std::vector<std::string> &perm =
      !options.permutation.empty() ? options.permutation : cfg.permutation;
  if (!perm.empty())
    nest = applyPermutation(std::move(nest), perm);
  return nest;
}

AccelProgram buildProgram(const KernelSpec &spec, const AcceleratorConfig &cfg,
                          const CpuConfig &cpu,
                          const PipelineOptions &options) {
  LoopNest nest = buildNest(spec, cfg, cpu, options);
  const std::string &flowId =
      !options.flow.empty() ? options.flow : cfg.selectedFlow;
  const FlowNode *flow = cfg.findFlow(flowId);
  if (!flow)
    throw Error(Error::Kind::UnknownFlow,
                "accelerator '" + cfg.name + "' has no flow named '" + flowId +
                    "'");
  return plan(spec, cfg, nest, *flow);
}

KernelSpec cloneKernel(const KernelSpec &spec) {
  KernelSpec copy = spec;
  std::map<const std::vector<int32_t> *, Buffer> seen;
  for (KernelArg &arg : copy.args) {
    Buffer &fresh = seen[arg.view.base.get()];
    if (!fresh)
      fresh = std::make_shared<std::vector<int32_t>>(*arg.view.base);
    arg.view.base = fresh;
  }
  return copy;
}

namespace {

/// Invokes fn(indices) for every point of the view's index space.
template <typename Fn> void forEachIndex(const MemRefDesc &view, Fn fn) {
  std::vector<int64_t> idx(view.sizes.size(), 0);
  while (true) {
    fn(idx);
    int d = view.rank() - 1;
    while (d >= 0) {
      if (++idx[d] < view.sizes[d])
        break;
      idx[d] = 0;
      --d;
    }
    if (d < 0)
      break;
  }
}

std::string indexString(const std::vector<int64_t> &idx) {
  std::string out = "[";
  for (size_t d = 0; d < idx.size(); ++d)
    out += (d ? "," : "") + std::to_string(idx[d]);
  return out + "]";
}

} // namespace

void zeroOutput(const KernelSpec &spec) {
  const MemRefDesc &view = spec.outputArg().view;
  forEachIndex(view, [&](const std::vector<int64_t> &idx) {
    view.store(idx, 0);
  });
}

std::string compareOutputs(const KernelSpec &a, const KernelSpec &b) {
  const KernelArg &outA = a.outputArg();
  const KernelArg &outB = b.outputArg();
  if (outA.view.sizes != outB.view.sizes)
    return "output shapes differ";
  std::string diff;
  forEachIndex(outA.view, [&](const std::vector<int64_t> &idx) {
    if (!diff.empty())
      return;
    int32_t va = outA.view.load(idx);
    int32_t vb = outB.view.load(idx);
    if (va != vb)
      diff = outA.name + indexString(idx) + ": " + std::to_string(va) +
             " vs " + std::to_string(vb);
  });
  return diff;
}

RunComparison runAndCompare(const AccelProgram &program,
                            const InterpretOptions &options) {
  KernelSpec reference = cloneKernel(program.spec);
  zeroOutput(reference);
  referenceExecute(reference);

  zeroOutput(program.spec);
  RunComparison comparison;
  comparison.run = interpret(program, options);
  comparison.firstDiff = compareOutputs(program.spec, reference);
  comparison.match = comparison.firstDiff.empty();
  return comparison;
}

} // namespace accelhost

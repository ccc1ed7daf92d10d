//===- accel_sim.cpp - Functional stream-accelerator model -----------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/accel_sim.h"
#include "accelhost/error.h"
#include "accelhost/kernel_model.h"

#include <sstream>

namespace accelhost {

namespace {

std::string hexLiteral(uint32_t value) {
  std::ostringstream os;
  os << "0x" << std::hex << std::uppercase << value;
  return os.str();
}

/// Flattened view of one wire word (or word run) of an opcode.
struct WireItem {
  enum class Kind { Literal, ParamWord, TileIn, TileOut };
  Kind kind;
  uint32_t literal = 0;
  std::string dimName; // ParamWord: the dim the word describes
  int arg = -1;        // TileIn / TileOut
};

std::vector<WireItem> wireLayout(const AcceleratorConfig &cfg,
                                 const std::vector<Action> &actions) {
  std::vector<WireItem> items;
  for (const Action &action : actions) {
    WireItem item;
    switch (action.kind) {
    case Action::Kind::SendLiteral:
      item.kind = WireItem::Kind::Literal;
      item.literal = action.literal;
      break;
    case Action::Kind::SendDim:
      item.kind = WireItem::Kind::ParamWord;
      item.dimName = cfg.dataArgs[action.arg].second[action.dim];
      break;
    case Action::Kind::SendIdx:
      item.kind = WireItem::Kind::ParamWord;
      item.dimName = action.hasArg ? cfg.dataArgs[action.arg].second[action.dim]
                                   : cfg.dims[action.dim];
      break;
    case Action::Kind::Send:
      item.kind = WireItem::Kind::TileIn;
      item.arg = action.arg;
      break;
    case Action::Kind::Recv:
      item.kind = WireItem::Kind::TileOut;
      item.arg = action.arg;
      break;
    }
    items.push_back(std::move(item));
  }
  return items;
}

/// Default transfer size for a shapeless read/write: the product of the
/// argument's per-dim parameters (runtime params first, configured tiles as
/// fallback).
std::vector<SizeFactorSpec> defaultSize(const AcceleratorConfig &cfg,
                                        int arg) {
  std::vector<SizeFactorSpec> factors;
  for (const std::string &dim : cfg.dataArgs[arg].second) {
    SizeFactorSpec f;
    f.isParam = true;
    f.param = dim;
    factors.push_back(std::move(f));
  }
  return factors;
}

BoundStep boundTransfer(const AcceleratorConfig &cfg, bool isWrite, int arg,
                        const BehaviorStepSpec *spec) {
  BoundStep step;
  step.kind = isWrite ? BoundStep::Kind::Write : BoundStep::Kind::Read;
  step.arg = arg;
  if (spec && spec->drainAll)
    step.drainAll = true;
  else if (spec && spec->hasShape)
    step.size = spec->shape;
  else
    step.size = defaultSize(cfg, arg);
  return step;
}

bool nonConsuming(const BehaviorStepSpec &spec) {
  return spec.kind == BehaviorStepSpec::Kind::Compute ||
         spec.kind == BehaviorStepSpec::Kind::ResetState;
}

BoundStep convertPlain(const BehaviorStepSpec &spec) {
  BoundStep step;
  step.kind = spec.kind == BehaviorStepSpec::Kind::Compute
                  ? BoundStep::Kind::Compute
                  : BoundStep::Kind::ResetState;
  return step;
}

std::vector<BoundStep> mergeExplicit(const AcceleratorConfig &cfg,
                                     const std::string &id,
                                     const std::vector<WireItem> &wire,
                                     const std::vector<BehaviorStepSpec> &spec) {
  std::vector<BoundStep> steps;
  size_t j = 0;
  auto flushPlain = [&]() {
    while (j < spec.size() && nonConsuming(spec[j]))
      steps.push_back(convertPlain(spec[j++]));
  };

  for (size_t i = 1; i < wire.size(); ++i) {
    const WireItem &item = wire[i];
    flushPlain();
    switch (item.kind) {
    case WireItem::Kind::Literal: {
      BoundStep step;
      step.kind = BoundStep::Kind::ExpectLiteral;
      step.literal = item.literal;
      steps.push_back(std::move(step));
      break;
    }
    case WireItem::Kind::ParamWord: {
      if (j < spec.size() && spec[j].kind == BehaviorStepSpec::Kind::SetParam) {
        BoundStep step;
        step.kind = BoundStep::Kind::SetParam;
        step.param = spec[j++].param;
        steps.push_back(std::move(step));
      } else {
        BoundStep step;
        step.kind = BoundStep::Kind::ConsumeWord;
        steps.push_back(std::move(step));
      }
      break;
    }
    case WireItem::Kind::TileIn: {
      if (j >= spec.size() || spec[j].kind != BehaviorStepSpec::Kind::Read ||
          spec[j].arg != item.arg)
        throw Error(Error::Kind::BadValue,
                    "behavior for '" + id + "': wire action " +
                        std::to_string(i) + " sends data argument " +
                        std::to_string(item.arg) +
                        " but the next behavior step is not read(" +
                        std::to_string(item.arg) + ")");
      steps.push_back(boundTransfer(cfg, /*isWrite=*/false, item.arg,
                                    &spec[j]));
      ++j;
      break;
    }
    case WireItem::Kind::TileOut: {
      if (j >= spec.size() || spec[j].kind != BehaviorStepSpec::Kind::Write ||
          spec[j].arg != item.arg)
        throw Error(Error::Kind::BadValue,
                    "behavior for '" + id + "': wire action " +
                        std::to_string(i) + " receives data argument " +
                        std::to_string(item.arg) +
                        " but the next behavior step is not write(" +
                        std::to_string(item.arg) + ")");
      steps.push_back(boundTransfer(cfg, /*isWrite=*/true, item.arg,
                                    &spec[j]));
      ++j;
      break;
    }
    }
  }
  flushPlain();
  if (j < spec.size())
    throw Error(Error::Kind::BadValue,
                "behavior for '" + id + "' has " +
                    std::to_string(spec.size() - j) +
                    " trailing step(s) with no matching wire action");
  return steps;
}

std::vector<BoundStep> deriveSteps(const AcceleratorConfig &cfg,
                                   const std::vector<WireItem> &wire) {
  std::vector<BoundStep> steps;
  bool computeInserted = false;
  for (size_t i = 1; i < wire.size(); ++i) {
    const WireItem &item = wire[i];
    switch (item.kind) {
    case WireItem::Kind::Literal: {
      BoundStep step;
      step.kind = BoundStep::Kind::ExpectLiteral;
      step.literal = item.literal;
      steps.push_back(std::move(step));
      break;
    }
    case WireItem::Kind::ParamWord: {
      BoundStep step;
      step.kind = BoundStep::Kind::SetParam;
      step.param = item.dimName;
      steps.push_back(std::move(step));
      break;
    }
    case WireItem::Kind::TileIn:
      steps.push_back(boundTransfer(cfg, /*isWrite=*/false, item.arg,
                                    nullptr));
      break;
    case WireItem::Kind::TileOut: {
      if (!computeInserted) {
        BoundStep compute;
        compute.kind = BoundStep::Kind::Compute;
        steps.push_back(std::move(compute));
        computeInserted = true;
      }
      steps.push_back(boundTransfer(cfg, /*isWrite=*/true, item.arg,
                                    nullptr));
      break;
    }
    }
  }
  return steps;
}

} // namespace

const BoundOpcode *BehaviorTable::find(uint32_t key) const {
  for (const BoundOpcode &op : opcodes)
    if (op.key == key)
      return &op;
  return nullptr;
}

BehaviorTable bindBehavior(const AcceleratorConfig &cfg) {
  BehaviorTable table;
  table.kernel = cfg.kernel;
  table.numArgs = static_cast<int>(cfg.dataArgs.size());
  table.accelDims = cfg.accelDims;
  table.bufferWords = cfg.bufferWords;

  for (const auto &entry : cfg.behavior)
    if (!cfg.opcodeMap.find(entry.first))
      throw Error(Error::Kind::UnknownOpcode,
                  "behavior entry '" + entry.first +
                      "' names no opcode in the opcode map");

  for (const auto &entry : cfg.opcodeMap.entries) {
    std::vector<WireItem> wire = wireLayout(cfg, entry.second);
    if (wire.empty() || wire[0].kind != WireItem::Kind::Literal)
      throw Error(Error::Kind::UnboundLiteral,
                  "opcode '" + entry.first +
                      "' must begin with send_literal so the device can "
                      "identify it on the wire");

    BoundOpcode bound;
    bound.id = entry.first;
    bound.key = wire[0].literal;
    if (const BoundOpcode *clash = table.find(bound.key))
      throw Error(Error::Kind::DuplicateOpcodeId,
                  "opcodes '" + clash->id + "' and '" + entry.first +
                      "' share wire literal " + hexLiteral(bound.key));

    auto it = cfg.behavior.find(entry.first);
    bound.steps = it != cfg.behavior.end()
                      ? mergeExplicit(cfg, entry.first, wire, it->second)
                      : deriveSteps(cfg, wire);
    table.opcodes.push_back(std::move(bound));
  }
  return table;
}

//===----------------------------------------------------------------------===//
// StreamAccelerator
//===----------------------------------------------------------------------===//

StreamAccelerator::StreamAccelerator(BehaviorTable table)
    : tbl(std::move(table)) {
  buffers.resize(static_cast<size_t>(tbl.numArgs));
}

bool StreamAccelerator::idle() const { return !current && inFifo.empty(); }

void StreamAccelerator::reset() {
  inFifo.clear();
  outFifo.clear();
  for (auto &buffer : buffers)
    buffer.clear();
  params.clear();
  wordsConsumed = 0;
  wordsProduced = 0;
  current = nullptr;
  stepIndex = 0;
  stepProgress = 0;
}

int32_t StreamAccelerator::popWord() {
  int32_t word = inFifo.front();
  inFifo.pop_front();
  ++wordsConsumed;
  return word;
}

void StreamAccelerator::pushWord(int32_t word) {
  outFifo.push_back(word);
  ++wordsProduced;
}

int64_t StreamAccelerator::resolveParam(const std::string &name) const {
  auto it = params.find(name);
  if (it != params.end())
    return it->second;
  auto dim = tbl.accelDims.find(name);
  if (dim != tbl.accelDims.end())
    return dim->second;
  throw Error(Error::Kind::BadValue,
              "parameter '" + name +
                  "' is neither set by a set_param step nor a configured "
                  "accelerator dim");
}

int64_t StreamAccelerator::evalSize(const BoundStep &step) const {
  int64_t total = 1;
  for (const SizeFactorSpec &factor : step.size)
    total *= factor.isParam ? resolveParam(factor.param) : factor.fixed;
  if (total <= 0)
    throw Error(Error::Kind::BadValue,
                "transfer size for data argument " + std::to_string(step.arg) +
                    " resolves to " + std::to_string(total) +
                    " words; give the step an explicit size");
  return total;
}

void StreamAccelerator::execWrite(const BoundStep &step) {
  std::vector<int32_t> &buffer = buffers[static_cast<size_t>(step.arg)];
  if (!step.drainAll) {
    size_t expected = static_cast<size_t>(evalSize(step));
    // A write after reset (or before any compute) drains a zero tile.
    if (buffer.size() < expected)
      buffer.resize(expected, 0);
  }
  outFifo.insert(outFifo.end(), buffer.begin(), buffer.end());
  wordsProduced += static_cast<int64_t>(buffer.size());
  buffer.clear();
}

void StreamAccelerator::execCompute() {
  if (tbl.kernel == "matmul") {
    int64_t m = resolveParam("m");
    int64_t n = resolveParam("n");
    int64_t k = resolveParam("k");
    const std::vector<int32_t> &a = buffers[0];
    const std::vector<int32_t> &b = buffers[1];
    std::vector<int32_t> &c = buffers[2];
    if (a.size() != static_cast<size_t>(m * k) ||
        b.size() != static_cast<size_t>(k * n))
      throw Error(Error::Kind::ShapeMismatch,
                  "compute expects " + std::to_string(m * k) + " + " +
                      std::to_string(k * n) + " input words but buffers hold " +
                      std::to_string(a.size()) + " + " +
                      std::to_string(b.size()));
    if (tbl.bufferWords > 0 && m * n > tbl.bufferWords)
      throw Error(Error::Kind::BufferOverrun,
                  "result tile of " + std::to_string(m * n) +
                      " words exceeds the on-chip capacity of " +
                      std::to_string(tbl.bufferWords));
    if (c.size() != static_cast<size_t>(m * n))
      c.assign(static_cast<size_t>(m * n), 0);
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) {
        int32_t acc = c[static_cast<size_t>(i * n + j)];
        for (int64_t l = 0; l < k; ++l)
          acc = wrapAdd(acc, wrapMul(a[static_cast<size_t>(i * k + l)],
                                     b[static_cast<size_t>(l * n + j)]));
        c[static_cast<size_t>(i * n + j)] = acc;
      }
    return;
  }

  if (tbl.kernel == "conv2d_nchw_fchw") {
    int64_t f = resolveParam("f");
    int64_t ic = resolveParam("ic");
    size_t window = static_cast<size_t>(ic * f * f);
    const std::vector<int32_t> &input = buffers[0];
    const std::vector<int32_t> &filter = buffers[1];
    std::vector<int32_t> &out = buffers[2];
    if (input.size() != window || filter.size() != window)
      throw Error(Error::Kind::ShapeMismatch,
                  "compute expects a " + std::to_string(window) +
                      "-word window in both input and filter buffers, got " +
                      std::to_string(input.size()) + " and " +
                      std::to_string(filter.size()));
    int32_t acc = 0;
    for (size_t i = 0; i < window; ++i)
      acc = wrapAdd(acc, wrapMul(filter[i], input[i]));
    out.push_back(acc);
    if (tbl.bufferWords > 0 &&
        out.size() > static_cast<size_t>(tbl.bufferWords))
      throw Error(Error::Kind::BufferOverrun,
                  "accumulated output of " + std::to_string(out.size()) +
                      " words exceeds the on-chip capacity of " +
                      std::to_string(tbl.bufferWords));
    return;
  }

  throw Error(Error::Kind::KernelMismatch,
              "no compute semantics for kernel '" + tbl.kernel + "'");
}

void StreamAccelerator::runToQuiescence() {
  while (true) {
    if (!current) {
      if (inFifo.empty())
        return;
      uint32_t key = static_cast<uint32_t>(popWord());
      current = tbl.find(key);
      if (!current)
        throw Error(Error::Kind::UnknownOpcodeLiteral,
                    "received word " + hexLiteral(key) +
                        " matches no opcode's leading literal");
      stepIndex = 0;
      stepProgress = 0;
    }

    while (stepIndex < current->steps.size()) {
      const BoundStep &step = current->steps[stepIndex];
      switch (step.kind) {
      case BoundStep::Kind::ExpectLiteral: {
        if (inFifo.empty())
          return;
        uint32_t word = static_cast<uint32_t>(popWord());
        if (word != step.literal)
          throw Error(Error::Kind::UnknownOpcodeLiteral,
                      "opcode '" + current->id + "' expected literal " +
                          hexLiteral(step.literal) + " mid-stream, received " +
                          hexLiteral(word));
        break;
      }
      case BoundStep::Kind::ConsumeWord:
        if (inFifo.empty())
          return;
        popWord();
        break;
      case BoundStep::Kind::SetParam:
        if (inFifo.empty())
          return;
        params[step.param] = popWord();
        break;
      case BoundStep::Kind::Read: {
        int64_t total = evalSize(step);
        std::vector<int32_t> &buffer = buffers[static_cast<size_t>(step.arg)];
        if (stepProgress == 0) {
          if (tbl.bufferWords > 0 && total > tbl.bufferWords)
            throw Error(Error::Kind::BufferOverrun,
                        "read of " + std::to_string(total) +
                            " words into data argument " +
                            std::to_string(step.arg) +
                            " exceeds the on-chip capacity of " +
                            std::to_string(tbl.bufferWords));
          buffer.clear();
          buffer.reserve(static_cast<size_t>(total));
        }
        int64_t take = std::min(total - stepProgress,
                                static_cast<int64_t>(inFifo.size()));
        buffer.insert(buffer.end(), inFifo.begin(),
                      inFifo.begin() + static_cast<ptrdiff_t>(take));
        inFifo.erase(inFifo.begin(),
                     inFifo.begin() + static_cast<ptrdiff_t>(take));
        wordsConsumed += take;
        stepProgress += take;
        if (stepProgress < total)
          return; // Stall until the next send tops up the stream.
        stepProgress = 0;
        break;
      }
      case BoundStep::Kind::Write:
        execWrite(step);
        break;
      case BoundStep::Kind::Compute:
        execCompute();
        break;
      case BoundStep::Kind::ResetState:
        for (auto &buffer : buffers)
          buffer.clear();
        params.clear();
        break;
      }
      ++stepIndex;
    }
    current = nullptr;
  }
}

} // namespace accelhost

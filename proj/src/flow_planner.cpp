//===- flow_planner.cpp - Opcode flow placement ---------------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/flow_planner.h"
#include "accelhost/error.h"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>
#include <sstream>

namespace accelhost {

int64_t OffsetExpr::eval(const std::vector<int64_t> &loopVars) const {
  int64_t value = constant;
  for (const auto &[loopIdx, coeff] : terms)
    value += coeff * loopVars[loopIdx];
  return value;
}

const PlacedOpcode *AccelProgram::findOpcode(const std::string &id) const {
  for (const auto *slots : {&pre, &post})
    for (const auto &slot : *slots)
      for (const auto &op : slot)
        if (op.id == id)
          return &op;
  return nullptr;
}

namespace {

struct PendingOpcode {
  std::string id;
  const std::vector<Action> *actions;
  Placement placement;
  int sequence;
};

/// Flattens a chain-shaped flow into (opcode, placement, sequence) triples.
/// Each group may contain at most one nested subgroup; leaves before it bind
/// to the group's loop level pre-side, leaves after it post-side.
std::vector<PendingOpcode> bindFlow(const FlowNode &flow,
                                    const AcceleratorConfig &cfg,
                                    int numLoops, int numAccelLoops) {
  // Measure chain depth and validate shape.
  int depth = 0;
  const FlowNode *node = &flow;
  while (true) {
    ++depth;
    const FlowNode *subgroup = nullptr;
    for (const auto &child : node->children) {
      if (child.isLeaf)
        continue;
      if (subgroup)
        throw Error(Error::Kind::UnsupportedFlowShape,
                    "flow group has more than one nested subgroup; only "
                    "chain-shaped flows are supported");
      subgroup = &child;
    }
    if (!subgroup)
      break;
    node = subgroup;
  }
  if (depth > numAccelLoops)
    throw Error(Error::Kind::FlowDeeperThanNest,
                "flow nests " + std::to_string(depth) +
                    " levels but the nest has only " +
                    std::to_string(numAccelLoops) + " accelerator loops");

  std::vector<PendingOpcode> result;
  int sequence = 0;
  node = &flow;
  // Group i (1-based) binds to loop numLoops - (depth - i): the deepest
  // group lands on the innermost loop.
  for (int group = 1;; ++group) {
    int level = numLoops - (depth - group);
    const FlowNode *subgroup = nullptr;
    bool afterSubgroup = false;
    for (const auto &child : node->children) {
      if (!child.isLeaf) {
        subgroup = &child;
        afterSubgroup = true;
        continue;
      }
      const std::vector<Action> *actions = cfg.opcodeMap.find(child.id);
      if (!actions)
        throw Error(Error::Kind::UnknownOpcodeInFlow,
                    "flow references opcode '" + child.id +
                        "' which is not in the opcode map");
      // Innermost group has no inner loop, so the pre/post split collapses.
      bool post = afterSubgroup && subgroup != nullptr;
      result.push_back({child.id, actions, {level, post}, sequence++});
    }
    if (!subgroup)
      break;
    node = subgroup;
  }
  return result;
}

/// Dims referenced by an argument's indexing map.
std::set<std::string> argDims(const KernelSpec &spec, int arg) {
  std::set<std::string> dims;
  for (const auto &expr : spec.args[arg].map.results)
    for (const auto &d : expr.referencedDims())
      dims.insert(d);
  return dims;
}

std::string resolveIdxDim(const AcceleratorConfig &cfg, const Action &action) {
  if (!action.hasArg)
    return cfg.dims[action.dim];
  return cfg.dataArgs[action.arg].second[action.dim];
}

/// True when firing `action` once outside `loop` is equivalent to firing it
/// on every iteration (data-wise). Receives of streamed dims (accel tile 0)
/// are invariant because the accelerator accumulates across the sweep.
bool actionInvariantIn(const Action &action, const Loop &loop,
                       const KernelSpec &spec, const AcceleratorConfig &cfg) {
  switch (action.kind) {
  case Action::Kind::SendLiteral:
  case Action::Kind::SendDim:
    return true;
  case Action::Kind::SendIdx:
    return resolveIdxDim(cfg, action) != loop.dim;
  case Action::Kind::Send:
    return !argDims(spec, action.arg).count(loop.dim);
  case Action::Kind::Recv:
    return !argDims(spec, action.arg).count(loop.dim) ||
           cfg.accelDims.at(loop.dim) == 0;
  }
  return false;
}

bool hasTransferAction(const std::vector<Action> &actions) {
  return std::any_of(actions.begin(), actions.end(), [](const Action &a) {
    return a.kind == Action::Kind::Send || a.kind == Action::Kind::Recv;
  });
}

bool hasRecvAction(const std::vector<Action> &actions) {
  return std::any_of(actions.begin(), actions.end(), [](const Action &a) {
    return a.kind == Action::Kind::Recv;
  });
}

/// Moves each opcode as far out as its data dependences allow. Crossing a
/// single-trip loop is always free. A multi-trip loop may only be crossed by
/// an opcode that moves tiles and whose actions are all invariant in the
/// crossed loop's dim; pure compute/control opcodes fire once per iteration
/// wherever the flow put them. Receive-bearing opcodes additionally need the
/// crossed dim to be streamed: the accelerator produces the whole sweep
/// before the host drains it, so the receive lands after the loop (post). A
/// receive of a tile rebuilt on every iteration of a non-streamed loop (for
/// example a reduction that the host accumulates) must stay inside it.
void hoist(std::vector<PendingOpcode> &ops, const LoopNest &nest,
           const KernelSpec &spec, const AcceleratorConfig &cfg) {
  for (auto &op : ops) {
    bool receives = hasRecvAction(*op.actions);
    while (op.placement.level > 0) {
      const Loop &crossed = nest.loops[op.placement.level - 1];
      bool canCross;
      bool toPost = false;
      if (crossed.trips() == 1) {
        canCross = true;
      } else if (!hasTransferAction(*op.actions)) {
        canCross = false;
      } else if (receives && cfg.accelDims.at(crossed.dim) != 0) {
        canCross = false;
      } else {
        canCross = std::all_of(op.actions->begin(), op.actions->end(),
                               [&](const Action &a) {
                                 return actionInvariantIn(a, crossed, spec, cfg);
                               });
        toPost = receives;
      }
      if (!canCross)
        break;
      --op.placement.level;
      if (toPost)
        op.placement.post = true;
    }
  }
}

struct DimResolution {
  bool bound = false;
  int loopIndex = -1;   // Innermost enclosing loop for the dim (when bound).
  int64_t tileLen = 1;  // Extent covered along the dim per firing.
};

/// Resolves dim `d` at a placement: bound to an enclosing accel loop, swept
/// whole by single-trip / streamed loops below, or undefined. Cache loops
/// never bind a transfer: their step is a cache-block length, not the
/// accelerator tile the opcode framing promises the device.
DimResolution resolveDim(const std::string &d, int level, const LoopNest &nest,
                         const AcceleratorConfig &cfg,
                         const KernelSpec &spec) {
  for (int i = level - 1; i >= 0; --i)
    if (nest.loops[i].dim == d && !nest.loops[i].cacheLevel)
      return {true, i, nest.loops[i].step};

  // Not enclosing: the loops below sweep the dim while this op stays put.
  int outermostBelow = -1;
  bool allSingleTrip = true;
  for (size_t i = level; i < nest.loops.size(); ++i)
    if (nest.loops[i].dim == d) {
      if (outermostBelow < 0)
        outermostBelow = static_cast<int>(i);
      if (nest.loops[i].trips() != 1)
        allSingleTrip = false;
    }
  if (outermostBelow < 0)
    // Dim has no loop at all (not an iteration dim of this nest).
    throw Error(Error::Kind::UnknownDim,
                "indexing references dim '" + d + "' with no loop");
  if (allSingleTrip || cfg.accelDims.at(d) == 0)
    return {false, -1, nest.loops[outermostBelow].span};

  (void)spec;
  throw Error(Error::Kind::UndefinedTileIndex,
              "dim '" + d + "' has no tile index at this placement: its loop "
              "runs inside the op's loop level");
}

/// Size and offset of one argument-dim result expression at a placement.
void concretizeResult(const AffineExpr &expr, int level, const LoopNest &nest,
                      const AcceleratorConfig &cfg, const KernelSpec &spec,
                      OffsetExpr &offset, int64_t &size) {
  offset = {};
  offset.constant = expr.constant;
  size = 1;
  for (const auto &[d, coeff] : expr.terms) {
    if (coeff == 0)
      continue;
    DimResolution res = resolveDim(d, level, nest, cfg, spec);
    size += std::abs(coeff) * (res.tileLen - 1);
    if (res.bound)
      offset.terms.emplace_back(res.loopIndex, coeff);
  }
}

PlannedAction concretizeAction(const Action &action, int level,
                               const LoopNest &nest,
                               const AcceleratorConfig &cfg,
                               const KernelSpec &spec) {
  PlannedAction planned;
  planned.kind = action.kind;
  switch (action.kind) {
  case Action::Kind::SendLiteral:
    planned.literal = action.literal;
    break;
  case Action::Kind::SendDim: {
    // The wire value is the transfer extent along this argument dim, which
    // depends only on the effective tiles, not on where the opcode fires.
    const AffineExpr &expr = spec.args[action.arg].map.results[action.dim];
    planned.dimValue = 1;
    for (const auto &[dim, coeff] : expr.terms)
      planned.dimValue += std::abs(coeff) * (nest.effTiles.at(dim) - 1);
    break;
  }
  case Action::Kind::SendIdx: {
    std::string d = resolveIdxDim(cfg, action);
    if (action.hasArg &&
        !spec.args[action.arg].map.results[action.dim].isSingleDim())
      throw Error(Error::Kind::UndefinedTileIndex,
                  "send_idx targets a composite index expression; reference "
                  "the loop dim directly");
    DimResolution res = resolveDim(d, level, nest, cfg, spec);
    if (res.bound) {
      planned.idxExpr.terms.emplace_back(res.loopIndex, 1);
      planned.idxStep = nest.loops[res.loopIndex].step;
    } else {
      planned.idxExpr.constant = 0;
      planned.idxStep = 1;
    }
    break;
  }
  case Action::Kind::Send:
  case Action::Kind::Recv: {
    PlannedTransfer &t = planned.transfer;
    t.arg = action.arg;
    const AffineMap &map = spec.args[action.arg].map;
    t.words = 1;
    for (const auto &expr : map.results) {
      OffsetExpr off;
      int64_t size;
      concretizeResult(expr, level, nest, cfg, spec, off, size);
      t.offsets.push_back(std::move(off));
      t.sizes.push_back(size);
      t.words *= size;
    }
    if (cfg.bufferWords > 0 && t.words > cfg.bufferWords)
      throw Error(Error::Kind::TileExceedsCapacity,
                  "transfer of argument '" + spec.args[action.arg].name +
                      "' moves " + std::to_string(t.words) +
                      " words but the accelerator buffers hold " +
                      std::to_string(cfg.bufferWords));
    break;
  }
  }
  return planned;
}

/// Accumulate when a multi-trip reduction loop encloses the receive: the
/// accelerator then returns partial products that must be summed host-side.
bool resolveAccumulate(const Placement &placement, const LoopNest &nest,
                       const KernelSpec &spec, const AcceleratorConfig &cfg) {
  if (cfg.recvMode == RecvMode::Store)
    return false;
  if (cfg.recvMode == RecvMode::Accumulate)
    return true;
  for (int i = 0; i < placement.level; ++i) {
    const Loop &loop = nest.loops[i];
    if (loop.trips() <= 1)
      continue;
    int dimIdx = spec.dimIndex(loop.dim);
    if (dimIdx >= 0 && spec.dims[dimIdx].kind == IterKind::Reduction)
      return true;
  }
  return false;
}

AccelProgram planNoSuggest(const KernelSpec &spec, const AcceleratorConfig &cfg,
                           const LoopNest &nest, const FlowNode &flow) {
  // Argument lists must agree between the kernel and the accelerator.
  if (spec.args.size() != cfg.dataArgs.size())
    throw Error(Error::Kind::KernelMismatch,
                "kernel has " + std::to_string(spec.args.size()) +
                    " arguments but accelerator '" + cfg.name +
                    "' declares " + std::to_string(cfg.dataArgs.size()));
  for (size_t i = 0; i < spec.args.size(); ++i)
    if (spec.args[i].name != cfg.dataArgs[i].first)
      throw Error(Error::Kind::KernelMismatch,
                  "argument " + std::to_string(i) + " is '" +
                      spec.args[i].name + "' in the kernel but '" +
                      cfg.dataArgs[i].first + "' in the accelerator");

  int numLoops = static_cast<int>(nest.loops.size());
  std::vector<PendingOpcode> pending =
      bindFlow(flow, cfg, numLoops, nest.numAccelLoops());

  // Init opcodes fire once, before everything else.
  int initSeq = -static_cast<int>(cfg.initOpcodes.size());
  std::vector<PendingOpcode> initOps;
  for (const auto &id : cfg.initOpcodes) {
    const std::vector<Action> *actions = cfg.opcodeMap.find(id);
    if (!actions)
      throw Error(Error::Kind::UnknownOpcode,
                  "init opcode '" + id + "' is not in the opcode map");
    initOps.push_back({id, actions, {0, false}, initSeq++});
  }

  hoist(pending, nest, spec, cfg);

  AccelProgram program;
  program.spec = spec;
  program.cfg = cfg;
  program.nest = nest;
  program.pre.resize(numLoops + 1);
  program.post.resize(numLoops + 1);

  auto place = [&](const PendingOpcode &op) {
    PlacedOpcode placed;
    placed.id = op.id;
    placed.placement = op.placement;
    placed.sequence = op.sequence;
    for (const Action &action : *op.actions) {
      PlannedAction planned =
          concretizeAction(action, op.placement.level, nest, cfg, spec);
      if (action.kind == Action::Kind::Recv)
        planned.transfer.accumulate =
            resolveAccumulate(op.placement, nest, spec, cfg);
      placed.actions.push_back(std::move(planned));
    }
    auto &slot = (op.placement.post ? program.post
                                    : program.pre)[op.placement.level];
    slot.push_back(std::move(placed));
  };

  for (const auto &op : initOps)
    place(op);
  for (const auto &op : pending)
    place(op);

  // Firing order inside a slot follows the flow's document order.
  for (auto *slots : {&program.pre, &program.post})
    for (auto &slot : *slots)
      std::stable_sort(slot.begin(), slot.end(),
                       [](const PlacedOpcode &a, const PlacedOpcode &b) {
                         return a.sequence < b.sequence;
                       });

  // Structural legality: no offset may reference a loop at or below its
  // placement.
  for (int level = 0; level <= numLoops; ++level)
    for (const auto *slots : {&program.pre, &program.post})
      for (const auto &op : (*slots)[level])
        for (const auto &action : op.actions)
          for (const auto &off : action.transfer.offsets)
            for (const auto &[loopIdx, coeff] : off.terms) {
              (void)coeff;
              assert(loopIdx < level && "offset references an inner loop");
            }

  return program;
}

/// Permutations of the configured dim order, closest-to-original first
/// (lexicographic over positions in the original order). Used to build the
/// "try this instead" hint on placement failures.
std::vector<std::vector<std::string>>
allAccelPermutations(const std::vector<std::string> &original) {
  std::vector<size_t> order(original.size());
  for (size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::vector<std::vector<std::string>> perms;
  do {
    std::vector<std::string> perm;
    for (size_t i : order)
      perm.push_back(original[i]);
    perms.push_back(std::move(perm));
  } while (std::next_permutation(order.begin(), order.end()));
  return perms;
}

} // namespace

AccelProgram plan(const KernelSpec &spec, const AcceleratorConfig &cfg,
                  const LoopNest &nest, const FlowNode &flow) {
  try {
    return planNoSuggest(spec, cfg, nest, flow);
  } catch (const Error &e) {
    if (e.kind != Error::Kind::UndefinedTileIndex)
      throw;
    // Look for a loop order that would make this flow legal, staying as
    // close to the configured dim order as possible.
    for (const auto &perm : allAccelPermutations(cfg.dims)) {
      if (perm.size() != static_cast<size_t>(nest.numAccelLoops()))
        continue;
      bool legal = false;
      try {
        LoopNest permuted = applyPermutation(nest, perm);
        planNoSuggest(spec, cfg, permuted, flow);
        legal = true;
      } catch (const Error &) {
        // This permutation is illegal too; keep looking.
      }
      if (legal) {
        std::string hint;
        for (size_t i = 0; i < perm.size(); ++i)
          hint += (i ? "," : "") + perm[i];
        throw Error(Error::Kind::UndefinedTileIndex,
                    std::string(e.what()) + "; permutation " + hint +
                        " would make this flow legal");
      }
    }
    throw;
  }
}

//===----------------------------------------------------------------------===//
// Symbolic cost and traffic reports
//===----------------------------------------------------------------------===//

namespace {

int64_t enclosingTrips(const AccelProgram &program, int level) {
  int64_t trips = 1;
  for (int i = 0; i < level; ++i)
    trips *= program.nest.loops[i].trips();
  return trips;
}

int64_t wordsPerFiring(const PlacedOpcode &op, bool sends, bool recvs) {
  int64_t words = 0;
  for (const auto &action : op.actions) {
    switch (action.kind) {
    case Action::Kind::SendLiteral:
    case Action::Kind::SendDim:
    case Action::Kind::SendIdx:
      if (sends)
        words += 1;
      break;
    case Action::Kind::Send:
      if (sends)
        words += action.transfer.words;
      break;
    case Action::Kind::Recv:
      if (recvs)
        words += action.transfer.words;
      break;
    }
  }
  return words;
}

int64_t predictWords(const AccelProgram &program, bool sends, bool recvs) {
  int64_t total = 0;
  for (int level = 0; level <= program.numLoops(); ++level)
    for (const auto *slots : {&program.pre, &program.post})
      for (const auto &op : (*slots)[level])
        total += wordsPerFiring(op, sends, recvs) *
                 enclosingTrips(program, level);
  return total;
}

} // namespace

int64_t predictCost(const AccelProgram &program) {
  return predictWords(program, true, true);
}

int64_t predictSentWords(const AccelProgram &program) {
  return predictWords(program, true, false);
}

int64_t predictRecvWords(const AccelProgram &program) {
  return predictWords(program, false, true);
}

std::vector<ArgTraffic> stationarityReport(const AccelProgram &program) {
  std::vector<ArgTraffic> report;
  for (const auto &arg : program.spec.args)
    report.push_back({arg.name, 0, 0, "", ""});

  for (int level = 0; level <= program.numLoops(); ++level)
    for (const auto *slots : {&program.pre, &program.post})
      for (const auto &op : (*slots)[level]) {
        std::string factors;
        for (int i = 0; i < level; ++i)
          if (program.nest.loops[i].trips() > 1)
            factors += (factors.empty() ? "" : "*") +
                       std::to_string(program.nest.loops[i].trips());
        if (factors.empty())
          factors = "1";
        int64_t trips = enclosingTrips(program, level);
        for (const auto &action : op.actions) {
          if (action.kind != Action::Kind::Send &&
              action.kind != Action::Kind::Recv)
            continue;
          ArgTraffic &t = report[action.transfer.arg];
          if (action.kind == Action::Kind::Send) {
            t.sendTransfers += trips;
            t.sendFactors +=
                (t.sendFactors.empty() ? "" : " + ") + factors;
          } else {
            t.recvTransfers += trips;
            t.recvFactors +=
                (t.recvFactors.empty() ? "" : " + ") + factors;
          }
        }
      }
  return report;
}

//===----------------------------------------------------------------------===//
// IR dump
//===----------------------------------------------------------------------===//

namespace {

std::string hex32(uint32_t value) {
  std::ostringstream os;
  os << "0x" << std::uppercase << std::hex << value;
  return os.str();
}

/// Variable names per loop, substituting constants for elided (single-trip)
/// loops.
std::vector<std::string> loopVarNames(const LoopNest &nest, bool elide) {
  std::vector<std::string> names(nest.loops.size());
  for (size_t i = 0; i < nest.loops.size(); ++i) {
    const Loop &loop = nest.loops[i];
    std::string var = loop.cacheLevel ? loop.dim + "_c" : loop.dim;
    if (elide && loop.trips() == 1) {
      // A single-trip loop pins its var to the lower bound.
      int cacheIdx = loop.cacheLevel ? -1 : nest.cacheLoopIndex(loop.dim);
      names[i] = cacheIdx >= 0 ? names[cacheIdx] : "0";
    } else {
      names[i] = var;
    }
  }
  return names;
}

std::string printOffsetExpr(const OffsetExpr &expr,
                            const std::vector<std::string> &vars) {
  std::string out;
  for (const auto &[loopIdx, coeff] : expr.terms) {
    if (vars[loopIdx] == "0" && coeff != 0)
      continue;
    if (!out.empty())
      out += " + ";
    if (coeff == 1)
      out += vars[loopIdx];
    else
      out += std::to_string(coeff) + "*" + vars[loopIdx];
  }
  if (expr.constant != 0 || out.empty()) {
    if (!out.empty())
      out += " + ";
    out += std::to_string(expr.constant);
  }
  return out;
}

void dumpOpcode(std::ostringstream &os, const std::string &indent,
                const PlacedOpcode &op, const AccelProgram &program,
                const std::vector<std::string> &vars) {
  for (const auto &action : op.actions) {
    os << indent;
    switch (action.kind) {
    case Action::Kind::SendLiteral:
      os << "accel.send_literal " << hex32(action.literal) << "  // " << op.id;
      break;
    case Action::Kind::SendDim:
      os << "accel.send_dim " << action.dimValue << "  // " << op.id;
      break;
    case Action::Kind::SendIdx:
      os << "accel.send_idx (" << printOffsetExpr(action.idxExpr, vars) << ")/"
         << action.idxStep << "  // " << op.id;
      break;
    case Action::Kind::Send:
    case Action::Kind::Recv: {
      const PlannedTransfer &t = action.transfer;
      os << (action.kind == Action::Kind::Send ? "accel.send " : "accel.recv ")
         << program.spec.args[t.arg].name << "[";
      for (size_t d = 0; d < t.sizes.size(); ++d) {
        if (d)
          os << ", ";
        os << printOffsetExpr(t.offsets[d], vars) << " : " << t.sizes[d];
      }
      os << "]";
      if (action.kind == Action::Kind::Recv)
        os << (t.accumulate ? " accumulate" : " store");
      os << "  // " << op.id;
      break;
    }
    }
    os << "\n";
  }
}

} // namespace

std::string dumpProgram(const AccelProgram &program) {
  std::ostringstream os;
  const DmaConfig &dma = program.cfg.dma;
  os << "accel.dma_init {id = " << dma.id << ", in = " << hex32(dma.inputAddress)
     << " size " << hex32(dma.inputBufferSize) << ", out = "
     << hex32(dma.outputAddress) << " size " << hex32(dma.outputBufferSize)
     << "}\n";

  std::vector<std::string> vars = loopVarNames(program.nest, /*elide=*/true);

  // Recursive emission over loop levels; single-trip loops are elided.
  std::function<void(int, std::string)> emitLevel = [&](int level,
                                                        std::string indent) {
    for (const auto &op : program.pre[level])
      dumpOpcode(os, indent, op, program, vars);
    if (level < program.numLoops()) {
      const Loop &loop = program.nest.loops[level];
      bool elided = loop.trips() == 1;
      std::string inner = indent;
      if (!elided) {
        std::string lb = "0";
        if (!loop.cacheLevel) {
          int cacheIdx = program.nest.cacheLoopIndex(loop.dim);
          if (cacheIdx >= 0)
            lb = vars[cacheIdx];
        }
        os << indent << "for " << vars[level] << " in [" << lb << ", " << lb
           << "+" << loop.span << ") step " << loop.step << " {\n";
        inner += "  ";
      }
      emitLevel(level + 1, inner);
      if (!elided)
        os << indent << "}\n";
    }
    for (const auto &op : program.post[level])
      dumpOpcode(os, indent, op, program, vars);
  };
  emitLevel(0, "");
  return os.str();
}

} // namespace accelhost

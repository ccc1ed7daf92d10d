//===- flow_planner.h - Opcode flow placement -----------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Places the opcodes of a selected flow into the tiled loop nest. Flow
// nesting anchors to the innermost loops (a flow of depth D binds its
// deepest group to the innermost loop), then transfers that are invariant
// in a loop — or cross only single-trip loops — hoist outward. The result is
// an AccelProgram: a loop nest whose body slots carry fully concretized
// transfer operations (static subview shapes, per-loop offset expressions,
// resolved receive modes).
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/accel_config.h"
#include "accelhost/kernel_model.h"
#include "accelhost/opcode_dsl.h"
#include "accelhost/tiler.h"

#include <map>
#include <string>
#include <vector>

namespace accelhost {

/// Affine expression over loop variables (by loop index into the nest).
/// Loop variables hold absolute tile origins.
struct OffsetExpr {
  int64_t constant = 0;
  std::vector<std::pair<int, int64_t>> terms; // (loop index, coefficient)

  int64_t eval(const std::vector<int64_t> &loopVars) const;
};

/// A tile moved between host memory and the staging region.
struct PlannedTransfer {
  int arg = -1;
  std::vector<OffsetExpr> offsets; // Per argument dim.
  std::vector<int64_t> sizes;      // Per argument dim (static).
  int64_t words = 0;               // Product of sizes.
  bool accumulate = false;         // Receives only.
};

/// One wire action with placement-resolved operands.
struct PlannedAction {
  Action::Kind kind;
  uint32_t literal = 0;       // SendLiteral.
  int64_t dimValue = 0;       // SendDim payload (static tile size).
  OffsetExpr idxExpr;         // SendIdx payload: origin expression.
  int64_t idxStep = 1;        // SendIdx: ordinal = origin / step.
  PlannedTransfer transfer;   // Send / Recv.
};

/// Where an opcode fires. level n means "inside loop n's body" (1-based);
/// level 0 is outside all loops. post=false fires before the next inner
/// loop, post=true after it completes.
struct Placement {
  int level = 0;
  bool post = false;

  bool operator==(const Placement &other) const {
    return level == other.level && post == other.post;
  }
};

struct PlacedOpcode {
  std::string id;
  std::vector<PlannedAction> actions;
  Placement placement;
  int sequence = 0; // Original firing order inside one slot.
};

/// Fully planned host program: nest plus per-slot opcode lists.
struct AccelProgram {
  KernelSpec spec;
  AcceleratorConfig cfg;
  LoopNest nest;
  /// pre[l] fires at the top of loop l's body, post[l] at the bottom;
  /// index 0 is the preamble (after dma_init) / epilogue.
  std::vector<std::vector<PlacedOpcode>> pre;
  std::vector<std::vector<PlacedOpcode>> post;

  int numLoops() const { return static_cast<int>(nest.loops.size()); }
  /// Placement of the first opcode with this id (searching all slots).
  const PlacedOpcode *findOpcode(const std::string &id) const;
};

/// Plans `flow` (must exist in cfg or be an inline tree) over the nest.
/// Throws Error{FlowDeeperThanNest, UnknownOpcodeInFlow, UnsupportedFlowShape,
/// UndefinedTileIndex, TileExceedsCapacity}. UndefinedTileIndex messages name
/// the offending dim and suggest a loop permutation that would make the flow
/// legal when one exists.
AccelProgram plan(const KernelSpec &spec, const AcceleratorConfig &cfg,
                  const LoopNest &nest, const FlowNode &flow);

/// Total words the program will move (sent + received), computed
/// symbolically as sum over placed ops of words-per-firing times enclosing
/// trip counts. Matches the runtime counters exactly.
int64_t predictCost(const AccelProgram &program);
int64_t predictSentWords(const AccelProgram &program);
int64_t predictRecvWords(const AccelProgram &program);

/// Per-argument transfer census: how many tile transfers per kernel run and
/// which loop trips multiply together to produce that count.
struct ArgTraffic {
  std::string arg;
  int64_t sendTransfers = 0;
  int64_t recvTransfers = 0;
  std::string sendFactors; // e.g. "8*8*8" (empty when no sends)
  std::string recvFactors;
};
std::vector<ArgTraffic> stationarityReport(const AccelProgram &program);

/// Textual IR dump: dma_init, then the nest with send/recv/literal ops at
/// their placements.
std::string dumpProgram(const AccelProgram &program);

} // namespace accelhost

//===- accel_sim.h - Functional stream-accelerator model -------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A word-accurate functional model of an AXI-stream accelerator. The device
// consumes an instruction+data stream from its input FIFO and produces
// result words on its output FIFO. What each opcode does is described by a
// BehaviorTable bound from the accelerator config: the first send_literal of
// every opcode becomes the dispatch key, and the remaining wire words map to
// literal checks, parameter loads, tile reads and tile writes.
//
// Execution is resumable: if the input FIFO runs dry mid-opcode the device
// stalls and picks up where it left off on the next run, so drivers may
// deliver an opcode's words across any number of DMA transactions.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/accel_config.h"

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

namespace accelhost {

/// One executable micro-step of an opcode, produced by bindBehavior.
struct BoundStep {
  enum class Kind {
    ExpectLiteral, ///< Pop one word; it must equal `literal`.
    ConsumeWord,   ///< Pop one word and ignore it.
    SetParam,      ///< Pop one word into params[param].
    Read,          ///< Pop evalSize(size) words into buffers[arg].
    Write,         ///< Push buffers[arg] to the output FIFO, then clear it.
    Compute,       ///< Run the kernel over the current buffers.
    ResetState,    ///< Clear all buffers and parameters.
  };
  Kind kind;
  uint32_t literal = 0;              // ExpectLiteral
  std::string param;                 // SetParam
  int arg = -1;                      // Read / Write
  bool drainAll = false;             // Write: emit whatever the buffer holds
  std::vector<SizeFactorSpec> size;  // Read / sized Write word count
};

/// All steps of one opcode plus the wire literal that selects it.
struct BoundOpcode {
  std::string id;
  uint32_t key = 0;
  std::vector<BoundStep> steps;
};

/// Dispatch table for one accelerator.
struct BehaviorTable {
  std::string kernel; // "matmul" or "conv2d_nchw_fchw"
  int numArgs = 0;
  std::map<std::string, int64_t> accelDims; // parameter fallbacks
  int64_t bufferWords = 0;                  // 0 = unconstrained
  std::vector<BoundOpcode> opcodes;

  const BoundOpcode *find(uint32_t key) const;
};

/// Builds the dispatch table for `cfg`.
///
/// Opcodes listed in cfg.behavior get their steps merged against the wire
/// layout of their actions: each send(i) consumes a read(i) step, each
/// recv(i) consumes a write(i) step, each send_dim/send_idx word consumes a
/// set_param step when one is next (and is ignored otherwise), and compute /
/// reset_state steps land wherever they appear between those anchors.
/// Literals after the first become in-stream checks automatically.
///
/// Opcodes absent from cfg.behavior get derived steps: data sends become
/// reads, dim words become parameter loads named after the dim they
/// describe, and a compute step is inserted before the first write so that
/// fused "compute and read back" opcodes work out of the box. Transfer sizes
/// default to the product of the argument's per-dim parameters, falling back
/// to the configured tile extents.
///
/// Throws Error{UnboundLiteral} when an opcode has no leading literal,
/// Error{DuplicateOpcodeId} when two opcodes share one, Error{UnknownOpcode}
/// for behavior entries naming no opcode, and Error{BadValue} when explicit
/// steps cannot be matched to the wire layout.
BehaviorTable bindBehavior(const AcceleratorConfig &cfg);

/// The device model. All state is public so tests and the DMA runtime can
/// inspect FIFOs, buffers and conservation counters directly.
class StreamAccelerator {
public:
  explicit StreamAccelerator(BehaviorTable table);

  /// Executes opcodes from the input FIFO until it stalls (needs more words)
  /// or drains. Throws Error{UnknownOpcodeLiteral} on an unrecognized
  /// dispatch word or a mid-opcode literal mismatch, Error{BufferOverrun}
  /// when a read or compute exceeds bufferWords, Error{ShapeMismatch} when
  /// buffer contents do not match the kernel's expectations, and
  /// Error{BadValue} when a transfer size cannot be resolved.
  void runToQuiescence();

  /// True when no opcode is in flight and the input FIFO is empty.
  bool idle() const;

  /// Power-cycle: clears FIFOs, buffers, parameters, progress and counters.
  void reset();

  const BehaviorTable &table() const { return tbl; }

  std::deque<int32_t> inFifo;
  std::deque<int32_t> outFifo;
  /// One on-chip buffer per data argument, indexed like send(i)/recv(i).
  std::vector<std::vector<int32_t>> buffers;
  std::map<std::string, int64_t> params;
  /// Conservation counters: every word popped from / pushed to a FIFO.
  int64_t wordsConsumed = 0;
  int64_t wordsProduced = 0;

private:
  int32_t popWord();
  void pushWord(int32_t word);
  int64_t resolveParam(const std::string &name) const;
  int64_t evalSize(const BoundStep &step) const;
  void execWrite(const BoundStep &step);
  void execCompute();

  BehaviorTable tbl;
  const BoundOpcode *current = nullptr;
  size_t stepIndex = 0;
  int64_t stepProgress = 0;
};

} // namespace accelhost

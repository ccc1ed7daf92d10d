//===- interpreter.h - In-process program execution ------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Executes a planned AccelProgram directly against the DMA runtime and the
// functional accelerator model, mutating the kernel's argument buffers in
// place. The interpreter performs exactly the calls an emitted driver would
// make — same staging copies, same transaction boundaries — so its counters
// are the oracle for generated code.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/dma_runtime.h"
#include "accelhost/flow_planner.h"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace accelhost {

struct InterpretOptions {
  /// Issue one DMA transaction per wire action instead of batching each
  /// opcode firing into a single send. Word counts are unchanged; only
  /// transaction counts grow. Exercises the device's mid-opcode stalls.
  bool perActionSends = false;
  /// Route every staging copy through the element-by-element path.
  bool forceSlowCopy = false;
  /// Optional transaction trace sink.
  std::ostream *trace = nullptr;
};

struct InterpretResult {
  SimCounters counters;
  /// Per-argument tile transfer counts (indexed like the kernel args).
  std::vector<int64_t> argSendTransfers;
  std::vector<int64_t> argRecvTransfers;
  /// Device-side conservation counters.
  int64_t deviceWordsConsumed = 0;
  int64_t deviceWordsProduced = 0;
  /// Words left in the device output FIFO after the run (0 for a program
  /// that drains everything it asked the device to produce).
  int64_t leftoverOutputWords = 0;
  bool fifosDrained = false;
};

/// Runs the program. Argument buffers referenced by program.spec are read
/// and written in place; the output view receives the accelerator's results
/// (store or accumulate per the planned receive modes).
InterpretResult interpret(const AccelProgram &program,
                          const InterpretOptions &options = {});

} // namespace accelhost

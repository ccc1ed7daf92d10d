//===- driver_emitter.h - C driver code generation --------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Lowers a planned AccelProgram to a portable C99 driver source file. The
// generated function takes one int32_t* per kernel argument and performs the
// same staging copies, DMA transactions and receive copies the interpreter
// performs — byte-identical output and identical counters. Generation is
// deterministic: the same program always yields the same bytes.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/flow_planner.h"

#include <cstdint>
#include <string>
#include <vector>

namespace accelhost {

struct EmittedDriver {
  std::string source;                  // Complete C translation unit.
  std::string entryName;               // Emitted function name.
  std::vector<std::string> bufferArgs; // Parameter names, kernel arg order.
};

/// Emits the C driver for `program`. Throws Error{BadValue} when an argument
/// view exceeds the C runtime's maximum rank.
EmittedDriver emitDriver(const AccelProgram &program);

/// Emits a standalone main() that configures the runtime from the embedded
/// JSON system description, fills the kernel buffers deterministically from
/// `seed`, invokes the driver, and prints the output checksum plus all
/// runtime counters (one "name=value" line each).
std::string emitHarness(const EmittedDriver &driver,
                        const AccelProgram &program,
                        const std::string &configJson, uint32_t seed);

/// Host-side twin of the harness's buffer initialization: fills every input
/// argument's backing buffer from the same per-argument generator streams
/// and zero-fills the output buffer. Buffers must be dense (one word per
/// buffer element, as built by the kernel factory helpers).
void fillDeterministic(const KernelSpec &spec, uint32_t seed);

/// Host-side twin of the harness's result digest: FNV-1a over the output
/// argument's backing buffer.
uint32_t checksumOutput(const KernelSpec &spec);

} // namespace accelhost

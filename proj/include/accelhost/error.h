//===- error.h - Error kinds and reporting --------------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#pragma once

#include <stdexcept>
#include <string>

namespace accelhost {

/// Every failure in the library throws Error with a machine-readable kind.
/// The CLI maps kinds onto distinct process exit codes so scripted callers
/// can tell configuration mistakes from planner rejections from runtime
/// faults.
class Error : public std::runtime_error {
public:
  enum class Kind {
    // Config loading / validation.
    MissingField,
    UnknownField,
    UnknownDim,
    UnknownOpcode,
    UnknownFlow,
    BadSuffix,
    OverlappingDmaRegions,
    UnsupportedSize,
    BadValue,

    // Opcode / flow DSL.
    SyntaxError,
    DuplicateOpcodeId,
    LiteralOutOfRange,
    UnbalancedParens,

    // Kernel model.
    ShapeMismatch,
    IndexOutOfBounds,
    OutOfBounds,

    // Tiling.
    NonDivisibleTile,
    BadTileGranularity,
    NotAPermutation,

    // Flow planning.
    UndefinedTileIndex,
    FlowDeeperThanNest,
    UnknownOpcodeInFlow,
    UnsupportedFlowShape,
    TileExceedsCapacity,
    KernelMismatch,

    // DMA runtime.
    InvalidRegion,
    RegionOverflow,
    SendBeyondStaged,
    RecvUnderflow,

    // Accelerator simulator.
    UnknownOpcodeLiteral,
    BufferOverrun,
    StreamUnderrun,
    UnboundLiteral,

    // Explorer.
    IllegalCandidate,
    NoLegalCandidate,

    // CLI plumbing.
    UsageError,
    IoError,
  };

  Error(Kind kind, const std::string &message)
      : std::runtime_error(message), kind(kind) {}

  Kind kind;
};

/// Short stable name for an error kind ("UndefinedTileIndex" etc.), used in
/// CLI diagnostics and tested against golden messages.
const char *errorKindName(Error::Kind kind);

/// Process exit code associated with an error kind. Codes group by failure
/// class: 2=config, 3=DSL, 4=kernel model, 5=tiling/planning, 6=runtime/sim,
/// 7=exploration, 64=usage, 74=I/O.
int errorExitCode(Error::Kind kind);

} // namespace accelhost

//===- error.cpp - Error kinds and reporting -----------------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/error.h"

namespace accelhost {

const char *errorKindName(Error::Kind kind) {
  switch (kind) {
  case Error::Kind::MissingField:
    return "MissingField";
  case Error::Kind::UnknownField:
    return "UnknownField";
  case Error::Kind::UnknownDim:
    return "UnknownDim";
  case Error::Kind::UnknownOpcode:
    return "UnknownOpcode";
  case Error::Kind::UnknownFlow:
    return "UnknownFlow";
  case Error::Kind::BadSuffix:
    return "BadSuffix";
  case Error::Kind::OverlappingDmaRegions:
    return "OverlappingDmaRegions";
  case Error::Kind::UnsupportedSize:
    return "UnsupportedSize";
  case Error::Kind::BadValue:
    return "BadValue";
  case Error::Kind::SyntaxError:
    return "SyntaxError";
  case Error::Kind::DuplicateOpcodeId:
    return "DuplicateOpcodeId";
  case Error::Kind::LiteralOutOfRange:
    return "LiteralOutOfRange";
  case Error::Kind::UnbalancedParens:
    return "UnbalancedParens";
  case Error::Kind::ShapeMismatch:
    return "ShapeMismatch";
  case Error::Kind::IndexOutOfBounds:
    return "IndexOutOfBounds";
  case Error::Kind::OutOfBounds:
    return "OutOfBounds";
  case Error::Kind::NonDivisibleTile:
    return "NonDivisibleTile";
  case Error::Kind::BadTileGranularity:
    return "BadTileGranularity";
  case Error::Kind::NotAPermutation:
    return "NotAPermutation";
  case Error::Kind::UndefinedTileIndex:
    return "UndefinedTileIndex";
  case Error::Kind::FlowDeeperThanNest:
    return "FlowDeeperThanNest";
  case Error::Kind::UnknownOpcodeInFlow:
    return "UnknownOpcodeInFlow";
  case Error::Kind::UnsupportedFlowShape:
    return "UnsupportedFlowShape";
  case Error::Kind::TileExceedsCapacity:
    return "TileExceedsCapacity";
  case Error::Kind::KernelMismatch:
    return "KernelMismatch";
  case Error::Kind::InvalidRegion:
    return "InvalidRegion";
  case Error::Kind::RegionOverflow:
    return "RegionOverflow";
  case Error::Kind::SendBeyondStaged:
    return "SendBeyondStaged";
  case Error::Kind::RecvUnderflow:
    return "RecvUnderflow";
  case Error::Kind::UnknownOpcodeLiteral:
    return "UnknownOpcodeLiteral";
  case Error::Kind::BufferOverrun:
    return "BufferOverrun";
  case Error::Kind::StreamUnderrun:
    return "StreamUnderrun";
  case Error::Kind::UnboundLiteral:
    return "UnboundLiteral";
  case Error::Kind::IllegalCandidate:
    return "IllegalCandidate";
  case Error::Kind::NoLegalCandidate:
    return "NoLegalCandidate";
  case Error::Kind::UsageError:
    return "UsageError";
  case Error::Kind::IoError:
    return "IoError";
  }
  return "Unknown";
}

int errorExitCode(Error::Kind kind) {
  switch (kind) {
  case Error::Kind::MissingField:
  case Error::Kind::UnknownField:
  case Error::Kind::UnknownDim:
  case Error::Kind::UnknownOpcode:
  case Error::Kind::UnknownFlow:
  case Error::Kind::BadSuffix:
  case Error::Kind::OverlappingDmaRegions:
  case Error::Kind::UnsupportedSize:
  case Error::Kind::BadValue:
    return 2;
  case Error::Kind::SyntaxError:
  case Error::Kind::DuplicateOpcodeId:
  case Error::Kind::LiteralOutOfRange:
  case Error::Kind::UnbalancedParens:
    return 3;
  case Error::Kind::ShapeMismatch:
  case Error::Kind::IndexOutOfBounds:
  case Error::Kind::OutOfBounds:
    return 4;
  case Error::Kind::NonDivisibleTile:
  case Error::Kind::BadTileGranularity:
  case Error::Kind::NotAPermutation:
  case Error::Kind::UndefinedTileIndex:
  case Error::Kind::FlowDeeperThanNest:
  case Error::Kind::UnknownOpcodeInFlow:
  case Error::Kind::UnsupportedFlowShape:
  case Error::Kind::TileExceedsCapacity:
  case Error::Kind::KernelMismatch:
    return 5;
  case Error::Kind::InvalidRegion:
  case Error::Kind::RegionOverflow:
  case Error::Kind::SendBeyondStaged:
  case Error::Kind::RecvUnderflow:
  case Error::Kind::UnknownOpcodeLiteral:
  case Error::Kind::BufferOverrun:
  case Error::Kind::StreamUnderrun:
  case Error::Kind::UnboundLiteral:
    return 6;
  case Error::Kind::IllegalCandidate:
  case Error::Kind::NoLegalCandidate:
    return 7;
  case Error::Kind::UsageError:
    return 64;
  case Error::Kind::IoError:
    return 74;
  }
  return 70;
}

} // namespace accelhost

//===- accel_config.h - System and accelerator description ----*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Typed model of the JSON system description consumed by the host-code
// pipeline: CPU cache hierarchy, DMA engine layout, and per-accelerator
// capability records (kernel kind, tile geometry, opcode map, candidate
// opcode flows). Builtin presets cover four generations of a matmul stream
// accelerator plus a convolution engine, so most workflows never need a
// config file.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/opcode_dsl.h"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace accelhost {

/// Host CPU description: cache sizes in bytes, one label per level.
struct CpuConfig {
  std::vector<int64_t> cacheLevels;
  std::vector<std::string> cacheTypes;
};

/// MMIO layout of one DMA engine: where staging buffers live in the device
/// address space and how big they are (bytes).
struct DmaConfig {
  uint32_t id = 0;
  uint64_t inputAddress = 0;
  uint64_t inputBufferSize = 0;
  uint64_t outputAddress = 0;
  uint64_t outputBufferSize = 0;
};

/// One multiplicative factor of a transfer-size expression: either a fixed
/// word count or a runtime parameter (set by a set_param step).
struct SizeFactorSpec {
  bool isParam = false;
  int64_t fixed = 1;
  std::string param;
};

/// One step of an accelerator's response to an opcode literal. String form
/// in config files: read(i), read(i, f*g), write(i), write(i, drain),
/// compute, set_param(name), reset_state.
struct BehaviorStepSpec {
  enum class Kind { Read, Write, Compute, SetParam, ResetState };
  Kind kind;
  int arg = -1;
  bool hasShape = false;
  bool drainAll = false;
  std::vector<SizeFactorSpec> shape;
  std::string param;

  bool operator==(const BehaviorStepSpec &other) const;
};

enum class RecvMode { Auto, Store, Accumulate };

struct AcceleratorConfig {
  std::string name;
  std::string version;
  DmaConfig dma;
  /// Normalized kernel tag: "matmul" or "conv2d_nchw_fchw".
  std::string kernel;
  /// Iteration dims in loop order.
  std::vector<std::string> dims;
  /// Tile extent per dim; 0 means the accelerator streams that dim (the
  /// host keeps a step-1 loop).
  std::map<std::string, int64_t> accelDims;
  std::string dataType = "int32";
  /// Argument order matters: send(i)/recv(i) indices refer to it.
  std::vector<std::pair<std::string, std::vector<std::string>>> dataArgs;
  OpcodeMap opcodeMap;
  std::vector<std::pair<std::string, FlowNode>> opcodeFlows;
  std::string selectedFlow;
  std::vector<std::string> initOpcodes;
  /// Loop permutation applied after tiling; empty = keep dims order.
  std::vector<std::string> permutation;
  /// Flexible accelerators accept any tile that is a multiple of
  /// tileGranularity and fits bufferWords; fixed ones require tiles equal to
  /// accelDims.
  bool flexibleTiles = false;
  int64_t tileGranularity = 1;
  /// Per-argument on-chip buffer capacity in words; 0 = unconstrained.
  int64_t bufferWords = 0;
  RecvMode recvMode = RecvMode::Auto;
  /// Optional explicit behavior table (opcode id -> steps). Opcodes missing
  /// here get derived behavior where possible.
  std::map<std::string, std::vector<BehaviorStepSpec>> behavior;

  const FlowNode *findFlow(const std::string &id) const;
  int argIndex(const std::string &name) const; // -1 when absent.
  int dimIndex(const std::string &name) const; // -1 when absent.
};

struct SystemConfig {
  CpuConfig cpu;
  std::vector<AcceleratorConfig> accelerators;
};

/// Parses "32K" / "4M" / "0x42" / plain integers into a number. Throws
/// Error{BadSuffix}.
int64_t parseSizeValue(const std::string &text);

/// Loads and validates a JSON system description.
/// Throws Error{MissingField, UnknownField, UnknownDim, UnknownOpcode,
/// UnknownFlow, BadSuffix, OverlappingDmaRegions, SyntaxError, ...}.
SystemConfig loadConfig(const std::string &jsonText);
SystemConfig loadConfigFile(const std::string &path);

/// Re-validates an already-typed config (used after programmatic edits).
void validateConfig(const SystemConfig &config);

/// Serializes back to JSON. loadConfig(saveConfig(loadConfig(text))) yields
/// the same typed value as loadConfig(text).
std::string saveConfig(const SystemConfig &config);

/// Parses / prints one behavior step ("read(0)", "set_param(m)", ...).
BehaviorStepSpec parseBehaviorStep(const std::string &text);
std::string printBehaviorStep(const BehaviorStepSpec &step);

/// Builtin matmul accelerator presets.
///
///   v1: single fused opcode (send A, send B, compute, read C back)
///   v2: split input opcodes, fused compute+read
///   v3: fully split opcodes (sA, sB, cC, rC)
///   v4: v3 plus runtime-sized tiles (size becomes the granularity)
///
/// size selects the square tile extent; v1-v3 accept {4, 8, 16}.
/// Throws Error{UnsupportedSize}.
AcceleratorConfig builtinAccelerator(const std::string &kind, int64_t size);

/// Builtin convolution engine: computes one output-channel slice per
/// round; filter and output stay resident while input windows stream.
AcceleratorConfig builtinConvAccelerator();

/// Default host: 32 KiB L1 data cache, 512 KiB shared L2.
CpuConfig defaultCpu();

/// Wraps a builtin accelerator with the default CPU.
SystemConfig builtinSystem(const std::string &kind, int64_t size);

} // namespace accelhost

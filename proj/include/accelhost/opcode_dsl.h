//===- opcode_dsl.h - Opcode map and flow DSL ------------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Two small textual languages describe how a host talks to a stream
// accelerator:
//
//   opcode_map<sA = [send_literal(0x22), send(0)],
//              rC = [send_literal(0x24), recv(2)]>
//
// binds opcode names to action lists (words pushed to / pulled from the
// accelerator), and
//
//   opcode_flow<(sA (sB cC rC))>
//
// encodes at which loop level of a tiled kernel each opcode fires:
// parenthesized nesting mirrors loop nesting, innermost group binds to the
// innermost loop.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace accelhost {

/// One wire-level action inside an opcode definition.
///
///   send(i)            stream argument i's current tile
///   send_literal(v)    stream the 32-bit constant v
///   send_dim(i, d)     stream the size of argument i's d-th dimension;
///                      send_dim(i) is shorthand for send_dim(i, 0)
///   send_idx(d)        stream the tile ordinal of loop dim d
///   send_idx(i, d)     stream the tile ordinal selecting argument i's d-th
///                      dimension
///   recv(i)            read argument i's current tile back
struct Action {
  enum class Kind { Send, SendLiteral, SendDim, SendIdx, Recv };

  Kind kind;
  uint32_t literal = 0; // SendLiteral payload.
  int arg = -1;         // Argument index for Send/Recv/SendDim/SendIdx.
  int dim = 0;          // Dimension index for SendDim/SendIdx.
  bool hasArg = true;   // False for the one-argument send_idx(d) form.

  static Action send(int arg);
  static Action sendLiteral(uint32_t value);
  static Action sendDim(int arg, int dim);
  static Action sendIdxLoop(int loopDim);
  static Action sendIdx(int arg, int dim);
  static Action recv(int arg);

  bool operator==(const Action &other) const;
};

/// Ordered opcode-name -> action-list dictionary. Order is preserved so
/// printing round-trips, but lookup is by name and names are unique.
struct OpcodeMap {
  std::vector<std::pair<std::string, std::vector<Action>>> entries;

  const std::vector<Action> *find(const std::string &id) const;
  bool operator==(const OpcodeMap &other) const;
};

/// Node of a flow tree: either an opcode reference (leaf) or a
/// parenthesized group of children. The root of a parsed flow is always a
/// group.
struct FlowNode {
  bool isLeaf = false;
  std::string id;                 // Leaf only.
  std::vector<FlowNode> children; // Group only.

  static FlowNode leaf(std::string id);
  static FlowNode group(std::vector<FlowNode> children);

  bool operator==(const FlowNode &other) const;
  /// Nesting depth: a group of leaves has depth 1.
  int depth() const;
};

/// Parses an opcode_map string. The leading "opcode_map<...>" wrapper is
/// required when `requireKeyword` and optional otherwise (a bare
/// "a = [...], b = [...]" body also parses). `//` comments are skipped.
/// Throws Error{SyntaxError, DuplicateOpcodeId, LiteralOutOfRange}.
OpcodeMap parseOpcodeMap(const std::string &text);

/// Parses an opcode_flow string such as "opcode_flow<(sA (sB cC rC))>".
/// The keyword wrapper ("opcode_flow" or "init_opcodes") is optional; a bare
/// "(sA (sB))" body also parses. The top-level expression must be a group.
/// Throws Error{SyntaxError, UnbalancedParens}.
FlowNode parseOpcodeFlow(const std::string &text);

/// Canonical printers. printOpcodeMap(parseOpcodeMap(s)) reparses to an AST
/// equal to parseOpcodeMap(s); likewise for flows. Literals print as hex.
std::string printOpcodeMap(const OpcodeMap &map);
std::string printOpcodeFlow(const FlowNode &root);

/// Body-only printers (no "opcode_map<...>" wrapper), used when embedding.
std::string printActions(const std::vector<Action> &actions);
std::string printFlowBody(const FlowNode &node);

} // namespace accelhost

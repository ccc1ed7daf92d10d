//===- accel_config.cpp - System and accelerator description -------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/accel_config.h"
#include "accelhost/error.h"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

using json = nlohmann::ordered_json;

namespace accelhost {

bool BehaviorStepSpec::operator==(const BehaviorStepSpec &other) const {
  if (kind != other.kind || arg != other.arg || hasShape != other.hasShape ||
      drainAll != other.drainAll || param != other.param)
    return false;
  if (shape.size() != other.shape.size())
    return false;
  for (size_t i = 0; i < shape.size(); ++i) {
    const auto &a = shape[i];
    const auto &b = other.shape[i];
    if (a.isParam != b.isParam || a.fixed != b.fixed || a.param != b.param)
      return false;
  }
  return true;
}

const FlowNode *AcceleratorConfig::findFlow(const std::string &id) const {
  for (const auto &flow : opcodeFlows)
    if (flow.first == id)
      return &flow.second;
  return nullptr;
}

int AcceleratorConfig::argIndex(const std::string &name) const {
  for (size_t i = 0; i < dataArgs.size(); ++i)
    if (dataArgs[i].first == name)
      return static_cast<int>(i);
  return -1;
}

int AcceleratorConfig::dimIndex(const std::string &name) const {
  for (size_t i = 0; i < dims.size(); ++i)
    if (dims[i] == name)
      return static_cast<int>(i);
  return -1;
}

//===----------------------------------------------------------------------===//
// Scalar parsing helpers
//===----------------------------------------------------------------------===//

int64_t parseSizeValue(const std::string &text) {
  std::string s = text;
  // Trim whitespace.
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.pop_back();
  if (s.empty())
    throw Error(Error::Kind::BadSuffix, "empty size value");

  int64_t multiplier = 1;
  char last = s.back();
  if (last == 'K' || last == 'k') {
    multiplier = 1024;
    s.pop_back();
  } else if (last == 'M' || last == 'm') {
    multiplier = 1024 * 1024;
    s.pop_back();
  } else if (last == 'G' || last == 'g') {
    multiplier = 1024LL * 1024 * 1024;
    s.pop_back();
  }

  int base = 10;
  size_t start = 0;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    if (multiplier != 1)
      throw Error(Error::Kind::BadSuffix,
                  "size value '" + text + "' mixes hex and a suffix");
    base = 16;
    start = 2;
  }
  if (start >= s.size())
    throw Error(Error::Kind::BadSuffix, "malformed size value '" + text + "'");

  int64_t value = 0;
  for (size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    int digit;
    if (std::isdigit(static_cast<unsigned char>(c)))
      digit = c - '0';
    else if (base == 16 && std::isxdigit(static_cast<unsigned char>(c)))
      digit = 10 + (std::tolower(c) - 'a');
    else
      throw Error(Error::Kind::BadSuffix,
                  "malformed size value '" + text + "'");
    value = value * base + digit;
    if (value < 0)
      throw Error(Error::Kind::BadSuffix, "size value '" + text + "' overflows");
  }
  return value * multiplier;
}

namespace {

int64_t numberField(const json &node, const std::string &context) {
  if (node.is_number_integer())
    return node.get<int64_t>();
  if (node.is_string())
    return parseSizeValue(node.get<std::string>());
  throw Error(Error::Kind::BadSuffix,
              context + " must be an integer or a size string");
}

const json &requireField(const json &obj, const std::string &key,
                         const std::string &context) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw Error(Error::Kind::MissingField,
                context + " is missing required field '" + key + "'");
  return *it;
}

void rejectUnknownKeys(const json &obj, const std::set<std::string> &known,
                       const std::string &context) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw Error(Error::Kind::UnknownField,
                  context + " has unknown field '" + it.key() + "'");
}

std::string normalizeKernel(const std::string &raw) {
  if (raw == "matmul" || raw == "linalg.matmul")
    return "matmul";
  if (raw == "conv2d_nchw_fchw" || raw == "linalg.conv_2d_nchw_fchw" ||
      raw == "conv2d")
    return "conv2d_nchw_fchw";
  throw Error(Error::Kind::BadValue, "unsupported kernel '" + raw + "'");
}

//===----------------------------------------------------------------------===//
// Behavior step grammar
//===----------------------------------------------------------------------===//

std::vector<SizeFactorSpec> parseShapeExpr(const std::string &expr,
                                           const std::string &context) {
  std::vector<SizeFactorSpec> factors;
  std::string term;
  auto flush = [&]() {
    std::string t = term;
    term.clear();
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front())))
      t.erase(t.begin());
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back())))
      t.pop_back();
    if (t.empty())
      throw Error(Error::Kind::BadValue, context + ": empty shape factor");
    SizeFactorSpec factor;
    if (std::isdigit(static_cast<unsigned char>(t[0]))) {
      factor.isParam = false;
      factor.fixed = parseSizeValue(t);
    } else {
      factor.isParam = true;
      factor.param = t;
    }
    factors.push_back(std::move(factor));
  };
  for (char c : expr) {
    if (c == '*') {
      flush();
      continue;
    }
    term.push_back(c);
  }
  flush();
  return factors;
}

} // namespace

BehaviorStepSpec parseBehaviorStep(const std::string &text) {
  std::string s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.pop_back();

  auto paren = s.find('(');
  std::string head = (paren == std::string::npos) ? s : s.substr(0, paren);
  std::string args;
  if (paren != std::string::npos) {
    if (s.back() != ')')
      throw Error(Error::Kind::BadValue,
                  "behavior step '" + text + "' is missing ')'");
    args = s.substr(paren + 1, s.size() - paren - 2);
  }

  BehaviorStepSpec step;
  if (head == "compute") {
    step.kind = BehaviorStepSpec::Kind::Compute;
    return step;
  }
  if (head == "reset_state") {
    step.kind = BehaviorStepSpec::Kind::ResetState;
    return step;
  }
  if (head == "set_param") {
    step.kind = BehaviorStepSpec::Kind::SetParam;
    if (args.empty())
      throw Error(Error::Kind::BadValue,
                  "set_param needs a parameter name in '" + text + "'");
    step.param = args;
    return step;
  }
  if (head == "read" || head == "write") {
    step.kind = head == "read" ? BehaviorStepSpec::Kind::Read
                               : BehaviorStepSpec::Kind::Write;
    auto comma = args.find(',');
    std::string argIdx = comma == std::string::npos ? args : args.substr(0, comma);
    try {
      step.arg = static_cast<int>(parseSizeValue(argIdx));
    } catch (const Error &) {
      throw Error(Error::Kind::BadValue,
                  "behavior step '" + text + "' needs an argument index");
    }
    if (comma != std::string::npos) {
      std::string rest = args.substr(comma + 1);
      while (!rest.empty() &&
             std::isspace(static_cast<unsigned char>(rest.front())))
        rest.erase(rest.begin());
      if (rest == "drain") {
        if (step.kind != BehaviorStepSpec::Kind::Write)
          throw Error(Error::Kind::BadValue,
                      "only write steps may drain: '" + text + "'");
        step.drainAll = true;
      } else {
        step.hasShape = true;
        step.shape = parseShapeExpr(rest, "behavior step '" + text + "'");
      }
    }
    return step;
  }
  throw Error(Error::Kind::BadValue, "unknown behavior step '" + text + "'");
}

std::string printBehaviorStep(const BehaviorStepSpec &step) {
  switch (step.kind) {
  case BehaviorStepSpec::Kind::Compute:
    return "compute";
  case BehaviorStepSpec::Kind::ResetState:
    return "reset_state";
  case BehaviorStepSpec::Kind::SetParam:
    return "set_param(" + step.param + ")";
  case BehaviorStepSpec::Kind::Read:
  case BehaviorStepSpec::Kind::Write: {
    std::string out =
        (step.kind == BehaviorStepSpec::Kind::Read ? "read(" : "write(") +
        std::to_string(step.arg);
    if (step.drainAll)
      out += ", drain";
    else if (step.hasShape) {
      out += ", ";
      for (size_t i = 0; i < step.shape.size(); ++i) {
        if (i)
          out += "*";
        out += step.shape[i].isParam ? step.shape[i].param
                                     : std::to_string(step.shape[i].fixed);
      }
    }
    return out + ")";
  }
  }
  return "";
}

//===----------------------------------------------------------------------===//
// Validation
//===----------------------------------------------------------------------===//

namespace {

void validateAccelerator(const AcceleratorConfig &acc) {
  const std::string ctx = "accelerator '" + acc.name + "'";

  if (acc.dims.empty())
    throw Error(Error::Kind::MissingField, ctx + " declares no dims");
  std::set<std::string> dimSet(acc.dims.begin(), acc.dims.end());
  if (dimSet.size() != acc.dims.size())
    throw Error(Error::Kind::BadValue, ctx + " has duplicate dims");

  // DMA regions must not overlap.
  const DmaConfig &dma = acc.dma;
  uint64_t inLo = dma.inputAddress, inHi = dma.inputAddress + dma.inputBufferSize;
  uint64_t outLo = dma.outputAddress,
           outHi = dma.outputAddress + dma.outputBufferSize;
  if (dma.inputBufferSize == 0 || dma.outputBufferSize == 0)
    throw Error(Error::Kind::BadValue, ctx + " has a zero-sized DMA buffer");
  if (inLo < outHi && outLo < inHi)
    throw Error(Error::Kind::OverlappingDmaRegions,
                ctx + ": DMA input region [" + std::to_string(inLo) + ", " +
                    std::to_string(inHi) + ") overlaps output region [" +
                    std::to_string(outLo) + ", " + std::to_string(outHi) + ")");

  if (acc.dataType != "int32")
    throw Error(Error::Kind::BadValue,
                ctx + " data_type '" + acc.dataType + "' is not supported");

  for (const auto &[dim, tile] : acc.accelDims) {
    if (!dimSet.count(dim))
      throw Error(Error::Kind::UnknownDim,
                  ctx + " accel_size references unknown dim '" + dim + "'");
    if (tile < 0)
      throw Error(Error::Kind::BadValue,
                  ctx + " accel_size for dim '" + dim + "' is negative");
  }
  for (const auto &dim : acc.dims)
    if (!acc.accelDims.count(dim))
      throw Error(Error::Kind::MissingField,
                  ctx + " accel_size is missing dim '" + dim + "'");

  if (acc.dataArgs.empty())
    throw Error(Error::Kind::MissingField, ctx + " declares no data arguments");
  std::set<std::string> argNames;
  for (const auto &[arg, argDims] : acc.dataArgs) {
    if (!argNames.insert(arg).second)
      throw Error(Error::Kind::BadValue,
                  ctx + " has duplicate data argument '" + arg + "'");
    for (const auto &dim : argDims)
      if (!dimSet.count(dim))
        throw Error(Error::Kind::UnknownDim,
                    ctx + " data argument '" + arg +
                        "' references unknown dim '" + dim + "'");
  }

  if (acc.opcodeMap.entries.empty())
    throw Error(Error::Kind::MissingField, ctx + " has an empty opcode map");
  int nArgs = static_cast<int>(acc.dataArgs.size());
  int nDims = static_cast<int>(acc.dims.size());
  for (const auto &[id, actions] : acc.opcodeMap.entries) {
    for (const Action &a : actions) {
      switch (a.kind) {
      case Action::Kind::Send:
      case Action::Kind::Recv:
        if (a.arg < 0 || a.arg >= nArgs)
          throw Error(Error::Kind::BadValue,
                      ctx + " opcode '" + id + "' references argument " +
                          std::to_string(a.arg) + " but only " +
                          std::to_string(nArgs) + " are declared");
        break;
      case Action::Kind::SendDim:
        if (a.arg < 0 || a.arg >= nArgs)
          throw Error(Error::Kind::BadValue,
                      ctx + " opcode '" + id + "' send_dim argument " +
                          std::to_string(a.arg) + " out of range");
        if (a.dim < 0 ||
            a.dim >= static_cast<int>(acc.dataArgs[a.arg].second.size()))
          throw Error(Error::Kind::BadValue,
                      ctx + " opcode '" + id + "' send_dim dimension " +
                          std::to_string(a.dim) + " out of range for '" +
                          acc.dataArgs[a.arg].first + "'");
        break;
      case Action::Kind::SendIdx:
        if (a.hasArg) {
          if (a.arg < 0 || a.arg >= nArgs)
            throw Error(Error::Kind::BadValue,
                        ctx + " opcode '" + id + "' send_idx argument " +
                            std::to_string(a.arg) + " out of range");
          if (a.dim < 0 ||
              a.dim >= static_cast<int>(acc.dataArgs[a.arg].second.size()))
            throw Error(Error::Kind::BadValue,
                        ctx + " opcode '" + id + "' send_idx dimension " +
                            std::to_string(a.dim) + " out of range");
        } else if (a.dim < 0 || a.dim >= nDims) {
          throw Error(Error::Kind::BadValue,
                      ctx + " opcode '" + id + "' send_idx loop dim " +
                          std::to_string(a.dim) + " out of range");
        }
        break;
      case Action::Kind::SendLiteral:
        break;
      }
    }
  }

  auto checkOpcodeRef = [&](const std::string &id, const std::string &where) {
    if (!acc.opcodeMap.find(id))
      throw Error(Error::Kind::UnknownOpcode,
                  ctx + " " + where + " references unknown opcode '" + id +
                      "'");
  };

  if (acc.opcodeFlows.empty())
    throw Error(Error::Kind::MissingField, ctx + " declares no opcode flows");
  std::set<std::string> flowNames;
  for (const auto &[flowId, tree] : acc.opcodeFlows) {
    if (!flowNames.insert(flowId).second)
      throw Error(Error::Kind::BadValue,
                  ctx + " has duplicate flow '" + flowId + "'");
    std::vector<const FlowNode *> stack{&tree};
    while (!stack.empty()) {
      const FlowNode *node = stack.back();
      stack.pop_back();
      if (node->isLeaf)
        checkOpcodeRef(node->id, "flow '" + flowId + "'");
      else
        for (const auto &child : node->children)
          stack.push_back(&child);
    }
  }

  if (acc.selectedFlow.empty())
    throw Error(Error::Kind::MissingField,
                ctx + " does not select an opcode flow");
  if (!acc.findFlow(acc.selectedFlow))
    throw Error(Error::Kind::UnknownFlow,
                ctx + " selects unknown flow '" + acc.selectedFlow + "'");

  for (const auto &id : acc.initOpcodes)
    checkOpcodeRef(id, "init_opcodes");

  for (const auto &dim : acc.permutation)
    if (!dimSet.count(dim))
      throw Error(Error::Kind::UnknownDim,
                  ctx + " permutation references unknown dim '" + dim + "'");
  if (!acc.permutation.empty()) {
    std::set<std::string> permSet(acc.permutation.begin(),
                                  acc.permutation.end());
    if (permSet.size() != acc.permutation.size() ||
        acc.permutation.size() != acc.dims.size())
      throw Error(Error::Kind::NotAPermutation,
                  ctx + " permutation is not a permutation of dims");
  }

  if (acc.tileGranularity <= 0)
    throw Error(Error::Kind::BadValue, ctx + " tile_granularity must be > 0");
  if (acc.bufferWords < 0)
    throw Error(Error::Kind::BadValue, ctx + " buffer_words must be >= 0");

  for (const auto &[id, steps] : acc.behavior) {
    checkOpcodeRef(id, "behavior table");
    for (const auto &step : steps)
      if ((step.kind == BehaviorStepSpec::Kind::Read ||
           step.kind == BehaviorStepSpec::Kind::Write) &&
          (step.arg < 0 || step.arg >= nArgs))
        throw Error(Error::Kind::BadValue,
                    ctx + " behavior for '" + id +
                        "' references argument out of range");
  }
}

} // namespace

void validateConfig(const SystemConfig &config) {
  const CpuConfig &cpu = config.cpu;
  if (cpu.cacheLevels.empty())
    throw Error(Error::Kind::MissingField, "cpu declares no cache levels");
  if (cpu.cacheLevels.size() != cpu.cacheTypes.size())
    throw Error(Error::Kind::BadValue,
                "cpu cache-levels and cache-types differ in length");
  for (size_t i = 0; i < cpu.cacheLevels.size(); ++i) {
    if (cpu.cacheLevels[i] <= 0)
      throw Error(Error::Kind::BadValue, "cpu cache level " +
                                             std::to_string(i + 1) +
                                             " has non-positive size");
    if (i && cpu.cacheLevels[i] < cpu.cacheLevels[i - 1])
      throw Error(Error::Kind::BadValue,
                  "cpu cache levels must be non-decreasing");
    const std::string &type = cpu.cacheTypes[i];
    if (type != "data" && type != "shared" && type != "instruction")
      throw Error(Error::Kind::BadValue,
                  "unknown cache type '" + type + "'");
  }

  if (config.accelerators.empty())
    throw Error(Error::Kind::MissingField, "config declares no accelerators");
  std::set<std::string> names;
  for (const auto &acc : config.accelerators) {
    if (acc.name.empty())
      throw Error(Error::Kind::MissingField, "accelerator is missing a name");
    if (!names.insert(acc.name).second)
      throw Error(Error::Kind::BadValue,
                  "duplicate accelerator name '" + acc.name + "'");
    validateAccelerator(acc);
  }
}

//===----------------------------------------------------------------------===//
// JSON loading
//===----------------------------------------------------------------------===//

namespace {

AcceleratorConfig loadAccelerator(const json &node) {
  if (!node.is_object())
    throw Error(Error::Kind::BadValue, "accelerator entry must be an object");
  rejectUnknownKeys(node,
                    {"name", "version", "dma_config", "kernel", "accel_size",
                     "data_type", "dims", "data", "opcode_map",
                     "opcode_flow_map", "selected_flow", "init_opcodes",
                     "permutation", "flexible_tiles", "tile_granularity",
                     "buffer_words", "recv_mode", "behavior"},
                    "accelerator");

  AcceleratorConfig acc;
  acc.name = requireField(node, "name", "accelerator").get<std::string>();
  const std::string ctx = "accelerator '" + acc.name + "'";
  if (node.contains("version"))
    acc.version = node["version"].get<std::string>();

  const json &dmaNode = requireField(node, "dma_config", ctx);
  rejectUnknownKeys(dmaNode,
                    {"id", "inputAddress", "inputBufferSize", "outputAddress",
                     "outputBufferSize"},
                    ctx + " dma_config");
  acc.dma.id = static_cast<uint32_t>(
      numberField(requireField(dmaNode, "id", ctx + " dma_config"), "dma id"));
  acc.dma.inputAddress = static_cast<uint64_t>(numberField(
      requireField(dmaNode, "inputAddress", ctx + " dma_config"),
      "inputAddress"));
  acc.dma.inputBufferSize = static_cast<uint64_t>(numberField(
      requireField(dmaNode, "inputBufferSize", ctx + " dma_config"),
      "inputBufferSize"));
  acc.dma.outputAddress = static_cast<uint64_t>(numberField(
      requireField(dmaNode, "outputAddress", ctx + " dma_config"),
      "outputAddress"));
  acc.dma.outputBufferSize = static_cast<uint64_t>(numberField(
      requireField(dmaNode, "outputBufferSize", ctx + " dma_config"),
      "outputBufferSize"));

  acc.kernel =
      normalizeKernel(requireField(node, "kernel", ctx).get<std::string>());

  const json &dimsNode = requireField(node, "dims", ctx);
  if (!dimsNode.is_array())
    throw Error(Error::Kind::BadValue, ctx + " dims must be an array");
  for (const auto &d : dimsNode)
    acc.dims.push_back(d.get<std::string>());

  const json &sizeNode = requireField(node, "accel_size", ctx);
  if (sizeNode.is_array()) {
    if (sizeNode.size() != acc.dims.size())
      throw Error(Error::Kind::BadValue,
                  ctx + " accel_size array length does not match dims");
    for (size_t i = 0; i < acc.dims.size(); ++i)
      acc.accelDims[acc.dims[i]] = numberField(sizeNode[i], "accel_size");
  } else if (sizeNode.is_object()) {
    for (auto it = sizeNode.begin(); it != sizeNode.end(); ++it)
      acc.accelDims[it.key()] = numberField(it.value(), "accel_size");
  } else {
    throw Error(Error::Kind::BadValue,
                ctx + " accel_size must be an array or an object");
  }

  acc.dataType = requireField(node, "data_type", ctx).get<std::string>();

  const json &dataNode = requireField(node, "data", ctx);
  if (!dataNode.is_object())
    throw Error(Error::Kind::BadValue, ctx + " data must be an object");
  for (auto it = dataNode.begin(); it != dataNode.end(); ++it) {
    std::vector<std::string> argDims;
    for (const auto &d : it.value())
      argDims.push_back(d.get<std::string>());
    acc.dataArgs.emplace_back(it.key(), std::move(argDims));
  }

  acc.opcodeMap =
      parseOpcodeMap(requireField(node, "opcode_map", ctx).get<std::string>());

  const json &flowsNode = requireField(node, "opcode_flow_map", ctx);
  if (!flowsNode.is_object())
    throw Error(Error::Kind::BadValue,
                ctx + " opcode_flow_map must be an object");
  for (auto it = flowsNode.begin(); it != flowsNode.end(); ++it)
    acc.opcodeFlows.emplace_back(it.key(),
                                 parseOpcodeFlow(it.value().get<std::string>()));

  acc.selectedFlow =
      requireField(node, "selected_flow", ctx).get<std::string>();

  if (node.contains("init_opcodes")) {
    const json &initNode = node["init_opcodes"];
    if (initNode.is_array()) {
      for (const auto &id : initNode)
        acc.initOpcodes.push_back(id.get<std::string>());
    } else if (initNode.is_string()) {
      FlowNode tree = parseOpcodeFlow(initNode.get<std::string>());
      std::vector<const FlowNode *> stack{&tree};
      // Flatten in document order.
      std::vector<std::string> ids;
      std::function<void(const FlowNode &)> walk = [&](const FlowNode &n) {
        if (n.isLeaf) {
          ids.push_back(n.id);
          return;
        }
        for (const auto &child : n.children)
          walk(child);
      };
      walk(tree);
      acc.initOpcodes = std::move(ids);
    } else {
      throw Error(Error::Kind::BadValue,
                  ctx + " init_opcodes must be an array or a flow string");
    }
  }

  if (node.contains("permutation"))
    for (const auto &d : node["permutation"])
      acc.permutation.push_back(d.get<std::string>());

  if (node.contains("flexible_tiles"))
    acc.flexibleTiles = node["flexible_tiles"].get<bool>();
  if (node.contains("tile_granularity"))
    acc.tileGranularity = numberField(node["tile_granularity"],
                                      "tile_granularity");
  if (node.contains("buffer_words"))
    acc.bufferWords = numberField(node["buffer_words"], "buffer_words");

  if (node.contains("recv_mode")) {
    std::string mode = node["recv_mode"].get<std::string>();
    if (mode == "auto")
      acc.recvMode = RecvMode::Auto;
    else if (mode == "store")
      acc.recvMode = RecvMode::Store;
    else if (mode == "accumulate")
      acc.recvMode = RecvMode::Accumulate;
    else
      throw Error(Error::Kind::BadValue,
                  ctx + " recv_mode '" + mode + "' is not auto|store|accumulate");
  }

  if (node.contains("behavior")) {
    const json &behaviorNode = node["behavior"];
    if (!behaviorNode.is_object())
      throw Error(Error::Kind::BadValue, ctx + " behavior must be an object");
    for (auto it = behaviorNode.begin(); it != behaviorNode.end(); ++it) {
      std::vector<BehaviorStepSpec> steps;
      for (const auto &stepText : it.value())
        steps.push_back(parseBehaviorStep(stepText.get<std::string>()));
      acc.behavior[it.key()] = std::move(steps);
    }
  }

  return acc;
}

} // namespace

SystemConfig loadConfig(const std::string &jsonText) {
  json root;
  try {
    root = json::parse(jsonText);
  } catch (const json::parse_error &e) {
    throw Error(Error::Kind::SyntaxError,
                std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object())
    throw Error(Error::Kind::BadValue, "config root must be an object");
  rejectUnknownKeys(root, {"cpu", "accelerators"}, "config");

  SystemConfig config;
  const json &cpuNode = requireField(root, "cpu", "config");
  rejectUnknownKeys(cpuNode, {"cache-levels", "cache-types"}, "cpu");
  for (const auto &level :
       requireField(cpuNode, "cache-levels", "cpu"))
    config.cpu.cacheLevels.push_back(numberField(level, "cache level"));
  for (const auto &type : requireField(cpuNode, "cache-types", "cpu"))
    config.cpu.cacheTypes.push_back(type.get<std::string>());

  const json &accels = requireField(root, "accelerators", "config");
  if (!accels.is_array())
    throw Error(Error::Kind::BadValue, "accelerators must be an array");
  for (const auto &node : accels)
    config.accelerators.push_back(loadAccelerator(node));

  validateConfig(config);
  return config;
}

SystemConfig loadConfigFile(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Error::Kind::IoError, "cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return loadConfig(buffer.str());
}

//===----------------------------------------------------------------------===//
// Saving
//===----------------------------------------------------------------------===//

std::string saveConfig(const SystemConfig &config) {
  json root;
  json cpu;
  cpu["cache-levels"] = config.cpu.cacheLevels;
  cpu["cache-types"] = config.cpu.cacheTypes;
  root["cpu"] = std::move(cpu);

  json accels = json::array();
  for (const auto &acc : config.accelerators) {
    json node;
    node["name"] = acc.name;
    if (!acc.version.empty())
      node["version"] = acc.version;
    json dma;
    dma["id"] = acc.dma.id;
    dma["inputAddress"] = acc.dma.inputAddress;
    dma["inputBufferSize"] = acc.dma.inputBufferSize;
    dma["outputAddress"] = acc.dma.outputAddress;
    dma["outputBufferSize"] = acc.dma.outputBufferSize;
    node["dma_config"] = std::move(dma);
    node["kernel"] = acc.kernel;
    json sizes = json::array();
    for (const auto &dim : acc.dims)
      sizes.push_back(acc.accelDims.at(dim));
    node["accel_size"] = std::move(sizes);
    node["data_type"] = acc.dataType;
    node["dims"] = acc.dims;
    json data;
    for (const auto &[arg, argDims] : acc.dataArgs)
      data[arg] = argDims;
    node["data"] = std::move(data);
    node["opcode_map"] = printOpcodeMap(acc.opcodeMap);
    json flows;
    for (const auto &[flowId, tree] : acc.opcodeFlows)
      flows[flowId] = printOpcodeFlow(tree);
    node["opcode_flow_map"] = std::move(flows);
    node["selected_flow"] = acc.selectedFlow;
    if (!acc.initOpcodes.empty())
      node["init_opcodes"] = acc.initOpcodes;
    if (!acc.permutation.empty())
      node["permutation"] = acc.permutation;
    if (acc.flexibleTiles)
      node["flexible_tiles"] = true;
    if (acc.tileGranularity != 1)
      node["tile_granularity"] = acc.tileGranularity;
    if (acc.bufferWords != 0)
      node["buffer_words"] = acc.bufferWords;
    if (acc.recvMode != RecvMode::Auto)
      node["recv_mode"] =
          acc.recvMode == RecvMode::Store ? "store" : "accumulate";
    if (!acc.behavior.empty()) {
      json behavior;
      for (const auto &[id, steps] : acc.behavior) {
        json list = json::array();
        for (const auto &step : steps)
          list.push_back(printBehaviorStep(step));
        behavior[id] = std::move(list);
      }
      node["behavior"] = std::move(behavior);
    }
    accels.push_back(std::move(node));
  }
  root["accelerators"] = std::move(accels);
  return root.dump(2) + "\n";
}

//===----------------------------------------------------------------------===//
// Builtin presets
//===----------------------------------------------------------------------===//

namespace {

DmaConfig defaultDma() {
  DmaConfig dma;
  dma.id = 0;
  dma.inputAddress = 0x42;
  dma.inputBufferSize = 0xFF00;
  dma.outputAddress = 0xFF42;
  dma.outputBufferSize = 0xFF00;
  return dma;
}

BehaviorStepSpec readStep(int arg) {
  BehaviorStepSpec s;
  s.kind = BehaviorStepSpec::Kind::Read;
  s.arg = arg;
  return s;
}

BehaviorStepSpec writeStep(int arg) {
  BehaviorStepSpec s;
  s.kind = BehaviorStepSpec::Kind::Write;
  s.arg = arg;
  return s;
}

BehaviorStepSpec computeStep() {
  BehaviorStepSpec s;
  s.kind = BehaviorStepSpec::Kind::Compute;
  return s;
}

BehaviorStepSpec setParamStep(const std::string &param) {
  BehaviorStepSpec s;
  s.kind = BehaviorStepSpec::Kind::SetParam;
  s.param = param;
  return s;
}

BehaviorStepSpec resetStep() {
  BehaviorStepSpec s;
  s.kind = BehaviorStepSpec::Kind::ResetState;
  return s;
}

SizeFactorSpec paramFactor(const std::string &name) {
  SizeFactorSpec f;
  f.isParam = true;
  f.param = name;
  return f;
}

AcceleratorConfig matmulSkeleton(const std::string &name, int64_t size) {
  AcceleratorConfig acc;
  acc.name = name;
  acc.version = "1.0";
  acc.dma = defaultDma();
  acc.kernel = "matmul";
  acc.dims = {"m", "n", "k"};
  acc.accelDims = {{"m", size}, {"n", size}, {"k", size}};
  acc.dataArgs = {{"A", {"m", "k"}}, {"B", {"k", "n"}}, {"C", {"m", "n"}}};
  acc.initOpcodes = {"reset"};
  return acc;
}

} // namespace

AcceleratorConfig builtinAccelerator(const std::string &kind, int64_t size) {
  auto requireFixedSize = [&]() {
    if (size != 4 && size != 8 && size != 16)
      throw Error(Error::Kind::UnsupportedSize,
                  kind + " supports sizes {4, 8, 16}, not " +
                      std::to_string(size));
  };

  if (kind == "v1") {
    requireFixedSize();
    AcceleratorConfig acc =
        matmulSkeleton("v1_" + std::to_string(size), size);
    acc.opcodeMap = parseOpcodeMap(
        "opcode_map<sAsBcCrC = [send_literal(0x21), send(0), send(1), "
        "recv(2)], reset = [send_literal(0xFF)]>");
    acc.opcodeFlows = {{"Ns", parseOpcodeFlow("(sAsBcCrC)")}};
    acc.selectedFlow = "Ns";
    acc.behavior["sAsBcCrC"] = {readStep(0), readStep(1), computeStep(),
                                writeStep(2)};
    acc.behavior["reset"] = {resetStep()};
    return acc;
  }

  if (kind == "v2") {
    requireFixedSize();
    AcceleratorConfig acc =
        matmulSkeleton("v2_" + std::to_string(size), size);
    acc.opcodeMap = parseOpcodeMap(
        "opcode_map<sA = [send_literal(0x22), send(0)], "
        "sB = [send_literal(0x23), send(1)], "
        "cCrC = [send_literal(0x25), recv(2)], "
        "reset = [send_literal(0xFF)]>");
    acc.opcodeFlows = {{"Ns", parseOpcodeFlow("(sA sB cCrC)")},
                       {"As", parseOpcodeFlow("(sA (sB cCrC))")},
                       {"Bs", parseOpcodeFlow("(sB (sA cCrC))")}};
    acc.selectedFlow = "Ns";
    acc.behavior["sA"] = {readStep(0)};
    acc.behavior["sB"] = {readStep(1)};
    acc.behavior["cCrC"] = {computeStep(), writeStep(2)};
    acc.behavior["reset"] = {resetStep()};
    return acc;
  }

  if (kind == "v3" || kind == "v4") {
    AcceleratorConfig acc =
        matmulSkeleton(kind + "_" + std::to_string(size), size);
    if (kind == "v3") {
      requireFixedSize();
      acc.opcodeMap = parseOpcodeMap(
          "opcode_map<sA = [send_literal(0x22), send(0)], "
          "sB = [send_literal(0x23), send(1)], "
          "cC = [send_literal(0xF0)], "
          "rC = [send_literal(0x24), recv(2)], "
          "reset = [send_literal(0xFF)]>");
      acc.behavior["sA"] = {readStep(0)};
      acc.behavior["sB"] = {readStep(1)};
    } else {
      if (size <= 0)
        throw Error(Error::Kind::UnsupportedSize,
                    "v4 granularity must be positive");
      acc.opcodeMap = parseOpcodeMap(
          "opcode_map<sA = [send_literal(0x22), send_dim(0, 0), "
          "send_dim(0, 1), send(0)], "
          "sB = [send_literal(0x23), send_dim(1, 0), send_dim(1, 1), "
          "send(1)], "
          "cC = [send_literal(0xF0)], "
          "rC = [send_literal(0x24), recv(2)], "
          "reset = [send_literal(0xFF)]>");
      acc.flexibleTiles = true;
      acc.tileGranularity = size;
      acc.bufferWords = 2048;
      BehaviorStepSpec readA = readStep(0);
      readA.hasShape = true;
      readA.shape = {paramFactor("m"), paramFactor("k")};
      BehaviorStepSpec readB = readStep(1);
      readB.hasShape = true;
      readB.shape = {paramFactor("k"), paramFactor("n")};
      BehaviorStepSpec writeC = writeStep(2);
      writeC.hasShape = true;
      writeC.shape = {paramFactor("m"), paramFactor("n")};
      acc.behavior["sA"] = {setParamStep("m"), setParamStep("k"), readA};
      acc.behavior["sB"] = {setParamStep("k"), setParamStep("n"), readB};
      acc.behavior["rC"] = {writeC};
    }
    acc.opcodeFlows = {{"Ns", parseOpcodeFlow("(sA sB cC rC)")},
                       {"As", parseOpcodeFlow("(sA (sB cC rC))")},
                       {"Bs", parseOpcodeFlow("(sB (sA cC rC))")},
                       {"Cs", parseOpcodeFlow("((sA sB cC) rC)")}};
    acc.selectedFlow = "Ns";
    acc.behavior["cC"] = {computeStep()};
    if (kind == "v3")
      acc.behavior["rC"] = {writeStep(2)};
    acc.behavior["reset"] = {resetStep()};
    return acc;
  }

  throw Error(Error::Kind::BadValue,
              "unknown accelerator preset '" + kind +
                  "' (expected v1, v2, v3 or v4)");
}

AcceleratorConfig builtinConvAccelerator() {
  AcceleratorConfig acc;
  acc.name = "conv";
  acc.version = "1.0";
  acc.dma = defaultDma();
  acc.kernel = "conv2d_nchw_fchw";
  acc.dims = {"b", "h", "w", "ic", "oc", "fh", "fw"};
  acc.accelDims = {{"b", 0},  {"h", 0},  {"w", 0}, {"ic", 256},
                   {"oc", 1}, {"fh", 3}, {"fw", 3}};
  acc.dataArgs = {{"I", {"b", "ic", "h", "w"}},
                  {"F", {"oc", "ic", "fh", "fw"}},
                  {"O", {"b", "oc", "h", "w"}}};
  acc.opcodeMap = parseOpcodeMap(
      "opcode_map<sIcO = [send_literal(70), send(0)], "
      "sF = [send_literal(1), send(1)], "
      "rO = [send_literal(8), recv(2)], "
      "rst = [send_literal(32), send_dim(1, 3), send_literal(16), "
      "send_dim(0, 1)]>");
  acc.opcodeFlows = {{"FOs", parseOpcodeFlow("(sF (sIcO) rO)")}};
  acc.selectedFlow = "FOs";
  acc.initOpcodes = {"rst"};
  // The engine holds one filter set and accumulates one output-channel
  // slice; h and w stream through, so they sit innermost.
  acc.permutation = {"b", "ic", "oc", "fh", "fw", "h", "w"};
  acc.flexibleTiles = true;
  acc.tileGranularity = 1;
  acc.bufferWords = 4096;

  BehaviorStepSpec readF = readStep(1);
  readF.hasShape = true;
  readF.shape = {paramFactor("ic"), paramFactor("f"), paramFactor("f")};
  BehaviorStepSpec readI = readStep(0);
  readI.hasShape = true;
  readI.shape = {paramFactor("ic"), paramFactor("f"), paramFactor("f")};
  BehaviorStepSpec writeO = writeStep(2);
  writeO.drainAll = true;

  acc.behavior["sF"] = {readF};
  acc.behavior["sIcO"] = {readI, computeStep()};
  acc.behavior["rO"] = {writeO};
  acc.behavior["rst"] = {setParamStep("f"), setParamStep("ic")};
  return acc;
}

CpuConfig defaultCpu() {
  CpuConfig cpu;
  cpu.cacheLevels = {32 * 1024, 512 * 1024};
  cpu.cacheTypes = {"data", "shared"};
  return cpu;
}

SystemConfig builtinSystem(const std::string &kind, int64_t size) {
  SystemConfig config;
  config.cpu = defaultCpu();
  if (kind == "conv")
    config.accelerators.push_back(builtinConvAccelerator());
  else
    config.accelerators.push_back(builtinAccelerator(kind, size));
  validateConfig(config);
  return config;
}

} // namespace accelhost

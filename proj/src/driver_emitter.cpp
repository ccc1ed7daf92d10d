//===- driver_emitter.cpp - C driver code generation -------------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/driver_emitter.h"
#include "accelhost/error.h"

#include <cctype>
#include <functional>
#include <sstream>

namespace accelhost {

namespace {

constexpr int maxRank = 4; // Must match RT_MAX_RANK in driver_rt.h.

std::string sanitizeIdent(const std::string &name) {
  std::string out;
  for (char c : name)
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])))
    out = "x" + out;
  return out;
}

std::string hexC(uint64_t value) {
  std::ostringstream os;
  os << "0x" << std::uppercase << std::hex << value;
  return os.str();
}

/// Variable text per loop; single-trip loops collapse to their lower bound.
std::vector<std::string> loopVarNames(const LoopNest &nest) {
  std::vector<std::string> names(nest.loops.size());
  for (size_t i = 0; i < nest.loops.size(); ++i) {
    const Loop &loop = nest.loops[i];
    if (loop.trips() == 1) {
      int cacheIdx = loop.cacheLevel ? -1 : nest.cacheLoopIndex(loop.dim);
      names[i] = cacheIdx >= 0 ? names[cacheIdx] : "0";
    } else {
      names[i] = loop.cacheLevel ? loop.dim + "_c" : loop.dim;
    }
  }
  return names;
}

/// Renders constant + sum(coeff * var) as a C expression.
std::string renderLinear(int64_t constant,
                         const std::vector<std::pair<std::string, int64_t>>
                             &terms) {
  std::string out;
  for (const auto &[var, coeff] : terms) {
    if (coeff == 0 || var == "0")
      continue;
    if (!out.empty())
      out += " + ";
    if (coeff == 1)
      out += var;
    else if (coeff > 0)
      out += std::to_string(coeff) + "*" + var;
    else
      out += "(" + std::to_string(coeff) + ")*" + var;
  }
  if (constant != 0 || out.empty()) {
    if (!out.empty())
      out += " + ";
    out += constant < 0 ? "(" + std::to_string(constant) + ")"
                        : std::to_string(constant);
  }
  return out;
}

/// Element offset of a planned transfer relative to the argument's base
/// pointer: view offset plus stride-weighted per-dim origins.
std::string renderTransferOffset(const PlannedTransfer &transfer,
                                 const MemRefDesc &view,
                                 const std::vector<std::string> &vars) {
  int64_t constant = view.offset;
  std::vector<std::pair<std::string, int64_t>> terms;
  for (size_t d = 0; d < transfer.offsets.size(); ++d) {
    const OffsetExpr &expr = transfer.offsets[d];
    constant += view.strides[d] * expr.constant;
    for (const auto &[loopIdx, coeff] : expr.terms)
      terms.emplace_back(vars[loopIdx], view.strides[d] * coeff);
  }
  return renderLinear(constant, terms);
}

std::string renderArray(const std::vector<int64_t> &values) {
  std::string out = "{ ";
  for (int i = 0; i < maxRank; ++i) {
    if (i)
      out += ", ";
    out += std::to_string(i < static_cast<int>(values.size()) ? values[i] : 0);
  }
  return out + " }";
}

std::string escapeCString(const std::string &text) {
  std::string out;
  for (char c : text) {
    switch (c) {
    case '"':
      out += "\\\"";
      break;
    case '\\':
      out += "\\\\";
      break;
    case '\n':
      out += "\\n";
      break;
    case '\t':
      out += "\\t";
      break;
    default:
      out += c;
    }
  }
  return out;
}

int64_t bufferReach(const MemRefDesc &view) {
  int64_t reach = view.offset;
  for (int d = 0; d < view.rank(); ++d)
    reach += (view.sizes[d] - 1) * view.strides[d];
  return reach + 1;
}

class DriverWriter {
public:
  explicit DriverWriter(const AccelProgram &program)
      : program(program), vars(loopVarNames(program.nest)) {}

  EmittedDriver write() {
    EmittedDriver driver;
    driver.entryName = entryName();
    for (const KernelArg &arg : program.spec.args) {
      if (arg.view.rank() > maxRank)
        throw Error(Error::Kind::BadValue,
                    "argument '" + arg.name + "' has rank " +
                        std::to_string(arg.view.rank()) +
                        " but the C runtime supports at most " +
                        std::to_string(maxRank));
      driver.bufferArgs.push_back(sanitizeIdent(arg.name));
    }

    os << "/* " << driver.entryName << ".c - accelerator driver for "
       << program.spec.name << " on '" << program.cfg.name
       << "'. Generated code, do not edit. */\n";
    os << "#include \"driver_rt.h\"\n\n";
    for (size_t i = 0; i < program.spec.args.size(); ++i) {
      const KernelArg &arg = program.spec.args[i];
      os << "/* " << driver.bufferArgs[i] << ": ";
      for (int d = 0; d < arg.view.rank(); ++d)
        os << (d ? "x" : "") << arg.view.sizes[d];
      os << " words, strides " << renderArray(arg.view.strides) << ", offset "
         << arg.view.offset << " (buffer >= " << bufferReach(arg.view)
         << " words) */\n";
    }

    os << "\nvoid " << driver.entryName << "(";
    for (size_t i = 0; i < driver.bufferArgs.size(); ++i)
      os << (i ? ", " : "") << "int32_t *" << driver.bufferArgs[i];
    os << ") {\n";

    const DmaConfig &dma = program.cfg.dma;
    line(1, "dma_init(" + std::to_string(dma.id) + ", " +
                hexC(dma.inputAddress) + ", " + hexC(dma.inputBufferSize) +
                ", " + hexC(dma.outputAddress) + ", " +
                hexC(dma.outputBufferSize) + ");");
    line(1, "int32_t scratch_word[1] = { 0 };");
    line(1, "rt_memref scratch = { scratch_word, 0, 0, { 0, 0, 0, 0 }, "
            "{ 0, 0, 0, 0 } };");
    os << "\n";
    emitLevel(0, 1);
    os << "}\n";

    driver.source = os.str();
    return driver;
  }

private:
  std::string entryName() const {
    std::string name = "drive_" + sanitizeIdent(program.cfg.name) + "_" +
                       sanitizeIdent(program.spec.name);
    for (size_t i = 0; i < program.spec.dims.size(); ++i)
      name += (i ? "x" : "_") + std::to_string(program.spec.dims[i].extent);
    return name;
  }

  void line(int depth, const std::string &text) {
    for (int i = 0; i < depth; ++i)
      os << "  ";
    os << text << "\n";
  }

  void emitLevel(int level, int depth) {
    for (const PlacedOpcode &op : program.pre[level])
      emitFiring(op, depth);
    if (level < program.numLoops()) {
      const Loop &loop = program.nest.loops[level];
      if (loop.trips() == 1) {
        emitLevel(level + 1, depth);
      } else {
        std::string var = vars[level];
        std::string lb = "0";
        if (!loop.cacheLevel) {
          int cacheIdx = program.nest.cacheLoopIndex(loop.dim);
          if (cacheIdx >= 0)
            lb = vars[cacheIdx];
        }
        std::string bound =
            lb == "0" ? std::to_string(loop.span)
                      : lb + " + " + std::to_string(loop.span);
        line(depth, "for (int64_t " + var + " = " + lb + "; " + var + " < " +
                        bound + "; " + var + " += " +
                        std::to_string(loop.step) + ") {");
        emitLevel(level + 1, depth + 1);
        line(depth, "}");
      }
    }
    for (const PlacedOpcode &op : program.post[level])
      emitFiring(op, depth);
  }

  void emitScalarStage(int depth, const std::string &value, int64_t offset) {
    line(depth, "scratch_word[0] = " + value + ";");
    line(depth,
         "copy_to_dma_region(&scratch, " + std::to_string(offset) + ");");
  }

  void emitTransferView(int depth, const PlannedTransfer &transfer) {
    const KernelArg &arg = program.spec.args[transfer.arg];
    line(depth, "rt_memref t = { " + argNamesFor(transfer.arg) + ", " +
                    renderTransferOffset(transfer, arg.view, vars) + ", " +
                    std::to_string(transfer.sizes.size()) + ", " +
                    renderArray(transfer.sizes) + ", " +
                    renderArray(arg.view.strides) + " };");
  }

  std::string argNamesFor(int arg) const {
    return sanitizeIdent(program.spec.args[arg].name);
  }

  void emitFlush(int depth, int64_t &staged) {
    if (staged == 0)
      return;
    line(depth, "dma_start_send(" + std::to_string(staged) + ", 0);");
    line(depth, "dma_wait_send_completion();");
    staged = 0;
  }

  void emitFiring(const PlacedOpcode &op, int depth) {
    line(depth, "/* " + op.id + " */");
    int64_t staged = 0;
    for (const PlannedAction &action : op.actions) {
      switch (action.kind) {
      case Action::Kind::SendLiteral:
        emitScalarStage(depth, "(int32_t)" + hexC(action.literal), staged);
        staged += 1;
        break;
      case Action::Kind::SendDim:
        emitScalarStage(depth, std::to_string(action.dimValue), staged);
        staged += 1;
        break;
      case Action::Kind::SendIdx: {
        std::vector<std::pair<std::string, int64_t>> terms;
        for (const auto &[loopIdx, coeff] : action.idxExpr.terms)
          terms.emplace_back(vars[loopIdx], coeff);
        std::string expr = renderLinear(action.idxExpr.constant, terms);
        emitScalarStage(depth,
                        "(int32_t)((" + expr + ") / " +
                            std::to_string(action.idxStep) + ")",
                        staged);
        staged += 1;
        break;
      }
      case Action::Kind::Send:
        line(depth, "{");
        emitTransferView(depth + 1, action.transfer);
        line(depth + 1, "copy_to_dma_region(&t, " + std::to_string(staged) +
                            ");");
        line(depth, "}");
        staged += action.transfer.words;
        break;
      case Action::Kind::Recv: {
        emitFlush(depth, staged);
        const PlannedTransfer &t = action.transfer;
        line(depth,
             "dma_start_recv(" + std::to_string(t.words) + ", 0);");
        line(depth, "dma_wait_recv_completion();");
        line(depth, "{");
        emitTransferView(depth + 1, t);
        line(depth + 1, "copy_from_dma_region(0, &t, " +
                            std::string(t.accumulate ? "1" : "0") + ");");
        line(depth, "}");
        break;
      }
      }
    }
    emitFlush(depth, staged);
  }

  const AccelProgram &program;
  std::vector<std::string> vars;
  std::ostringstream os;
};

} // namespace

EmittedDriver emitDriver(const AccelProgram &program) {
  return DriverWriter(program).write();
}

//===----------------------------------------------------------------------===//
// Harness generation and its host-side twins
//===----------------------------------------------------------------------===//

namespace {

constexpr uint32_t fnvBasis = 2166136261u;
constexpr uint32_t fnvPrime = 16777619u;
constexpr uint32_t seedMix = 0x9E3779B9u;

uint32_t argSeed(uint32_t seed, size_t argIndex) {
  return seed ^ (static_cast<uint32_t>(argIndex + 1) * seedMix);
}

int32_t lcgNext(uint32_t &state) {
  state = state * 1664525u + 1013904223u;
  return static_cast<int32_t>((state >> 9) & 0xFFu) - 128;
}

} // namespace

std::string emitHarness(const EmittedDriver &driver,
                        const AccelProgram &program,
                        const std::string &configJson, uint32_t seed) {
  std::ostringstream os;
  os << "/* Test harness for " << driver.entryName
     << ". Generated code, do not edit. */\n";
  os << "#include \"driver_rt.h\"\n";
  os << "#include <stdio.h>\n";
  os << "#include <string.h>\n\n";

  os << "static const char config_json[] =\n";
  std::istringstream lines(configJson);
  std::string lineText;
  bool first = true;
  while (std::getline(lines, lineText)) {
    if (!first)
      os << "\n";
    os << "    \"" << escapeCString(lineText) << "\\n\"";
    first = false;
  }
  os << ";\n\n";

  os << "void " << driver.entryName << "(";
  for (size_t i = 0; i < driver.bufferArgs.size(); ++i)
    os << (i ? ", " : "") << "int32_t *" << driver.bufferArgs[i];
  os << ");\n\n";

  for (size_t i = 0; i < program.spec.args.size(); ++i)
    os << "static int32_t " << driver.bufferArgs[i] << "["
       << bufferReach(program.spec.args[i].view) << "];\n";

  os << "\nstatic uint32_t lcg_state;\n";
  os << "static int32_t lcg_next(void) {\n";
  os << "  lcg_state = lcg_state * 1664525u + 1013904223u;\n";
  os << "  return (int32_t)((lcg_state >> 9) & 0xFFu) - 128;\n";
  os << "}\n\n";

  os << "int main(void) {\n";
  os << "  if (rt_configure(config_json, \""
     << escapeCString(program.cfg.name) << "\") != 0) {\n";
  os << "    fprintf(stderr, \"runtime configuration failed\\n\");\n";
  os << "    return 1;\n";
  os << "  }\n";

  for (size_t i = 0; i < program.spec.args.size(); ++i) {
    const KernelArg &arg = program.spec.args[i];
    const std::string &name = driver.bufferArgs[i];
    if (arg.role == ArgRole::Output) {
      os << "  memset(" << name << ", 0, sizeof " << name << ");\n";
    } else {
      os << "  lcg_state = " << argSeed(seed, i) << "u;\n";
      os << "  for (size_t i = 0; i < sizeof " << name << " / sizeof "
         << name << "[0]; ++i)\n";
      os << "    " << name << "[i] = lcg_next();\n";
    }
  }

  os << "  " << driver.entryName << "(";
  for (size_t i = 0; i < driver.bufferArgs.size(); ++i)
    os << (i ? ", " : "") << driver.bufferArgs[i];
  os << ");\n";

  size_t outIndex = 0;
  for (size_t i = 0; i < program.spec.args.size(); ++i)
    if (program.spec.args[i].role == ArgRole::Output)
      outIndex = i;
  const std::string &outName = driver.bufferArgs[outIndex];
  os << "  uint32_t h = " << fnvBasis << "u;\n";
  os << "  for (size_t i = 0; i < sizeof " << outName << " / sizeof "
     << outName << "[0]; ++i) {\n";
  os << "    h ^= (uint32_t)" << outName << "[i];\n";
  os << "    h *= " << fnvPrime << "u;\n";
  os << "  }\n";
  os << "  printf(\"output_checksum=0x%08X\\n\", h);\n";

  const char *counters[] = {"words_sent",         "words_received",
                            "send_transactions",  "recv_transactions",
                            "element_copies",     "block_copies",
                            "device_words_consumed",
                            "device_words_produced",
                            "leftover_output_words"};
  for (const char *name : counters)
    os << "  printf(\"" << name << "=%lld\\n\", (long long)rt_counter(\""
       << name << "\"));\n";
  os << "  return 0;\n";
  os << "}\n";
  return os.str();
}

void fillDeterministic(const KernelSpec &spec, uint32_t seed) {
  for (size_t i = 0; i < spec.args.size(); ++i) {
    const KernelArg &arg = spec.args[i];
    std::vector<int32_t> &data = *arg.view.base;
    if (arg.role == ArgRole::Output) {
      std::fill(data.begin(), data.end(), 0);
    } else {
      uint32_t state = argSeed(seed, i);
      for (int32_t &word : data)
        word = lcgNext(state);
    }
  }
}

uint32_t checksumOutput(const KernelSpec &spec) {
  const MemRefDesc &view = spec.outputArg().view;
  uint32_t h = fnvBasis;
  for (int32_t word : *view.base) {
    h ^= static_cast<uint32_t>(word);
    h *= fnvPrime;
  }
  return h;
}

} // namespace accelhost

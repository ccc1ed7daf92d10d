//===- accelhost_main.cpp - Command-line driver -----------------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Subcommands:
//   validate  load and check a system description
//   plan      tile a kernel and place the selected opcode flow
//   codegen   emit a C driver (and optionally a test harness)
//   run       execute via the DMA runtime + device model, check results
//   explore   rank flow/permutation/tile candidates by data movement
//   stats     execute and report counters plus per-argument traffic
//
//===----------------------------------------------------------------------===//

#include "accelhost/accel_config.h"
#include "accelhost/driver_emitter.h"
#include "accelhost/error.h"
#include "accelhost/explorer.h"
#include "accelhost/pipeline.h"

#include "CLI11.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace accelhost;

namespace {

struct CommonOpts {
  std::string configPath;
  std::string accel;
  int64_t size = 4;
  std::string matmul;
  std::string conv;
  std::string flow;
  std::string perm;
  std::string tiles;
  bool noCacheTiling = false;
};

std::vector<std::string> splitList(const std::string &text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream is(text);
  while (std::getline(is, part, sep))
    parts.push_back(part);
  return parts;
}

int64_t parseInt(const std::string &text, const std::string &what) {
  try {
    size_t used = 0;
    int64_t value = std::stoll(text, &used, 0);
    if (used != text.size())
      throw std::invalid_argument(text);
    return value;
  } catch (const std::exception &) {
    throw Error(Error::Kind::UsageError,
                "cannot parse " + what + " '" + text + "' as an integer");
  }
}

/// Attaches the shared selection/shape options to a subcommand.
void addCommonOptions(CLI::App *cmd, CommonOpts &opts, bool needsKernel) {
  cmd->add_option("--config", opts.configPath,
                  "JSON system description file");
  cmd->add_option("--accel", opts.accel,
                  "builtin accelerator (v1|v2|v3|v4|conv) or, with --config, "
                  "the accelerator name to select");
  cmd->add_option("--size", opts.size,
                  "builtin tile size (v1-v3: 4|8|16; v4: granularity)");
  if (!needsKernel)
    return;
  cmd->add_option("--matmul", opts.matmul, "matmul extents, e.g. 128x64x32");
  cmd->add_option("--conv", opts.conv,
                  "conv2d extents B,H,W,iC,oC,fH,fW,stride");
  cmd->add_option("--flow", opts.flow, "opcode flow to place");
  cmd->add_option("--perm", opts.perm, "loop permutation, e.g. m,k,n");
  cmd->add_option("--tiles", opts.tiles, "tile overrides, e.g. m=32,k=64");
  cmd->add_flag("--no-cache-tiling", opts.noCacheTiling,
                "skip the cache-level tiling pass");
}

SystemConfig loadSystem(const CommonOpts &opts) {
  if (!opts.configPath.empty())
    return loadConfigFile(opts.configPath);
  if (opts.accel.empty())
    throw Error(Error::Kind::UsageError,
                "select an accelerator with --config FILE or --accel KIND");
  return builtinSystem(opts.accel, opts.size);
}

const AcceleratorConfig &pickAccelerator(const SystemConfig &sys,
                                         const CommonOpts &opts) {
  if (sys.accelerators.empty())
    throw Error(Error::Kind::UsageError,
                "the system description declares no accelerators");
  if (opts.configPath.empty() || opts.accel.empty())
    return sys.accelerators.front();
  for (const auto &acc : sys.accelerators)
    if (acc.name == opts.accel)
      return acc;
  throw Error(Error::Kind::UsageError,
              "no accelerator named '" + opts.accel + "' in " +
                  opts.configPath);
}

KernelSpec makeKernel(const CommonOpts &opts) {
  if (!opts.matmul.empty() && !opts.conv.empty())
    throw Error(Error::Kind::UsageError, "--matmul and --conv are exclusive");
  if (!opts.matmul.empty()) {
    std::vector<std::string> parts = splitList(opts.matmul, 'x');
    if (parts.size() != 3)
      throw Error(Error::Kind::UsageError,
                  "--matmul expects MxNxK, got '" + opts.matmul + "'");
    return makeMatmul(parseInt(parts[0], "M"), parseInt(parts[1], "N"),
                      parseInt(parts[2], "K"));
  }
  if (!opts.conv.empty()) {
    std::vector<std::string> parts = splitList(opts.conv, ',');
    if (parts.size() != 8)
      throw Error(Error::Kind::UsageError,
                  "--conv expects B,H,W,iC,oC,fH,fW,stride, got '" +
                      opts.conv + "'");
    std::vector<int64_t> v;
    for (const auto &p : parts)
      v.push_back(parseInt(p, "--conv field"));
    return makeConv2d(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]);
  }
  throw Error(Error::Kind::UsageError,
              "specify a kernel with --matmul or --conv");
}

PipelineOptions makePipelineOptions(const CommonOpts &opts) {
  PipelineOptions pipeline;
  pipeline.flow = opts.flow;
  if (!opts.perm.empty())
    pipeline.permutation = splitList(opts.perm, ',');
  if (!opts.tiles.empty())
    for (const auto &entry : splitList(opts.tiles, ',')) {
      auto eq = entry.find('=');
      if (eq == std::string::npos)
        throw Error(Error::Kind::UsageError,
                    "--tiles entries look like dim=value, got '" + entry +
                        "'");
      pipeline.tileOverride[entry.substr(0, eq)] =
          parseInt(entry.substr(eq + 1), "tile");
    }
  pipeline.cacheTiling = !opts.noCacheTiling;
  return pipeline;
}

void writeFileOrThrow(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Error::Kind::IoError, "cannot open '" + path + "' for writing");
  out << content;
  if (!out.flush())
    throw Error(Error::Kind::IoError, "failed writing '" + path + "'");
}

std::string tileColumn(const std::string &dim) {
  if (dim.size() == 1)
    return std::string("t") +
           static_cast<char>(std::toupper(static_cast<unsigned char>(dim[0])));
  return "t_" + dim;
}

void printCounters(const InterpretResult &result) {
  std::cout << "words_sent=" << result.counters.wordsSent << "\n";
  std::cout << "words_received=" << result.counters.wordsReceived << "\n";
  std::cout << "send_transactions=" << result.counters.sendTransactions
            << "\n";
  std::cout << "recv_transactions=" << result.counters.recvTransactions
            << "\n";
  std::cout << "element_copies=" << result.counters.elementCopies << "\n";
  std::cout << "block_copies=" << result.counters.blockCopies << "\n";
  std::cout << "device_words_consumed=" << result.deviceWordsConsumed << "\n";
  std::cout << "device_words_produced=" << result.deviceWordsProduced << "\n";
  std::cout << "leftover_output_words=" << result.leftoverOutputWords << "\n";
}

//===----------------------------------------------------------------------===//
// Subcommand bodies
//===----------------------------------------------------------------------===//

int runValidate(const CommonOpts &opts) {
  SystemConfig sys = loadSystem(opts);
  std::cout << "config ok: " << sys.accelerators.size()
            << " accelerator(s), " << sys.cpu.cacheLevels.size()
            << " cache level(s)\n";
  for (const auto &acc : sys.accelerators) {
    std::cout << "  " << acc.name << ": " << acc.kernel << ", dims";
    for (const auto &dim : acc.dims)
      std::cout << " " << dim << "=" << acc.accelDims.at(dim);
    std::cout << ", flows";
    for (const auto &[id, node] : acc.opcodeFlows) {
      (void)node;
      std::cout << " " << id << (id == acc.selectedFlow ? "*" : "");
    }
    std::cout << "\n";
  }
  return 0;
}

int runPlan(const CommonOpts &opts, bool dumpIr) {
  SystemConfig sys = loadSystem(opts);
  const AcceleratorConfig &acc = pickAccelerator(sys, opts);
  KernelSpec spec = makeKernel(opts);
  AccelProgram program =
      buildProgram(spec, acc, sys.cpu, makePipelineOptions(opts));

  std::cout << printNest(program.nest);
  std::cout << "predicted_send_words=" << predictSentWords(program) << "\n";
  std::cout << "predicted_recv_words=" << predictRecvWords(program) << "\n";
  std::cout << "predicted_words=" << predictCost(program) << "\n";
  for (const ArgTraffic &traffic : stationarityReport(program)) {
    std::cout << "arg " << traffic.arg << ": sends=" << traffic.sendTransfers;
    if (!traffic.sendFactors.empty())
      std::cout << " (" << traffic.sendFactors << ")";
    std::cout << " recvs=" << traffic.recvTransfers;
    if (!traffic.recvFactors.empty())
      std::cout << " (" << traffic.recvFactors << ")";
    std::cout << "\n";
  }
  if (dumpIr)
    std::cout << dumpProgram(program);
  return 0;
}

int runCodegen(const CommonOpts &opts, const std::string &output,
               const std::string &harnessPath, uint32_t seed) {
  SystemConfig sys = loadSystem(opts);
  const AcceleratorConfig &acc = pickAccelerator(sys, opts);
  KernelSpec spec = makeKernel(opts);
  AccelProgram program =
      buildProgram(spec, acc, sys.cpu, makePipelineOptions(opts));

  EmittedDriver driver = emitDriver(program);
  if (output.empty())
    std::cout << driver.source;
  else
    writeFileOrThrow(output, driver.source);
  if (!harnessPath.empty())
    writeFileOrThrow(harnessPath,
                     emitHarness(driver, program, saveConfig(sys), seed));
  return 0;
}

int runRun(const CommonOpts &opts, uint32_t seed, bool trace,
           bool perActionSends, bool forceSlowCopy) {
  SystemConfig sys = loadSystem(opts);
  const AcceleratorConfig &acc = pickAccelerator(sys, opts);
  KernelSpec spec = makeKernel(opts);
  AccelProgram program =
      buildProgram(spec, acc, sys.cpu, makePipelineOptions(opts));

  fillDeterministic(spec, seed);
  InterpretOptions run;
  run.perActionSends = perActionSends;
  run.forceSlowCopy = forceSlowCopy;
  if (trace)
    run.trace = &std::cerr;
  RunComparison comparison = runAndCompare(program, run);

  char checksum[16];
  std::snprintf(checksum, sizeof checksum, "0x%08X", checksumOutput(spec));
  std::cout << "output_checksum=" << checksum << "\n";
  printCounters(comparison.run);
  if (!comparison.match) {
    std::cout << "result=MISMATCH (" << comparison.firstDiff << ")\n";
    return 1;
  }
  std::cout << "result=match\n";
  return 0;
}

int runExplore(const CommonOpts &opts, int top, int threads) {
  SystemConfig sys = loadSystem(opts);
  const AcceleratorConfig &acc = pickAccelerator(sys, opts);
  KernelSpec spec = makeKernel(opts);

  ExploreOptions explorerOptions;
  explorerOptions.threads = threads;
  std::vector<CandidateResult> results =
      explore(spec, acc, sys.cpu, explorerOptions);
  if (results.empty())
    throw Error(Error::Kind::NoLegalCandidate,
                "no legal flow/permutation/tile combination found");

  std::cout << "flow,permutation";
  for (const auto &dim : acc.dims)
    std::cout << "," << tileColumn(dim);
  std::cout << ",predicted_send_words,predicted_recv_words,predicted_words\n";
  int emitted = 0;
  for (const CandidateResult &result : results) {
    if (top > 0 && emitted >= top)
      break;
    std::cout << result.candidate.flow << ",";
    for (size_t i = 0; i < result.candidate.permutation.size(); ++i)
      std::cout << (i ? "-" : "") << result.candidate.permutation[i];
    for (const auto &dim : acc.dims)
      std::cout << "," << result.effTiles.at(dim);
    std::cout << "," << result.sentWords << "," << result.recvWords << ","
              << result.totalWords << "\n";
    ++emitted;
  }
  return 0;
}

int runStats(const CommonOpts &opts, uint32_t seed) {
  SystemConfig sys = loadSystem(opts);
  const AcceleratorConfig &acc = pickAccelerator(sys, opts);
  KernelSpec spec = makeKernel(opts);
  AccelProgram program =
      buildProgram(spec, acc, sys.cpu, makePipelineOptions(opts));

  fillDeterministic(spec, seed);
  RunComparison comparison = runAndCompare(program);
  if (!comparison.match)
    throw Error(Error::Kind::KernelMismatch,
                "accelerated result diverges from the reference: " +
                    comparison.firstDiff);

  std::cout << "counter,value\n";
  std::cout << "words_sent," << comparison.run.counters.wordsSent << "\n";
  std::cout << "words_received," << comparison.run.counters.wordsReceived
            << "\n";
  std::cout << "send_transactions,"
            << comparison.run.counters.sendTransactions << "\n";
  std::cout << "recv_transactions,"
            << comparison.run.counters.recvTransactions << "\n";
  std::cout << "element_copies," << comparison.run.counters.elementCopies
            << "\n";
  std::cout << "block_copies," << comparison.run.counters.blockCopies << "\n";
  std::cout << "arg,send_transfers,recv_transfers,send_factors,recv_factors\n";
  std::vector<ArgTraffic> report = stationarityReport(program);
  for (size_t i = 0; i < report.size(); ++i) {
    std::cout << report[i].arg << "," << report[i].sendTransfers << ","
              << report[i].recvTransfers << "," << report[i].sendFactors
              << "," << report[i].recvFactors << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Host-driver compiler and functional simulator for "
               "stream-attached accelerators"};
  app.require_subcommand(1);

  CommonOpts opts;
  bool dumpIr = false;
  std::string output;
  std::string harnessPath;
  uint32_t seed = 1;
  bool trace = false;
  bool perActionSends = false;
  bool forceSlowCopy = false;
  int top = 0;
  int threads = 1;
  int exitCode = 0;

  CLI::App *validate =
      app.add_subcommand("validate", "Load and check a system description");
  addCommonOptions(validate, opts, /*needsKernel=*/false);
  validate->callback([&]() { exitCode = runValidate(opts); });

  CLI::App *planCmd =
      app.add_subcommand("plan", "Tile a kernel and place an opcode flow");
  addCommonOptions(planCmd, opts, /*needsKernel=*/true);
  planCmd->add_flag("--dump-ir", dumpIr, "print the placed program");
  planCmd->callback([&]() { exitCode = runPlan(opts, dumpIr); });

  CLI::App *codegen = app.add_subcommand("codegen", "Emit a C driver");
  addCommonOptions(codegen, opts, /*needsKernel=*/true);
  codegen->add_option("-o,--output", output, "driver source path");
  codegen->add_option("--harness", harnessPath,
                      "also emit a standalone test harness");
  codegen->add_option("--seed", seed, "harness input seed");
  codegen->callback(
      [&]() { exitCode = runCodegen(opts, output, harnessPath, seed); });

  CLI::App *runCmd = app.add_subcommand(
      "run", "Execute on the simulated device and verify the result");
  addCommonOptions(runCmd, opts, /*needsKernel=*/true);
  runCmd->add_option("--seed", seed, "deterministic input seed");
  runCmd->add_flag("--trace", trace, "dump DMA transactions to stderr");
  runCmd->add_flag("--per-action-sends", perActionSends,
                   "one DMA transaction per wire action");
  runCmd->add_flag("--force-slow-copy", forceSlowCopy,
                   "disable the block-copy fast path");
  runCmd->callback([&]() {
    exitCode = runRun(opts, seed, trace, perActionSends, forceSlowCopy);
  });

  CLI::App *exploreCmd = app.add_subcommand(
      "explore", "Rank flow/permutation/tile candidates (CSV)");
  addCommonOptions(exploreCmd, opts, /*needsKernel=*/true);
  exploreCmd->add_option("--top", top, "emit only the best N candidates");
  exploreCmd->add_option("--threads", threads, "evaluation threads");
  exploreCmd->callback([&]() { exitCode = runExplore(opts, top, threads); });

  CLI::App *stats = app.add_subcommand(
      "stats", "Execute and report counters and per-argument traffic (CSV)");
  addCommonOptions(stats, opts, /*needsKernel=*/true);
  stats->add_option("--seed", seed, "deterministic input seed");
  stats->callback([&]() { exitCode = runStats(opts, seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  } catch (const Error &e) {
    std::cerr << "error[" << errorKindName(e.kind) << "]: " << e.what()
              << "\n";
    return errorExitCode(e.kind);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
  return exitCode;
}

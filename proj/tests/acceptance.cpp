//===- acceptance.cpp - End-to-end acceptance gate ------------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Nine end-to-end checks covering the public contract of the toolchain:
// functional equivalence across accelerator generations and flows, data-
// movement arithmetic, DSL grammar conformance, planner legality, staging
// optimizations, runtime-sized tiles, search dominance, convolution support,
// and generated-code stability. Each check prints one PASS/FAIL line; the
// exit code is the number of failures.
//
//===----------------------------------------------------------------------===//

#include "accelhost/driver_emitter.h"
#include "accelhost/error.h"
#include "accelhost/explorer.h"
#include "accelhost/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace accelhost;

namespace {

struct CheckFailure {
  std::string detail;
};

void expect(bool condition, const std::string &detail) {
  if (!condition)
    throw CheckFailure{detail};
}

//===----------------------------------------------------------------------===//
// 1. Functional equivalence across generations, sizes, and flows
//===----------------------------------------------------------------------===//

std::string criterion1() {
  struct Preset {
    const char *kind;
    int64_t size;
    std::vector<std::pair<std::string, std::vector<std::string>>> flows;
  };
  const std::vector<std::pair<std::string, std::vector<std::string>>>
      fourFlows = {{"Ns", {}},
                   {"As", {"m", "k", "n"}},
                   {"Bs", {"n", "k", "m"}},
                   {"Cs", {}}};
  std::vector<Preset> presets = {
      {"v1", 4, {{"Ns", {}}}},
      {"v2", 8, {{"Ns", {}}, {"As", {"m", "k", "n"}}, {"Bs", {"n", "k", "m"}}}},
      {"v3", 16, fourFlows},
      {"v4", 16, fourFlows},
  };

  auto start = std::chrono::steady_clock::now();
  int cases = 0;
  uint32_t seed = 1;
  for (const Preset &preset : presets) {
    AcceleratorConfig cfg = builtinAccelerator(preset.kind, preset.size);
    for (int64_t extent : {8, 16, 32, 64}) {
      if (extent % preset.size != 0)
        continue; // Tile does not divide the problem: documented as illegal.
      for (const auto &[flow, perm] : preset.flows) {
        KernelSpec spec = makeMatmul(extent, extent, extent);
        fillDeterministic(spec, seed++);
        PipelineOptions opts;
        opts.flow = flow;
        opts.permutation = perm;
        AccelProgram prog = buildProgram(spec, cfg, defaultCpu(), opts);
        RunComparison cmp = runAndCompare(prog);
        expect(cmp.match, std::string(preset.kind) + " " +
                              std::to_string(extent) + "^3 flow " + flow +
                              " diverged: " + cmp.firstDiff);
        ++cases;
      }
    }
  }
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  expect(cases == 40, "expected 40 legal matrix entries, ran " +
                          std::to_string(cases));
  expect(elapsed < 60000, "matrix took " + std::to_string(elapsed) + " ms");
  return std::to_string(cases) + " cases bit-equal in " +
         std::to_string(elapsed) + " ms";
}

//===----------------------------------------------------------------------===//
// 2. Stationarity arithmetic on a 128^3 matmul with 16^3 tiles
//===----------------------------------------------------------------------===//

/// Opcode firing count straight from the nest: the product of the trips of
/// every loop enclosing its placement.
int64_t firingClosedForm(const AccelProgram &program, const std::string &id) {
  const PlacedOpcode *op = program.findOpcode(id);
  expect(op != nullptr, "opcode " + id + " not placed");
  int64_t product = 1;
  for (int level = 0; level < op->placement.level; ++level)
    product *= program.nest.loops[level].trips();
  return product;
}

std::string criterion2() {
  struct Case {
    const char *flow;
    std::vector<std::string> perm;
    int64_t aSends, bSends, cRecvs;
    bool accumulate;
  };
  const std::vector<Case> cases = {
      {"Ns", {}, 512, 512, 512, true},
      {"As", {"m", "k", "n"}, 64, 512, 512, true},
      {"Bs", {"n", "k", "m"}, 512, 64, 512, true},
      {"Cs", {}, 512, 512, 64, false},
  };
  AcceleratorConfig cfg = builtinAccelerator("v3", 16);
  for (const Case &c : cases) {
    KernelSpec spec = makeMatmul(128, 128, 128);
    fillDeterministic(spec, 0xC0FFEE);
    PipelineOptions opts;
    opts.flow = c.flow;
    opts.permutation = c.perm;
    AccelProgram prog = buildProgram(spec, cfg, defaultCpu(), opts);

    // Closed form from the loop nest.
    expect(firingClosedForm(prog, "sA") == c.aSends,
           std::string(c.flow) + ": sA closed form != " +
               std::to_string(c.aSends));
    expect(firingClosedForm(prog, "sB") == c.bSends,
           std::string(c.flow) + ": sB closed form != " +
               std::to_string(c.bSends));
    expect(firingClosedForm(prog, "rC") == c.cRecvs,
           std::string(c.flow) + ": rC closed form != " +
               std::to_string(c.cRecvs));

    // Planner census.
    for (const ArgTraffic &t : stationarityReport(prog)) {
      if (t.arg == "A")
        expect(t.sendTransfers == c.aSends,
               std::string(c.flow) + ": planner counts " +
                   std::to_string(t.sendTransfers) + " A sends");
      if (t.arg == "B")
        expect(t.sendTransfers == c.bSends,
               std::string(c.flow) + ": planner counts " +
                   std::to_string(t.sendTransfers) + " B sends");
      if (t.arg == "C")
        expect(t.recvTransfers == c.cRecvs,
               std::string(c.flow) + ": planner counts " +
                   std::to_string(t.recvTransfers) + " C recvs");
    }

    // Receive mode: partial sums accumulate, full results store.
    const PlacedOpcode *rC = prog.findOpcode("rC");
    for (const PlannedAction &action : rC->actions)
      if (action.kind == Action::Kind::Recv)
        expect(action.transfer.accumulate == c.accumulate,
               std::string(c.flow) + ": wrong receive mode");

    // Independent simulator counts (and the result must still be right).
    RunComparison cmp = runAndCompare(prog);
    expect(cmp.match, std::string(c.flow) + " diverged: " + cmp.firstDiff);
    expect(cmp.run.argSendTransfers[0] == c.aSends,
           std::string(c.flow) + ": simulator counted " +
               std::to_string(cmp.run.argSendTransfers[0]) + " A sends");
    expect(cmp.run.argSendTransfers[1] == c.bSends,
           std::string(c.flow) + ": simulator counted " +
               std::to_string(cmp.run.argSendTransfers[1]) + " B sends");
    expect(cmp.run.argRecvTransfers[2] == c.cRecvs,
           std::string(c.flow) + ": simulator counted " +
               std::to_string(cmp.run.argRecvTransfers[2]) + " C recvs");
  }
  return "closed form = planner census = simulator counts on all 4 flows";
}

//===----------------------------------------------------------------------===//
// 3. Grammar conformance: published strings, fuzzing, negatives
//===----------------------------------------------------------------------===//

Action randomAction(std::mt19937 &rng) {
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_int_distribution<int> argDist(0, 7);
  std::uniform_int_distribution<int> dimDist(0, 3);
  std::uniform_int_distribution<uint32_t> litDist(0, 0xFFFFFFFFu);
  switch (pick(rng)) {
  case 0:
    return Action::send(argDist(rng));
  case 1:
    return Action::sendLiteral(litDist(rng));
  case 2:
    return Action::sendDim(argDist(rng), dimDist(rng));
  case 3:
    return Action::sendIdxLoop(dimDist(rng));
  case 4:
    return Action::sendIdx(argDist(rng), dimDist(rng));
  default:
    return Action::recv(argDist(rng));
  }
}

FlowNode randomFlow(std::mt19937 &rng, int depth = 0) {
  std::uniform_int_distribution<int> numKids(1, 4);
  std::uniform_int_distribution<int> leafDist(0, 9);
  std::vector<FlowNode> children;
  int n = numKids(rng);
  bool nested = false;
  for (int i = 0; i < n; ++i) {
    if (depth < 3 && !nested && leafDist(rng) < 3) {
      children.push_back(randomFlow(rng, depth + 1));
      nested = true;
    } else {
      children.push_back(FlowNode::leaf("op" + std::to_string(leafDist(rng))));
    }
  }
  return FlowNode::group(std::move(children));
}

std::string criterion3() {
  // The complete matmul opcode map as published, inline comment included.
  OpcodeMap map = parseOpcodeMap(
      "opcode_map < // Valid Opcodes\n"
      "    sA       = [send_literal(0x22), send(0)],\n"
      "    sB       = [send_literal(0x23), send(1)],\n"
      "    cC       = [send_literal(0xF0)],\n"
      "    rC       = [send_literal(0x24), recv(2)],\n"
      "    sBcCrC   = [send_literal(0x25), send(1), recv(2)],\n"
      "    reset    = [send_literal(0xFF)] >");
  expect(map.entries.size() == 6, "matmul map entry count");
  expect(map.entries[0].second ==
             std::vector<Action>{Action::sendLiteral(0x22), Action::send(0)},
         "sA actions");
  expect(map.entries[4].second ==
             std::vector<Action>{Action::sendLiteral(0x25), Action::send(1),
                                 Action::recv(2)},
         "sBcCrC actions");

  struct FlowCase {
    const char *text;
    int depth;
    size_t topArity;
  };
  for (const FlowCase &c :
       std::initializer_list<FlowCase>{{"opcode_flow < (sA (sBcCrC)) >", 2, 2},
                                       {"opcode_flow <(sA sB cCrC)>", 1, 3},
                                       {"opcode_flow <(sA (sB cCrC))>", 2, 2},
                                       {"((sA sB cC) rC)", 2, 2},
                                       {"(sB sA cC rC)", 1, 4},
                                       {"init_opcodes < (reset) >", 1, 1},
                                       {"init_opcodes <(rst)>", 1, 1}}) {
    FlowNode flow = parseOpcodeFlow(c.text);
    expect(!flow.isLeaf && flow.depth() == c.depth &&
               flow.children.size() == c.topArity,
           std::string("flow shape for ") + c.text);
  }

  // The convolution map as published, with its trailing comments.
  OpcodeMap conv = parseOpcodeMap(
      "opcode_map< \n"
      "  sIcO=[send_literal(70), send(0)], // send 3D input window \n"
      "                                    //  and compute\n"
      "  sF=[send_literal(1), send(1)],    // send 3D filter\n"
      "  rO=[send_literal(8), recv(2)],    // recv 2D output slice\n"
      "  rst=[send_literal(32), send_dim(1,3),  // set filter size \n"
      "       send_literal(16), send_dim(0,1)]> // set iC size");
  expect(conv.entries.size() == 4, "conv map entry count");
  expect(conv.entries[3].second ==
             std::vector<Action>{Action::sendLiteral(32), Action::sendDim(1, 3),
                                 Action::sendLiteral(16),
                                 Action::sendDim(0, 1)},
         "rst actions");
  FlowNode convFlow = parseOpcodeFlow("opcode_flow <(sF (sIcO) rO)>");
  expect(convFlow.children.size() == 3 &&
             convFlow.children[1] == FlowNode::group({FlowNode::leaf("sIcO")}),
         "conv flow shape");

  // 1000 fuzzed parse/print round trips in each grammar.
  std::mt19937 rng(0x5EED);
  for (int i = 0; i < 1000; ++i) {
    OpcodeMap m;
    std::uniform_int_distribution<int> numOps(1, 6), numActs(1, 5);
    int ops = numOps(rng);
    for (int o = 0; o < ops; ++o) {
      std::vector<Action> actions;
      int acts = numActs(rng);
      for (int a = 0; a < acts; ++a)
        actions.push_back(randomAction(rng));
      m.entries.emplace_back("op" + std::to_string(o), std::move(actions));
    }
    std::string printed = printOpcodeMap(m);
    expect(parseOpcodeMap(printed) == m &&
               printOpcodeMap(parseOpcodeMap(printed)) == printed,
           "map round trip diverged on case " + std::to_string(i));

    FlowNode f = randomFlow(rng);
    std::string flowPrinted = printOpcodeFlow(f);
    expect(parseOpcodeFlow(flowPrinted) == f &&
               printOpcodeFlow(parseOpcodeFlow(flowPrinted)) == flowPrinted,
           "flow round trip diverged on case " + std::to_string(i));
  }

  // Grammar mutations must all be rejected.
  for (const char *bad :
       {"opcode_map<sA = [send(0)>", "sA [send(0)]", "sA = [snd(0)]",
        "sA = [send]", "sA = []", "sA = [send(-1)]",
        "sA = [send(0)], sA = [send(1)]", "sA = [send_literal(0x1FFFFFFFF)]",
        "opcode_map<sA = [send(0)]> junk"}) {
    bool rejected = false;
    try {
      parseOpcodeMap(bad);
    } catch (const Error &) {
      rejected = true;
    }
    expect(rejected, std::string("accepted malformed map: ") + bad);
  }
  for (const char *bad :
       {"(sA (sB)", "(sA))", "sA sB", "()", "opcode_flow sA", ""}) {
    bool rejected = false;
    try {
      parseOpcodeFlow(bad);
    } catch (const Error &) {
      rejected = true;
    }
    expect(rejected, std::string("accepted malformed flow: ") + bad);
  }
  return "published strings, 1000 round trips, and all negatives conform";
}

//===----------------------------------------------------------------------===//
// 4. Planner legality and permutation guidance
//===----------------------------------------------------------------------===//

std::string criterion4() {
  SystemConfig sys = loadConfigFile(std::string(ACCELHOST_SOURCE_DIR) +
                                    "/configs/matmul_astationary_4x4.json");
  const AcceleratorConfig &cfg = sys.accelerators[0];
  expect(printFlowBody(*cfg.findFlow("As")) == "(sA (sBcCrC))",
         "config does not carry the expected A-stationary flow");

  // Under (m, k, n) the flow is legal with the A send one level above the
  // innermost loop.
  KernelSpec spec = makeMatmul(16, 16, 16);
  PipelineOptions opts;
  opts.permutation = {"m", "k", "n"};
  AccelProgram prog = buildProgram(spec, cfg, sys.cpu, opts);
  const PlacedOpcode *sA = prog.findOpcode("sA");
  expect(sA != nullptr, "sA not placed");
  expect(sA->placement.level == 2 && !sA->placement.post,
         "sA placed at level " + std::to_string(sA->placement.level));

  // Under (m, n, k) the same flow has no defined A tile index at the send's
  // placement: the error must name dim k and suggest the working order.
  opts.permutation = {"m", "n", "k"};
  bool rejected = false;
  try {
    buildProgram(spec, cfg, sys.cpu, opts);
  } catch (const Error &e) {
    rejected = true;
    expect(e.kind == Error::Kind::UndefinedTileIndex,
           std::string("wrong error kind: ") + errorKindName(e.kind));
    std::string message = e.what();
    expect(message.find("'k'") != std::string::npos,
           "error does not name dim k: " + message);
    expect(message.find("m,k,n") != std::string::npos,
           "error does not suggest m,k,n: " + message);
  }
  expect(rejected, "illegal permutation was accepted");
  return "legal placement at level 2; illegal order rejected naming dim k";
}

//===----------------------------------------------------------------------===//
// 5. Strided staging: fast path vs element path
//===----------------------------------------------------------------------===//

std::string criterion5() {
  DmaConfig dma;
  dma.inputAddress = 0x42;
  dma.inputBufferSize = 1 << 16;
  dma.outputAddress = 0x20000;
  dma.outputBufferSize = 1 << 16;

  std::mt19937 rng(0xBEEF);
  std::uniform_int_distribution<int> rankDist(1, 3);
  std::uniform_int_distribution<int64_t> sizeDist(1, 6);
  std::uniform_int_distribution<int64_t> padDist(0, 3);
  std::uniform_int_distribution<int64_t> offDist(0, 5);
  std::uniform_int_distribution<int32_t> valDist(-1000, 1000);

  for (int i = 0; i < 500; ++i) {
    int rank = rankDist(rng);
    std::vector<int64_t> sizes(rank), strides(rank);
    for (int d = 0; d < rank; ++d)
      sizes[d] = sizeDist(rng);
    int64_t stride = padDist(rng) == 0 ? 2 : 1;
    for (int d = rank - 1; d >= 0; --d) {
      strides[d] = stride;
      stride *= sizes[d] + padDist(rng);
    }
    int64_t offset = offDist(rng);
    int64_t span = offset + 1;
    for (int d = 0; d < rank; ++d)
      span += (sizes[d] - 1) * strides[d];
    Buffer base = allocBuffer(static_cast<size_t>(span));
    for (int32_t &v : *base)
      v = valDist(rng);
    MemRefDesc view{base, offset, sizes, strides};

    DmaRegion fast = dmaInit(dma);
    DmaRegion slow = dmaInit(dma);
    slow.forceSlowCopy = true;
    size_t fastWords = copyToDmaRegion(view, fast, 5);
    size_t slowWords = copyToDmaRegion(view, slow, 5);
    expect(fastWords == slowWords && fast.inStage == slow.inStage,
           "fast and slow staging diverged on descriptor " +
               std::to_string(i));
    expect(slow.counters.blockCopies == 0,
           "slow path used block copies on descriptor " + std::to_string(i));
  }

  // Counter contract on a dense row-major 4x4 tile.
  Buffer buf = allocBuffer(64);
  for (size_t i = 0; i < buf->size(); ++i)
    (*buf)[i] = static_cast<int32_t>(i);
  MemRefDesc tile = subview(makeContiguousMemRef(buf, {8, 8}), {0, 0}, {4, 4});
  DmaRegion fast = dmaInit(dma);
  copyToDmaRegion(tile, fast, 0);
  expect(fast.counters.blockCopies == 4 && fast.counters.elementCopies == 0,
         "fast path: " + std::to_string(fast.counters.blockCopies) +
             " block / " + std::to_string(fast.counters.elementCopies) +
             " element copies");
  DmaRegion slow = dmaInit(dma);
  slow.forceSlowCopy = true;
  copyToDmaRegion(tile, slow, 0);
  expect(slow.counters.elementCopies == 16 && slow.counters.blockCopies == 0,
         "slow path: " + std::to_string(slow.counters.blockCopies) +
             " block / " + std::to_string(slow.counters.elementCopies) +
             " element copies");
  return "500 descriptors bit-equal; 4x4 tile: 4 block vs 16 element copies";
}

//===----------------------------------------------------------------------===//
// 6. Runtime-sized tiles on the flexible accelerator
//===----------------------------------------------------------------------===//

std::string criterion6() {
  AcceleratorConfig cfg = builtinAccelerator("v4", 16);
  KernelSpec spec = makeMatmul(64, 32, 128);
  fillDeterministic(spec, 0xF1E2);
  PipelineOptions opts;
  opts.tileOverride = {{"m", 32}, {"n", 16}, {"k", 64}};
  AccelProgram prog = buildProgram(spec, cfg, defaultCpu(), opts);
  expect(prog.nest.effTiles.at("m") == 32 && prog.nest.effTiles.at("n") == 16 &&
             prog.nest.effTiles.at("k") == 64,
         "tile override not applied");

  // The wire framing must announce the tile extents via dimension words.
  const PlacedOpcode *sA = prog.findOpcode("sA");
  expect(sA != nullptr && sA->actions.size() == 4, "unexpected sA layout");
  expect(sA->actions[1].kind == Action::Kind::SendDim &&
             sA->actions[1].dimValue == 32,
         "sA does not frame m=32");
  expect(sA->actions[2].kind == Action::Kind::SendDim &&
             sA->actions[2].dimValue == 64,
         "sA does not frame k=64");
  const PlacedOpcode *sB = prog.findOpcode("sB");
  expect(sB->actions[1].dimValue == 64 && sB->actions[2].dimValue == 16,
         "sB does not frame k=64, n=16");

  RunComparison cmp = runAndCompare(prog);
  expect(cmp.match, "flexible-tile run diverged: " + cmp.firstDiff);

  // Tiles that violate the 16-word granularity are rejected.
  opts.tileOverride = {{"m", 24}};
  bool rejected = false;
  try {
    buildProgram(spec, cfg, defaultCpu(), opts);
  } catch (const Error &e) {
    rejected = true;
    expect(e.kind == Error::Kind::BadTileGranularity,
           std::string("wrong error kind: ") + errorKindName(e.kind));
  }
  expect(rejected, "granularity violation was accepted");
  return "tiles (32,16,64) on 64x32x128 bit-equal with framed dims; 24 rejected";
}

//===----------------------------------------------------------------------===//
// 7. Search ranking vs measured counters
//===----------------------------------------------------------------------===//

std::string criterion7() {
  AcceleratorConfig cfg = builtinAccelerator("v4", 16);
  std::vector<std::array<int64_t, 3>> shapes;
  std::array<int64_t, 3> base = {32, 256, 512};
  std::sort(base.begin(), base.end());
  do {
    shapes.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  expect(shapes.size() == 6, "expected 6 problem shapes");

  ExploreOptions exploreOpts;
  exploreOpts.threads = 4;
  int measured = 0;
  for (const auto &[M, N, K] : shapes) {
    KernelSpec spec = makeMatmul(M, N, K);
    std::vector<CandidateResult> results =
        explore(spec, cfg, defaultCpu(), exploreOpts);
    expect(!results.empty(), "no legal candidates");
    const CandidateResult &top = results.front();

    // Dominance over every square-tile strategy.
    int squares = 0;
    for (const CandidateResult &r : results) {
      if (r.effTiles.at("m") == r.effTiles.at("n") &&
          r.effTiles.at("n") == r.effTiles.at("k")) {
        ++squares;
        expect(top.totalWords <= r.totalWords,
               "square tiling beats the top candidate");
      }
    }
    expect(squares > 0, "no square-tile strategies to compare against");

    // Predictions equal measured counters on the top three candidates.
    for (size_t i = 0; i < 3 && i < results.size(); ++i) {
      const CandidateResult &r = results[i];
      KernelSpec runSpec = makeMatmul(M, N, K);
      fillDeterministic(runSpec, static_cast<uint32_t>(0x700 + measured));
      PipelineOptions opts;
      opts.flow = r.candidate.flow;
      opts.permutation = r.candidate.permutation;
      opts.tileOverride = r.candidate.tiles;
      AccelProgram prog = buildProgram(runSpec, cfg, defaultCpu(), opts);
      RunComparison cmp = runAndCompare(prog);
      expect(cmp.match, "candidate run diverged: " + cmp.firstDiff);
      expect(cmp.run.counters.wordsSent == r.sentWords &&
                 cmp.run.counters.wordsReceived == r.recvWords,
             "candidate " + r.candidate.flow + " predicted " +
                 std::to_string(r.sentWords) + "+" +
                 std::to_string(r.recvWords) + " words, measured " +
                 std::to_string(cmp.run.counters.wordsSent) + "+" +
                 std::to_string(cmp.run.counters.wordsReceived));
      ++measured;
    }
  }
  return "6 shapes: top candidate dominates squares; " +
         std::to_string(measured) + " predictions == measured counters";
}

//===----------------------------------------------------------------------===//
// 8. Convolution engine
//===----------------------------------------------------------------------===//

std::string criterion8() {
  AcceleratorConfig cfg = builtinConvAccelerator();
  const std::map<std::string, int64_t> wantDims = {
      {"b", 0}, {"h", 0}, {"w", 0}, {"ic", 256},
      {"oc", 1}, {"fh", 3}, {"fw", 3}};
  expect(cfg.accelDims == wantDims, "unexpected conv accelerator dims");
  expect(printFlowBody(*cfg.findFlow(cfg.selectedFlow)) == "(sF (sIcO) rO)",
         "unexpected conv flow");
  const std::vector<Action> *rst = cfg.opcodeMap.find("rst");
  expect(rst != nullptr &&
             *rst == std::vector<Action>{Action::sendLiteral(32),
                                         Action::sendDim(1, 3),
                                         Action::sendLiteral(16),
                                         Action::sendDim(0, 1)},
         "unexpected rst framing");

  struct Layer {
    int64_t B, H, W, iC, oC, fH, fW, stride;
  };
  // Residual-network layer shapes with the spatial extent reduced to 14.
  const std::vector<Layer> layers = {
      {1, 14, 14, 64, 64, 3, 3, 1},   {1, 14, 14, 64, 128, 3, 3, 2},
      {1, 14, 14, 128, 128, 3, 3, 1}, {1, 14, 14, 256, 256, 3, 3, 1},
      {1, 14, 14, 512, 512, 3, 3, 1}, {1, 14, 14, 64, 128, 1, 1, 2},
  };
  uint32_t seed = 0x800;
  for (const Layer &l : layers) {
    KernelSpec spec =
        makeConv2d(l.B, l.H, l.W, l.iC, l.oC, l.fH, l.fW, l.stride);
    fillDeterministic(spec, seed++);
    AccelProgram prog = buildProgram(spec, cfg, defaultCpu(), {});
    RunComparison cmp = runAndCompare(prog);
    std::ostringstream label;
    label << l.iC << "->" << l.oC << " f" << l.fH << " s" << l.stride;
    expect(cmp.match, label.str() + " diverged: " + cmp.firstDiff);
    expect(cmp.run.leftoverOutputWords == 0,
           label.str() + " left words in the output FIFO");
  }
  return std::to_string(layers.size()) +
         " layer shapes bit-exact, including the 1x1 stride-2 layer";
}

//===----------------------------------------------------------------------===//
// 9. Generated-driver stability and fidelity
//===----------------------------------------------------------------------===//

std::string readFileOrThrow(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  expect(in.good(), "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void writeFileOrThrow(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  expect(out.good(), "cannot write " + path);
}

int runCommand(const std::string &command) {
  return std::system(command.c_str());
}

std::string criterion9() {
  SystemConfig sys = loadConfigFile(std::string(ACCELHOST_SOURCE_DIR) +
                                    "/configs/matmul_astationary_4x4.json");
  const AcceleratorConfig &cfg = sys.accelerators[0];
  KernelSpec spec = makeMatmul(8, 8, 8);
  AccelProgram prog = buildProgram(spec, cfg, sys.cpu, {});
  EmittedDriver driver = emitDriver(prog);

  // Byte-for-byte stability against the checked-in golden driver.
  std::string golden = readFileOrThrow(std::string(ACCELHOST_SOURCE_DIR) +
                                       "/tests/golden/matmul_as_8x8x8_driver.c");
  expect(driver.source == golden,
         "generated driver differs from tests/golden/matmul_as_8x8x8_driver.c");

  // Compile the driver plus its harness and run it.
  const uint32_t seed = 1;
  std::string harness = emitHarness(driver, prog, saveConfig(sys), seed);
  std::filesystem::path dir(ACCELHOST_SCRATCH_DIR);
  std::filesystem::create_directories(dir);
  writeFileOrThrow((dir / "driver.c").string(), driver.source);
  writeFileOrThrow((dir / "harness.c").string(), harness);

  std::string cc = ACCELHOST_CC;
  std::string cxx = ACCELHOST_CXX;
  std::string include = ACCELHOST_CRT_INCLUDE;
  std::string quiet = " > " + (dir / "compile.log").string() + " 2>&1";
  expect(runCommand(cc + " -std=c99 -Wall -Wextra -O1 -I " + include +
                    " -c " + (dir / "driver.c").string() + " -o " +
                    (dir / "driver.o").string() + quiet) == 0,
         "driver compilation failed (see scratch/compile.log)");
  expect(runCommand(cc + " -std=c99 -Wall -Wextra -O1 -I " + include +
                    " -c " + (dir / "harness.c").string() + " -o " +
                    (dir / "harness.o").string() + quiet) == 0,
         "harness compilation failed (see scratch/compile.log)");
  expect(runCommand(cxx + " " + (dir / "driver.o").string() + " " +
                    (dir / "harness.o").string() + " " + ACCELHOST_CRT_LIB +
                    " " + ACCELHOST_CORE_LIB + " -pthread -o " +
                    (dir / "driver_bin").string() + quiet) == 0,
         "driver link failed (see scratch/compile.log)");
  std::string outPath = (dir / "driver_out.txt").string();
  expect(runCommand((dir / "driver_bin").string() + " > " + outPath) == 0,
         "compiled driver exited nonzero");

  // Parse the name=value report.
  std::map<std::string, std::string> report;
  std::istringstream lines(readFileOrThrow(outPath));
  std::string lineText;
  while (std::getline(lines, lineText)) {
    size_t eq = lineText.find('=');
    if (eq != std::string::npos)
      report[lineText.substr(0, eq)] = lineText.substr(eq + 1);
  }

  // Twin run through the in-process interpreter with the same seed.
  fillDeterministic(prog.spec, seed);
  InterpretResult run = interpret(prog);
  char checksum[16];
  std::snprintf(checksum, sizeof checksum, "0x%08X",
                checksumOutput(prog.spec));
  expect(report["output_checksum"] == checksum,
         "checksum mismatch: driver " + report["output_checksum"] +
             " vs interpreter " + checksum);
  const std::pair<std::string, int64_t> counters[] = {
      {"words_sent", run.counters.wordsSent},
      {"words_received", run.counters.wordsReceived},
      {"send_transactions", run.counters.sendTransactions},
      {"recv_transactions", run.counters.recvTransactions},
      {"element_copies", run.counters.elementCopies},
      {"block_copies", run.counters.blockCopies},
      {"device_words_consumed", run.deviceWordsConsumed},
      {"device_words_produced", run.deviceWordsProduced},
      {"leftover_output_words", run.leftoverOutputWords},
  };
  for (const auto &[name, value] : counters)
    expect(report[name] == std::to_string(value),
           name + " mismatch: driver " + report[name] + " vs interpreter " +
               std::to_string(value));
  return "golden bytes stable; compiled driver matches interpreter checksum "
         "and all 9 counters";
}

} // namespace

int main() {
  struct Criterion {
    int number;
    const char *title;
    std::function<std::string()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "functional equivalence across generations, sizes, and flows",
       criterion1},
      {2, "stationary-flow transfer arithmetic", criterion2},
      {3, "opcode grammar conformance", criterion3},
      {4, "flow placement legality and guidance", criterion4},
      {5, "strided staging fast path", criterion5},
      {6, "runtime-sized tiles", criterion6},
      {7, "lowering search ranking", criterion7},
      {8, "convolution engine", criterion8},
      {9, "generated-driver stability", criterion9},
  };

  int failures = 0;
  for (const Criterion &c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      detail = c.run();
      ok = true;
    } catch (const CheckFailure &f) {
      detail = f.detail;
    } catch (const Error &e) {
      detail = std::string("unexpected error[") + errorKindName(e.kind) + "]: " +
               e.what();
    } catch (const std::exception &e) {
      detail = std::string("unexpected exception: ") + e.what();
    }
    std::cout << (ok ? "PASS" : "FAIL") << ": criterion " << c.number << " ("
              << c.title << ") - " << detail << "\n";
    if (!ok)
      ++failures;
  }
  if (failures)
    std::cout << failures << " of " << criteria.size()
              << " criteria failed\n";
  else
    std::cout << "all " << criteria.size() << " criteria passed\n";
  return failures;
}

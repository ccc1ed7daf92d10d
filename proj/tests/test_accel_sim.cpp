//===- test_accel_sim.cpp - Stream accelerator model tests ---------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/accel_sim.h"
#include "accelhost/error.h"
#include "accelhost/kernel_model.h"

#include "doctest.h"
#include "oracles.h"

#include <numeric>
#include <random>

using namespace accelhost;

namespace {

void feed(StreamAccelerator &device, std::initializer_list<int32_t> words) {
  device.inFifo.insert(device.inFifo.end(), words.begin(), words.end());
}

void feed(StreamAccelerator &device, const std::vector<int32_t> &words) {
  device.inFifo.insert(device.inFifo.end(), words.begin(), words.end());
}

std::vector<int32_t> drain(StreamAccelerator &device) {
  std::vector<int32_t> out(device.outFifo.begin(), device.outFifo.end());
  device.outFifo.clear();
  return out;
}

} // namespace

TEST_CASE("binding assigns wire keys and explicit steps") {
  BehaviorTable table = bindBehavior(builtinAccelerator("v1", 4));
  CHECK(table.kernel == "matmul");
  CHECK(table.numArgs == 3);
  const BoundOpcode *fused = table.find(0x21);
  REQUIRE(fused != nullptr);
  CHECK(fused->id == "sAsBcCrC");
  REQUIRE(fused->steps.size() == 4);
  CHECK(fused->steps[0].kind == BoundStep::Kind::Read);
  CHECK(fused->steps[0].arg == 0);
  CHECK(fused->steps[1].kind == BoundStep::Kind::Read);
  CHECK(fused->steps[1].arg == 1);
  CHECK(fused->steps[2].kind == BoundStep::Kind::Compute);
  CHECK(fused->steps[3].kind == BoundStep::Kind::Write);
  CHECK(fused->steps[3].arg == 2);
  CHECK(table.find(0xFF) != nullptr);
  CHECK(table.find(0x99) == nullptr);
}

TEST_CASE("opcodes without explicit behavior derive sensible steps") {
  // Same wire layout as the fused v1 opcode but with no behavior table:
  // sends become reads and a compute is inserted before the write.
  AcceleratorConfig cfg = builtinAccelerator("v1", 4);
  cfg.behavior.clear();
  BehaviorTable table = bindBehavior(cfg);
  const BoundOpcode *fused = table.find(0x21);
  REQUIRE(fused != nullptr);
  REQUIRE(fused->steps.size() == 4);
  CHECK(fused->steps[0].kind == BoundStep::Kind::Read);
  CHECK(fused->steps[1].kind == BoundStep::Kind::Read);
  CHECK(fused->steps[2].kind == BoundStep::Kind::Compute);
  CHECK(fused->steps[3].kind == BoundStep::Kind::Write);
  // Default sizes name the argument's dims as runtime parameters.
  REQUIRE(fused->steps[0].size.size() == 2);
  CHECK(fused->steps[0].size[0].isParam);
  CHECK(fused->steps[0].size[0].param == "m");
  CHECK(fused->steps[0].size[1].param == "k");
}

TEST_CASE("runtime-sized opcodes bind parameter loads before the read") {
  BehaviorTable table = bindBehavior(builtinAccelerator("v4", 16));
  const BoundOpcode *sA = table.find(0x22);
  REQUIRE(sA != nullptr);
  REQUIRE(sA->steps.size() == 3);
  CHECK(sA->steps[0].kind == BoundStep::Kind::SetParam);
  CHECK(sA->steps[0].param == "m");
  CHECK(sA->steps[1].kind == BoundStep::Kind::SetParam);
  CHECK(sA->steps[1].param == "k");
  CHECK(sA->steps[2].kind == BoundStep::Kind::Read);
  REQUIRE(sA->steps[2].size.size() == 2);
  CHECK(sA->steps[2].size[0].param == "m");
}

TEST_CASE("mid-opcode literals become in-stream checks") {
  BehaviorTable table = bindBehavior(builtinConvAccelerator());
  const BoundOpcode *rst = table.find(32);
  REQUIRE(rst != nullptr);
  // Wire: [32 (key), dim word, 16, dim word]; behavior names two
  // parameters, the embedded 16 must still match on the wire.
  REQUIRE(rst->steps.size() == 3);
  CHECK(rst->steps[0].kind == BoundStep::Kind::SetParam);
  CHECK(rst->steps[0].param == "f");
  CHECK(rst->steps[1].kind == BoundStep::Kind::ExpectLiteral);
  CHECK(rst->steps[1].literal == 16);
  CHECK(rst->steps[2].kind == BoundStep::Kind::SetParam);
  CHECK(rst->steps[2].param == "ic");
}

TEST_CASE("binding rejects inconsistent descriptions") {
  SUBCASE("opcode without a leading literal") {
    AcceleratorConfig cfg = builtinAccelerator("v1", 4);
    cfg.opcodeMap = parseOpcodeMap("raw = [send(0)]");
    cfg.behavior.clear();
    cfg.opcodeFlows = {{"Ns", parseOpcodeFlow("(raw)")}};
    cfg.selectedFlow = "Ns";
    cfg.initOpcodes.clear();
    try {
      bindBehavior(cfg);
      FAIL("expected UnboundLiteral");
    } catch (const Error &e) {
      CHECK(e.kind == Error::Kind::UnboundLiteral);
    }
  }
  SUBCASE("two opcodes sharing one wire literal") {
    AcceleratorConfig cfg = builtinAccelerator("v1", 4);
    cfg.opcodeMap = parseOpcodeMap(
        "a = [send_literal(0x10), send(0)], b = [send_literal(0x10)]");
    cfg.behavior.clear();
    cfg.opcodeFlows = {{"Ns", parseOpcodeFlow("(a)")}};
    cfg.selectedFlow = "Ns";
    cfg.initOpcodes.clear();
    try {
      bindBehavior(cfg);
      FAIL("expected DuplicateOpcodeId");
    } catch (const Error &e) {
      CHECK(e.kind == Error::Kind::DuplicateOpcodeId);
    }
  }
  SUBCASE("behavior steps out of order with the wire layout") {
    AcceleratorConfig cfg = builtinAccelerator("v1", 4);
    cfg.behavior["sAsBcCrC"] = {parseBehaviorStep("read(1)"),
                                parseBehaviorStep("read(0)"),
                                parseBehaviorStep("compute"),
                                parseBehaviorStep("write(2)")};
    try {
      bindBehavior(cfg);
      FAIL("expected BadValue");
    } catch (const Error &e) {
      CHECK(e.kind == Error::Kind::BadValue);
    }
  }
}

TEST_CASE("the device computes a matmul tile matching the oracle") {
  StreamAccelerator device(bindBehavior(builtinAccelerator("v1", 4)));
  std::mt19937 rng(21);
  std::vector<int32_t> a(16), b(16);
  oracles::fillRandom(a, rng);
  oracles::fillRandom(b, rng);
  feed(device, {0x21});
  feed(device, a);
  feed(device, b);
  device.runToQuiescence();
  CHECK(device.idle());
  std::vector<int32_t> expect(16, 0);
  oracles::matmul(4, 4, 4, a, b, expect);
  CHECK(drain(device) == expect);
  CHECK(device.wordsConsumed == 33);
  CHECK(device.wordsProduced == 16);
}

TEST_CASE("split opcodes accumulate partial products until drained") {
  StreamAccelerator device(bindBehavior(builtinAccelerator("v3", 4)));
  std::vector<int32_t> a0(16, 1), b0(16, 2), a1(16, 3), b1(16, 5);
  // Two compute rounds before one read-back: C holds both contributions.
  feed(device, {0x22});
  feed(device, a0);
  feed(device, {0x23});
  feed(device, b0);
  feed(device, {0xF0});
  feed(device, {0x22});
  feed(device, a1);
  feed(device, {0x23});
  feed(device, b1);
  feed(device, {0xF0, 0x24});
  device.runToQuiescence();
  std::vector<int32_t> out = drain(device);
  REQUIRE(out.size() == 16);
  // Each element: 4*(1*2) + 4*(3*5) = 68.
  for (int32_t v : out)
    CHECK(v == 68);
}

TEST_CASE("a write with no prior compute drains a zero tile") {
  StreamAccelerator device(bindBehavior(builtinAccelerator("v3", 4)));
  feed(device, {0xFF, 0x24}); // reset, then read back C
  device.runToQuiescence();
  std::vector<int32_t> out = drain(device);
  CHECK(out == std::vector<int32_t>(16, 0));
}

TEST_CASE("the device stalls mid-opcode and resumes on new words") {
  StreamAccelerator device(bindBehavior(builtinAccelerator("v1", 4)));
  std::vector<int32_t> a(16, 1), b(16, 1);
  feed(device, {0x21});
  feed(device, std::vector<int32_t>(a.begin(), a.begin() + 7));
  device.runToQuiescence();
  CHECK_FALSE(device.idle());
  CHECK(device.wordsConsumed == 8);
  CHECK(device.outFifo.empty());
  feed(device, std::vector<int32_t>(a.begin() + 7, a.end()));
  device.runToQuiescence(); // Still missing all of B.
  CHECK_FALSE(device.idle());
  feed(device, b);
  device.runToQuiescence();
  CHECK(device.idle());
  CHECK(drain(device) == std::vector<int32_t>(16, 4));
}

TEST_CASE("unknown dispatch words and literal mismatches throw") {
  StreamAccelerator device(bindBehavior(builtinAccelerator("v3", 4)));
  feed(device, {0x77});
  try {
    device.runToQuiescence();
    FAIL("expected UnknownOpcodeLiteral");
  } catch (const Error &e) {
    CHECK(e.kind == Error::Kind::UnknownOpcodeLiteral);
  }

  StreamAccelerator conv(bindBehavior(builtinConvAccelerator()));
  feed(conv, {32, 3, 99, 8}); // Embedded literal must be 16, not 99.
  try {
    conv.runToQuiescence();
    FAIL("expected UnknownOpcodeLiteral");
  } catch (const Error &e) {
    CHECK(e.kind == Error::Kind::UnknownOpcodeLiteral);
  }
}

TEST_CASE("reads past the on-chip capacity are rejected") {
  AcceleratorConfig cfg = builtinAccelerator("v4", 4);
  cfg.bufferWords = 8;
  StreamAccelerator device(bindBehavior(cfg));
  feed(device, {0x22, 4, 4}); // m=4, k=4 -> 16-word read into an 8-word bank.
  try {
    device.runToQuiescence();
    FAIL("expected BufferOverrun");
  } catch (const Error &e) {
    CHECK(e.kind == Error::Kind::BufferOverrun);
  }
}

TEST_CASE("compute validates buffer contents against its parameters") {
  StreamAccelerator device(bindBehavior(builtinAccelerator("v4", 4)));
  // Claim an 8x4 A but supply 4x4 words, then ask for compute.
  feed(device, {0x22, 8, 4});
  feed(device, std::vector<int32_t>(16, 1));
  device.runToQuiescence(); // Read stalls at 16 of 32 words.
  CHECK_FALSE(device.idle());
  feed(device, std::vector<int32_t>(16, 1)); // Finish the read honestly.
  feed(device, {0x23, 4, 4});
  feed(device, std::vector<int32_t>(16, 1));
  feed(device, {0xF0}); // m=8,k=4 vs k=4,n=4: A has 32 words, fine; run it.
  device.runToQuiescence();
  // Now poison the shape: set k=8 without sending a new A.
  feed(device, {0x23, 8, 4});
  feed(device, std::vector<int32_t>(32, 1));
  feed(device, {0xF0});
  try {
    device.runToQuiescence();
    FAIL("expected ShapeMismatch");
  } catch (const Error &e) {
    CHECK(e.kind == Error::Kind::ShapeMismatch);
  }
}

TEST_CASE("reset clears buffers and parameters") {
  StreamAccelerator device(bindBehavior(builtinAccelerator("v3", 4)));
  std::vector<int32_t> a(16, 2), b(16, 3);
  feed(device, {0x22});
  feed(device, a);
  feed(device, {0x23});
  feed(device, b);
  feed(device, {0xF0});
  device.runToQuiescence();
  CHECK_FALSE(device.buffers[2].empty());
  feed(device, {0xFF}); // reset opcode
  device.runToQuiescence();
  CHECK(device.buffers[0].empty());
  CHECK(device.buffers[2].empty());
  CHECK(device.params.empty());
  // After reset, reading back C yields zeros again.
  feed(device, {0x24});
  device.runToQuiescence();
  CHECK(drain(device) == std::vector<int32_t>(16, 0));
}

TEST_CASE("conv engine accumulates one output word per window") {
  StreamAccelerator device(bindBehavior(builtinConvAccelerator()));
  // Program f=2, ic=3 (window = 3*2*2 = 12 words).
  feed(device, {32, 2, 16, 3});
  std::vector<int32_t> filter(12), window0(12), window1(12);
  std::mt19937 rng(5);
  oracles::fillRandom(filter, rng);
  oracles::fillRandom(window0, rng);
  oracles::fillRandom(window1, rng);
  feed(device, {1});
  feed(device, filter);
  feed(device, {70});
  feed(device, window0);
  feed(device, {70});
  feed(device, window1);
  feed(device, {8});
  device.runToQuiescence();
  int32_t dot0 = 0, dot1 = 0;
  for (int i = 0; i < 12; ++i) {
    dot0 = wrapAdd(dot0, wrapMul(filter[i], window0[i]));
    dot1 = wrapAdd(dot1, wrapMul(filter[i], window1[i]));
  }
  CHECK(drain(device) == std::vector<int32_t>{dot0, dot1});
  // The drain-all write emptied the slice; another rO produces nothing.
  feed(device, {8});
  device.runToQuiescence();
  CHECK(drain(device).empty());
}

TEST_CASE("word conservation holds across arbitrary opcode sequences") {
  StreamAccelerator device(bindBehavior(builtinAccelerator("v3", 4)));
  std::mt19937 rng(9);
  std::vector<int32_t> tile(16);
  int64_t pushed = 0;
  for (int round = 0; round < 5; ++round) {
    oracles::fillRandom(tile, rng);
    feed(device, {0x22});
    feed(device, tile);
    oracles::fillRandom(tile, rng);
    feed(device, {0x23});
    feed(device, tile);
    feed(device, {0xF0, 0x24});
    pushed += 2 * 17 + 2;
    device.runToQuiescence();
  }
  CHECK(device.wordsConsumed == pushed);
  CHECK(device.wordsProduced == 5 * 16);
  CHECK(device.outFifo.size() == 5 * 16);
  CHECK(device.inFifo.empty());
}

//===- test_opcode_dsl.cpp - Opcode map/flow parser tests --------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/error.h"
#include "accelhost/opcode_dsl.h"

#include "doctest.h"

#include <random>
#include <sstream>

using namespace accelhost;

namespace {

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

OpcodeMap randomMap(std::mt19937 &rng) {
  std::uniform_int_distribution<int> numOps(1, 6);
  std::uniform_int_distribution<int> numActs(1, 5);
  OpcodeMap map;
  int n = numOps(rng);
  for (int i = 0; i < n; ++i) {
    std::vector<Action> actions;
    int a = numActs(rng);
    for (int j = 0; j < a; ++j)
      actions.push_back(randomAction(rng));
    map.entries.emplace_back("op" + std::to_string(i), std::move(actions));
  }
  return map;
}

FlowNode randomFlow(std::mt19937 &rng, int depth = 0) {
  std::uniform_int_distribution<int> numKids(1, 4);
  std::uniform_int_distribution<int> leafDist(0, 9);
  std::vector<FlowNode> children;
  int n = numKids(rng);
  bool nested = false;
  for (int i = 0; i < n; ++i) {
    bool goDeeper = depth < 3 && !nested && leafDist(rng) < 3;
    if (goDeeper) {
      children.push_back(randomFlow(rng, depth + 1));
      nested = true;
    } else {
      children.push_back(FlowNode::leaf("op" + std::to_string(leafDist(rng))));
    }
  }
  return FlowNode::group(std::move(children));
}

} // namespace

TEST_CASE("published matmul opcode map parses to the documented actions") {
  // The full map from the reference accelerator description, including the
  // inline comment.
  OpcodeMap map = parseOpcodeMap(
      "opcode_map < // Valid Opcodes\n"
      "    sA       = [send_literal(0x22), send(0)],\n"
      "    sB       = [send_literal(0x23), send(1)],\n"
      "    cC       = [send_literal(0xF0)],\n"
      "    rC       = [send_literal(0x24), recv(2)],\n"
      "    sBcCrC   = [send_literal(0x25), send(1), recv(2)],\n"
      "    reset    = [send_literal(0xFF)] >");
  REQUIRE(map.entries.size() == 6);
  CHECK(map.entries[0].first == "sA");
  CHECK(map.entries[0].second ==
        std::vector<Action>{Action::sendLiteral(0x22), Action::send(0)});
  CHECK(map.entries[1].second ==
        std::vector<Action>{Action::sendLiteral(0x23), Action::send(1)});
  CHECK(map.entries[2].second ==
        std::vector<Action>{Action::sendLiteral(0xF0)});
  CHECK(map.entries[3].second ==
        std::vector<Action>{Action::sendLiteral(0x24), Action::recv(2)});
  CHECK(map.entries[4].second ==
        std::vector<Action>{Action::sendLiteral(0x25), Action::send(1),
                            Action::recv(2)});
  CHECK(map.entries[5].second ==
        std::vector<Action>{Action::sendLiteral(0xFF)});
}

TEST_CASE("published flow strings parse to the documented trees") {
  SUBCASE("A-stationary") {
    FlowNode flow = parseOpcodeFlow("opcode_flow < (sA (sBcCrC)) > ");
    REQUIRE_FALSE(flow.isLeaf);
    REQUIRE(flow.children.size() == 2);
    CHECK(flow.children[0] == FlowNode::leaf("sA"));
    CHECK(flow.children[1] ==
          FlowNode::group({FlowNode::leaf("sBcCrC")}));
    CHECK(flow.depth() == 2);
  }
  SUBCASE("C-stationary") {
    FlowNode flow = parseOpcodeFlow("((sA sB cC) rC)");
    REQUIRE(flow.children.size() == 2);
    CHECK(flow.children[0] ==
          FlowNode::group({FlowNode::leaf("sA"), FlowNode::leaf("sB"),
                           FlowNode::leaf("cC")}));
    CHECK(flow.children[1] == FlowNode::leaf("rC"));
  }
  SUBCASE("nothing-stationary") {
    FlowNode flow = parseOpcodeFlow("(sB sA cC rC)");
    REQUIRE(flow.children.size() == 4);
    CHECK(flow.depth() == 1);
  }
  SUBCASE("single fused opcode") {
    FlowNode flow = parseOpcodeFlow("opcode_flow <(sA sB cCrC)>");
    CHECK(flow.children.size() == 3);
    flow = parseOpcodeFlow("opcode_flow <(sA (sB cCrC))>");
    CHECK(flow.depth() == 2);
  }
  SUBCASE("init opcode list uses the same grammar") {
    FlowNode flow = parseOpcodeFlow("init_opcodes < (reset) >");
    REQUIRE(flow.children.size() == 1);
    CHECK(flow.children[0] == FlowNode::leaf("reset"));
    CHECK(parseOpcodeFlow("init_opcodes <(rst)>").children[0] ==
          FlowNode::leaf("rst"));
  }
}

TEST_CASE("published convolution map with multi-line comments parses") {
  OpcodeMap map = parseOpcodeMap(
      "opcode_map< \n"
      "  sIcO=[send_literal(70), send(0)], // send 3D input window \n"
      "                                    //  and compute\n"
      "  sF=[send_literal(1), send(1)],    // send 3D filter\n"
      "  rO=[send_literal(8), recv(2)],    // recv 2D output slice\n"
      "  rst=[send_literal(32), send_dim(1,3),  // set filter size \n"
      "       send_literal(16), send_dim(0,1)]> // set iC size");
  REQUIRE(map.entries.size() == 4);
  CHECK(map.entries[0].second ==
        std::vector<Action>{Action::sendLiteral(70), Action::send(0)});
  CHECK(map.entries[3].second ==
        std::vector<Action>{Action::sendLiteral(32), Action::sendDim(1, 3),
                            Action::sendLiteral(16), Action::sendDim(0, 1)});
  FlowNode flow = parseOpcodeFlow("opcode_flow <(sF (sIcO) rO)>");
  REQUIRE(flow.children.size() == 3);
  CHECK(flow.children[0] == FlowNode::leaf("sF"));
  CHECK(flow.children[1] == FlowNode::group({FlowNode::leaf("sIcO")}));
  CHECK(flow.children[2] == FlowNode::leaf("rO"));
}

TEST_CASE("send_idx and bare send_dim forms") {
  OpcodeMap map = parseOpcodeMap(
      "idx = [send_idx(2), send_idx(1, 0), send_dim(1)]");
  REQUIRE(map.entries.size() == 1);
  const auto &acts = map.entries[0].second;
  CHECK(acts[0] == Action::sendIdxLoop(2));
  CHECK(acts[0].hasArg == false);
  CHECK(acts[1] == Action::sendIdx(1, 0));
  CHECK(acts[2] == Action::sendDim(1, 0));
}

TEST_CASE("literals accept decimal and hex up to 32 bits") {
  OpcodeMap map =
      parseOpcodeMap("a = [send_literal(70)], b = [send_literal(0xFFFFFFFF)]");
  CHECK(map.entries[0].second[0].literal == 70u);
  CHECK(map.entries[1].second[0].literal == 0xFFFFFFFFu);
  CHECK_THROWS_WITH_AS(parseOpcodeMap("a = [send_literal(0x100000000)]"),
                       doctest::Contains("32"), Error);
  CHECK_THROWS_AS(parseOpcodeMap("a = [send_literal(4294967296)]"), Error);
}

TEST_CASE("map parse-print round trip is the identity on 1000 fuzz cases") {
  std::mt19937 rng(0xA11CE);
  for (int i = 0; i < 1000; ++i) {
    OpcodeMap map = randomMap(rng);
    std::string printed = printOpcodeMap(map);
    OpcodeMap reparsed = parseOpcodeMap(printed);
    REQUIRE(reparsed == map);
    REQUIRE(printOpcodeMap(reparsed) == printed);
  }
}

TEST_CASE("flow parse-print round trip is the identity on 1000 fuzz cases") {
  std::mt19937 rng(0xF10E5);
  for (int i = 0; i < 1000; ++i) {
    FlowNode flow = randomFlow(rng);
    std::string printed = printOpcodeFlow(flow);
    FlowNode reparsed = parseOpcodeFlow(printed);
    REQUIRE(reparsed == flow);
    REQUIRE(printOpcodeFlow(reparsed) == printed);
  }
}

TEST_CASE("malformed opcode maps are rejected") {
  auto kindOf = [](const std::string &text) {
    try {
      parseOpcodeMap(text);
    } catch (const Error &e) {
      return e.kind;
    }
    return Error::Kind::UsageError; // Sentinel: parse unexpectedly succeeded.
  };
  // Missing closing bracket.
  CHECK(kindOf("opcode_map<sA = [send(0)>") == Error::Kind::SyntaxError);
  // Unknown action name.
  CHECK(kindOf("sA = [snd(0)]") == Error::Kind::SyntaxError);
  // Missing '=' between id and list.
  CHECK(kindOf("sA [send(0)]") == Error::Kind::SyntaxError);
  // Trailing junk after the wrapper.
  CHECK(kindOf("opcode_map<sA = [send(0)]> extra") ==
        Error::Kind::SyntaxError);
  // Duplicate opcode name.
  CHECK(kindOf("sA = [send(0)], sA = [send(1)]") ==
        Error::Kind::DuplicateOpcodeId);
  // Action without parentheses.
  CHECK(kindOf("sA = [send]") == Error::Kind::SyntaxError);
  // Empty action list.
  CHECK(kindOf("sA = []") == Error::Kind::SyntaxError);
  // Negative argument.
  CHECK(kindOf("sA = [send(-1)]") == Error::Kind::SyntaxError);
  // Literal wider than a transfer word.
  CHECK(kindOf("sA = [send_literal(0x1FFFFFFFF)]") ==
        Error::Kind::LiteralOutOfRange);
}

TEST_CASE("malformed flows are rejected") {
  auto kindOf = [](const std::string &text) {
    try {
      parseOpcodeFlow(text);
    } catch (const Error &e) {
      return e.kind;
    }
    return Error::Kind::UsageError;
  };
  CHECK(kindOf("(sA (sB)") == Error::Kind::UnbalancedParens);
  // A stray ')' after the balanced group reads as trailing junk.
  CHECK(kindOf("(sA))") == Error::Kind::SyntaxError);
  CHECK(kindOf("sA sB") == Error::Kind::SyntaxError);  // No top-level group.
  CHECK(kindOf("()") == Error::Kind::SyntaxError);     // Empty group.
  CHECK(kindOf("opcode_flow sA") == Error::Kind::SyntaxError);
  CHECK(kindOf("") == Error::Kind::SyntaxError);
}

TEST_CASE("printers emit hex literals and stable spacing") {
  OpcodeMap map = parseOpcodeMap("sA = [send_literal(34), send(0)]");
  CHECK(printOpcodeMap(map) ==
        "opcode_map<sA = [send_literal(0x22), send(0)]>");
  FlowNode flow = parseOpcodeFlow("( sA ( sB ) )");
  CHECK(printOpcodeFlow(flow) == "opcode_flow<(sA (sB))>");
}

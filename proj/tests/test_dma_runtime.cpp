//===- test_dma_runtime.cpp - DMA staging and transaction tests ----------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/accel_sim.h"
#include "accelhost/dma_runtime.h"
#include "accelhost/error.h"

#include "doctest.h"
#include "oracles.h"

#include <numeric>
#include <random>

using namespace accelhost;

namespace {

DmaConfig smallDma() {
  DmaConfig dma;
  dma.id = 0;
  dma.inputAddress = 0x42;
  dma.inputBufferSize = 4096; // bytes
  dma.outputAddress = 0x2000;
  dma.outputBufferSize = 4096;
  return dma;
}

StreamAccelerator matmulDevice(int64_t size) {
  return StreamAccelerator(bindBehavior(builtinAccelerator("v1", size)));
}

/// Random strided view over a fresh buffer: rank 1-3, small sizes, strides
/// either packed (contiguous innermost) or deliberately padded.
MemRefDesc randomDescriptor(std::mt19937 &rng) {
  std::uniform_int_distribution<int> rankDist(1, 3);
  std::uniform_int_distribution<int64_t> sizeDist(1, 6);
  std::uniform_int_distribution<int64_t> padDist(0, 3);
  std::uniform_int_distribution<int64_t> offDist(0, 5);
  int rank = rankDist(rng);
  std::vector<int64_t> sizes(rank), strides(rank);
  for (int d = 0; d < rank; ++d)
    sizes[d] = sizeDist(rng);
  // Build strides innermost-out with optional padding between levels.
  int64_t stride = 1 + (padDist(rng) == 0 ? 1 : 0); // sometimes stride-2 rows
  for (int d = rank - 1; d >= 0; --d) {
    strides[d] = stride;
    stride *= sizes[d] + padDist(rng);
  }
  int64_t offset = offDist(rng);
  int64_t span = offset + 1;
  for (int d = 0; d < rank; ++d)
    span += (sizes[d] - 1) * strides[d];
  Buffer base = allocBuffer(static_cast<size_t>(span));
  oracles::fillRandom(*base, rng);
  MemRefDesc view{base, offset, sizes, strides};
  view.validate();
  return view;
}

} // namespace

TEST_CASE("staging a contiguous tile uses block copies") {
  DmaRegion region = dmaInit(smallDma());
  Buffer buf = allocBuffer(64);
  std::iota(buf->begin(), buf->end(), 100);
  MemRefDesc tile = subview(makeContiguousMemRef(buf, {8, 8}), {0, 0}, {4, 4});
  size_t words = copyToDmaRegion(tile, region, 0);
  CHECK(words == 16);
  CHECK(region.counters.blockCopies == 4); // One per row.
  CHECK(region.counters.elementCopies == 0);
  // Row 2 of the tile is elements 116..119.
  CHECK(region.inStage[8] == 116);
  CHECK(region.inStage[11] == 119);
}

TEST_CASE("forcing the slow path copies element by element") {
  DmaRegion region = dmaInit(smallDma());
  region.forceSlowCopy = true;
  Buffer buf = allocBuffer(64);
  std::iota(buf->begin(), buf->end(), 0);
  MemRefDesc tile = subview(makeContiguousMemRef(buf, {8, 8}), {0, 0}, {4, 4});
  size_t words = copyToDmaRegion(tile, region, 0);
  CHECK(words == 16);
  CHECK(region.counters.blockCopies == 0);
  CHECK(region.counters.elementCopies == 16);
}

TEST_CASE("fast and slow staging produce identical bytes on 500 descriptors") {
  std::mt19937 rng(0xD1CE);
  for (int i = 0; i < 500; ++i) {
    MemRefDesc view = randomDescriptor(rng);
    DmaRegion fast = dmaInit(smallDma());
    DmaRegion slow = dmaInit(smallDma());
    slow.forceSlowCopy = true;
    size_t fastWords = copyToDmaRegion(view, fast, 3);
    size_t slowWords = copyToDmaRegion(view, slow, 3);
    REQUIRE(fastWords == slowWords);
    REQUIRE(fast.inStage == slow.inStage);
    // The fast path must never element-copy a view with contiguous rows of
    // more than one element.
    if (view.innermostContiguous() && view.sizes.back() > 1)
      CHECK(fast.counters.elementCopies == 0);
    CHECK(slow.counters.blockCopies == 0);
  }
}

TEST_CASE("staging respects the region capacity") {
  DmaConfig dma = smallDma();
  dma.inputBufferSize = 15 * 4; // 15 words
  DmaRegion region = dmaInit(dma);
  Buffer buf = allocBuffer(16);
  MemRefDesc tile = makeContiguousMemRef(buf, {4, 4});
  CHECK_THROWS_AS(copyToDmaRegion(tile, region, 0), Error);
  try {
    copyToDmaRegion(tile, region, 0);
  } catch (const Error &e) {
    CHECK(e.kind == Error::Kind::RegionOverflow);
  }
  // 15 words at offset 1 also overflow.
  MemRefDesc row = makeContiguousMemRef(buf, {15});
  CHECK_THROWS_AS(copyToDmaRegion(row, region, 1), Error);
  CHECK(copyToDmaRegion(row, region, 0) == 15);
}

TEST_CASE("sends require every word in range to be staged") {
  DmaRegion region = dmaInit(smallDma());
  StreamAccelerator device = matmulDevice(4);
  attachAccelerator(region, device);
  Buffer buf = allocBuffer(8);
  // Lead with the fused opcode literal so the device stalls mid-read instead
  // of rejecting the stream.
  (*buf)[0] = 0x21;
  copyToDmaRegion(makeContiguousMemRef(buf, {8}), region, 0);
  CHECK_THROWS_AS(dmaStartSend(region, 9, 0), Error);
  try {
    dmaStartSend(region, 4, 8);
  } catch (const Error &e) {
    CHECK(e.kind == Error::Kind::SendBeyondStaged);
  }
  // Staged words are consumed by a send; a second send of the same range
  // must restage.
  dmaStartSend(region, 8, 0);
  dmaWaitSendCompletion(region);
  CHECK_THROWS_AS(dmaStartSend(region, 8, 0), Error);
}

TEST_CASE("zero-length transactions are no-ops") {
  DmaRegion region = dmaInit(smallDma());
  StreamAccelerator device = matmulDevice(4);
  attachAccelerator(region, device);
  dmaStartSend(region, 0, 0);
  dmaWaitSendCompletion(region);
  dmaStartRecv(region, 0, 0);
  dmaWaitRecvCompletion(region);
  CHECK(region.counters.sendTransactions == 0);
  CHECK(region.counters.recvTransactions == 0);
  CHECK(region.counters.wordsSent == 0);
  CHECK(region.counters.wordsReceived == 0);
}

TEST_CASE("receives land device output in the incoming staging buffer") {
  // Drive the 4x4 matmul device through one fused round by hand.
  DmaRegion region = dmaInit(smallDma());
  StreamAccelerator device = matmulDevice(4);
  attachAccelerator(region, device);

  std::vector<int32_t> a(16), b(16);
  std::iota(a.begin(), a.end(), 1);
  std::iota(b.begin(), b.end(), -8);
  Buffer aBuf = allocBuffer(16), bBuf = allocBuffer(16);
  *aBuf = a;
  *bBuf = b;

  // Fused opcode 0x21: literal, A tile, B tile -> compute -> drain C.
  Buffer lit = allocBuffer(1);
  (*lit)[0] = 0x21;
  size_t off = 0;
  off += copyToDmaRegion(MemRefDesc{lit, 0, {}, {}}, region, off);
  off += copyToDmaRegion(makeContiguousMemRef(aBuf, {4, 4}), region, off);
  off += copyToDmaRegion(makeContiguousMemRef(bBuf, {4, 4}), region, off);
  dmaStartSend(region, off, 0);
  dmaWaitSendCompletion(region);
  dmaStartRecv(region, 16, 0);
  dmaWaitRecvCompletion(region);

  std::vector<int32_t> expect(16, 0);
  oracles::matmul(4, 4, 4, a, b, expect);
  std::vector<int32_t> got(region.outStage.begin(), region.outStage.begin() + 16);
  CHECK(got == expect);
  CHECK(region.counters.wordsSent == 33);
  CHECK(region.counters.wordsReceived == 16);
  CHECK(region.counters.sendTransactions == 1);
  CHECK(region.counters.recvTransactions == 1);

  // Copy-back with accumulate adds to existing values.
  Buffer cBuf = allocBuffer(16);
  std::fill(cBuf->begin(), cBuf->end(), 5);
  copyFromDmaRegion(region, 0, makeContiguousMemRef(cBuf, {4, 4}), true);
  for (int i = 0; i < 16; ++i)
    CHECK((*cBuf)[i] == wrapAdd(expect[i], 5));
  // And store mode overwrites.
  copyFromDmaRegion(region, 0, makeContiguousMemRef(cBuf, {4, 4}), false);
  CHECK(*cBuf == expect);
}

TEST_CASE("receives demanding more than the device produced underflow") {
  DmaRegion region = dmaInit(smallDma());
  StreamAccelerator device = matmulDevice(4);
  attachAccelerator(region, device);
  dmaStartRecv(region, 4, 0);
  CHECK_THROWS_AS(dmaWaitRecvCompletion(region), Error);
  try {
    dmaStartRecv(region, 4, 0);
    dmaWaitRecvCompletion(region);
  } catch (const Error &e) {
    CHECK(e.kind == Error::Kind::RecvUnderflow);
  }
}

TEST_CASE("copy-back into strided views hits only window elements") {
  DmaRegion region = dmaInit(smallDma());
  for (int i = 0; i < 16; ++i)
    region.outStage[i] = 1000 + i;
  Buffer buf = allocBuffer(64);
  std::fill(buf->begin(), buf->end(), -1);
  MemRefDesc tile = subview(makeContiguousMemRef(buf, {8, 8}), {2, 2}, {4, 4});
  copyFromDmaRegion(region, 0, tile, false);
  CHECK(tile.load({0, 0}) == 1000);
  CHECK(tile.load({3, 3}) == 1015);
  CHECK((*buf)[0] == -1);
  CHECK((*buf)[2 * 8 + 1] == -1);
  int64_t untouched = 0;
  for (int32_t v : *buf)
    if (v == -1)
      ++untouched;
  CHECK(untouched == 64 - 16);
}

TEST_CASE("raw-pointer staging matches the descriptor path") {
  std::mt19937 rng(77);
  for (int i = 0; i < 50; ++i) {
    MemRefDesc view = randomDescriptor(rng);
    DmaRegion viaDesc = dmaInit(smallDma());
    DmaRegion viaRaw = dmaInit(smallDma());
    copyToDmaRegion(view, viaDesc, 0);
    copyToDmaRegionRaw(view.base->data(), view.offset, view.rank(),
                       view.sizes.data(), view.strides.data(), viaRaw, 0);
    CHECK(viaDesc.inStage == viaRaw.inStage);
    CHECK(viaDesc.counters.blockCopies == viaRaw.counters.blockCopies);
    CHECK(viaDesc.counters.elementCopies == viaRaw.counters.elementCopies);
  }
}

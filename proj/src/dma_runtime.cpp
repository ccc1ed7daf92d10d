//===- dma_runtime.cpp - Simulated DMA engine ------------------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/dma_runtime.h"
#include "accelhost/accel_sim.h"
#include "accelhost/error.h"

#include <cstring>
#include <iomanip>
#include <ostream>

namespace accelhost {

DmaRegion::DmaRegion(const DmaConfig &config) : config(config) {
  inStage.assign(config.inputBufferSize / 4, 0);
  outStage.assign(config.outputBufferSize / 4, 0);
  staged.assign(inStage.size(), false);
}

DmaRegion dmaInit(const DmaConfig &config) {
  if (config.inputBufferSize < 4 || config.outputBufferSize < 4)
    throw Error(Error::Kind::InvalidRegion,
                "DMA staging buffers must hold at least one word");
  return DmaRegion(config);
}

void attachAccelerator(DmaRegion &region, StreamAccelerator &device) {
  region.device = &device;
}

namespace {

void traceWords(std::ostream &os, const char *tag, size_t offset,
                const int32_t *words, size_t n) {
  os << tag << " " << n << " @" << offset << " :";
  for (size_t i = 0; i < n; ++i)
    os << " " << std::hex << std::setw(8) << std::setfill('0')
       << static_cast<uint32_t>(words[i]) << std::dec;
  os << "\n";
}

int64_t viewElements(int rank, const int64_t *sizes) {
  int64_t n = 1;
  for (int d = 0; d < rank; ++d)
    n *= sizes[d];
  return n;
}

/// Walks a strided view row by row (innermost dim = row) and invokes
/// `visitRow(rowAddress, rowLength)` for each.
template <typename Fn>
void forEachRow(int64_t offset, int rank, const int64_t *sizes,
                const int64_t *strides, Fn visitRow) {
  if (rank == 0) {
    visitRow(offset, 1);
    return;
  }
  int outerRank = rank - 1;
  std::vector<int64_t> idx(outerRank, 0);
  while (true) {
    int64_t addr = offset;
    for (int d = 0; d < outerRank; ++d)
      addr += idx[d] * strides[d];
    visitRow(addr, sizes[rank - 1]);
    int d = outerRank - 1;
    while (d >= 0) {
      if (++idx[d] < sizes[d])
        break;
      idx[d] = 0;
      --d;
    }
    if (d < 0)
      break;
  }
}

/// Visits every element address of a strided view in row-major order.
template <typename Fn>
void forEachElement(int64_t offset, int rank, const int64_t *sizes,
                    const int64_t *strides, Fn visit) {
  std::vector<int64_t> idx(static_cast<size_t>(rank), 0);
  while (true) {
    int64_t addr = offset;
    for (int d = 0; d < rank; ++d)
      addr += idx[d] * strides[d];
    visit(addr);
    int d = rank - 1;
    while (d >= 0) {
      if (++idx[d] < sizes[d])
        break;
      idx[d] = 0;
      --d;
    }
    if (d < 0)
      break;
  }
}

void requireDevice(const DmaRegion &region) {
  if (!region.device)
    throw Error(Error::Kind::InvalidRegion,
                "DMA region has no attached accelerator");
}

} // namespace

size_t copyToDmaRegionRaw(const int32_t *data, int64_t offset, int rank,
                          const int64_t *sizes, const int64_t *strides,
                          DmaRegion &region, size_t wordOffset) {
  size_t words = static_cast<size_t>(viewElements(rank, sizes));
  if (wordOffset + words > region.inStage.size())
    throw Error(Error::Kind::RegionOverflow,
                "staging " + std::to_string(words) + " words at offset " +
                    std::to_string(wordOffset) + " exceeds the input region (" +
                    std::to_string(region.inStage.size()) + " words)");

  size_t cursor = wordOffset;
  bool rowContiguous = rank == 0 || strides[rank - 1] == 1;
  if (rowContiguous && !region.forceSlowCopy) {
    forEachRow(offset, rank, sizes, strides, [&](int64_t addr, int64_t rowLen) {
      std::memcpy(region.inStage.data() + cursor, data + addr,
                  static_cast<size_t>(rowLen) * sizeof(int32_t));
      cursor += static_cast<size_t>(rowLen);
      region.counters.blockCopies += 1;
    });
  } else {
    forEachElement(offset, rank, sizes, strides, [&](int64_t addr) {
      region.inStage[cursor++] = data[addr];
      region.counters.elementCopies += 1;
    });
  }

  std::fill(region.staged.begin() + static_cast<ptrdiff_t>(wordOffset),
            region.staged.begin() + static_cast<ptrdiff_t>(wordOffset + words),
            true);
  return words;
}

size_t copyToDmaRegion(const MemRefDesc &src, DmaRegion &region,
                       size_t wordOffset) {
  src.validate();
  return copyToDmaRegionRaw(src.base->data(), src.offset, src.rank(),
                            src.sizes.data(), src.strides.data(), region,
                            wordOffset);
}

void dmaStartSend(DmaRegion &region, size_t lengthWords, size_t offset) {
  if (lengthWords == 0)
    return;
  requireDevice(region);
  if (offset + lengthWords > region.inStage.size())
    throw Error(Error::Kind::RegionOverflow,
                "send of " + std::to_string(lengthWords) + " words at offset " +
                    std::to_string(offset) + " exceeds the input region");
  for (size_t i = offset; i < offset + lengthWords; ++i)
    if (!region.staged[i])
      throw Error(Error::Kind::SendBeyondStaged,
                  "send covers unstaged word at offset " + std::to_string(i));

  if (region.trace)
    traceWords(*region.trace, "send", offset, region.inStage.data() + offset,
               lengthWords);
  region.device->inFifo.insert(
      region.device->inFifo.end(),
      region.inStage.begin() + static_cast<ptrdiff_t>(offset),
      region.inStage.begin() + static_cast<ptrdiff_t>(offset + lengthWords));
  std::fill(region.staged.begin() + static_cast<ptrdiff_t>(offset),
            region.staged.begin() + static_cast<ptrdiff_t>(offset + lengthWords),
            false);
  region.counters.wordsSent += static_cast<int64_t>(lengthWords);
  region.counters.sendTransactions += 1;
  region.sendPending = true;
}

void dmaWaitSendCompletion(DmaRegion &region) {
  if (!region.sendPending)
    return;
  requireDevice(region);
  region.device->runToQuiescence();
  region.sendPending = false;
}

void dmaStartRecv(DmaRegion &region, size_t lengthWords, size_t offset) {
  if (lengthWords == 0)
    return;
  if (offset + lengthWords > region.outStage.size())
    throw Error(Error::Kind::RegionOverflow,
                "recv of " + std::to_string(lengthWords) + " words at offset " +
                    std::to_string(offset) + " exceeds the output region");
  region.recvPending = true;
  region.recvLength = lengthWords;
  region.recvOffset = offset;
}

void dmaWaitRecvCompletion(DmaRegion &region) {
  if (!region.recvPending)
    return;
  requireDevice(region);
  region.device->runToQuiescence();
  if (region.device->outFifo.size() < region.recvLength)
    throw Error(Error::Kind::RecvUnderflow,
                "device produced " +
                    std::to_string(region.device->outFifo.size()) +
                    " words but the driver expects " +
                    std::to_string(region.recvLength));
  std::copy_n(region.device->outFifo.begin(), region.recvLength,
              region.outStage.begin() +
                  static_cast<ptrdiff_t>(region.recvOffset));
  region.device->outFifo.erase(region.device->outFifo.begin(),
                               region.device->outFifo.begin() +
                                   static_cast<ptrdiff_t>(region.recvLength));
  if (region.trace)
    traceWords(*region.trace, "recv", region.recvOffset,
               region.outStage.data() + region.recvOffset, region.recvLength);
  region.counters.wordsReceived += static_cast<int64_t>(region.recvLength);
  region.counters.recvTransactions += 1;
  region.recvPending = false;
}

void copyFromDmaRegionRaw(DmaRegion &region, size_t offset, int32_t *data,
                          int64_t dstOffset, int rank, const int64_t *sizes,
                          const int64_t *strides, bool accumulate) {
  size_t words = static_cast<size_t>(viewElements(rank, sizes));
  if (offset + words > region.outStage.size())
    throw Error(Error::Kind::RegionOverflow,
                "reading " + std::to_string(words) + " words at offset " +
                    std::to_string(offset) + " exceeds the output region");

  size_t cursor = offset;
  bool rowContiguous = rank == 0 || strides[rank - 1] == 1;
  if (!accumulate && rowContiguous && !region.forceSlowCopy) {
    forEachRow(dstOffset, rank, sizes, strides,
               [&](int64_t addr, int64_t rowLen) {
                 std::memcpy(data + addr, region.outStage.data() + cursor,
                             static_cast<size_t>(rowLen) * sizeof(int32_t));
                 cursor += static_cast<size_t>(rowLen);
                 region.counters.blockCopies += 1;
               });
  } else {
    forEachElement(dstOffset, rank, sizes, strides, [&](int64_t addr) {
      data[addr] = accumulate ? wrapAdd(data[addr], region.outStage[cursor])
                              : region.outStage[cursor];
      ++cursor;
      region.counters.elementCopies += 1;
    });
  }
}

void copyFromDmaRegion(DmaRegion &region, size_t offset, const MemRefDesc &dst,
                       bool accumulate) {
  dst.validate();
  copyFromDmaRegionRaw(region, offset, dst.base->data(), dst.offset,
                       dst.rank(), dst.sizes.data(), dst.strides.data(),
                       accumulate);
}

} // namespace accelhost

//===- dma_runtime.h - Simulated DMA engine --------------------*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Functional model of the memory-mapped DMA engine drivers talk to: a
// staging region for outgoing words, a staging region for incoming words,
// and start/wait transaction pairs that move whole word ranges to and from
// an attached stream accelerator's FIFOs. The same semantics back both the
// in-process interpreter and the C API that emitted drivers link against.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "accelhost/accel_config.h"
#include "accelhost/kernel_model.h"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace accelhost {

class StreamAccelerator;

struct SimCounters {
  int64_t wordsSent = 0;
  int64_t wordsReceived = 0;
  int64_t sendTransactions = 0;
  int64_t recvTransactions = 0;
  int64_t elementCopies = 0;
  int64_t blockCopies = 0;
};

class DmaRegion {
public:
  explicit DmaRegion(const DmaConfig &config);

  DmaConfig config;
  std::vector<int32_t> inStage;  // Outgoing staging buffer (words).
  std::vector<int32_t> outStage; // Incoming staging buffer (words).
  SimCounters counters;

  /// Debug knob: route every copy through the element-by-element path.
  bool forceSlowCopy = false;
  /// Optional transaction trace sink.
  std::ostream *trace = nullptr;

  StreamAccelerator *device = nullptr;

  // Internal transfer bookkeeping.
  std::vector<bool> staged;
  bool sendPending = false;
  bool recvPending = false;
  size_t recvLength = 0;
  size_t recvOffset = 0;
};

/// Creates (or re-creates) a region from a DMA config: staging buffers are
/// zeroed and counters reset.
DmaRegion dmaInit(const DmaConfig &config);

void attachAccelerator(DmaRegion &region, StreamAccelerator &device);

/// Stages a strided view into the outgoing buffer at `wordOffset`. Views
/// with a contiguous innermost dim move row-by-row (block_copies counts
/// rows); other layouts fall back to per-element copies (element_copies).
/// Returns the number of words staged. Throws Error{RegionOverflow}.
size_t copyToDmaRegion(const MemRefDesc &src, DmaRegion &region,
                       size_t wordOffset);

/// Raw-pointer flavors backing the C driver API. Same staging semantics and
/// counters as the MemRefDesc versions, but the view is described by plain
/// arrays and no buffer bounds are checked.
size_t copyToDmaRegionRaw(const int32_t *data, int64_t offset, int rank,
                          const int64_t *sizes, const int64_t *strides,
                          DmaRegion &region, size_t wordOffset);
void copyFromDmaRegionRaw(DmaRegion &region, size_t offset, int32_t *data,
                          int64_t dstOffset, int rank, const int64_t *sizes,
                          const int64_t *strides, bool accumulate);

/// Starts a send transaction: words [offset, offset+length) of the staging
/// buffer enter the device input FIFO. Every word in the range must have
/// been staged since the last send (Error{SendBeyondStaged}). Zero-length
/// sends are no-ops.
void dmaStartSend(DmaRegion &region, size_t lengthWords, size_t offset);

/// Blocks until the device has consumed the outstanding send (runs the
/// simulated accelerator to quiescence). No-op without a pending send.
void dmaWaitSendCompletion(DmaRegion &region);

/// Starts a receive transaction for `lengthWords` into the incoming staging
/// buffer at `offset`.
void dmaStartRecv(DmaRegion &region, size_t lengthWords, size_t offset);

/// Blocks until the device produced the requested words and lands them in
/// the staging buffer. Throws Error{RecvUnderflow} when the device yields
/// fewer words than requested.
void dmaWaitRecvCompletion(DmaRegion &region);

/// Copies words from the incoming staging buffer into a strided view,
/// either overwriting or accumulating (wrap add).
void copyFromDmaRegion(DmaRegion &region, size_t offset, const MemRefDesc &dst,
                       bool accumulate);

} // namespace accelhost

//===- crt_shim.cpp - C driver runtime over the simulated engine -----------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Implements the C API in driver_rt.h on top of the C++ DMA runtime and the
// functional accelerator model. Emitted drivers are plain C and cannot
// handle exceptions, so library errors print a diagnostic and terminate the
// process with the error's exit code.
//
//===----------------------------------------------------------------------===//

#include "driver_rt.h"

#include "accelhost/accel_config.h"
#include "accelhost/accel_sim.h"
#include "accelhost/dma_runtime.h"
#include "accelhost/error.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>

namespace {

struct RtState {
  std::optional<accelhost::StreamAccelerator> device;
  std::optional<accelhost::DmaRegion> region;
};

RtState &state() {
  static RtState instance;
  return instance;
}

[[noreturn]] void die(const accelhost::Error &error) {
  std::fprintf(stderr, "error[%s]: %s\n",
               accelhost::errorKindName(error.kind), error.what());
  std::exit(accelhost::errorExitCode(error.kind));
}

[[noreturn]] void die(const std::exception &error) {
  std::fprintf(stderr, "error: %s\n", error.what());
  std::exit(70); // EX_SOFTWARE
}

template <typename Fn> auto guarded(Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const accelhost::Error &error) {
    die(error);
  } catch (const std::exception &error) {
    die(error);
  }
}

accelhost::DmaRegion &regionOrDie() {
  if (!state().region)
    die(accelhost::Error(accelhost::Error::Kind::InvalidRegion,
                         "dma_init has not been called"));
  return *state().region;
}

void checkRank(const rt_memref *view) {
  if (!view || view->rank < 0 || view->rank > RT_MAX_RANK)
    die(accelhost::Error(accelhost::Error::Kind::BadValue,
                         "rt_memref rank must be between 0 and " +
                             std::to_string(RT_MAX_RANK)));
}

} // namespace

extern "C" {

int rt_configure(const char *config_json, const char *accelerator_name) {
  try {
    accelhost::SystemConfig config = accelhost::loadConfig(config_json);
    const accelhost::AcceleratorConfig *chosen = nullptr;
    for (const auto &acc : config.accelerators)
      if (acc.name == accelerator_name)
        chosen = &acc;
    if (!chosen)
      throw accelhost::Error(accelhost::Error::Kind::UnknownField,
                             "no accelerator named '" +
                                 std::string(accelerator_name) +
                                 "' in the system description");
    state().device.emplace(accelhost::bindBehavior(*chosen));
    if (state().region)
      accelhost::attachAccelerator(*state().region, *state().device);
    return 0;
  } catch (const accelhost::Error &error) {
    std::fprintf(stderr, "error[%s]: %s\n",
                 accelhost::errorKindName(error.kind), error.what());
    return accelhost::errorExitCode(error.kind);
  } catch (const std::exception &error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 70;
  }
}

void dma_init(uint32_t dma_id, uint64_t input_address,
              uint64_t input_buffer_size, uint64_t output_address,
              uint64_t output_buffer_size) {
  guarded([&]() {
    accelhost::DmaConfig config;
    config.id = dma_id;
    config.inputAddress = input_address;
    config.inputBufferSize = input_buffer_size;
    config.outputAddress = output_address;
    config.outputBufferSize = output_buffer_size;
    state().region.emplace(accelhost::dmaInit(config));
    if (state().device)
      accelhost::attachAccelerator(*state().region, *state().device);
  });
}

size_t copy_to_dma_region(const rt_memref *src, size_t word_offset) {
  checkRank(src);
  return guarded([&]() {
    return accelhost::copyToDmaRegionRaw(src->data, src->offset, src->rank,
                                         src->sizes, src->strides,
                                         regionOrDie(), word_offset);
  });
}

void dma_start_send(size_t length_words, size_t offset) {
  guarded([&]() { accelhost::dmaStartSend(regionOrDie(), length_words, offset); });
}

void dma_wait_send_completion(void) {
  guarded([&]() { accelhost::dmaWaitSendCompletion(regionOrDie()); });
}

void dma_start_recv(size_t length_words, size_t offset) {
  guarded([&]() { accelhost::dmaStartRecv(regionOrDie(), length_words, offset); });
}

void dma_wait_recv_completion(void) {
  guarded([&]() { accelhost::dmaWaitRecvCompletion(regionOrDie()); });
}

void copy_from_dma_region(size_t offset, const rt_memref *dst,
                          int accumulate) {
  checkRank(dst);
  guarded([&]() {
    accelhost::copyFromDmaRegionRaw(regionOrDie(), offset, dst->data,
                                    dst->offset, dst->rank, dst->sizes,
                                    dst->strides, accumulate != 0);
  });
}

int64_t rt_counter(const char *name) {
  return guarded([&]() -> int64_t {
    RtState &rt = state();
    const accelhost::SimCounters counters =
        rt.region ? rt.region->counters : accelhost::SimCounters{};
    if (std::strcmp(name, "words_sent") == 0)
      return counters.wordsSent;
    if (std::strcmp(name, "words_received") == 0)
      return counters.wordsReceived;
    if (std::strcmp(name, "send_transactions") == 0)
      return counters.sendTransactions;
    if (std::strcmp(name, "recv_transactions") == 0)
      return counters.recvTransactions;
    if (std::strcmp(name, "element_copies") == 0)
      return counters.elementCopies;
    if (std::strcmp(name, "block_copies") == 0)
      return counters.blockCopies;
    if (std::strcmp(name, "device_words_consumed") == 0)
      return rt.device ? rt.device->wordsConsumed : 0;
    if (std::strcmp(name, "device_words_produced") == 0)
      return rt.device ? rt.device->wordsProduced : 0;
    if (std::strcmp(name, "leftover_output_words") == 0)
      return rt.device ? static_cast<int64_t>(rt.device->outFifo.size()) : 0;
    throw accelhost::Error(accelhost::Error::Kind::BadValue,
                           "unknown counter '" + std::string(name) + "'");
  });
}

} // extern "C"

/*===- driver_rt.h - C driver runtime interface ---------------------------===
 *
 * Part of the accelhost project, under the Apache License v2.0.
 * SPDX-License-Identifier: Apache-2.0
 *
 *===----------------------------------------------------------------------===
 *
 * The C interface emitted accelerator drivers are written against. The
 * library behind it is the same simulated DMA engine and functional
 * accelerator model the in-process interpreter uses, so a compiled driver
 * reproduces the interpreter's results and counters exactly.
 *
 *===----------------------------------------------------------------------===*/

#ifndef ACCELHOST_DRIVER_RT_H
#define ACCELHOST_DRIVER_RT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define RT_MAX_RANK 4

/* Strided view over a caller-owned int32 buffer. rank 0 describes the
 * single scalar at data[offset]. */
typedef struct {
  int32_t *data;
  int64_t offset;
  int32_t rank;
  int64_t sizes[RT_MAX_RANK];
  int64_t strides[RT_MAX_RANK];
} rt_memref;

/* Initializes (or re-initializes) the DMA engine: staging buffers are
 * zeroed and transfer counters reset. */
void dma_init(uint32_t dma_id, uint64_t input_address,
              uint64_t input_buffer_size, uint64_t output_address,
              uint64_t output_buffer_size);

/* Stages a view into the outgoing buffer at word_offset; returns the number
 * of words staged. */
size_t copy_to_dma_region(const rt_memref *src, size_t word_offset);

/* Pushes staged words [offset, offset+length_words) to the accelerator. */
void dma_start_send(size_t length_words, size_t offset);
void dma_wait_send_completion(void);

/* Requests length_words of accelerator output into the incoming staging
 * buffer at offset. */
void dma_start_recv(size_t length_words, size_t offset);
void dma_wait_recv_completion(void);

/* Copies words from the incoming staging buffer into a view, overwriting or
 * accumulating (wrap-around add) per `accumulate`. */
void copy_from_dma_region(size_t offset, const rt_memref *dst,
                          int accumulate);

/* Harness hooks. rt_configure selects the accelerator model from a JSON
 * system description (returns 0 on success, nonzero with a message on
 * stderr otherwise) and must run before dma_init. rt_counter reads a
 * statistic by name: words_sent, words_received, send_transactions,
 * recv_transactions, element_copies, block_copies, device_words_consumed,
 * device_words_produced, leftover_output_words. */
int rt_configure(const char *config_json, const char *accelerator_name);
int64_t rt_counter(const char *name);

#ifdef __cplusplus
}
#endif

#endif /* ACCELHOST_DRIVER_RT_H */

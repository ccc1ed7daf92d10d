//===- kernel_model.h - Linear-algebra kernel abstraction -----*- C++ -*-===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A KernelSpec captures a perfectly-nested multiply-accumulate kernel the
// way structured-op compilers do: iteration dims with extents, per-argument
// strided views, and per-argument affine indexing maps. Execution semantics:
//
//   for every point i in the iteration space:
//     out[sigma_out(i)] += prod_j in_j[sigma_j(i)]
//
// All data is 32-bit integers; accumulation wraps mod 2^32 so every layer of
// the system (reference, simulator, emitted drivers) is bit-exact.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace accelhost {

using Buffer = std::shared_ptr<std::vector<int32_t>>;

Buffer allocBuffer(size_t words);

/// Wrap-around int32 arithmetic (two's complement, defined behavior).
inline int32_t wrapAdd(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) +
                              static_cast<uint32_t>(b));
}
inline int32_t wrapMul(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) *
                              static_cast<uint32_t>(b));
}

/// Strided view over a Buffer: base storage, element offset, and one
/// size/stride pair per dimension (strides in elements). Rank 0 describes a
/// single scalar at `offset`.
struct MemRefDesc {
  Buffer base;
  int64_t offset = 0;
  std::vector<int64_t> sizes;
  std::vector<int64_t> strides;

  int rank() const { return static_cast<int>(sizes.size()); }
  int64_t numElements() const;
  /// Address of the element at `indices` (validated, throws
  /// Error{IndexOutOfBounds}).
  int64_t address(const std::vector<int64_t> &indices) const;
  int32_t load(const std::vector<int64_t> &indices) const;
  void store(const std::vector<int64_t> &indices, int32_t value) const;

  /// True when the innermost dimension is contiguous (unit stride), i.e.
  /// rows can be moved with block copies.
  bool innermostContiguous() const;

  /// Checks that every reachable address lies inside `base`. Throws
  /// Error{OutOfBounds}.
  void validate() const;
};

/// Dense row-major view covering `shape` over an existing buffer.
MemRefDesc makeContiguousMemRef(Buffer buffer, std::vector<int64_t> shape);

/// Restricted view: same base, offset advanced by offsets[d]*strides[d],
/// sizes replaced. Strides are inherited. Throws Error{OutOfBounds} when the
/// window does not fit in the parent view.
MemRefDesc subview(const MemRefDesc &parent, const std::vector<int64_t> &offsets,
                   const std::vector<int64_t> &sizes);

/// Affine expression over named iteration dims: constant + sum of
/// coeff * dim terms. Kernel indexing uses these per result dimension
/// (e.g. conv input height index = 1*h*stride + 1*fh).
struct AffineExpr {
  int64_t constant = 0;
  std::vector<std::pair<std::string, int64_t>> terms;

  static AffineExpr dim(const std::string &name);
  bool isSingleDim() const;
  /// Dim names referenced by this expression.
  std::vector<std::string> referencedDims() const;
};

/// One result expression per argument dimension.
struct AffineMap {
  std::vector<AffineExpr> results;
};

enum class ArgRole { Input, Output };
enum class IterKind { Parallel, Reduction };

struct KernelArg {
  std::string name;
  ArgRole role;
  MemRefDesc view;
  AffineMap map;
};

enum class KernelKind { Matmul, Conv2dNchwFchw };

/// Iteration dim: name, extent, parallel-vs-reduction flavor.
struct IterDim {
  std::string name;
  int64_t extent;
  IterKind kind;
};

struct KernelSpec {
  KernelKind kind;
  std::string name;
  std::vector<IterDim> dims;
  std::vector<KernelArg> args;

  int dimIndex(const std::string &name) const; // -1 when absent.
  int64_t dimExtent(const std::string &name) const;
  const KernelArg *findArg(const std::string &name) const;
  const KernelArg &outputArg() const;
};

/// C[m,n] += A[m,k] * B[k,n]. Views must match (M,K), (K,N), (M,N); throws
/// Error{ShapeMismatch} otherwise.
KernelSpec makeMatmul(int64_t M, int64_t N, int64_t K, MemRefDesc A,
                      MemRefDesc B, MemRefDesc C);

/// Convenience: allocates fresh row-major buffers for A, B, C.
KernelSpec makeMatmul(int64_t M, int64_t N, int64_t K);

/// O[b,oc,h,w] += I[b,ic,h*stride+fh,w*stride+fw] * F[oc,ic,fh,fw].
/// Iteration dims (in order): b, h, w, ic, oc, fh, fw where h/w range over
/// the output extent (H - fH) / stride + 1 (floor division; trailing input
/// rows/columns without a full window are ignored). Throws
/// Error{ShapeMismatch} on bad views or a filter larger than the input.
KernelSpec makeConv2d(int64_t B, int64_t H, int64_t W, int64_t iC, int64_t oC,
                      int64_t fH, int64_t fW, int64_t stride, MemRefDesc I,
                      MemRefDesc F, MemRefDesc O);

KernelSpec makeConv2d(int64_t B, int64_t H, int64_t W, int64_t iC, int64_t oC,
                      int64_t fH, int64_t fW, int64_t stride);

/// Golden semantics: walks the full iteration space accumulating into the
/// output view. Callers zero-fill the output first when they want a pure
/// product rather than an update.
///
/// referenceExecuteGeneric is the kind-agnostic odometer walk over the
/// indexing maps; referenceExecute dispatches to direct loop nests for the
/// known kernel kinds (same arithmetic, much faster) and falls back to the
/// generic walk otherwise.
void referenceExecute(const KernelSpec &spec);
void referenceExecuteGeneric(const KernelSpec &spec);

} // namespace accelhost

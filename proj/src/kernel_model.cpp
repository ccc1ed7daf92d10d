//===- kernel_model.cpp - Linear-algebra kernel abstraction --------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/kernel_model.h"
#include "accelhost/error.h"

#include <algorithm>
#include <numeric>

namespace accelhost {

Buffer allocBuffer(size_t words) {
  return std::make_shared<std::vector<int32_t>>(words, 0);
}

//===----------------------------------------------------------------------===//
// MemRefDesc
//===----------------------------------------------------------------------===//

int64_t MemRefDesc::numElements() const {
  int64_t n = 1;
  for (int64_t s : sizes)
    n *= s;
  return n;
}

int64_t MemRefDesc::address(const std::vector<int64_t> &indices) const {
  if (static_cast<int>(indices.size()) != rank())
    throw Error(Error::Kind::IndexOutOfBounds,
                "index rank " + std::to_string(indices.size()) +
                    " does not match memref rank " + std::to_string(rank()));
  int64_t addr = offset;
  for (int d = 0; d < rank(); ++d) {
    if (indices[d] < 0 || indices[d] >= sizes[d])
      throw Error(Error::Kind::IndexOutOfBounds,
                  "index " + std::to_string(indices[d]) +
                      " out of bounds for dimension " + std::to_string(d) +
                      " of size " + std::to_string(sizes[d]));
    addr += indices[d] * strides[d];
  }
  return addr;
}

int32_t MemRefDesc::load(const std::vector<int64_t> &indices) const {
  return (*base)[address(indices)];
}

void MemRefDesc::store(const std::vector<int64_t> &indices,
                       int32_t value) const {
  (*base)[address(indices)] = value;
}

bool MemRefDesc::innermostContiguous() const {
  if (rank() == 0)
    return true;
  return strides.back() == 1;
}

void MemRefDesc::validate() const {
  if (!base)
    throw Error(Error::Kind::OutOfBounds, "memref has no backing buffer");
  if (sizes.size() != strides.size())
    throw Error(Error::Kind::ShapeMismatch,
                "memref sizes/strides rank mismatch");
  if (offset < 0)
    throw Error(Error::Kind::OutOfBounds, "memref offset is negative");
  int64_t maxAddr = offset;
  for (int d = 0; d < rank(); ++d) {
    if (sizes[d] <= 0)
      throw Error(Error::Kind::ShapeMismatch,
                  "memref dimension " + std::to_string(d) +
                      " has non-positive size");
    maxAddr += (sizes[d] - 1) * strides[d];
  }
  if (maxAddr >= static_cast<int64_t>(base->size()) || maxAddr < 0)
    throw Error(Error::Kind::OutOfBounds,
                "memref reaches element " + std::to_string(maxAddr) +
                    " beyond buffer of " + std::to_string(base->size()) +
                    " words");
}

MemRefDesc makeContiguousMemRef(Buffer buffer, std::vector<int64_t> shape) {
  MemRefDesc desc;
  desc.base = std::move(buffer);
  desc.sizes = std::move(shape);
  desc.strides.resize(desc.sizes.size());
  int64_t stride = 1;
  for (int d = desc.rank() - 1; d >= 0; --d) {
    desc.strides[d] = stride;
    stride *= desc.sizes[d];
  }
  desc.validate();
  return desc;
}

MemRefDesc subview(const MemRefDesc &parent, const std::vector<int64_t> &offsets,
                   const std::vector<int64_t> &sizes) {
  if (static_cast<int>(offsets.size()) != parent.rank() ||
      static_cast<int>(sizes.size()) != parent.rank())
    throw Error(Error::Kind::ShapeMismatch,
                "subview rank does not match parent rank");
  MemRefDesc view;
  view.base = parent.base;
  view.offset = parent.offset;
  view.strides = parent.strides;
  view.sizes = sizes;
  for (int d = 0; d < parent.rank(); ++d) {
    if (offsets[d] < 0 || sizes[d] <= 0 ||
        offsets[d] + sizes[d] > parent.sizes[d])
      throw Error(Error::Kind::OutOfBounds,
                  "subview window [" + std::to_string(offsets[d]) + ", " +
                      std::to_string(offsets[d] + sizes[d]) +
                      ") exceeds dimension " + std::to_string(d) +
                      " of size " + std::to_string(parent.sizes[d]));
    view.offset += offsets[d] * parent.strides[d];
  }
  view.validate();
  return view;
}

//===----------------------------------------------------------------------===//
// Affine expressions
//===----------------------------------------------------------------------===//

AffineExpr AffineExpr::dim(const std::string &name) {
  AffineExpr e;
  e.terms.emplace_back(name, 1);
  return e;
}

bool AffineExpr::isSingleDim() const {
  return constant == 0 && terms.size() == 1 && terms[0].second == 1;
}

std::vector<std::string> AffineExpr::referencedDims() const {
  std::vector<std::string> names;
  for (const auto &term : terms)
    if (term.second != 0)
      names.push_back(term.first);
  return names;
}

//===----------------------------------------------------------------------===//
// KernelSpec
//===----------------------------------------------------------------------===//

int KernelSpec::dimIndex(const std::string &name) const {
  for (size_t i = 0; i < dims.size(); ++i)
    if (dims[i].name == name)
      return static_cast<int>(i);
  return -1;
}

int64_t KernelSpec::dimExtent(const std::string &name) const {
  int idx = dimIndex(name);
  if (idx < 0)
    throw Error(Error::Kind::UnknownDim, "unknown iteration dim '" + name + "'");
  return dims[idx].extent;
}

const KernelArg *KernelSpec::findArg(const std::string &name) const {
  for (const auto &arg : args)
    if (arg.name == name)
      return &arg;
  return nullptr;
}

const KernelArg &KernelSpec::outputArg() const {
  for (const auto &arg : args)
    if (arg.role == ArgRole::Output)
      return arg;
  throw Error(Error::Kind::ShapeMismatch, "kernel has no output argument");
}

static void checkViewShape(const MemRefDesc &view,
                           const std::vector<int64_t> &expected,
                           const std::string &name) {
  view.validate();
  if (view.sizes != expected) {
    std::string want, got;
    for (int64_t s : expected)
      want += (want.empty() ? "" : "x") + std::to_string(s);
    for (int64_t s : view.sizes)
      got += (got.empty() ? "" : "x") + std::to_string(s);
    throw Error(Error::Kind::ShapeMismatch, "argument " + name +
                                                " expects shape " + want +
                                                " but view has " + got);
  }
}

KernelSpec makeMatmul(int64_t M, int64_t N, int64_t K, MemRefDesc A,
                      MemRefDesc B, MemRefDesc C) {
  if (M <= 0 || N <= 0 || K <= 0)
    throw Error(Error::Kind::ShapeMismatch,
                "matmul dims must be positive");
  checkViewShape(A, {M, K}, "A");
  checkViewShape(B, {K, N}, "B");
  checkViewShape(C, {M, N}, "C");

  KernelSpec spec;
  spec.kind = KernelKind::Matmul;
  spec.name = "matmul";
  spec.dims = {{"m", M, IterKind::Parallel},
               {"n", N, IterKind::Parallel},
               {"k", K, IterKind::Reduction}};

  auto mapOf = [](std::initializer_list<const char *> names) {
    AffineMap map;
    for (const char *n : names)
      map.results.push_back(AffineExpr::dim(n));
    return map;
  };
  spec.args.push_back({"A", ArgRole::Input, std::move(A), mapOf({"m", "k"})});
  spec.args.push_back({"B", ArgRole::Input, std::move(B), mapOf({"k", "n"})});
  spec.args.push_back({"C", ArgRole::Output, std::move(C), mapOf({"m", "n"})});
  return spec;
}

KernelSpec makeMatmul(int64_t M, int64_t N, int64_t K) {
  return makeMatmul(M, N, K,
                    makeContiguousMemRef(allocBuffer(M * K), {M, K}),
                    makeContiguousMemRef(allocBuffer(K * N), {K, N}),
                    makeContiguousMemRef(allocBuffer(M * N), {M, N}));
}

KernelSpec makeConv2d(int64_t B, int64_t H, int64_t W, int64_t iC, int64_t oC,
                      int64_t fH, int64_t fW, int64_t stride, MemRefDesc I,
                      MemRefDesc F, MemRefDesc O) {
  if (B <= 0 || H <= 0 || W <= 0 || iC <= 0 || oC <= 0 || fH <= 0 || fW <= 0 ||
      stride <= 0)
    throw Error(Error::Kind::ShapeMismatch, "conv dims must be positive");
  if (fH > H || fW > W)
    throw Error(Error::Kind::ShapeMismatch,
                "filter does not fit inside the input");
  // Floor division: trailing rows/columns that do not fit a full filter
  // window are ignored, as in common framework semantics.
  int64_t oH = (H - fH) / stride + 1;
  int64_t oW = (W - fW) / stride + 1;

  checkViewShape(I, {B, iC, H, W}, "I");
  checkViewShape(F, {oC, iC, fH, fW}, "F");
  checkViewShape(O, {B, oC, oH, oW}, "O");

  KernelSpec spec;
  spec.kind = KernelKind::Conv2dNchwFchw;
  spec.name = "conv2d_nchw_fchw";
  spec.dims = {{"b", B, IterKind::Parallel},   {"h", oH, IterKind::Parallel},
               {"w", oW, IterKind::Parallel},  {"ic", iC, IterKind::Reduction},
               {"oc", oC, IterKind::Parallel}, {"fh", fH, IterKind::Reduction},
               {"fw", fW, IterKind::Reduction}};

  AffineExpr hIn;
  hIn.terms = {{"h", stride}, {"fh", 1}};
  AffineExpr wIn;
  wIn.terms = {{"w", stride}, {"fw", 1}};

  AffineMap iMap;
  iMap.results = {AffineExpr::dim("b"), AffineExpr::dim("ic"), hIn, wIn};
  AffineMap fMap;
  fMap.results = {AffineExpr::dim("oc"), AffineExpr::dim("ic"),
                  AffineExpr::dim("fh"), AffineExpr::dim("fw")};
  AffineMap oMap;
  oMap.results = {AffineExpr::dim("b"), AffineExpr::dim("oc"),
                  AffineExpr::dim("h"), AffineExpr::dim("w")};

  spec.args.push_back({"I", ArgRole::Input, std::move(I), std::move(iMap)});
  spec.args.push_back({"F", ArgRole::Input, std::move(F), std::move(fMap)});
  spec.args.push_back({"O", ArgRole::Output, std::move(O), std::move(oMap)});
  return spec;
}

KernelSpec makeConv2d(int64_t B, int64_t H, int64_t W, int64_t iC, int64_t oC,
                      int64_t fH, int64_t fW, int64_t stride) {
  if (B <= 0 || H <= 0 || W <= 0 || iC <= 0 || oC <= 0 || fH <= 0 ||
      fW <= 0 || stride <= 0 || fH > H || fW > W)
    // Delegate so the geometry checks raise the canonical errors.
    return makeConv2d(B, H, W, iC, oC, fH, fW, stride,
                      MemRefDesc{allocBuffer(1), 0, {}, {}},
                      MemRefDesc{allocBuffer(1), 0, {}, {}},
                      MemRefDesc{allocBuffer(1), 0, {}, {}});
  int64_t oH = (H - fH) / stride + 1;
  int64_t oW = (W - fW) / stride + 1;
  return makeConv2d(
      B, H, W, iC, oC, fH, fW, stride,
      makeContiguousMemRef(allocBuffer(B * iC * H * W), {B, iC, H, W}),
      makeContiguousMemRef(allocBuffer(oC * iC * fH * fW), {oC, iC, fH, fW}),
      makeContiguousMemRef(allocBuffer(B * oC * oH * oW), {B, oC, oH, oW}));
}

//===----------------------------------------------------------------------===//
// Reference execution
//===----------------------------------------------------------------------===//

namespace {

int64_t evalExpr(const AffineExpr &expr, const KernelSpec &spec,
                 const std::vector<int64_t> &point) {
  int64_t value = expr.constant;
  for (const auto &term : expr.terms) {
    int idx = spec.dimIndex(term.first);
    if (idx < 0)
      throw Error(Error::Kind::UnknownDim,
                  "indexing references unknown dim '" + term.first + "'");
    value += term.second * point[idx];
  }
  return value;
}

} // namespace

void referenceExecuteGeneric(const KernelSpec &spec) {
  const int nDims = static_cast<int>(spec.dims.size());
  std::vector<int64_t> point(nDims, 0);

  // Precompute argument pointers and scratch index vectors.
  struct ArgState {
    const KernelArg *arg;
    std::vector<int64_t> indices;
  };
  std::vector<ArgState> inputs;
  ArgState output{nullptr, {}};
  for (const auto &arg : spec.args) {
    ArgState state{&arg, std::vector<int64_t>(arg.view.rank(), 0)};
    if (arg.role == ArgRole::Output)
      output = std::move(state);
    else
      inputs.push_back(std::move(state));
  }
  if (!output.arg)
    throw Error(Error::Kind::ShapeMismatch, "kernel has no output argument");

  auto fillIndices = [&](ArgState &state) {
    const AffineMap &map = state.arg->map;
    for (size_t r = 0; r < map.results.size(); ++r)
      state.indices[r] = evalExpr(map.results[r], spec, point);
  };

  while (true) {
    int32_t product = 1;
    for (auto &in : inputs) {
      fillIndices(in);
      product = wrapMul(product, in.arg->view.load(in.indices));
    }
    fillIndices(output);
    output.arg->view.store(output.indices,
                           wrapAdd(output.arg->view.load(output.indices),
                                   product));

    // Odometer increment over the iteration space.
    int d = nDims - 1;
    while (d >= 0) {
      if (++point[d] < spec.dims[d].extent)
        break;
      point[d] = 0;
      --d;
    }
    if (d < 0)
      break;
  }
}

namespace {

/// Direct triple loop over strided views; modular arithmetic makes the
/// accumulation order irrelevant, so this matches the generic walk exactly.
void referenceMatmul(const KernelSpec &spec) {
  const MemRefDesc &A = spec.args[0].view;
  const MemRefDesc &B = spec.args[1].view;
  const MemRefDesc &C = spec.args[2].view;
  int64_t M = spec.dimExtent("m"), N = spec.dimExtent("n"),
          K = spec.dimExtent("k");
  const int32_t *a = A.base->data();
  const int32_t *b = B.base->data();
  int32_t *c = C.base->data();
  for (int64_t m = 0; m < M; ++m)
    for (int64_t n = 0; n < N; ++n) {
      int32_t acc = c[C.offset + m * C.strides[0] + n * C.strides[1]];
      int64_t aRow = A.offset + m * A.strides[0];
      int64_t bCol = B.offset + n * B.strides[1];
      for (int64_t k = 0; k < K; ++k)
        acc = wrapAdd(acc, wrapMul(a[aRow + k * A.strides[1]],
                                   b[bCol + k * B.strides[0]]));
      c[C.offset + m * C.strides[0] + n * C.strides[1]] = acc;
    }
}

void referenceConv2d(const KernelSpec &spec) {
  const MemRefDesc &I = spec.args[0].view;
  const MemRefDesc &F = spec.args[1].view;
  const MemRefDesc &O = spec.args[2].view;
  int64_t B = spec.dimExtent("b"), H = spec.dimExtent("h"),
          W = spec.dimExtent("w"), iC = spec.dimExtent("ic"),
          oC = spec.dimExtent("oc"), fH = spec.dimExtent("fh"),
          fW = spec.dimExtent("fw");
  // Recover the stride factor from I's map: result 2 is h*stride + fh.
  int64_t stride = 1;
  for (const auto &[dim, coeff] : spec.args[0].map.results[2].terms)
    if (dim == "h")
      stride = coeff;
  const int32_t *in = I.base->data();
  const int32_t *f = F.base->data();
  int32_t *out = O.base->data();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t oc = 0; oc < oC; ++oc)
      for (int64_t h = 0; h < H; ++h)
        for (int64_t w = 0; w < W; ++w) {
          int64_t oAddr = O.offset + b * O.strides[0] + oc * O.strides[1] +
                          h * O.strides[2] + w * O.strides[3];
          int32_t acc = out[oAddr];
          for (int64_t ic = 0; ic < iC; ++ic)
            for (int64_t fh = 0; fh < fH; ++fh) {
              int64_t iRow = I.offset + b * I.strides[0] + ic * I.strides[1] +
                             (h * stride + fh) * I.strides[2] +
                             w * stride * I.strides[3];
              int64_t fRow = F.offset + oc * F.strides[0] +
                             ic * F.strides[1] + fh * F.strides[2];
              for (int64_t fw = 0; fw < fW; ++fw)
                acc = wrapAdd(acc, wrapMul(in[iRow + fw * I.strides[3]],
                                           f[fRow + fw * F.strides[3]]));
            }
          out[oAddr] = acc;
        }
}

} // namespace

void referenceExecute(const KernelSpec &spec) {
  if (spec.kind == KernelKind::Matmul)
    referenceMatmul(spec);
  else if (spec.kind == KernelKind::Conv2dNchwFchw)
    referenceConv2d(spec);
  else
    referenceExecuteGeneric(spec);
}

} // namespace accelhost

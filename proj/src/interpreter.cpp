//===- interpreter.cpp - In-process program execution -----------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/interpreter.h"
#include "accelhost/accel_sim.h"
#include "accelhost/error.h"

#include <functional>

namespace accelhost {

namespace {

class ProgramRunner {
public:
  ProgramRunner(const AccelProgram &program, const InterpretOptions &options)
      : program(program), options(options), region(dmaInit(program.cfg.dma)),
        device(bindBehavior(program.cfg)) {
    attachAccelerator(region, device);
    region.forceSlowCopy = options.forceSlowCopy;
    region.trace = options.trace;
    scratch.base = allocBuffer(1);
    loopVars.assign(program.nest.loops.size(), 0);
    sendTransfers.assign(program.spec.args.size(), 0);
    recvTransfers.assign(program.spec.args.size(), 0);
  }

  InterpretResult run() {
    runLevel(0);
    InterpretResult result;
    result.counters = region.counters;
    result.argSendTransfers = sendTransfers;
    result.argRecvTransfers = recvTransfers;
    result.deviceWordsConsumed = device.wordsConsumed;
    result.deviceWordsProduced = device.wordsProduced;
    result.leftoverOutputWords = static_cast<int64_t>(device.outFifo.size());
    result.fifosDrained = device.idle() && device.outFifo.empty();
    return result;
  }

private:
  void runLevel(int level) {
    for (const PlacedOpcode &op : program.pre[level])
      fire(op);
    if (level < program.numLoops()) {
      const Loop &loop = program.nest.loops[level];
      int64_t lb = 0;
      if (!loop.cacheLevel) {
        int cacheIdx = program.nest.cacheLoopIndex(loop.dim);
        if (cacheIdx >= 0)
          lb = loopVars[cacheIdx];
      }
      for (int64_t v = lb; v < lb + loop.span; v += loop.step) {
        loopVars[level] = v;
        runLevel(level + 1);
      }
    }
    for (const PlacedOpcode &op : program.post[level])
      fire(op);
  }

  void stageScalar(int32_t value) {
    (*scratch.base)[0] = value;
    stagedWords += copyToDmaRegion(scratch, region, stagedWords);
  }

  void flushSend() {
    if (stagedWords == 0)
      return;
    dmaStartSend(region, stagedWords, 0);
    dmaWaitSendCompletion(region);
    stagedWords = 0;
  }

  MemRefDesc transferView(const PlannedTransfer &transfer) const {
    std::vector<int64_t> offsets;
    offsets.reserve(transfer.offsets.size());
    for (const OffsetExpr &expr : transfer.offsets)
      offsets.push_back(expr.eval(loopVars));
    return subview(program.spec.args[transfer.arg].view, offsets,
                   transfer.sizes);
  }

  void fire(const PlacedOpcode &op) {
    for (const PlannedAction &action : op.actions) {
      switch (action.kind) {
      case Action::Kind::SendLiteral:
        stageScalar(static_cast<int32_t>(action.literal));
        break;
      case Action::Kind::SendDim:
        stageScalar(static_cast<int32_t>(action.dimValue));
        break;
      case Action::Kind::SendIdx:
        stageScalar(static_cast<int32_t>(action.idxExpr.eval(loopVars) /
                                         action.idxStep));
        break;
      case Action::Kind::Send:
        stagedWords +=
            copyToDmaRegion(transferView(action.transfer), region, stagedWords);
        ++sendTransfers[action.transfer.arg];
        break;
      case Action::Kind::Recv: {
        // Everything staged so far must reach the device before it can be
        // asked for output.
        flushSend();
        const PlannedTransfer &t = action.transfer;
        dmaStartRecv(region, static_cast<size_t>(t.words), 0);
        dmaWaitRecvCompletion(region);
        copyFromDmaRegion(region, 0, transferView(t), t.accumulate);
        ++recvTransfers[t.arg];
        continue;
      }
      }
      if (options.perActionSends)
        flushSend();
    }
    flushSend();
  }

  const AccelProgram &program;
  const InterpretOptions &options;
  DmaRegion region;
  StreamAccelerator device;
  MemRefDesc scratch; // Rank-0 view used to stage literal/dim/idx words.
  std::vector<int64_t> loopVars;
  std::vector<int64_t> sendTransfers;
  std::vector<int64_t> recvTransfers;
  size_t stagedWords = 0;
};

} // namespace

InterpretResult interpret(const AccelProgram &program,
                          const InterpretOptions &options) {
  ProgramRunner runner(program, options);
  return runner.run();
}

} // namespace accelhost

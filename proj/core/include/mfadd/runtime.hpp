#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mfadd/layout.hpp"

namespace mfadd {

struct BlockMessage {
  int source = -1;
  int dest = -1;
  int epoch = 0;
  std::vector<std::pair<std::int64_t, double>> payload;  // (flat global control index, value)
};

// Collects a block's outgoing messages during a compute phase. Destinations
// must come from the block's neighbor list; anything else is a hard fault.
class Outbox {
public:
  Outbox(int source, int epoch, const BlockLayout& layout);
  void send(int dest, std::vector<std::pair<std::int64_t, double>> payload);
  std::vector<BlockMessage> take() { return std::move(messages_); }

private:
  int source_;
  int epoch_;
  const BlockLayout* layout_;
  std::vector<BlockMessage> messages_;
};

// Block-parallel epoch executor: a compute phase runs over every block
// (round-robin across workers), a barrier, delivery of all enqueued messages,
// then an absorb phase in which each block dequeues exactly the messages
// enqueued this epoch. Blocks are touched by one worker at a time, so
// per-block state needs no locking.
class ExchangeRuntime {
public:
  ExchangeRuntime(const Decomposition& dec, int workers);
  ~ExchangeRuntime();

  ExchangeRuntime(const ExchangeRuntime&) = delete;
  ExchangeRuntime& operator=(const ExchangeRuntime&) = delete;

  using ComputeFn = std::function<void(int block, Outbox& out)>;
  using AbsorbFn = std::function<void(int block, std::span<const BlockMessage> inbox)>;

  struct EpochTimings {
    double compute = 0.0;
    double deliver = 0.0;
    double absorb = 0.0;
  };

  EpochTimings run_epoch(const ComputeFn& compute, const AbsorbFn& absorb);

  // Static round-robin parallel loop over blocks (also used outside epochs).
  void parallel_for_blocks(const std::function<void(int block)>& fn);

  int epoch() const { return epoch_; }
  int workers() const;
  // Cumulative payload values sent per block.
  const std::vector<std::int64_t>& sent_values() const { return sent_values_; }

private:
  const Decomposition* dec_;
  int epoch_ = 0;
  std::vector<std::int64_t> sent_values_;
  struct Pool;
  std::unique_ptr<Pool> pool_;
};

// Shared control values each block sends per full exchange epoch: for every
// neighbor, its copies of all control indices both blocks hold.
std::vector<std::int64_t> exchange_volume(const Decomposition& dec);

}  // namespace mfadd

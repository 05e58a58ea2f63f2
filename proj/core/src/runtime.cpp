#include "mfadd/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace mfadd {

Outbox::Outbox(int source, int epoch, const BlockLayout& layout)
    : source_(source), epoch_(epoch), layout_(&layout) {}

void Outbox::send(int dest, std::vector<std::pair<std::int64_t, double>> payload) {
  const auto& nbrs = layout_->neighbors;
  if (std::find(nbrs.begin(), nbrs.end(), dest) == nbrs.end())
    throw std::logic_error("Outbox: block " + std::to_string(source_) + " addressed non-neighbor block " +
                           std::to_string(dest));
  BlockMessage msg;
  msg.source = source_;
  msg.dest = dest;
  msg.epoch = epoch_;
  msg.payload = std::move(payload);
  messages_.push_back(std::move(msg));
}

// Persistent worker pool; tasks are dispatched as generations, each worker
// processes its static share and the caller waits for the generation to
// drain. The first exception wins and is rethrown on the caller.
struct ExchangeRuntime::Pool {
  explicit Pool(int n) : nworkers(n) {
    if (n > 1) {
      threads.reserve(static_cast<std::size_t>(n));
      for (int w = 0; w < n; ++w) threads.emplace_back([this, w] { worker_loop(w); });
    }
  }

  ~Pool() {
    {
      std::lock_guard lock(m);
      stop = true;
      ++generation;
    }
    cv_start.notify_all();
    for (auto& t : threads) t.join();
  }

  void run(const std::function<void(int worker)>& fn) {
    if (nworkers <= 1) {
      fn(0);
      return;
    }
    std::unique_lock lock(m);
    task = &fn;
    remaining = nworkers;
    ++generation;
    cv_start.notify_all();
    cv_done.wait(lock, [this] { return remaining == 0; });
    task = nullptr;
    if (error) {
      auto e = error;
      error = nullptr;
      std::rethrow_exception(e);
    }
  }

  void worker_loop(int id) {
    std::uint64_t seen = 0;
    while (true) {
      const std::function<void(int)>* fn = nullptr;
      {
        std::unique_lock lock(m);
        cv_start.wait(lock, [&] { return generation != seen; });
        seen = generation;
        if (stop) return;
        fn = task;
      }
      try {
        (*fn)(id);
      } catch (...) {
        std::lock_guard lock(m);
        if (!error) error = std::current_exception();
      }
      {
        std::lock_guard lock(m);
        if (--remaining == 0) cv_done.notify_all();
      }
    }
  }

  int nworkers;
  std::vector<std::thread> threads;
  std::mutex m;
  std::condition_variable cv_start, cv_done;
  std::uint64_t generation = 0;
  int remaining = 0;
  bool stop = false;
  const std::function<void(int)>* task = nullptr;
  std::exception_ptr error;
};

ExchangeRuntime::ExchangeRuntime(const Decomposition& dec, int workers) : dec_(&dec) {
  if (workers < 1) throw std::invalid_argument("ExchangeRuntime: workers must be >= 1");
  sent_values_.assign(static_cast<std::size_t>(dec.global.block_count()), 0);
  pool_ = std::make_unique<Pool>(workers);
}

ExchangeRuntime::~ExchangeRuntime() = default;

int ExchangeRuntime::workers() const { return pool_->nworkers; }

void ExchangeRuntime::parallel_for_blocks(const std::function<void(int block)>& fn) {
  const int nblocks = static_cast<int>(dec_->blocks.size());
  const int nw = pool_->nworkers;
  pool_->run([&](int w) {
    for (int b = w; b < nblocks; b += nw) fn(b);
  });
}

ExchangeRuntime::EpochTimings ExchangeRuntime::run_epoch(const ComputeFn& compute, const AbsorbFn& absorb) {
  using Clock = std::chrono::steady_clock;
  const int nblocks = static_cast<int>(dec_->blocks.size());
  std::vector<std::vector<BlockMessage>> outboxes(static_cast<std::size_t>(nblocks));

  EpochTimings times;
  auto mark = Clock::now();
  parallel_for_blocks([&](int b) {
    Outbox out(b, epoch_, dec_->blocks[static_cast<std::size_t>(b)]);
    compute(b, out);
    outboxes[static_cast<std::size_t>(b)] = out.take();
  });
  times.compute = std::chrono::duration<double>(Clock::now() - mark).count();

  // Delivery: route in source-id order so each inbox is ordered by source
  // regardless of worker scheduling.
  mark = Clock::now();
  std::vector<std::vector<BlockMessage>> inboxes(static_cast<std::size_t>(nblocks));
  for (int src = 0; src < nblocks; ++src) {
    for (BlockMessage& msg : outboxes[static_cast<std::size_t>(src)]) {
      sent_values_[static_cast<std::size_t>(src)] += static_cast<std::int64_t>(msg.payload.size());
      inboxes[static_cast<std::size_t>(msg.dest)].push_back(std::move(msg));
    }
  }
  times.deliver = std::chrono::duration<double>(Clock::now() - mark).count();

  if (absorb) {
    mark = Clock::now();
    parallel_for_blocks([&](int b) {
      absorb(b, std::span<const BlockMessage>(inboxes[static_cast<std::size_t>(b)]));
    });
    times.absorb = std::chrono::duration<double>(Clock::now() - mark).count();
  }
  ++epoch_;
  return times;
}

std::vector<std::int64_t> exchange_volume(const Decomposition& dec) {
  std::vector<std::int64_t> vol(dec.blocks.size(), 0);
  for (const BlockLayout& blk : dec.blocks) {
    for (int j : blk.neighbors) {
      const auto box = dec.shared_dof_box(blk.id, j);
      std::int64_t count = 1;
      for (const auto& r : box) count *= (r[1] - r[0]);
      vol[static_cast<std::size_t>(blk.id)] += box.empty() ? 0 : count;
    }
  }
  return vol;
}

}  // namespace mfadd

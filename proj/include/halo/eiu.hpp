#pragma once

// Cycle-count model of lazy reduction on an integer-only accelerator.
//
// A bit-width trajectory is replayed step by step. When the live operand
// crosses threshold * register_bits a reduction job is queued for a
// background GCD engine that drains gcd_bits_per_cycle bits of work per
// cycle while matmul steps keep issuing. The pipeline stalls only when a
// value would overflow the register before its pending reductions land, or
// when the job queue is full.

#include "halo/net.hpp"
#include "halo/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

namespace halo {

struct EiuConfig {
  std::size_t register_bits = 1024;
  Rational threshold = Rational(3, 4);
  std::uint64_t gcd_bits_per_cycle = 64;  // 0 disables the engine
  std::uint64_t matmul_cycles_per_step = 64;
  std::size_t queue_depth = 4;

  void validate() const {
    if (register_bits < 64) throw std::invalid_argument("EiuConfig: register_bits must be >= 64");
    if (threshold.sign() <= 0 || threshold > Rational(1))
      throw std::invalid_argument("EiuConfig: threshold must be in (0, 1]");
    if (matmul_cycles_per_step == 0) throw std::invalid_argument("EiuConfig: matmul_cycles_per_step must be > 0");
    if (queue_depth == 0) throw std::invalid_argument("EiuConfig: queue_depth must be > 0");
  }

  /// floor(register_bits * threshold)
  std::size_t trigger_bits() const {
    return static_cast<std::size_t>(
        floor(Rational(static_cast<std::int64_t>(register_bits)) * threshold).to_i64());
  }
};

struct PipelineRow {
  std::size_t step = 0;
  std::size_t live_bits = 0;
  std::size_t pending_jobs = 0;
  bool stalled = false;
  std::size_t reduced_this_step = 0;
};

struct PipelineStats {
  std::size_t steps_executed = 0;
  std::size_t reductions_triggered = 0;
  std::size_t reductions_completed = 0;
  std::uint64_t stall_cycles = 0;
  std::size_t saturation_events = 0;
  std::size_t peak_bits = 0;
  long first_trigger_step = -1;
  std::vector<PipelineRow> rows;

  /// Steps that completed before the first trigger fired (all of them if none did).
  std::size_t steps_before_first_trigger() const {
    if (first_trigger_step < 0) return steps_executed;
    return first_trigger_step == 0 ? 0 : static_cast<std::size_t>(first_trigger_step - 1);
  }
};

/// `bits[t]` is the operand width the unreduced computation would hold after
/// step t (bits[0] is the grounded start). A finished reduction removes every
/// bit the operand had grown by its snapshot, returning it to the start
/// width plus whatever grew since.
inline PipelineStats simulate_pipeline(const std::vector<std::size_t>& bits, const EiuConfig& cfg) {
  cfg.validate();
  if (bits.empty()) throw std::invalid_argument("simulate_pipeline: empty trace");

  struct Job {
    std::size_t snapshot_raw;
    std::uint64_t remaining;
  };
  const std::size_t base = bits.front();
  const std::size_t trigger = cfg.trigger_bits();
  const std::uint64_t g = cfg.gcd_bits_per_cycle;

  PipelineStats st;
  std::deque<Job> queue;
  std::size_t removed = 0;  // raw bits eliminated by completed reductions

  const auto live_at = [&](std::size_t raw) {
    const std::size_t floor_bits = std::min(raw, base);
    return std::max(raw > removed ? raw - removed : 0, floor_bits);
  };
  const auto complete_front = [&](std::size_t& reduced) {
    const Job j = queue.front();
    queue.pop_front();
    removed = std::max(removed, j.snapshot_raw > base ? j.snapshot_raw - base : 0);
    ++st.reductions_completed;
    ++reduced;
  };
  const auto cycles_for = [&](std::uint64_t work) { return (work + g - 1) / g; };

  for (std::size_t t = 0; t < bits.size(); ++t) {
    PipelineRow row;
    row.step = t;
    const std::size_t raw = bits[t];

    if (t > 0) {
      ++st.steps_executed;
      if (g > 0) {
        // Background engine runs alongside this step's matmul.
        std::uint64_t budget = cfg.matmul_cycles_per_step * g;
        while (!queue.empty() && budget > 0) {
          const std::uint64_t take = std::min(budget, queue.front().remaining);
          queue.front().remaining -= take;
          budget -= take;
          if (queue.front().remaining == 0) complete_front(row.reduced_this_step);
        }
      }
    }

    std::size_t live = live_at(raw);
    if (live > cfg.register_bits && !queue.empty() && g > 0) {
      std::uint64_t work = 0;
      for (const auto& j : queue) work += j.remaining;
      st.stall_cycles += cycles_for(work);
      row.stalled = true;
      while (!queue.empty()) complete_front(row.reduced_this_step);
      live = live_at(raw);
    }
    if (live > cfg.register_bits) ++st.saturation_events;

    const bool covered = !queue.empty() && queue.back().snapshot_raw >= raw;
    if (g > 0 && live > trigger && !covered) {
      if (queue.size() == cfg.queue_depth) {
        st.stall_cycles += cycles_for(queue.front().remaining);
        row.stalled = true;
        complete_front(row.reduced_this_step);
      }
      queue.push_back({raw, live});
      ++st.reductions_triggered;
      if (st.first_trigger_step < 0) st.first_trigger_step = static_cast<long>(t);
    }
    if (g == 0 && live > trigger && st.first_trigger_step < 0) st.first_trigger_step = static_cast<long>(t);

    st.peak_bits = std::max(st.peak_bits, live);
    row.live_bits = live;
    row.pending_jobs = queue.size();
    st.rows.push_back(row);
  }
  return st;
}

/// Register occupancy per step of an inference trace.
inline std::vector<std::size_t> register_trajectory(const std::vector<StepBits>& trace) {
  std::vector<std::size_t> out;
  out.reserve(trace.size());
  for (const auto& s : trace) out.push_back(s.register_bits);
  return out;
}

inline PipelineStats simulate_pipeline(const std::vector<StepBits>& trace, const EiuConfig& cfg) {
  return simulate_pipeline(register_trajectory(trace), cfg);
}

/// floor((trigger_bits - B0) / alpha), or 0 once B0 is at or above the trigger.
inline std::size_t steps_until_reduction(std::size_t alpha, std::size_t start_bits, const EiuConfig& cfg) {
  if (alpha == 0) throw std::invalid_argument("steps_until_reduction: alpha must be > 0");
  const std::size_t trigger = cfg.trigger_bits();
  if (start_bits >= trigger) return 0;
  return (trigger - start_bits) / alpha;
}

/// B0, B0 + alpha, ... for `steps` steps.
inline std::vector<std::size_t> linear_trace(std::size_t start_bits, std::size_t alpha, std::size_t steps) {
  std::vector<std::size_t> out;
  out.reserve(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) out.push_back(start_bits + t * alpha);
  return out;
}

}  // namespace halo

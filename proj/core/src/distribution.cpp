#include <algorithm>

#include "gleaner/scheduler.hpp"

namespace gleaner {

// Round-based greedy spanning tree under uniform transfer times.  Sources in
// round r are the manager plus every holder as of round r-1, each serving at
// most `cap` targets; completed receivers become sources the next round.
// With S holders a round serves min(pending, (S+1)*cap) targets, so the
// holder count (manager included) grows by the factor cap+1 each round and
// the plan finishes in ceil(log_{cap+1}(W+1)) rounds from a cold start.
std::vector<TransferDirective> plan_context_distribution(
    const std::vector<WorkerId>& existing_holders,
    const std::vector<WorkerId>& targets, std::uint32_t cap) {
  std::vector<TransferDirective> plan;
  if (cap == 0) return plan;

  std::vector<WorkerId> holders = existing_holders;
  std::sort(holders.begin(), holders.end());
  holders.erase(std::unique(holders.begin(), holders.end()), holders.end());

  std::vector<WorkerId> pending = targets;
  std::sort(pending.begin(), pending.end());
  pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
  std::erase_if(pending, [&](WorkerId id) {
    return std::binary_search(holders.begin(), holders.end(), id);
  });

  std::uint32_t round = 0;
  while (!pending.empty()) {
    ++round;
    std::vector<WorkerId> received;
    std::size_t next = 0;
    // Manager first, then holders in sorted order; targets in sorted order.
    for (std::uint32_t slot = 0; slot < cap && next < pending.size(); ++slot) {
      TransferDirective d;
      d.round = round;
      d.from_manager = true;
      d.target = pending[next++];
      received.push_back(d.target);
      plan.push_back(d);
    }
    for (WorkerId source : holders) {
      for (std::uint32_t slot = 0; slot < cap && next < pending.size(); ++slot) {
        TransferDirective d;
        d.round = round;
        d.from_manager = false;
        d.source = source;
        d.target = pending[next++];
        received.push_back(d.target);
        plan.push_back(d);
      }
      if (next >= pending.size()) break;
    }
    pending.erase(pending.begin(),
                  pending.begin() + static_cast<std::ptrdiff_t>(next));
    holders.insert(holders.end(), received.begin(), received.end());
    std::sort(holders.begin(), holders.end());
  }
  return plan;
}

std::uint32_t plan_round_count(const std::vector<TransferDirective>& plan) {
  std::uint32_t rounds = 0;
  for (const TransferDirective& d : plan) rounds = std::max(rounds, d.round);
  return rounds;
}

}  // namespace gleaner

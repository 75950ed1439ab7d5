#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "gleaner/scheduler.hpp"

using namespace gleaner;

namespace {

std::vector<WorkerId> make_targets(std::uint32_t count, WorkerId first = 0) {
  std::vector<WorkerId> ids;
  for (std::uint32_t i = 0; i < count; ++i) ids.push_back(first + i);
  return ids;
}

// Independent growth model: each round every holder (manager included)
// serves at most `cap` targets, and the served targets become holders for
// the next round.
std::uint32_t oracle_rounds(std::uint32_t existing_holders,
                            std::uint32_t targets, std::uint32_t cap) {
  std::uint64_t sources = 1 + existing_holders;
  std::uint64_t remaining = targets;
  std::uint32_t rounds = 0;
  while (remaining > 0) {
    std::uint64_t served = std::min(sources * cap, remaining);
    remaining -= served;
    sources += served;
    ++rounds;
  }
  return rounds;
}

}  // namespace

TEST_CASE("single target staged from the manager in one round") {
  auto plan = plan_context_distribution({}, {7}, 3);
  REQUIRE(plan.size() == 1);
  CHECK(plan[0].round == 1);
  CHECK(plan[0].from_manager);
  CHECK(plan[0].target == 7);
  CHECK(plan_round_count(plan) == 1);
}

TEST_CASE("thirteen targets at cap three finish in two rounds") {
  auto plan = plan_context_distribution({}, make_targets(13), 3);
  CHECK(plan_round_count(plan) == 2);
  // Round 1: manager serves 3.  Round 2: manager + 3 holders serve the rest.
  std::uint32_t round1 = 0;
  for (const auto& d : plan)
    if (d.round == 1) ++round1;
  CHECK(round1 == 3);
}

TEST_CASE("twenty targets at cap one double each round: five rounds") {
  auto plan = plan_context_distribution({}, make_targets(20), 1);
  CHECK(plan_round_count(plan) == 5);
}

TEST_CASE("existing holders serve from the first round") {
  // Manager + 3 holders at cap 2 cover 8 targets immediately.
  auto plan = plan_context_distribution({100, 101, 102}, make_targets(8), 2);
  CHECK(plan_round_count(plan) == 1);
}

TEST_CASE("no targets or zero cap yield an empty plan") {
  CHECK(plan_context_distribution({}, {}, 3).empty());
  CHECK(plan_context_distribution({1, 2}, {}, 3).empty());
  CHECK(plan_context_distribution({}, make_targets(5), 0).empty());
  CHECK(plan_round_count({}) == 0);
}

TEST_CASE("targets already holding are skipped") {
  auto plan = plan_context_distribution({3, 4}, {3, 4, 9}, 2);
  REQUIRE(plan.size() == 1);
  CHECK(plan[0].target == 9);
}

TEST_CASE("plan structure: unique targets, capped sources, valid causality") {
  for (std::uint32_t cap = 1; cap <= 4; ++cap) {
    for (std::uint32_t w = 1; w <= 64; ++w) {
      auto plan = plan_context_distribution({}, make_targets(w), cap);

      std::set<WorkerId> seen;
      std::set<WorkerId> holders;  // workers holding as of rounds already done
      std::uint32_t current_round = 0;
      std::map<std::uint64_t, std::uint32_t> per_source;  // this round's load
      std::vector<WorkerId> received;
      auto finish_round = [&]() {
        holders.insert(received.begin(), received.end());
        received.clear();
        per_source.clear();
      };
      for (const auto& d : plan) {
        REQUIRE(d.round >= 1);
        if (d.round != current_round) {
          // Rounds appear in ascending order with no gaps.
          REQUIRE(d.round == current_round + 1);
          finish_round();
          current_round = d.round;
        }
        CHECK(seen.insert(d.target).second);  // each target exactly once
        std::uint64_t source_key = d.from_manager ? ~std::uint64_t{0} : d.source;
        CHECK(++per_source[source_key] <= cap);
        if (!d.from_manager) {
          // Peer sources must already hold the objects.
          CHECK(holders.count(d.source) == 1);
        }
        received.push_back(d.target);
      }
      CHECK(seen.size() == w);
    }
  }
}

TEST_CASE("round counts match the growth model for every pool and cap") {
  for (std::uint32_t cap = 1; cap <= 4; ++cap) {
    for (std::uint32_t w = 0; w <= 64; ++w) {
      auto plan = plan_context_distribution({}, make_targets(w), cap);
      CHECK(plan_round_count(plan) == oracle_rounds(0, w, cap));
      CHECK(plan.size() == w);
    }
  }
  // With pre-existing holders the first round starts wider.
  for (std::uint32_t holders = 1; holders <= 8; ++holders) {
    for (std::uint32_t w = 1; w <= 40; ++w) {
      auto plan = plan_context_distribution(make_targets(holders, 1000),
                                            make_targets(w), 2);
      CHECK(plan_round_count(plan) == oracle_rounds(holders, w, 2));
    }
  }
}

TEST_CASE("plans are deterministic") {
  auto a = plan_context_distribution({5, 9}, make_targets(30), 3);
  auto b = plan_context_distribution({9, 5}, make_targets(30), 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].round == b[i].round);
    CHECK(a[i].from_manager == b[i].from_manager);
    CHECK(a[i].source == b[i].source);
    CHECK(a[i].target == b[i].target);
  }
}

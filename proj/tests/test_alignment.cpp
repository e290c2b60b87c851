#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "aligncr/alignment.hpp"
#include "test_support.hpp"

using namespace aligncr;

TEST_CASE("collapse: canonical CTC semantics") {
  // blank = 0
  CHECK(collapse({1, 1, 0, 1, 0}) == LabelSeq{1, 1});
  CHECK(collapse({0, 0, 0}) == LabelSeq{});
  CHECK(collapse({1, 0, 1}) == LabelSeq{1, 1});
  CHECK(collapse({}) == LabelSeq{});
  CHECK(collapse({2, 2, 2, 3, 3}) == LabelSeq{2, 3});
}

TEST_CASE("collapse: idempotent on blank- and repeat-free alignments") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> tok(1, 3);
  for (int trial = 0; trial < 50; ++trial) {
    LabelSeq y;
    int prev = -1;
    for (int i = 0; i < 5; ++i) {
      int t = tok(rng);
      if (t == prev) continue;
      y.push_back(t);
      prev = t;
    }
    CHECK(collapse(y) == y);
  }
}

TEST_CASE("inverse_enumerate: worked examples") {
  Vocab v(2);  // {blank, 1}
  auto paths = inverse_enumerate({1}, 2, v);
  std::set<AlignmentSeq> got(paths.begin(), paths.end());
  CHECK(got == std::set<AlignmentSeq>{{1, 0}, {0, 1}, {1, 1}});

  CHECK(inverse_enumerate({1, 1}, 2, v).empty());  // needs a blank between repeats
  CHECK(inverse_enumerate({}, 2, v) == std::vector<AlignmentSeq>{{0, 0}});
}

TEST_CASE("inverse_enumerate: blowup guard") {
  CHECK_THROWS_AS(inverse_enumerate({1}, 7, Vocab(2)), std::invalid_argument);
  CHECK_THROWS_AS(inverse_enumerate({1}, 3, Vocab(5)), std::invalid_argument);
}

TEST_CASE("inverse_enumerate: exactly the collapse preimage") {
  std::mt19937_64 rng(12);
  Vocab v(3);
  std::uniform_int_distribution<int> tok(1, 2);
  std::uniform_int_distribution<int> len(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = 4;
    LabelSeq y;
    for (int i = 0, L = len(rng); i < L; ++i) y.push_back(tok(rng));
    auto members = inverse_enumerate(y, T, v);
    std::set<AlignmentSeq> member_set(members.begin(), members.end());
    CHECK(member_set.size() == members.size());
    // Independent full enumeration of V^T.
    std::size_t preimage_count = 0;
    AlignmentSeq path(T, 0);
    while (true) {
      const bool in_preimage = collapse(path) == y;
      if (in_preimage) ++preimage_count;
      CHECK(in_preimage == member_set.contains(path));
      int i = T - 1;
      while (i >= 0 && path[i] == v.size - 1) path[i--] = 0;
      if (i < 0) break;
      ++path[i];
    }
    CHECK(preimage_count == members.size());
  }
}

TEST_CASE("greedy_decode: argmax per frame with lowest-id ties") {
  Array p = Array::zeros({3, 3});
  // blank wins everywhere
  for (int t = 0; t < 3; ++t) p.at(t, 0) = 1.0;
  CHECK(greedy_decode(p) == AlignmentSeq{0, 0, 0});

  // one-hot [1, blank, 2]
  Array q = Array::full({3, 3}, -100.0);
  q.at(0, 1) = 0.0;
  q.at(1, 0) = 0.0;
  q.at(2, 2) = 0.0;
  CHECK(greedy_decode(q) == AlignmentSeq{1, 0, 2});

  // exact tie between ids 1 and 2 -> 1
  Array r = Array::zeros({1, 3});
  r.at(0, 0) = -1.0;
  r.at(0, 1) = 0.5;
  r.at(0, 2) = 0.5;
  CHECK(greedy_decode(r) == AlignmentSeq{1});
}

TEST_CASE("collapse of greedy_decode is total") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    Array p = testutil::random_log_probs(6, 4, rng);
    const LabelSeq y = collapse(greedy_decode(p));
    for (int t : y) CHECK(t != kBlankId);
  }
  CHECK_THROWS_AS(greedy_decode(Array::zeros({0, 3})), std::invalid_argument);
}

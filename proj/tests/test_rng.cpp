#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "noveltest/rng.hpp"

using namespace noveltest;

TEST_CASE("identical seeds give identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i)
    if (a.next_u64() == b.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("next_unit stays in [0,1)") {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    double u = r.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform_int covers the inclusive range") {
  Rng r(9);
  bool seen[5] = {};
  for (int i = 0; i < 1000; ++i) {
    auto v = r.uniform_int(0, 4);
    REQUIRE(v >= 0);
    REQUIRE(v <= 4);
    seen[v] = true;
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("chance matches its probability roughly") {
  Rng r(11);
  int hits = 0;
  for (int i = 0; i < 100000; ++i)
    if (r.chance(0.25)) ++hits;
  CHECK(hits > 23500);
  CHECK(hits < 26500);
}

TEST_CASE("mix_seed is order sensitive and stable") {
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(1, 2, 3) == mix_seed(mix_seed(1, 2), 3));
  CHECK(mix_seed(5, 6) == mix_seed(5, 6));
}

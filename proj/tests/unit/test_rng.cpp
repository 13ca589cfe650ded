#include "doctest.h"

#include <set>

#include "ruinsim/rng.hpp"

using ruinsim::RngStream;

TEST_CASE("philox4x32-10 matches the Random123 known-answer vectors") {
  CHECK(RngStream::philox({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(RngStream::philox({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}) ==
        std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(RngStream::philox({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are pure functions of (seed, stream)") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  RngStream other_stream(42, 8);
  RngStream other_seed(43, 7);
  int same_stream = 0;
  int same_seed = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    REQUIRE(x == b());
    same_stream += x == other_stream();
    same_seed += x == other_seed();
  }
  CHECK(same_stream == 0);
  CHECK(same_seed == 0);
}

TEST_CASE("uniform draws are in the open unit interval and 1-u is exact") {
  RngStream rng(1, 1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    REQUIRE((1.0 - u) + u == 1.0);
    REQUIRE(1.0 - (1.0 - u) == u);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
}

TEST_CASE("stream ids separate purposes") {
  using ruinsim::StreamPurpose;
  std::set<std::uint64_t> ids;
  for (auto p : {StreamPurpose::Tail, StreamPurpose::Moments, StreamPurpose::Kesten}) {
    for (std::uint32_t s = 0; s < 4; ++s) ids.insert(ruinsim::stream_id(p, s));
  }
  CHECK(ids.size() == 12);
}

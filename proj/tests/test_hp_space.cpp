#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "fedhpn/common.hpp"
#include "fedhpn/hp_space.hpp"

using namespace fedhpn;

namespace {

Dimension discrete(std::string name, std::vector<double> candidates) {
  Dimension d;
  d.name = std::move(name);
  d.kind = DimKind::Discrete;
  d.candidates = std::move(candidates);
  return d;
}

Dimension continuous(std::string name, double lo, double hi,
                     DimScale scale = DimScale::Linear) {
  Dimension d;
  d.name = std::move(name);
  d.kind = DimKind::Continuous;
  d.lo = lo;
  d.hi = hi;
  d.scale = scale;
  return d;
}

// The Graph-DC grid: 4 learning rates x 4 local-step counts.
SearchSpace graph_dc_space() {
  SearchSpace s;
  s.dims = {discrete("learning_rate", {1e-4, 1e-3, 1e-2, 1e-1}),
            discrete("local_steps", {1, 2, 3, 4})};
  return s;
}

ConfigSample sample_of(std::vector<int> indices) {
  ConfigSample s;
  for (int i : indices) {
    DimValue v;
    v.index = i;
    s.values.push_back(v);
  }
  s.log_prob = -1.0;
  return s;
}

}  // namespace

TEST_SUITE("hp-space") {

TEST_CASE("space_size counts discrete grids") {
  CHECK(space_size(graph_dc_space()).count == 16);

  SearchSpace single;
  single.dims = {discrete("learning_rate", {0.1})};
  CHECK(space_size(single).count == 1);

  SearchSpace mixed;
  mixed.dims = {discrete("learning_rate", {0.1, 0.2}),
                continuous("dropout", 0.0, 0.5)};
  CHECK(space_size(mixed).infinite);
  CHECK(space_size(mixed).digits == "inf");
}

TEST_CASE("personalized_space_size is the n-th power") {
  const SpaceSize five = personalized_space_size(graph_dc_space(), 5);
  CHECK(five.count == 1048576);  // 16^5
  CHECK(five.digits == "1048576");

  CHECK(personalized_space_size(graph_dc_space(), 1).count ==
        space_size(graph_dc_space()).count);

  SearchSpace two;
  two.dims = {discrete("learning_rate", {0.1, 0.2})};
  CHECK(personalized_space_size(two, 10).count == 1024);

  // power identity, exhaustively for small n
  for (int n = 1; n <= 6; ++n) {
    std::uint64_t expect = 1;
    for (int i = 0; i < n; ++i) expect *= 16;
    CHECK(personalized_space_size(graph_dc_space(), n).count == expect);
  }
}

TEST_CASE("personalized_space_size reports exact digits past u64") {
  SearchSpace ten;
  ten.dims = {discrete("local_steps", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10})};
  const SpaceSize big = personalized_space_size(ten, 30);
  CHECK_FALSE(big.infinite);
  CHECK_FALSE(big.fits_u64);
  CHECK(big.digits == "1" + std::string(30, '0'));  // 10^30
}

TEST_CASE("decode maps indices to candidate values") {
  SearchSpace cifar_lr;
  cifar_lr.dims = {discrete("learning_rate", {1e-3, 5e-3, 1e-2, 5e-2, 1e-1})};
  CHECK(decode(cifar_lr, sample_of({2})).at("learning_rate") == 1e-2);

  SearchSpace single;
  single.dims = {discrete("weight_decay", {0.25})};
  CHECK(decode(single, sample_of({0})).at("weight_decay") == 0.25);

  SearchSpace steps;
  steps.dims = {discrete("local_steps", {1, 2, 3, 4})};
  CHECK(decode(steps, sample_of({3})).at("local_steps") == 4.0);
}

TEST_CASE("decode is a bijection on small discrete spaces") {
  SearchSpace s;
  s.dims = {discrete("learning_rate", {0.1, 0.2, 0.3}),
            discrete("local_steps", {1, 2})};
  std::set<std::pair<double, double>> seen;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b) {
      const auto m = decode(s, sample_of({a, b}));
      seen.insert({m.at("learning_rate"), m.at("local_steps")});
    }
  CHECK(seen.size() == 6);  // distinct tuples == space_size
  CHECK(space_size(s).count == 6);
}

TEST_CASE("continuous unit-interval mapping") {
  const Dimension lin = continuous("dropout", 0.1, 0.5);
  CHECK(lin.from_unit(0.0) == doctest::Approx(0.1));
  CHECK(lin.from_unit(1.0) == doctest::Approx(0.5));
  CHECK(lin.from_unit(0.5) == doctest::Approx(0.3));

  const Dimension log = continuous("learning_rate", 1e-4, 1e-1, DimScale::Log);
  CHECK(log.from_unit(0.0) == doctest::Approx(1e-4));
  CHECK(log.from_unit(1.0) == doctest::Approx(1e-1));
  // midpoint of a log dim is the geometric mean
  CHECK(log.from_unit(0.5) ==
        doctest::Approx(std::sqrt(1e-4 * 1e-1)).epsilon(1e-12));
}

TEST_CASE("serialization round-trips") {
  SearchSpace s;
  s.dims = {discrete("learning_rate", {1e-3, 1e-2, 1e-1}),
            continuous("dropout", 0.0, 0.5),
            continuous("weight_decay", 1e-6, 1e-1, DimScale::Log)};
  const SearchSpace back = parse_space(render_space(s));
  CHECK(back == s);
}

TEST_CASE("invariants are enforced") {
  SearchSpace dup;
  dup.dims = {discrete("learning_rate", {0.1}), discrete("learning_rate", {0.2})};
  CHECK_THROWS_AS(dup.validate(), ConfigError);

  Dimension unsorted = discrete("learning_rate", {0.2, 0.1});
  CHECK_THROWS_AS(unsorted.validate(), ConfigError);

  Dimension tie = discrete("learning_rate", {0.1, 0.1});
  CHECK_THROWS_AS(tie.validate(), ConfigError);

  Dimension empty = discrete("learning_rate", {});
  CHECK_THROWS_AS(empty.validate(), ConfigError);

  Dimension swapped = continuous("dropout", 0.5, 0.1);
  CHECK_THROWS_AS(swapped.validate(), ConfigError);

  Dimension bad_log = continuous("weight_decay", 0.0, 0.1, DimScale::Log);
  CHECK_THROWS_AS(bad_log.validate(), ConfigError);

  SearchSpace s = graph_dc_space();
  CHECK_THROWS_AS(decode(s, sample_of({4, 0})), ConfigError);  // index out of range
  CHECK_THROWS_AS(decode(s, sample_of({0})), ConfigError);     // arity mismatch

  ConfigSample positive = sample_of({0, 0});
  positive.log_prob = 0.5;
  CHECK_THROWS_AS(positive.validate(s), ConfigError);
}

}  // TEST_SUITE

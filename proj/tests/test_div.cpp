#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dskd/div.hpp"
#include "test_util.hpp"

using namespace dskd;
using namespace dskd::div;

namespace {

const Kind kAll[] = {Kind::KL, Kind::RKL, Kind::SKL, Kind::SRKL, Kind::AKL, Kind::JSD};

Tensor random_dist(int n, int v, Rng& rng) {
  Tensor logits = testutil::rand_uniform(n, v, rng, -2, 2);
  return softmax_rows(logits);
}

RowMask all_rows(int n) { return RowMask(static_cast<size_t>(n), 1); }

}  // namespace

TEST_CASE("identity of indiscernibles: every kind is zero at p == q") {
  Rng rng(7);
  Tensor p = random_dist(4, 9, rng);
  for (Kind k : kAll) {
    INFO(to_string(k));
    CHECK(std::abs(divergence(k, p, p, all_rows(4)).item()) <= 1e-12);
  }
}

TEST_CASE("KL([1,0], [1/2,1/2]) = ln 2") {
  Tensor p = Tensor::from_shape({1, 2}, {1, 0});
  Tensor q = Tensor::from_shape({1, 2}, {0.5, 0.5});
  CHECK(divergence(Kind::KL, p, q, {1}).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("JSD is symmetric and bounded by ln 2") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor p = random_dist(1, 6, rng);
    Tensor q = random_dist(1, 6, rng);
    const double ab = divergence(Kind::JSD, p, q, {1}).item();
    const double ba = divergence(Kind::JSD, q, p, {1}).item();
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab <= std::log(2.0) + 1e-12);
  }
}

TEST_CASE("SKL approaches KL as lambda -> 0") {
  Rng rng(13);
  Params prm;
  prm.skew_lambda = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor p = random_dist(2, 8, rng);
    Tensor q = random_dist(2, 8, rng);
    const double skl = divergence(Kind::SKL, p, q, all_rows(2), prm).item();
    const double kl = divergence(Kind::KL, p, q, all_rows(2)).item();
    CHECK(std::abs(skl - kl) < 1e-4);
  }
}

TEST_CASE("non-negativity over random distribution pairs") {
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    Tensor p = random_dist(1, 7, rng);
    Tensor q = random_dist(1, 7, rng);
    for (Kind k : kAll) {
      INFO(to_string(k));
      CHECK(divergence(k, p, q, {1}).item() >= -1e-12);
    }
  }
}

TEST_CASE("per-row mean over masked rows only") {
  Tensor p = Tensor::from_shape({2, 2}, {1, 0, 0.5, 0.5});
  Tensor q = Tensor::from_shape({2, 2}, {0.5, 0.5, 0.5, 0.5});
  // second row excluded: pure row-0 KL
  CHECK(divergence(Kind::KL, p, q, {1, 0}).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // both rows: mean of ln2 and 0
  CHECK(divergence(Kind::KL, p, q, {1, 1}).item() ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("unnormalized rows are a contract error") {
  Tensor p = Tensor::from_shape({1, 2}, {0.7, 0.7});
  Tensor q = Tensor::from_shape({1, 2}, {0.5, 0.5});
  CHECK_THROWS_AS(divergence(Kind::KL, p, q, {1}), std::invalid_argument);
  // unmasked garbage rows are fine
  Tensor p2 = Tensor::from_shape({2, 2}, {0.5, 0.5, 9, 9});
  Tensor q2 = Tensor::from_shape({2, 2}, {0.5, 0.5, 9, 9});
  CHECK_NOTHROW(divergence(Kind::KL, p2, q2, {1, 0}));
}

TEST_CASE("AKL alpha stays in [0,1] and p == q gives zero regardless") {
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor p = random_dist(3, 9, rng);
    Tensor q = random_dist(3, 9, rng);
    Mat a = akl_alpha(p, q, 0.5).val();
    for (int i = 0; i < 3; ++i) {
      CHECK(a(i, 0) >= 0.0);
      CHECK(a(i, 0) <= 1.0);
    }
  }
  Tensor p = random_dist(2, 5, rng);
  Mat a = akl_alpha(p, p, 0.5).val();
  CHECK(a(0, 0) == 0.5);  // 0/0 region pinned to 1/2
  CHECK(divergence(Kind::AKL, p, p, all_rows(2)).item() == 0.0);
}

TEST_CASE("gradients w.r.t. both p-side and q-side logits match finite differences") {
  Rng rng(23);
  Tensor a = testutil::rand_uniform(3, 5, rng, -2, 2, true);
  Tensor b = testutil::rand_uniform(3, 5, rng, -2, 2, true);
  RowMask mask = {1, 1, 0};
  Params prm;
  for (Kind k : kAll) {
    INFO(to_string(k));
    auto fn = [&] {
      return divergence(k, softmax_rows(a), softmax_rows(b), mask, prm);
    };
    auto res = testutil::check_gradients(fn, {a, b}, 1e-5, 1e-3);
    INFO(res.where);
    CHECK(res.ok);
  }
}

TEST_CASE("kind names round trip") {
  for (Kind k : kAll) CHECK(parse_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_kind("nope"), std::invalid_argument);
}

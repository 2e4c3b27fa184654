#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "haarpr/kernels.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/special.hpp"

using namespace haarpr;

namespace {
std::vector<double> random_vec(std::size_t n, double lo, double hi,
                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.next_double();
  return v;
}
}  // namespace

TEST_CASE("scalar and avx2 variants agree") {
  const auto* a = kernels::avx2();
  if (!a) return;  // scalar-only platform
  const auto& s = kernels::scalar();
  const std::size_t n = 10007;  // odd length exercises the tail loops

  SUBCASE("vexp") {
    auto x = random_vec(n, -600.0, 600.0, 1);
    std::vector<double> ra(n), rs(n);
    a->vexp(x.data(), ra.data(), n, 3.0);
    s.vexp(x.data(), rs.data(), n, 3.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (rs[i] == 0.0)
        CHECK(ra[i] == 0.0);
      else
        CHECK(std::fabs(ra[i] - rs[i]) / rs[i] < 5e-14);
    }
  }

  SUBCASE("vlog_i0") {
    auto x = random_vec(n, 0.0, 400.0, 2);
    x[0] = 0.0;
    x[1] = 14.999;
    x[2] = 15.001;
    std::vector<double> ra(n), rs(n);
    a->vlog_i0(x.data(), ra.data(), n);
    s.vlog_i0(x.data(), rs.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(ra[i] - rs[i]) <= 5e-14 * (1.0 + std::fabs(rs[i])));
  }

  SUBCASE("vi0_ratio") {
    auto x = random_vec(n, 0.0, 300.0, 3);
    x[0] = 0.0;
    std::vector<double> r1(n), w1(n), r2(n), w2(n);
    a->vi0_ratio(x.data(), r1.data(), w1.data(), n);
    s.vi0_ratio(x.data(), r2.data(), w2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::fabs(r1[i] - r2[i]) < 1e-12);
      CHECK(std::fabs(w1[i] - w2[i]) < 1e-12);
    }
  }

  SUBCASE("reductions") {
    auto x = random_vec(n, -2.0, 5.0, 4);
    auto y = random_vec(n, 0.0, 1.0, 5);
    auto z = random_vec(n, -1.0, 1.0, 6);
    CHECK(std::fabs(a->dot(x.data(), y.data(), n) - s.dot(x.data(), y.data(), n)) <
          1e-10 * n);
    CHECK(std::fabs(a->dot3(x.data(), y.data(), z.data(), n) -
                    s.dot3(x.data(), y.data(), z.data(), n)) < 1e-10 * n);
    CHECK(a->vmax(x.data(), n) == s.vmax(x.data(), n));
  }

  SUBCASE("vnorm_quantile") {
    auto p = random_vec(n, 1e-12, 1.0 - 1e-12, 7);
    std::vector<double> qa(n), qs(n);
    a->vnorm_quantile(p.data(), qa.data(), n);
    s.vnorm_quantile(p.data(), qs.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(qa[i] - qs[i]) < 1e-12 * (1.0 + std::fabs(qs[i])));
  }
}

TEST_CASE("sampling quantile tracks the refined inverse cdf") {
  const auto& s = kernels::scalar();
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double p = rng.next_double();
    double q;
    s.vnorm_quantile(&p, &q, 1);
    CHECK(std::fabs(q - norm_quantile(p)) < 2e-9 * (1.0 + std::fabs(q)));
  }
}

TEST_CASE("kernel log-I0 matches the special-function entry point") {
  const auto& k = kernels::active();
  for (double x : {0.0, 0.3, 1.0, 7.5, 14.9, 15.0, 15.5, 40.0, 2000.0}) {
    double out;
    k.vlog_i0(&x, &out, 1);
    CHECK(std::fabs(out - log_bessel_i0(x)) <= 5e-14 * (1.0 + std::fabs(out)));
  }
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42, 0), b(42, 0), c(42, 1);
  bool same = true, distinct = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t x = a.next_u64();
    same = same && (x == b.next_u64());
    distinct = distinct || (x != c.next_u64());
  }
  CHECK(same);
  CHECK(distinct);
}

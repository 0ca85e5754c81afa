#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "test_helpers.hpp"
#include "vscope/spectral.hpp"

using namespace vscope;
using vscope::test::max_abs;
using vscope::test::max_abs_diff;
using vscope::test::sample;

namespace {
constexpr double pi = std::numbers::pi;

double rel_l2(std::span<const double> a, std::span<const double> b) {
  double d = 0.0, n = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    n += b[i] * b[i];
  }
  return std::sqrt(d / n);
}
}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(6), ValidationError);
  CHECK_THROWS_AS(Grid(9), ValidationError);
  CHECK_THROWS_AS(Grid(8, -1.0), ValidationError);
  Grid g(8);
  CHECK(g.spacing() == doctest::Approx(2 * pi / 8));
  CHECK(g.size() == 512u);
  const Vec3 d = g.displacement({0.1, 2 * pi - 0.1, pi}, {0, 0, 0});
  CHECK(d[0] == doctest::Approx(0.1));
  CHECK(d[1] == doctest::Approx(-0.1));
}

TEST_CASE("transform: constant field has only the zero mode") {
  Grid g(16);
  ScalarField f(g);
  for (auto& v : f.values()) v = 3.25;
  Spectrum s = to_spectral(f);
  CHECK(s[0].real() == doctest::Approx(3.25));
  double rest = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) rest = std::max(rest, std::abs(s[i]));
  CHECK(rest < 1e-14);
}

TEST_CASE("transform: sin(x) is a single mode pair") {
  // Hand DFT at N = 8: (1/8) sum_j sin(t_j) e^{-i t_j} = (1/8)(-4i) = -i/2 at k = 1.
  for (int n : {8, 32}) {
    Grid g(n);
    Spectrum s = to_spectral(sample(g, [](const Vec3& x) { return std::sin(x[0]); }));
    const std::size_t k1 = s.index(1, 0, 0);
    CHECK(std::abs(s[k1] - Complex(0.0, -0.5)) < 1e-14);
    double rest = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != k1) rest = std::max(rest, std::abs(s[i]));
    CHECK(rest < 1e-14);
  }
}

TEST_CASE("transform: round trip and Parseval on random fields") {
  Grid g(32);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ScalarField f = vscope::test::random_scalar(g, seed);
    Spectrum s = to_spectral(f);
    ScalarField back = to_physical(s);
    CHECK(rel_l2(back.values(), f.values()) < 1e-12);
    double phys = 0.0;
    for (double v : f.values()) phys += v * v;
    phys /= static_cast<double>(g.size());
    CHECK(std::abs(s.power() - phys) / phys < 1e-12);
  }
}

TEST_CASE("transform rejects non-finite input") {
  Grid g(8);
  ScalarField f(g);
  f[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(to_spectral(f), ValidationError);
  f[5] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(to_spectral(f), ValidationError);
}

TEST_CASE("curl examples") {
  Grid g(32);
  SUBCASE("u = (sin z, 0, 0) gives w = (0, cos z, 0)") {
    VectorField u = sample(g, [](const Vec3& x) { return Vec3{std::sin(x[2]), 0, 0}; });
    VectorField w = curl(u);
    VectorField expect = sample(g, [](const Vec3& x) { return Vec3{0, std::cos(x[2]), 0}; });
    for (int a = 0; a < 3; ++a) CHECK(max_abs_diff(w.component(a), expect.component(a)) < 1e-12);
  }
  SUBCASE("constant u has zero curl") {
    VectorField u = sample(g, [](const Vec3&) { return Vec3{1.5, -2.0, 0.25}; });
    VectorField w = curl(u);
    for (int a = 0; a < 3; ++a) CHECK(max_abs(w.component(a)) < 1e-13);
  }
  SUBCASE("ABC flow is Beltrami") {
    VectorField u = sample(g, [](const Vec3& x) {
      return Vec3{std::sin(x[2]) + std::cos(x[1]), std::sin(x[0]) + std::cos(x[2]), std::sin(x[1]) + std::cos(x[0])};
    });
    VectorField w = curl(u);
    for (int a = 0; a < 3; ++a) CHECK(max_abs_diff(w.component(a), u.component(a)) < 1e-12);
  }
}

TEST_CASE("fourier resampling") {
  const Grid g(16), fine(40);
  auto f = [](const Vec3& x) {
    return Vec3{std::sin(x[0]) * std::cos(3 * x[1]), std::cos(7 * x[2]) - 0.5, std::sin(x[0] + 2 * x[1] - 5 * x[2])};
  };
  const VectorField up = spectral_resample(sample(g, f), fine.n());
  REQUIRE(up.grid() == fine);
  const VectorField expect = sample(fine, f);
  for (int a = 0; a < 3; ++a) CHECK(max_abs_diff(up.component(a), expect.component(a)) < 1e-12);
  CHECK_THROWS_AS(spectral_resample(sample(fine, f), 16), ValidationError);
}

TEST_CASE("strain examples") {
  Grid g(32);
  SUBCASE("constant u") {
    StrainTensor s = strain(sample(g, [](const Vec3&) { return Vec3{1, 2, 3}; }));
    for (const auto& c : s.components) CHECK(max_abs(c) < 1e-13);
  }
  SUBCASE("u = (sin z, 0, 0): only S13 = cos(z)/2") {
    StrainTensor s = strain(sample(g, [](const Vec3& x) { return Vec3{std::sin(x[2]), 0, 0}; }));
    ScalarField half_cos = sample(g, [](const Vec3& x) { return 0.5 * std::cos(x[2]); });
    for (int c = 0; c < 6; ++c) {
      if (c == StrainTensor::xz)
        CHECK(max_abs_diff(s.components[c], half_cos.values()) < 1e-13);
      else
        CHECK(max_abs(s.components[c]) < 1e-13);
    }
    CHECK(s.get(2, 0, 17) == s.get(0, 2, 17));
  }
  SUBCASE("ABC flow matches centered finite differences to O(h^2)") {
    auto abc = [](const Vec3& x) {
      return Vec3{std::sin(x[2]) + std::cos(x[1]), std::sin(x[0]) + std::cos(x[2]), std::sin(x[1]) + std::cos(x[0])};
    };
    for (int n : {16, 32}) {
      Grid gg(n);
      VectorField u = sample(gg, abc);
      StrainTensor s = strain(u);
      double err = 0.0;
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) {
            const std::size_t idx = gg.index(i, j, k);
            auto fd = [&](int comp, int axis) {
              int ip[3] = {i, j, k}, im[3] = {i, j, k};
              ip[axis] += 1;
              im[axis] -= 1;
              return (u.component(comp)[gg.wrapped_index(ip[0], ip[1], ip[2])] -
                      u.component(comp)[gg.wrapped_index(im[0], im[1], im[2])]) /
                     (2 * gg.spacing());
            };
            for (int r = 0; r < 3; ++r)
              for (int c = 0; c < 3; ++c) err = std::max(err, std::abs(s.get(r, c, idx) - 0.5 * (fd(r, c) + fd(c, r))));
          }
      // Centered differences of sin/cos carry error h^2/6 at unit wavenumber.
      const double h = gg.spacing();
      CHECK(err < h * h / 6 * 1.01);
      CHECK(err > h * h / 6 * 0.5);
    }
  }
}

TEST_CASE("vst_density examples") {
  SUBCASE("algebraic: S = diag(1,1,-2), w = e_z gives -2") {
    Grid g(8);
    StrainTensor s(g);
    VectorField w(g);
    s.components[StrainTensor::xx][3] = 1;
    s.components[StrainTensor::yy][3] = 1;
    s.components[StrainTensor::zz][3] = -2;
    w.component(2)[3] = 1;
    CHECK(vst_density(s, w)[3] == doctest::Approx(-2.0));
  }
  SUBCASE("shear u = (sin z, 0, 0) has zero stretching") {
    Grid g(16);
    VectorField u = sample(g, [](const Vec3& x) { return Vec3{std::sin(x[2]), 0, 0}; });
    ScalarField d = vst_density(strain(u), curl(u));
    CHECK(max_abs(d.values()) < 1e-13);
  }
  SUBCASE("zero vorticity") {
    Grid g(16);
    VectorField u = vscope::test::random_vector(g, 4);
    CHECK(max_abs(vst_density(strain(u), VectorField(g)).values()) == 0.0);
  }
  SUBCASE("grid mismatch") { CHECK_THROWS_AS(vst_density(StrainTensor(Grid(8)), VectorField(Grid(16))), ValidationError); }
}

TEST_CASE("integrate examples") {
  Grid g(16);
  ScalarField one = sample(g, [](const Vec3&) { return 1.0; });
  CHECK(integrate(one) == doctest::Approx(std::pow(2 * pi, 3)).epsilon(1e-14));
  ScalarField s2 = sample(g, [](const Vec3& x) { return std::sin(x[0]) * std::sin(x[0]); });
  CHECK(integrate(s2) == doctest::Approx(std::pow(2 * pi, 3) / 2).epsilon(1e-13));
  ScalarField f = vscope::test::random_scalar(g, 9);
  ScalarField w = vscope::test::random_scalar(g, 10);
  for (auto& v : f.values()) v = std::abs(v);
  for (auto& v : w.values()) v = v * v;
  CHECK(integrate(f, w) >= 0.0);
  CHECK_THROWS_AS(integrate(f, ScalarField(Grid(8))), ValidationError);
}

TEST_CASE("operator identities on random fields") {
  Grid g(32);
  for (std::uint64_t seed : {11u, 12u}) {
    // curl(grad phi) = 0
    ScalarField phi = to_physical(to_spectral(vscope::test::random_scalar(g, seed)));
    VectorField grad = gradient(phi);
    VectorField cg = curl(grad);
    double gnorm = 0.0;
    for (int a = 0; a < 3; ++a) gnorm = std::max(gnorm, max_abs(grad.component(a)));
    for (int a = 0; a < 3; ++a) CHECK(max_abs(cg.component(a)) <= 1e-10 * gnorm);

    // div(curl u) = 0
    VectorField u = vscope::test::random_vector(g, seed + 100);
    VectorField w = curl(u);
    ScalarField dw = divergence(w);
    CHECK(max_abs(dw.values()) <= 1e-10 * max_abs(w.component(0)));
    CHECK(relative_divergence(w) < 1e-10);

    // S w . w equals (w . grad) u . w computed from the full gradient.
    VectorField v = vscope::test::smooth_random_vector(g, seed + 200);
    VectorSpectrum vs = to_spectral(v);
    project_solenoidal(vs);
    v = to_physical(vs);
    VectorField om = curl(v);
    ScalarField a = vst_density(strain(v), om);
    ScalarField b = stretching_density(velocity_gradient(v), om);
    CHECK(max_abs_diff(a.values(), b.values()) <= 1e-10 * max_abs(b.values()));
    StrainTensor s = strain(v);
    double tr = 0.0, smax = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      tr = std::max(tr, std::abs(s.trace(i)));
      smax = std::max(smax, std::abs(s.components[0][i]));
    }
    CHECK(tr <= 1e-10 * smax);
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <thread>
#include <vector>

#include "qadia/noise.hpp"

using namespace qadia;
using Catch::Approx;

namespace {

struct Moments {
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  double se1 = 0, se2 = 0, se3 = 0, se4 = 0;
};

// Moments of final Phi over n_paths seeded realizations, with standard errors.
Moments final_phi_moments(const NoiseSpec& spec, const std::vector<double>& grid,
                          int n_paths, std::uint64_t base) {
  std::vector<double> sums(8, 0.0);
  const int n_threads = 2;
  std::vector<std::vector<double>> partial(n_threads, std::vector<double>(8, 0.0));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_threads; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n_paths; i += n_threads) {
        const double x = sample_path(spec, grid, derive_seed(base, i)).phi.back();
        double p = x;
        for (int q = 0; q < 8; ++q) {
          partial[w][q] += p;
          p *= x;
        }
      }
    });
  for (auto& th : pool) th.join();
  for (int w = 0; w < n_threads; ++w)
    for (int q = 0; q < 8; ++q) sums[q] += partial[w][q];

  Moments m;
  const double n = n_paths;
  m.m1 = sums[0] / n;
  m.m2 = sums[1] / n;
  m.m3 = sums[2] / n;
  m.m4 = sums[3] / n;
  m.se1 = std::sqrt(std::max(0.0, sums[1] / n - m.m1 * m.m1) / n);
  m.se2 = std::sqrt(std::max(0.0, sums[3] / n - m.m2 * m.m2) / n);
  m.se3 = std::sqrt(std::max(0.0, sums[5] / n - m.m3 * m.m3) / n);
  m.se4 = std::sqrt(std::max(0.0, sums[7] / n - m.m4 * m.m4) / n);
  return m;
}

}  // namespace

TEST_CASE("path validity and reproducibility") {
  const auto grid = uniform_grid(1.0, 100);
  SECTION("none kind gives the zero path") {
    const NoisePath p = sample_path(NoiseSpec::none(), grid, 12);
    for (double phi : p.phi) CHECK(phi == 0.0);
  }
  SECTION("identical spec, grid and seed reproduce bit-identically") {
    for (const NoiseSpec& spec : {NoiseSpec::gaussian_white(0.7), NoiseSpec::shot(0.7, 50.0)}) {
      const NoisePath a = sample_path(spec, grid, 99);
      const NoisePath b = sample_path(spec, grid, 99);
      CHECK(a.phi == b.phi);
      const NoisePath c = sample_path(spec, grid, 100);
      CHECK(a.phi != c.phi);
    }
  }
  SECTION("phi starts at zero") {
    const NoisePath p = sample_path(NoiseSpec::gaussian_white(1.0), grid, 5);
    CHECK(p.phi.front() == 0.0);
  }
  SECTION("non-uniform grid is refused") {
    std::vector<double> bad = grid;
    bad[50] += 1e-3;
    CHECK_THROWS_AS(sample_path(NoiseSpec::gaussian_white(1.0), bad, 1), ConfigError);
  }
  SECTION("spec invariants") {
    NoiseSpec s = NoiseSpec::shot(1.0, 0.0);
    CHECK_THROWS_AS(s.validate(), ConfigError);
    NoiseSpec d = NoiseSpec::deterministic(1.0, 0.0);
    CHECK_THROWS_AS(d.validate(), ConfigError);
    NoiseSpec neg = NoiseSpec::gaussian_white(-1.0);
    CHECK_THROWS_AS(neg.validate(), ConfigError);
  }
}

TEST_CASE("gaussian increments have the calibrated variance") {
  // per-step std sqrt(Gamma h) = 0.1 for J = j0 = 1, h = 0.01
  const auto grid = uniform_grid(10.0, 1000);
  const NoisePath p = sample_path(NoiseSpec::gaussian_white(1.0), grid, 4242);
  double s2 = 0;
  for (std::size_t i = 1; i < p.phi.size(); ++i) s2 += sqr(p.phi[i] - p.phi[i - 1]);
  const double sd = std::sqrt(s2 / 1000);
  // chi^2 spread of the sample std at n=1000 is ~2.2% per sigma
  CHECK(sd == Approx(0.1).margin(4 * 0.1 / std::sqrt(2.0 * 1000)));
}

TEST_CASE("increments are independent and zero-mean") {
  const auto grid = uniform_grid(1.0, 2000);
  const NoisePath p = sample_path(NoiseSpec::gaussian_white(1.0), grid, 31);
  std::vector<double> inc(2000);
  double mean = 0;
  for (int i = 0; i < 2000; ++i) {
    inc[i] = p.phi[i + 1] - p.phi[i];
    mean += inc[i];
  }
  mean /= 2000;
  double var = 0;
  for (double x : inc) var += sqr(x - mean);
  var /= 1999;
  for (int lag : {1, 2, 5}) {
    double acf = 0;
    for (int i = 0; i + lag < 2000; ++i) acf += (inc[i] - mean) * (inc[i + lag] - mean);
    acf /= (1999 - lag) * var;
    CHECK(std::abs(acf) < 4.0 / std::sqrt(2000.0));
  }
}

TEST_CASE("zero mean of Phi over many seeds") {
  const auto grid = uniform_grid(1.0, 50);
  for (const NoiseSpec& spec : {NoiseSpec::gaussian_white(1.0), NoiseSpec::shot(1.0, 200.0)}) {
    const int n = 100000;
    const Moments m = final_phi_moments(spec, grid, n, 7);
    CHECK(std::abs(m.m1) < 4 * m.se1);
  }
}

TEST_CASE("shot noise converges to the gaussian white limit (four moments)") {
  const auto grid = uniform_grid(1.0, 100);
  const int n = 100000;
  const Moments shot = final_phi_moments(NoiseSpec::shot(1.0, 1e4), grid, n, 11);
  const Moments gauss = final_phi_moments(NoiseSpec::gaussian_white(1.0), grid, n, 13);
  CHECK(std::abs(shot.m1 - gauss.m1) < 3 * std::hypot(shot.se1, gauss.se1));
  CHECK(std::abs(shot.m2 - gauss.m2) < 3 * std::hypot(shot.se2, gauss.se2));
  CHECK(std::abs(shot.m3 - gauss.m3) < 3 * std::hypot(shot.se3, gauss.se3));
  CHECK(std::abs(shot.m4 - gauss.m4) < 3 * std::hypot(shot.se4, gauss.se4));
  // and against the exact gaussian values Gamma t and 3 (Gamma t)^2
  CHECK(std::abs(gauss.m2 - 1.0) < 3 * gauss.se2);
  CHECK(std::abs(gauss.m4 - 3.0) < 3 * gauss.se4);
}

TEST_CASE("deterministic modulation integrates in closed form") {
  const double A = 1.0, nu = 2 * pi;
  const auto grid = uniform_grid(2.0, 800);
  const NoisePath p = sample_path(NoiseSpec::deterministic(A, nu), grid, 0);
  for (std::size_t i = 0; i < p.phi.size(); ++i)
    CHECK(p.phi[i] == Approx((A / nu) * (1.0 - std::cos(nu * p.grid[i]))).margin(1e-12));
  // full period contributes zero phase at constant k
  const std::size_t period = 400;  // nu * t = 2 pi at t = 1
  CHECK(noise_phase(p, 0.25, 0.25 + 1.0) == Approx(0.0).margin(1e-12));
  CHECK(noise_phase(p, (std::size_t)100, 100 + period) == Approx(0.0).margin(1e-12));
}

TEST_CASE("noise phase queries") {
  const auto grid = uniform_grid(1.0, 100);
  const NoisePath p = sample_path(NoiseSpec::gaussian_white(1.0), grid, 21);
  SECTION("s = t gives zero") {
    CHECK(noise_phase(p, (std::size_t)17, (std::size_t)17) == 0.0);
  }
  SECTION("constant k reduces to the Phi difference") {
    std::vector<double> k(grid.size(), 1.0);
    CHECK(noise_phase(p, k, 3, 88) == Approx(p.phi[88] - p.phi[3]).epsilon(1e-12));
  }
  SECTION("off-grid time queries are refused") {
    CHECK_THROWS_AS(noise_phase(p, 0.005, 0.5), ConfigError);
    CHECK_NOTHROW(noise_phase(p, 0.01, 0.5));
  }
  SECTION("out-of-range indices are refused") {
    CHECK_THROWS_AS(noise_phase(p, (std::size_t)5, (std::size_t)1000), ConfigError);
  }
}

TEST_CASE("noise phase variance matches Gamma (t-s) k^2") {
  const auto grid = uniform_grid(1.0, 100);
  const double k = 2.0;
  std::vector<double> kpath(grid.size(), k);
  const int n = 100000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const NoisePath p = sample_path(NoiseSpec::gaussian_white(1.0), grid, derive_seed(3, i));
    const double x = noise_phase(p, kpath, 20, 90);  // t - s = 0.7
    s1 += x;
    s2 += x * x;
  }
  const double var = s2 / n - sqr(s1 / n);
  const double want = 1.0 * 0.7 * k * k;
  // var of the sample variance ~ 2 var^2 / n
  CHECK(std::abs(var - want) < 3 * want * std::sqrt(2.0 / n));
}

TEST_CASE("analytic dephasing factor") {
  SECTION("limits") {
    CHECK(analytic_dephasing(NoiseSpec::gaussian_white(0.0), 2.0, 0.0, 1.0) == 1.0);
    CHECK(analytic_dephasing(NoiseSpec::gaussian_white(1.0), 2.0, 0.3, 0.3) == 1.0);
    CHECK_THROWS_AS(analytic_dephasing(NoiseSpec::deterministic(1.0, 1.0), 2.0, 0.0, 1.0),
                    UnsupportedError);
  }
  SECTION("closed form e^-2 and Monte Carlo agreement") {
    const double k = 2.0;
    const double want = analytic_dephasing(NoiseSpec::gaussian_white(1.0), k, 0.0, 1.0);
    CHECK(want == Approx(std::exp(-2.0)).epsilon(1e-12));

    const auto grid = uniform_grid(1.0, 100);
    std::vector<double> kpath(grid.size(), k);
    const int n = 100000;
    double re = 0, re2 = 0;
    for (int i = 0; i < n; ++i) {
      const NoisePath p = sample_path(NoiseSpec::gaussian_white(1.0), grid, derive_seed(17, i));
      const double x = std::cos(noise_phase(p, kpath, 0, 100));
      re += x;
      re2 += x * x;
    }
    const double mean = re / n;
    const double se = std::sqrt((re2 / n - mean * mean) / n);
    CHECK(std::abs(mean - want) < 3 * se);
  }
}

TEST_CASE("derived sub-seeds decorrelate trajectories") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  // same indices, same base: stable across calls
  CHECK(derive_seed(123, 45) == derive_seed(123, 45));
}

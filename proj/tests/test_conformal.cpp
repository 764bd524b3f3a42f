#include "nwfr/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "nwfr/errors.hpp"
#include "nwfr/numeric.hpp"
#include "nwfr/rng.hpp"

using namespace nwfr;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Curve const_curve(double c) {
  return {make_bspline_basis(0.0, 1.0, 1, 1),
          Eigen::VectorXd::Constant(1, c)};
}

// piecewise-constant curve with `pieces` equal steps on [0,1]
Curve step_curve(const std::vector<double>& levels) {
  const int k = static_cast<int>(levels.size());
  Curve c{make_bspline_basis(0.0, 1.0, k, 1), Eigen::VectorXd(k)};
  for (int i = 0; i < k; ++i) c.coeffs[i] = levels[i];
  return c;
}

ModulationFn unit_modulation(const std::vector<double>& grid) {
  return {grid, std::vector<double>(grid.size(), 1.0), 1e-6};
}

// graph with four blocks of equal size, unit weights
Network blocks_graph(const std::vector<int>& sizes, std::uint64_t seed) {
  SbmSpec spec;
  spec.block_sizes = sizes;
  spec.intra_p = {0.8};
  spec.inter_p = 0.1;
  spec.weight_rule = WeightRule::One();
  return generate_wsbm(spec, seed);
}

Partition label_blocks(const std::vector<int>& sizes) {
  Partition p;
  p.k = static_cast<int>(sizes.size());
  for (int c = 0; c < p.k; ++c) {
    for (int i = 0; i < sizes[c]; ++i) p.labels.push_back(c);
  }
  return p;
}

// exchangeable dataset: response coefficients independent of the covariates
FunctionalDataset iid_dataset(std::uint64_t seed, int n, int k) {
  Rng rng(seed);
  FunctionalDataset d;
  d.response_basis = make_bspline_basis(0.0, 1.0, k, 3);
  d.response_coeffs.resize(n, k);
  FunctionalDataset::Covariate cov;
  cov.basis = d.response_basis;
  cov.coeffs.resize(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      d.response_coeffs(i, j) = rng.normal();
      cov.coeffs(i, j) = rng.normal();
    }
  }
  d.covariates.push_back(std::move(cov));
  return d;
}

}  // namespace

TEST_CASE("stratified split") {
  SUBCASE("four communities of 25 at half fraction") {
    const std::vector<int> sizes{25, 25, 25, 25};
    const auto g = blocks_graph(sizes, 3);
    const auto part = label_blocks(sizes);
    const auto plan = stratified_split(g, part, 0.5, 42);
    CHECK(plan.calibration.size() == 50);
    CHECK(plan.training.size() == 50);
    std::vector<int> per(4, 0);
    for (int v : plan.calibration) ++per[part.labels[v]];
    for (int c = 0; c < 4; ++c) {
      CHECK(per[c] >= 12);
      CHECK(per[c] <= 13);
    }
  }

  SUBCASE("a community of two splits one and one") {
    const auto g = build_graph(2, {{0, 1, 1.0}});
    Partition part{{0, 0}, 1};
    const auto plan = stratified_split(g, part, 0.5, 7);
    CHECK(plan.training.size() == 1);
    CHECK(plan.calibration.size() == 1);
    CHECK(plan.training[0] != plan.calibration[0]);
  }

  SUBCASE("seeds move the plan but not the proportions") {
    const std::vector<int> sizes{30, 20, 10};
    const auto g = blocks_graph(sizes, 5);
    const auto part = label_blocks(sizes);
    std::vector<std::vector<int>> plans;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto plan = stratified_split(g, part, 0.4, seed);
      // disjoint and covering
      std::set<int> both(plan.training.begin(), plan.training.end());
      for (int v : plan.calibration) CHECK(both.insert(v).second);
      CHECK(both.size() == 60);
      std::vector<int> per(3, 0);
      for (int v : plan.calibration) ++per[part.labels[v]];
      CHECK(per[0] == 12);
      CHECK(per[1] == 8);
      CHECK(per[2] == 4);
      plans.push_back(plan.calibration);
    }
    int distinct = 0;
    for (std::size_t i = 1; i < plans.size(); ++i) {
      if (plans[i] != plans[0]) ++distinct;
    }
    CHECK(distinct >= 15);
  }

  SUBCASE("strict one-per-community mode") {
    const std::vector<int> sizes{25, 25, 25, 25};
    const auto g = blocks_graph(sizes, 3);
    const auto plan = stratified_split(g, label_blocks(sizes), 0.5, 1,
                                       SplitMode::one_per_community);
    CHECK(plan.calibration.size() == 4);
    std::vector<int> per(4, 0);
    for (int v : plan.calibration) ++per[label_blocks(sizes).labels[v]];
    for (int c = 0; c < 4; ++c) CHECK(per[c] == 1);
  }

  SUBCASE("eligible subset bounds both sides") {
    const std::vector<int> sizes{10, 10};
    const auto g = blocks_graph(sizes, 9);
    const auto part = label_blocks(sizes);
    std::vector<int> eligible{0, 1, 2, 3, 10, 11, 12, 13};
    const auto plan = stratified_split(g, part, 0.5, 3,
                                       SplitMode::proportional, eligible);
    const std::set<int> allowed(eligible.begin(), eligible.end());
    for (int v : plan.training) CHECK(allowed.count(v) == 1);
    for (int v : plan.calibration) CHECK(allowed.count(v) == 1);
    CHECK(plan.training.size() + plan.calibration.size() == eligible.size());
  }

  SUBCASE("degenerate fractions fail") {
    const auto g = build_graph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
    Partition part{{0, 0, 0, 0}, 1};
    CHECK_THROWS_WITH_AS(stratified_split(g, part, 0.05, 1),
                         doctest::Contains("EmptySide"), Error);
    CHECK_THROWS_AS(stratified_split(g, part, 0.0, 1), Error);
    CHECK_THROWS_AS(stratified_split(g, part, 1.0, 1), Error);
  }
}

TEST_CASE("modulation function") {
  const auto grid = make_grid(0.0, 1.0, 101);

  SUBCASE("zero residuals collapse to the floor") {
    const auto s = modulation_function({{const_curve(1.5), const_curve(1.5)}},
                                       grid);
    CHECK(s.floor_value == 1e-6);
    for (double v : s.values) CHECK(v == 1e-6);
  }

  SUBCASE("one constant residual") {
    const auto s = modulation_function({{const_curve(2.0), const_curve(0.0)}},
                                       grid);
    for (double v : s.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.floor_value == doctest::Approx(2e-3));
  }

  SUBCASE("two constant residuals give the RMS") {
    const auto s = modulation_function({{const_curve(1.0), const_curve(0.0)},
                                        {const_curve(3.0), const_curve(0.0)}},
                                       grid);
    for (double v : s.values) {
      CHECK(v == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    }
  }

  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(modulation_function({}, grid), Error);
  }
}

TEST_CASE("nonconformity scores") {
  const auto grid = make_grid(0.0, 1.0, 201);
  const auto s1 = unit_modulation(grid);

  SUBCASE("perfect prediction scores zero") {
    CHECK(nonconformity(const_curve(3.0), const_curve(3.0), s1,
                        ScoreKind::h2) == 0.0);
    CHECK(nonconformity(const_curve(3.0), const_curve(3.0), s1,
                        ScoreKind::hinf) == 0.0);
  }

  SUBCASE("constant residual on the unit domain") {
    const double h2 =
        nonconformity(const_curve(2.0), const_curve(0.0), s1, ScoreKind::h2);
    const double hi =
        nonconformity(const_curve(2.0), const_curve(0.0), s1, ScoreKind::hinf);
    CHECK(h2 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(hi == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("a narrow spike separates the two kinds") {
    std::vector<double> levels(100, 0.0);
    levels[50] = 10.0;  // spike of height 10 on [0.50, 0.51)
    const auto pred = step_curve(levels);
    const auto obs = step_curve(std::vector<double>(100, 0.0));
    const double hi = nonconformity(pred, obs, s1, ScoreKind::hinf);
    const double h2 = nonconformity(pred, obs, s1, ScoreKind::h2);
    CHECK(hi == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(h2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(h2 <= hi);
  }

  SUBCASE("h2 never exceeds hinf on a unit domain") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> lp(8), lo(8);
      for (int i = 0; i < 8; ++i) {
        lp[i] = rng.normal();
        lo[i] = rng.normal();
      }
      const auto pred = step_curve(lp);
      const auto obs = step_curve(lo);
      CHECK(nonconformity(pred, obs, s1, ScoreKind::h2) <=
            nonconformity(pred, obs, s1, ScoreKind::hinf) + 1e-12);
    }
  }

  SUBCASE("mismatched inputs are rejected") {
    CHECK_THROWS_WITH_AS(
        nonconformity(const_curve(1.0), step_curve({1.0, 2.0}), s1,
                      ScoreKind::h2),
        doctest::Contains("BasisMismatch"), Error);
    ModulationFn bad{{-0.5, 0.5}, {1.0, 1.0}, 1e-6};
    CHECK_THROWS_WITH_AS(
        nonconformity(const_curve(1.0), const_curve(0.0), bad, ScoreKind::h2),
        doctest::Contains("GridMismatch"), Error);
  }
}

TEST_CASE("conformal quantile") {
  SUBCASE("order statistic at alpha 0.05") {
    std::vector<double> scores;
    for (int i = 19; i >= 1; --i) scores.push_back(i);
    CHECK(conformal_quantile(scores, 0.05) == 19.0);
  }

  SUBCASE("too few scores yield an infinite radius") {
    CHECK(conformal_quantile({1.0, 2.0, 3.0}, 0.05) == kInf);
  }

  SUBCASE("ninety-fifth smallest of ninety-nine") {
    std::vector<double> scores;
    for (int i = 1; i <= 99; ++i) scores.push_back(i);
    Rng rng(5);
    rng.shuffle(scores);
    CHECK(conformal_quantile(scores, 0.05) == 95.0);
  }

  SUBCASE("nondecreasing as alpha falls") {
    Rng rng(17);
    std::vector<double> scores(40);
    for (auto& s : scores) s = rng.uniform(0.0, 10.0);
    double prev = 0.0;
    for (double alpha : {0.5, 0.3, 0.2, 0.1, 0.05, 0.01}) {
      const double k = conformal_quantile(scores, alpha);
      CHECK(k >= prev);
      prev = k;
    }
  }

  SUBCASE("input validation") {
    CHECK_THROWS_WITH_AS(conformal_quantile({}, 0.1),
                         doctest::Contains("EmptyScores"), Error);
    CHECK_THROWS_AS(conformal_quantile({1.0}, 0.0), Error);
    CHECK_THROWS_AS(conformal_quantile({1.0}, 1.0), Error);
  }
}

TEST_CASE("band construction") {
  const auto grid = make_grid(0.0, 1.0, 51);
  const auto s = unit_modulation(grid);

  SUBCASE("zero radius degenerates to the center") {
    const auto band = build_band(const_curve(1.2), 0.0, s);
    const auto lo = band_lower_values(band);
    const auto hi = band_upper_values(band);
    const auto c = band_center_values(band);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      CHECK(lo[t] == c[t]);
      CHECK(hi[t] == c[t]);
      CHECK(c[t] == doctest::Approx(1.2));
    }
  }

  SUBCASE("unit radius and unit modulation give width two") {
    const auto band = build_band(const_curve(0.0), 1.0, s);
    const auto lo = band_lower_values(band);
    const auto hi = band_upper_values(band);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      CHECK(hi[t] - lo[t] == doctest::Approx(2.0).epsilon(1e-15));
    }
  }

  SUBCASE("infinite radius swallows everything downstream") {
    const auto band = build_band(const_curve(0.0), kInf, s);
    const auto rep = evaluate({band}, {const_curve(123.0)}, 0.1, grid);
    CHECK(rep.cov_g == 1.0);
    CHECK(rep.cov_l == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.abw == kInf);
  }

  SUBCASE("band symmetry about the center") {
    Rng rng(3);
    std::vector<double> lv(6);
    for (auto& v : lv) v = rng.normal();
    const auto band = build_band(step_curve(lv), 1.7, s);
    const auto lo = band_lower_values(band);
    const auto hi = band_upper_values(band);
    const auto c = band_center_values(band);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      CHECK(hi[t] + lo[t] == doctest::Approx(2.0 * c[t]).epsilon(1e-12));
    }
  }

  SUBCASE("negative radius is rejected") {
    CHECK_THROWS_AS(build_band(const_curve(0.0), -1.0, s), Error);
  }
}

TEST_CASE("band evaluation") {
  const auto grid = make_grid(0.0, 1.0, 201);
  const auto s = unit_modulation(grid);
  const auto band0 = build_band(const_curve(0.0), 1.0, s);  // [-1, 1]

  SUBCASE("everything inside: interval score equals width") {
    const auto rep = evaluate({band0, band0},
                              {const_curve(0.5), const_curve(-0.3)}, 0.1, grid);
    CHECK(rep.cov_g == 1.0);
    CHECK(rep.cov_l == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.abw == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.interval_score == doctest::Approx(rep.abw).epsilon(1e-12));
  }

  SUBCASE("one curve entirely outside") {
    const auto rep = evaluate({band0, band0},
                              {const_curve(0.5), const_curve(5.0)}, 0.1, grid);
    CHECK(rep.cov_g == 0.5);
    CHECK(rep.cov_l == doctest::Approx(0.5).epsilon(1e-12));
    // miscoverage penalty: (2/alpha) * (5-1) on the whole domain, averaged
    CHECK(rep.interval_score ==
          doctest::Approx(2.0 + 0.5 * 20.0 * 4.0).epsilon(1e-9));
  }

  SUBCASE("outside on half the domain") {
    const auto obs = step_curve({0.0, 5.0});
    const auto rep = evaluate({band0, band0},
                              {const_curve(0.0), obs}, 0.1, grid);
    CHECK(rep.cov_g == 0.5);
    CHECK(rep.cov_l == doctest::Approx(0.75).epsilon(0.01));
  }

  SUBCASE("local coverage dominates global on random data") {
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<PredictionBand> bands;
      std::vector<Curve> obs;
      for (int i = 0; i < 5; ++i) {
        bands.push_back(
            build_band(const_curve(0.0), rng.uniform(0.3, 1.5), s));
        std::vector<double> lv(8);
        for (auto& v : lv) v = rng.normal(0.0, 1.2);
        obs.push_back(step_curve(lv));
      }
      const auto rep = evaluate(bands, obs, 0.1, grid);
      CHECK(rep.cov_l >= rep.cov_g);
      CHECK(rep.interval_score >= rep.abw - 1e-12);
      if (rep.cov_g == 1.0) {
        CHECK(rep.interval_score == doctest::Approx(rep.abw).epsilon(1e-12));
      }
    }
  }

  SUBCASE("count and grid mismatches") {
    CHECK_THROWS_WITH_AS(evaluate({band0}, {}, 0.1, grid),
                         doctest::Contains("LengthMismatch"), Error);
    const auto other = make_grid(0.0, 1.0, 11);
    CHECK_THROWS_WITH_AS(evaluate({band0}, {const_curve(0.0)}, 0.1, other),
                         doctest::Contains("GridMismatch"), Error);
  }
}

TEST_CASE("split conformal pipeline") {
  SUBCASE("coverage on exchangeable data") {
    // 160 vertices: 20 held out, the remaining 140 split 40/100
    double mean_cov = 0.0;
    int dominance = 0;
    const int reps = 50;
    for (int rep = 0; rep < reps; ++rep) {
      const auto g = generate_wsbm({{160}, {0.08}, 0.0, WeightRule::One()},
                                   2000 + rep);
      const auto d = iid_dataset(3000 + rep, 160, 5);
      std::vector<int> test;
      for (int v = 140; v < 160; ++v) test.push_back(v);
      const auto res = run_split_conformal(
          d, g, DistanceProvider::Uniform(), 1.0, 0.1, ScoreKind::hinf,
          100.0 / 140.0, 4000 + rep, test);
      CHECK(res.plan.calibration.size() == 100);
      mean_cov += res.report.cov_g;
      if (rep < 20) {
        const auto res2 = run_split_conformal(
            d, g, DistanceProvider::Uniform(), 1.0, 0.1, ScoreKind::h2,
            100.0 / 140.0, 4000 + rep, test);
        if (res.report.cov_g >= res2.report.cov_g &&
            res.report.abw >= res2.report.abw) {
          ++dominance;
        }
      }
    }
    mean_cov /= reps;
    CHECK(mean_cov >= 0.85);
    CHECK(mean_cov <= 1.0);
    CHECK(dominance >= 18);  // structural: hinf scores dominate h2
  }

  SUBCASE("radius grows as alpha falls, and runs are deterministic") {
    const auto g = generate_wsbm({{80}, {0.1}, 0.0, WeightRule::One()}, 11);
    const auto d = iid_dataset(13, 80, 5);
    std::vector<int> test{70, 71, 72, 73, 74, 75, 76, 77, 78, 79};
    const auto strict = run_split_conformal(d, g, DistanceProvider::Uniform(),
                                            1.0, 0.05, ScoreKind::hinf, 0.5,
                                            99, test);
    const auto loose = run_split_conformal(d, g, DistanceProvider::Uniform(),
                                           1.0, 0.5, ScoreKind::hinf, 0.5,
                                           99, test);
    CHECK(loose.k_s <= strict.k_s);

    const auto again = run_split_conformal(d, g, DistanceProvider::Uniform(),
                                           1.0, 0.05, ScoreKind::hinf, 0.5,
                                           99, test);
    CHECK(again.k_s == strict.k_s);
    CHECK(again.plan.calibration == strict.plan.calibration);
    CHECK(again.report.cov_g == strict.report.cov_g);
    CHECK(again.report.abw == strict.report.abw);
    for (std::size_t b = 0; b < again.bands.size(); ++b) {
      CHECK((again.bands[b].center.coeffs - strict.bands[b].center.coeffs)
                .norm() == 0.0);
    }
  }

  SUBCASE("marginal coverage over 200 fresh test draws") {
    const auto g = generate_wsbm({{340}, {0.05}, 0.0, WeightRule::One()}, 21);
    const auto d = iid_dataset(22, 340, 5);
    std::vector<int> test;
    for (int v = 140; v < 340; ++v) test.push_back(v);
    const auto res = run_split_conformal(
        d, g, DistanceProvider::Uniform(), 1.0, 0.1, ScoreKind::hinf,
        100.0 / 140.0, 5, test);
    const double mc_stderr = std::sqrt(0.1 * 0.9 / 200.0);
    CHECK(res.report.cov_g >= 1.0 - 0.1 - 3.0 * mc_stderr);
  }

  SUBCASE("holding out every vertex fails") {
    const auto g = generate_wsbm({{10}, {0.5}, 0.0, WeightRule::One()}, 2);
    const auto d = iid_dataset(1, 10, 4);
    std::vector<int> all(10);
    for (int i = 0; i < 10; ++i) all[i] = i;
    CHECK_THROWS_WITH_AS(
        run_split_conformal(d, g, DistanceProvider::Uniform(), 1.0, 0.1,
                            ScoreKind::h2, 0.5, 1, all),
        doctest::Contains("EmptySide"), Error);
  }
}

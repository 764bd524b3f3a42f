#include "nwfr/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "nwfr/errors.hpp"
#include "nwfr/numeric.hpp"
#include "nwfr/rng.hpp"

namespace nwfr {

const char* ew_name(EwRule e) {
  switch (e) {
    case EwRule::one: return "One";
    case EwRule::random: return "Random";
    case EwRule::in_out: return "InOut";
  }
  return "?";
}

const char* oc_name(OcRule o) {
  return o == OcRule::equal ? "Equal" : "Different";
}

const char* cbc_name(CbcRule c) { return c == CbcRule::low ? "Low" : "High"; }

EwRule parse_ew(const std::string& s) {
  if (s == "One" || s == "one") return EwRule::one;
  if (s == "Random" || s == "random") return EwRule::random;
  if (s == "InOut" || s == "inout") return EwRule::in_out;
  fail(Errc::invalid_argument, "unknown edge-weight rule '" + s + "'");
}

OcRule parse_oc(const std::string& s) {
  if (s == "Equal" || s == "equal") return OcRule::equal;
  if (s == "Different" || s == "different") return OcRule::different;
  fail(Errc::invalid_argument, "unknown community-size rule '" + s + "'");
}

CbcRule parse_cbc(const std::string& s) {
  if (s == "Low" || s == "low") return CbcRule::low;
  if (s == "High" || s == "high") return CbcRule::high;
  fail(Errc::invalid_argument, "unknown inter-link rule '" + s + "'");
}

std::vector<int> ScenarioSpec::sizes() const {
  std::vector<int> out(n_communities, 0);
  if (oc == OcRule::equal) {
    const int each = n_total / n_communities;
    for (auto& s : out) s = each;
    return out;
  }
  // fixed 15:20:30:35 composition, scaled by largest remainder
  const std::vector<double> share{0.15, 0.20, 0.30, 0.35};
  std::vector<double> quota(4);
  int assigned = 0;
  for (int c = 0; c < 4; ++c) {
    quota[c] = share[c] * n_total;
    out[c] = static_cast<int>(std::floor(quota[c]));
    assigned += out[c];
  }
  std::vector<int> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
  });
  for (int i = 0; assigned < n_total; ++i, ++assigned) out[order[i]] += 1;
  return out;
}

WeightRule ScenarioSpec::weight_rule() const {
  switch (ew) {
    case EwRule::one: return WeightRule::One();
    case EwRule::random: return WeightRule::Random();
    case EwRule::in_out: return WeightRule::InOut();
  }
  return WeightRule::One();
}

std::string ScenarioSpec::name() const {
  return std::string(ew_name(ew)) + "/" + oc_name(oc) + "/" + cbc_name(cbc);
}

int ScenarioSpec::id() const {
  return static_cast<int>(ew) * 4 + static_cast<int>(oc) * 2 +
         static_cast<int>(cbc);
}

ScenarioSpec make_scenario(EwRule ew, OcRule oc, CbcRule cbc,
                           const ScenarioOverrides& o) {
  ScenarioSpec s;
  s.ew = ew;
  s.oc = oc;
  s.cbc = cbc;
  s.n_total = o.n_total;
  s.n_communities = o.n_communities;
  s.k = o.k;
  s.order = o.order;
  s.noise_var = o.noise_var;
  if (s.n_communities < 1 || s.n_total < s.n_communities)
    fail(Errc::invalid_combination,
         "need at least one vertex per community");
  if (s.k < s.order || s.order < 1)
    fail(Errc::invalid_combination, "basis size must be at least the order");
  if (s.noise_var < 0.0)
    fail(Errc::invalid_combination, "noise variance must be nonnegative");
  if (oc == OcRule::equal && s.n_total % s.n_communities != 0)
    fail(Errc::invalid_combination,
         "equal community sizes need n_total divisible by the community count");
  if (oc == OcRule::different && s.n_communities != 4)
    fail(Errc::invalid_combination,
         "the unequal-size composition is defined for 4 communities");
  if (oc == OcRule::different) {
    for (int sz : s.sizes()) {
      if (sz < 1)
        fail(Errc::invalid_combination, "n_total too small for 4 communities");
    }
  }
  return s;
}

std::vector<ScenarioSpec> all_scenarios(const ScenarioOverrides& o) {
  std::vector<ScenarioSpec> out;
  for (EwRule ew : {EwRule::one, EwRule::random, EwRule::in_out}) {
    for (OcRule oc : {OcRule::equal, OcRule::different}) {
      for (CbcRule cbc : {CbcRule::low, CbcRule::high}) {
        out.push_back(make_scenario(ew, oc, cbc, o));
      }
    }
  }
  return out;
}

GeneratedInstance generate_instance(const ScenarioSpec& spec,
                                    std::uint64_t seed) {
  const auto sizes = spec.sizes();
  const int n = spec.n_total;
  const int k = spec.k;

  SbmSpec sbm;
  sbm.block_sizes = sizes;
  Rng pr(derive_seed(seed, 0x696e747261ull));
  for (int c = 0; c < spec.n_communities; ++c) {
    sbm.intra_p.push_back(pr.uniform(0.6, 0.8));
  }
  sbm.inter_p = spec.inter_p();
  sbm.weight_rule = spec.weight_rule();

  GeneratedInstance inst;
  inst.network = generate_wsbm(sbm, derive_seed(seed, 0x6772617068ull));

  inst.communities.k = spec.n_communities;
  inst.communities.labels.resize(n);
  {
    int v = 0;
    for (int c = 0; c < spec.n_communities; ++c) {
      for (int s = 0; s < sizes[c]; ++s) inst.communities.labels[v++] = c;
    }
  }

  const BasisSystem basis = make_bspline_basis(0.0, 1.0, k, spec.order);

  Rng br(derive_seed(seed, 0x62617365ull));
  Eigen::MatrixXd base(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) base(i, j) = br.normal();
  }
  // constant surface 1 in coefficient space: all-ones by partition of unity
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(k, k);
  std::vector<Eigen::MatrixXd> community_block(spec.n_communities);
  for (int c = 0; c < spec.n_communities; ++c) {
    switch (c % 4) {
      case 0: community_block[c] = base + 2.0 * ones; break;
      case 1: community_block[c] = -base - 2.0 * ones; break;
      case 2: community_block[c] = 2.0 * base - ones; break;
      case 3: community_block[c] = -2.0 * base + ones; break;
    }
  }
  inst.true_blocks.resize(n);
  for (int v = 0; v < n; ++v) {
    inst.true_blocks[v] = community_block[inst.communities.labels[v]];
  }

  Rng xr(derive_seed(seed, 0x636f76ull));
  Eigen::MatrixXd x(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) x(i, j) = xr.normal();
  }

  const GramMatrix j = gram_matrix(basis);
  Rng er(derive_seed(seed, 0x657073ull));
  const double sigma = std::sqrt(spec.noise_var);
  Eigen::MatrixXd y(n, k);
  for (int i = 0; i < n; ++i) {
    y.row(i) = x.row(i) * j * inst.true_blocks[i];
    for (int c = 0; c < k; ++c) y(i, c) += sigma * er.normal();
  }

  inst.dataset.response_basis = basis;
  inst.dataset.response_coeffs = std::move(y);
  inst.dataset.covariates.push_back({basis, std::move(x)});
  inst.dataset.include_intercept = false;
  return inst;
}

namespace {

struct Accum {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / values.size();
  }
  double sd() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / (values.size() - 1));
  }
};

std::vector<Curve> rows_as_curves(const BasisSystem& b,
                                  const Eigen::MatrixXd& coeffs) {
  std::vector<Curve> out;
  out.reserve(coeffs.rows());
  for (int i = 0; i < coeffs.rows(); ++i) {
    out.push_back({b, coeffs.row(i).transpose()});
  }
  return out;
}

}  // namespace

StudyReport run_study(const std::vector<ScenarioSpec>& scenarios,
                      const StudySettings& settings) {
  if (settings.reps < 1) fail(Errc::invalid_argument, "need at least one rep");
  if (scenarios.empty()) fail(Errc::invalid_argument, "no scenarios given");

  StudyReport report;
  for (const ScenarioSpec& spec : scenarios) {
    // metric accumulators keyed by (model, metric)
    std::map<std::pair<std::string, std::string>, Accum> acc;
    const auto grid = make_grid(0.0, 1.0, settings.grid_points);

    for (int rep = 0; rep < settings.reps; ++rep) {
      const std::uint64_t rep_seed = derive_seed(
          settings.seed, static_cast<std::uint64_t>(spec.id()),
          static_cast<std::uint64_t>(rep));
      const auto note_failure = [&](const std::string& stage,
                                    const std::exception& e) {
        report.failures.push_back(spec.name() + " rep " + std::to_string(rep) +
                                  " [" + stage + "]: " + e.what());
      };

      GeneratedInstance inst;
      DistanceProvider geo;
      try {
        inst = generate_instance(spec, rep_seed);
        geo = DistanceProvider::NetworkGeodesic(geodesic_matrix(inst.network));
      } catch (const std::exception& e) {
        note_failure("generate", e);
        continue;
      }
      const auto observed =
          rows_as_curves(inst.dataset.response_basis,
                         inst.dataset.response_coeffs);
      std::vector<int> everyone(spec.n_total);
      for (int i = 0; i < spec.n_total; ++i) everyone[i] = i;

      double theta = 0.0;
      bool have_theta = false;
      if (settings.run_nwfr || settings.run_conformal) {
        try {
          theta = select_bandwidth(
              inst.dataset, geo,
              default_theta_grid(geo, spec.n_total), RidgePolicy::scaled(),
              rep_seed);
          have_theta = true;
          acc[{"nwfr", "theta"}].add(theta);
        } catch (const std::exception& e) {
          note_failure("bandwidth", e);
        }
      }

      if (settings.run_classic) {
        try {
          const auto fit = fit_all(inst.dataset, DistanceProvider::Uniform(),
                                   1.0, RidgePolicy::scaled(), everyone);
          std::vector<Curve> pred;
          pred.reserve(spec.n_total);
          for (int i = 0; i < spec.n_total; ++i) {
            pred.push_back(predict_vertex(fit, i));
          }
          const auto g = gof(observed, pred, grid);
          acc[{"classic", "rimse"}].add(g.rimse);
          acc[{"classic", "r2int"}].add(g.r2_integrated);
        } catch (const std::exception& e) {
          note_failure("classic", e);
        }
      }

      if (settings.run_nwfr && have_theta) {
        try {
          const auto fit = fit_all(inst.dataset, geo, theta,
                                   RidgePolicy::scaled(), everyone);
          std::vector<Curve> pred;
          pred.reserve(spec.n_total);
          for (int i = 0; i < spec.n_total; ++i) {
            pred.push_back(predict_vertex(fit, i));
          }
          const auto g = gof(observed, pred, grid);
          acc[{"nwfr", "rimse"}].add(g.rimse);
          acc[{"nwfr", "r2int"}].add(g.r2_integrated);
        } catch (const std::exception& e) {
          note_failure("nwfr", e);
        }
      }

      if (settings.run_conformal && have_theta) {
        // held-out test vertices, then a stratified train/cal split inside
        Rng tr(derive_seed(rep_seed, 0x74657374ull));
        std::vector<int> shuffled = everyone;
        tr.shuffle(shuffled);
        const int n_test = std::max(
            1, static_cast<int>(std::lround(settings.test_frac * spec.n_total)));
        const std::vector<int> test(shuffled.begin(),
                                    shuffled.begin() + n_test);
        for (ScoreKind kind : {ScoreKind::h2, ScoreKind::hinf}) {
          const std::string model =
              kind == ScoreKind::h2 ? "conformal-h2" : "conformal-hinf";
          try {
            const auto run = run_split_conformal(
                inst.dataset, inst.network, geo, theta, settings.alpha, kind,
                settings.cal_frac, rep_seed, test, RidgePolicy::scaled(),
                SplitMode::proportional, settings.grid_points);
            acc[{model, "covg"}].add(run.report.cov_g);
            acc[{model, "covl"}].add(run.report.cov_l);
            acc[{model, "abw"}].add(run.report.abw);
            acc[{model, "sint"}].add(run.report.interval_score);
          } catch (const std::exception& e) {
            note_failure(model, e);
          }
        }
      }
    }

    for (const auto& [key, a] : acc) {
      StudyRow row;
      row.scenario = spec;
      row.model = key.first;
      row.metric = key.second;
      row.mean = a.mean();
      row.sd = a.sd();
      row.reps = static_cast<int>(a.values.size());
      row.seed = settings.seed;
      report.rows.push_back(row);
    }
  }
  return report;
}

std::string study_csv(const StudyReport& report) {
  std::ostringstream out;
  out << "ew,oc,cbc,model,metric,mean,sd,reps,seed\n";
  char buf[64];
  for (const auto& r : report.rows) {
    out << ew_name(r.scenario.ew) << ',' << oc_name(r.scenario.oc) << ','
        << cbc_name(r.scenario.cbc) << ',' << r.model << ',' << r.metric
        << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.mean);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.sd);
    out << buf << ',' << r.reps << ',' << r.seed << '\n';
  }
  return out.str();
}

std::string study_markdown(const StudyReport& report) {
  // one table per model, scenarios down the rows, metrics across
  std::map<std::string, std::map<std::string, std::map<std::string, const StudyRow*>>>
      by_model;  // model -> scenario -> metric -> row
  std::map<std::string, std::vector<std::string>> metrics_of;
  for (const auto& r : report.rows) {
    by_model[r.model][r.scenario.name()][r.metric] = &r;
    auto& ms = metrics_of[r.model];
    if (std::find(ms.begin(), ms.end(), r.metric) == ms.end()) {
      ms.push_back(r.metric);
    }
  }
  std::ostringstream out;
  char buf[96];
  for (const auto& [model, scen_rows] : by_model) {
    out << "### " << model << "\n\n";
    out << "| scenario |";
    for (const auto& m : metrics_of[model]) out << ' ' << m << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < metrics_of[model].size(); ++i) out << "---|";
    out << '\n';
    for (const auto& [scen, cells] : scen_rows) {
      out << "| " << scen << " |";
      for (const auto& m : metrics_of[model]) {
        const auto it = cells.find(m);
        if (it == cells.end()) {
          out << " - |";
        } else {
          std::snprintf(buf, sizeof(buf), " %.4g (%.3g) |", it->second->mean,
                        it->second->sd);
          out << buf;
        }
      }
      out << '\n';
    }
    out << '\n';
  }
  if (!report.failures.empty()) {
    out << "### failures\n\n";
    for (const auto& f : report.failures) out << "- " << f << '\n';
  }
  return out.str();
}

}  // namespace nwfr

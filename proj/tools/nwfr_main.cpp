#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nwfr/conformal.hpp"
#include "nwfr/errors.hpp"
#include "nwfr/graph.hpp"
#include "nwfr/intel.hpp"
#include "nwfr/io.hpp"
#include "nwfr/model.hpp"
#include "nwfr/numeric.hpp"
#include "nwfr/parallel.hpp"
#include "nwfr/rng.hpp"
#include "nwfr/simgen.hpp"

namespace fs = std::filesystem;
using namespace nwfr;

namespace {

int exit_code_for(const Error& e) {
  switch (errc_class(e.code())) {
    case ErrClass::usage: return 2;
    case ErrClass::data: return 3;
    case ErrClass::numeric: return 4;
  }
  return 4;
}

double parse_flag_double(const std::string& text, const char* flag) {
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size())
    fail(Errc::invalid_argument,
         std::string(flag) + " expects a number, got '" + text + "'");
  return v;
}

void require_unit(double v, const char* flag) {
  if (!(v > 0.0 && v < 1.0))
    fail(Errc::invalid_argument,
         std::string(flag) + " must lie strictly between 0 and 1");
}

InstanceBundle load_instance(const std::string& path) {
  return instance_from_json(load_artifact(path, "instance"));
}

DistanceProvider provider_for(const std::string& model,
                              const InstanceBundle& b) {
  if (model == "classic") return DistanceProvider::Uniform();
  if (model == "gwfr") {
    if (b.coordinates.size() == 0)
      fail(Errc::bad_format,
           "coordinates required for the gwfr model; this instance has none");
    return DistanceProvider::SpatialEuclidean(b.coordinates);
  }
  if (model == "nwfr")
    return DistanceProvider::NetworkGeodesic(geodesic_matrix(b.network));
  fail(Errc::invalid_argument,
       "--model must be classic, gwfr, or nwfr, got '" + model + "'");
}

RidgePolicy resolve_lambda(const std::string& text) {
  if (text == "auto") return RidgePolicy::scaled();
  const double v = parse_flag_double(text, "--lambda");
  if (v < 0.0) fail(Errc::invalid_argument, "--lambda must be nonnegative");
  return RidgePolicy::absolute(v);
}

double resolve_theta(const std::string& text, const std::string& model,
                     const InstanceBundle& b, const DistanceProvider& provider,
                     const RidgePolicy& ridge, std::uint64_t seed) {
  if (text == "auto" || text == "cv") {
    if (model == "classic") return 1.0;  // uniform weights ignore theta
    const auto grid = default_theta_grid(provider, b.dataset.n_vertices());
    return select_bandwidth(b.dataset, provider, grid, ridge, seed);
  }
  const double v = parse_flag_double(text, "--theta");
  if (!(v > 0.0))
    fail(Errc::invalid_argument, "--theta must be positive or 'auto'");
  return v;
}

std::vector<int> every_vertex(int n) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  return ids;
}

std::vector<int> carve_test_set(int n, double test_frac, std::uint64_t seed) {
  auto ids = every_vertex(n);
  Rng rng(derive_seed(seed, 0x74657374ull));
  rng.shuffle(ids);
  const int n_test = std::max(
      1, static_cast<int>(std::lround(test_frac * static_cast<double>(n))));
  ids.resize(static_cast<std::size_t>(std::min(n_test, n - 1)));
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct SimulateOpts {
  std::string ew, oc, cbc;
  int reps = 1;
  std::uint64_t seed = 1;
  std::string out = ".";
  int n_total = 100, communities = 4, k = 21, order = 4;
  double noise = 1e-4;
};

void run_simulate(const SimulateOpts& o) {
  if (o.reps < 1) fail(Errc::invalid_argument, "--reps must be at least 1");
  ScenarioOverrides ov{o.n_total, o.communities, o.k, o.order, o.noise};
  const auto spec =
      make_scenario(parse_ew(o.ew), parse_oc(o.oc), parse_cbc(o.cbc), ov);
  fs::create_directories(o.out);

  std::string slug = spec.name();
  for (auto& c : slug) {
    if (c == '/') c = '-';
  }

  std::vector<std::string> outputs;
  Json rep_seeds = Json::array();
  for (int rep = 0; rep < o.reps; ++rep) {
    const std::uint64_t rep_seed =
        derive_seed(o.seed, static_cast<std::uint64_t>(spec.id()),
                    static_cast<std::uint64_t>(rep));
    const auto inst = generate_instance(spec, rep_seed);
    InstanceBundle b;
    b.network = inst.network;
    b.dataset = inst.dataset;
    b.true_blocks = inst.true_blocks;
    b.communities = inst.communities;
    b.meta = Json{{"scenario", spec.name()},
                  {"rep", rep},
                  {"seed", rep_seed},
                  {"master_seed", o.seed}};
    const auto ipath =
        (fs::path(o.out) / ("instance_" + slug + "_rep" +
                            std::to_string(rep) + ".json")).string();
    const auto epath =
        (fs::path(o.out) / ("edges_" + slug + "_rep" + std::to_string(rep) +
                            ".csv")).string();
    write_json_file(ipath, instance_json(b));
    write_text_file(epath, edges_csv(inst.network));
    outputs.push_back(ipath);
    outputs.push_back(epath);
    rep_seeds.push_back(rep_seed);
  }

  Json config{{"ew", o.ew},         {"oc", o.oc},
              {"cbc", o.cbc},       {"reps", o.reps},
              {"seed", o.seed},     {"n_total", o.n_total},
              {"communities", o.communities},
              {"k", o.k},           {"order", o.order},
              {"noise", o.noise},   {"replicate_seeds", rep_seeds}};
  const auto mpath = (fs::path(o.out) / "simulate_manifest.json").string();
  write_json_file(mpath, manifest_json("simulate", config, outputs));
  std::printf("scenario=%s reps=%d out=%s\n", spec.name().c_str(), o.reps,
              o.out.c_str());
}

struct FitOpts {
  std::string data;
  std::string model = "nwfr";
  std::string theta = "auto";
  std::string lambda = "auto";
  int grid_points = 201;
  std::uint64_t seed = 1;
  std::string out_model = "model.json";
  std::string out_gof = "gof.json";
  std::string out_surface;
  int surface_vertex = 0;
  int surface_coef = 0;
  std::string manifest = "fit_manifest.json";
};

void run_fit(const FitOpts& o) {
  if (o.grid_points < 2)
    fail(Errc::invalid_argument, "--grid-points must be at least 2");
  const auto b = load_instance(o.data);
  const auto provider = provider_for(o.model, b);
  const auto ridge = resolve_lambda(o.lambda);
  const double theta =
      resolve_theta(o.theta, o.model, b, provider, ridge, o.seed);

  const int n = b.dataset.n_vertices();
  const auto fit = fit_all(b.dataset, provider, theta, ridge, every_vertex(n));

  const auto grid = make_grid(b.dataset.response_basis.lo(),
                              b.dataset.response_basis.hi(), o.grid_points);
  std::vector<Curve> obs, pred;
  obs.reserve(static_cast<std::size_t>(n));
  pred.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    obs.push_back(
        {b.dataset.response_basis, b.dataset.response_coeffs.row(i).transpose()});
    pred.push_back(predict_vertex(fit, i));
  }
  const auto report = gof(obs, pred, grid);

  write_json_file(o.out_model, model_json(fit));
  write_json_file(o.out_gof, gof_json(report));
  std::vector<std::string> outputs{o.out_model, o.out_gof};

  if (!o.out_surface.empty()) {
    if (o.surface_coef < 0 ||
        o.surface_coef >= static_cast<int>(fit.covariate_bases.size()))
      fail(Errc::invalid_argument, "--surface-coef out of range");
    const auto& sb = fit.covariate_bases[static_cast<std::size_t>(o.surface_coef)];
    const auto s_grid = make_grid(sb.lo(), sb.hi(), o.grid_points);
    const auto values =
        beta_surface(fit, o.surface_vertex, o.surface_coef, s_grid, grid);
    write_text_file(o.out_surface, surface_csv(values, s_grid, grid));
    outputs.push_back(o.out_surface);
  }

  Json config{{"data", o.data},     {"model", o.model},
              {"theta", o.theta},   {"theta_resolved", theta},
              {"lambda", o.lambda}, {"grid_points", o.grid_points},
              {"seed", o.seed}};
  write_json_file(o.manifest, manifest_json("fit", config, outputs));
  std::printf("model=%s theta=%.8g r2_integrated=%.8g rimse=%.8g\n",
              o.model.c_str(), theta, report.r2_integrated, report.rimse);
}

struct PermOpts {
  std::string data;
  std::string model = "nwfr";
  std::string theta = "auto";
  int coef = 0;
  int nperm = 200;
  std::uint64_t seed = 1;
  std::string out = "perm_report.json";
  std::string manifest = "permtest_manifest.json";
};

void run_permtest(const PermOpts& o) {
  if (o.nperm < 1) fail(Errc::invalid_argument, "--nperm must be at least 1");
  if (o.coef < 0) fail(Errc::invalid_argument, "--coef must be nonnegative");
  const auto b = load_instance(o.data);
  if (o.coef >= b.dataset.n_covariates())
    fail(Errc::invalid_argument,
         "--coef out of range: the dataset has " +
             std::to_string(b.dataset.n_covariates()) + " covariates");
  const auto provider = provider_for(o.model, b);
  const double theta = resolve_theta(o.theta, o.model, b, provider,
                                     RidgePolicy::scaled(), o.seed);
  const auto res = permutation_test(b.dataset, b.network, provider, theta,
                                    o.coef, o.nperm, o.seed);
  write_json_file(o.out, perm_json(res));
  Json config{{"data", o.data}, {"model", o.model},
              {"theta", o.theta}, {"theta_resolved", theta},
              {"coef", o.coef}, {"nperm", o.nperm},
              {"seed", o.seed}};
  write_json_file(o.manifest, manifest_json("permtest", config, {o.out}));
  std::printf("v_obs=%.8g p_value=%.8g n_failed=%d\n", res.v_obs, res.p_value,
              res.n_failed);
}

struct ConformalOpts {
  std::string data;
  std::string model = "nwfr";
  std::string theta = "auto";
  double alpha = 0.05;
  std::string score = "d2";
  double test_frac = 0.2;
  double cal_frac = 0.5;
  std::uint64_t seed = 1;
  int grid_points = 201;
  std::string out = "cp_report.json";
  std::string out_bands = "bands.csv";
  std::string manifest = "conformal_manifest.json";
};

void run_conformal(const ConformalOpts& o) {
  require_unit(o.alpha, "--alpha");
  require_unit(o.test_frac, "--test-frac");
  require_unit(o.cal_frac, "--cal-frac");
  if (o.grid_points < 2)
    fail(Errc::invalid_argument, "--grid-points must be at least 2");
  ScoreKind kind;
  if (o.score == "d2") {
    kind = ScoreKind::h2;
  } else if (o.score == "dinf") {
    kind = ScoreKind::hinf;
  } else {
    fail(Errc::invalid_argument,
         "--score must be d2 or dinf, got '" + o.score + "'");
  }
  const auto b = load_instance(o.data);
  const auto provider = provider_for(o.model, b);
  const double theta = resolve_theta(o.theta, o.model, b, provider,
                                     RidgePolicy::scaled(), o.seed);
  const auto test_set =
      carve_test_set(b.dataset.n_vertices(), o.test_frac, o.seed);
  const auto res =
      run_split_conformal(b.dataset, b.network, provider, theta, o.alpha, kind,
                          o.cal_frac, o.seed, test_set, RidgePolicy::scaled(),
                          SplitMode::proportional, o.grid_points);
  write_json_file(o.out, conformal_json(res));
  write_text_file(o.out_bands, bands_csv(res.test_ids, res.bands));
  Json config{{"data", o.data},           {"model", o.model},
              {"theta", o.theta},         {"theta_resolved", theta},
              {"alpha", o.alpha},         {"score", o.score},
              {"test_frac", o.test_frac}, {"cal_frac", o.cal_frac},
              {"seed", o.seed},           {"grid_points", o.grid_points}};
  write_json_file(o.manifest,
                  manifest_json("conformal", config, {o.out, o.out_bands}));
  std::printf("score=%s cov_g=%.8g cov_l=%.8g abw=%.8g interval_score=%.8g\n",
              o.score.c_str(), res.report.cov_g, res.report.cov_l,
              res.report.abw, res.report.interval_score);
}

struct BenchOpts {
  std::string scale = "desk";
  int reps = 5;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::string ew, oc, cbc;  // empty selects every value
  std::string out_csv = "study.csv";
  std::string out_md = "study.md";
  std::string manifest = "bench_manifest.json";
};

void run_bench(const BenchOpts& o) {
  if (o.reps < 1) fail(Errc::invalid_argument, "--reps must be at least 1");
  require_unit(o.alpha, "--alpha");
  ScenarioOverrides ov;  // defaults hold the full study scale
  if (o.scale == "desk") {
    ov.n_total = 60;
    ov.k = 11;
  } else if (o.scale != "paper") {
    fail(Errc::invalid_argument,
         "--scale must be desk or paper, got '" + o.scale + "'");
  }
  std::vector<ScenarioSpec> scenarios;
  for (const auto& s : all_scenarios(ov)) {
    if (!o.ew.empty() && parse_ew(o.ew) != s.ew) continue;
    if (!o.oc.empty() && parse_oc(o.oc) != s.oc) continue;
    if (!o.cbc.empty() && parse_cbc(o.cbc) != s.cbc) continue;
    scenarios.push_back(s);
  }
  StudySettings settings;
  settings.reps = o.reps;
  settings.seed = o.seed;
  settings.alpha = o.alpha;
  const auto report = run_study(scenarios, settings);
  write_text_file(o.out_csv, study_csv(report));
  write_text_file(o.out_md, study_markdown(report));
  Json config{{"scale", o.scale}, {"reps", o.reps},   {"seed", o.seed},
              {"alpha", o.alpha}, {"ew", o.ew},       {"oc", o.oc},
              {"cbc", o.cbc},     {"scenarios", scenarios.size()},
              {"failures", report.failures.size()}};
  write_json_file(o.manifest,
                  manifest_json("bench", config, {o.out_csv, o.out_md}));
  std::printf("scenarios=%zu rows=%zu failures=%zu\n", scenarios.size(),
              report.rows.size(), report.failures.size());
}

struct IngestOpts {
  std::string readings;
  std::string connectivity;
  std::string coordinates;
  int window = 15;
  int k_impute = 3;
  std::string start = "2004-03-01 21:00";
  std::string end = "2004-03-02 21:00";
  std::string allowlist;  // comma-separated sensor ids, empty keeps all
  int basis = 21;
  int order = 4;
  double penalty = 1e-4;
  bool raw_lux = false;
  std::string out = "instance.json";
  std::string out_edges = "edges.csv";
  std::string manifest = "ingest_manifest.json";
};

std::vector<int> parse_id_list(const std::string& text) {
  std::vector<int> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string tok =
        text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(Errc::invalid_argument,
           "--allowlist expects comma-separated integers, got '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return ids;
}

void run_ingest(const IngestOpts& o) {
  if (o.window < 1)
    fail(Errc::invalid_argument, "--window must be at least 1 minute");
  if (o.k_impute < 1)
    fail(Errc::invalid_argument, "--k-impute must be at least 1");
  if (o.order < 1 || o.basis < o.order)
    fail(Errc::invalid_argument, "--basis must be at least --order, both >= 1");
  if (o.penalty < 0.0)
    fail(Errc::invalid_argument, "--penalty must be nonnegative");

  const auto parsed = parse_readings_file(o.readings);
  const auto allow = parse_id_list(o.allowlist);
  TimeWindowSpec window{o.start, o.end, o.window};
  CleaningRules rules;
  rules.light_is_raw_lux = o.raw_lux;
  const auto series =
      clean_and_window(parsed.readings, window, allow, rules);
  const auto filled = knn_impute(series, o.k_impute);
  const auto table = parse_connectivity_file(o.connectivity);
  std::map<int, std::pair<double, double>> coords;
  if (!o.coordinates.empty()) coords = parse_coordinates_file(o.coordinates);
  const auto lab =
      build_lab_dataset(filled, table, o.basis, o.order, o.penalty, coords);

  InstanceBundle b;
  b.network = lab.network;
  b.dataset = lab.dataset;
  b.coordinates = lab.coordinates;
  b.sensor_ids = lab.sensor_ids;
  b.meta = Json{{"source", "intel-ingest"},
                {"window_minutes", o.window},
                {"k_impute", o.k_impute},
                {"start", o.start},
                {"end", o.end},
                {"n_rejects", parsed.rejects.size()},
                {"n_flagged_windows", series.flagged.sum()}};
  write_json_file(o.out, instance_json(b));
  write_text_file(o.out_edges, edges_csv(lab.network));

  Json config{{"readings", o.readings},
              {"connectivity", o.connectivity},
              {"coordinates", o.coordinates},
              {"window", o.window},
              {"k_impute", o.k_impute},
              {"start", o.start},
              {"end", o.end},
              {"allowlist", o.allowlist},
              {"basis", o.basis},
              {"order", o.order},
              {"penalty", o.penalty},
              {"raw_lux", o.raw_lux}};
  write_json_file(o.manifest,
                  manifest_json("ingest", config, {o.out, o.out_edges}));
  std::printf("sensors=%d windows=%d edges=%zu rejects=%zu\n",
              filled.n_sensors(), filled.n_windows(),
              lab.network.edges().size(), parsed.rejects.size());
}

struct PlotOpts {
  std::string model;
  std::string data;
  std::string bands_from;
  bool surface = false;
  bool fitted = false;
  bool observed = false;
  int vertex = 0;
  int coef = 0;
  int grid_points = 201;
  std::string out;
  std::string manifest = "plotdata_manifest.json";
};

void run_plotdata(const PlotOpts& o) {
  const int modes = static_cast<int>(!o.bands_from.empty()) +
                    static_cast<int>(o.surface) + static_cast<int>(o.fitted) +
                    static_cast<int>(o.observed);
  if (modes != 1)
    fail(Errc::invalid_argument,
         "choose exactly one of --bands-from, --surface, --fitted, --observed");
  if (o.out.empty()) fail(Errc::invalid_argument, "--out is required");
  if (o.grid_points < 2)
    fail(Errc::invalid_argument, "--grid-points must be at least 2");

  std::string csv;
  if (!o.bands_from.empty()) {
    const auto res = conformal_from_json(load_artifact(o.bands_from, "cp_report"));
    csv = bands_csv(res.test_ids, res.bands);
  } else if (o.surface) {
    if (o.model.empty())
      fail(Errc::invalid_argument, "--surface needs --model");
    const auto fit = model_from_json(load_artifact(o.model, "model"));
    if (o.coef < 0 ||
        o.coef >= static_cast<int>(fit.covariate_bases.size()))
      fail(Errc::invalid_argument, "--coef out of range");
    const auto& sb = fit.covariate_bases[static_cast<std::size_t>(o.coef)];
    const auto s_grid = make_grid(sb.lo(), sb.hi(), o.grid_points);
    const auto t_grid = make_grid(fit.response_basis.lo(),
                                  fit.response_basis.hi(), o.grid_points);
    csv = surface_csv(beta_surface(fit, o.vertex, o.coef, s_grid, t_grid),
                      s_grid, t_grid);
  } else if (o.fitted) {
    if (o.model.empty()) fail(Errc::invalid_argument, "--fitted needs --model");
    const auto fit = model_from_json(load_artifact(o.model, "model"));
    const auto grid = make_grid(fit.response_basis.lo(),
                                fit.response_basis.hi(), o.grid_points);
    std::vector<Curve> curves;
    curves.reserve(fit.vertices.size());
    for (int v : fit.vertices) curves.push_back(predict_vertex(fit, v));
    csv = curves_csv(fit.vertices, curves, grid);
  } else {
    if (o.data.empty()) fail(Errc::invalid_argument, "--observed needs --data");
    const auto b = load_instance(o.data);
    const auto grid = make_grid(b.dataset.response_basis.lo(),
                                b.dataset.response_basis.hi(), o.grid_points);
    std::vector<Curve> curves;
    const int n = b.dataset.n_vertices();
    for (int i = 0; i < n; ++i) {
      curves.push_back({b.dataset.response_basis,
                        b.dataset.response_coeffs.row(i).transpose()});
    }
    csv = curves_csv(every_vertex(n), curves, grid);
  }
  write_text_file(o.out, csv);
  Json config{{"model", o.model},   {"data", o.data},
              {"bands_from", o.bands_from}, {"surface", o.surface},
              {"fitted", o.fitted}, {"observed", o.observed},
              {"vertex", o.vertex}, {"coef", o.coef},
              {"grid_points", o.grid_points}};
  write_json_file(o.manifest, manifest_json("plotdata", config, {o.out}));
  std::printf("wrote %s\n", o.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"network-weighted functional regression toolkit"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "worker threads, 0 uses the hardware")
      ->envname("NWFR_WORKERS");

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "draw scenario instances");
  sim->add_option("--ew", so.ew, "edge weights: one|random|inout")->required();
  sim->add_option("--oc", so.oc, "community sizes: equal|different")->required();
  sim->add_option("--cbc", so.cbc, "inter-community links: low|high")->required();
  sim->add_option("--reps", so.reps, "replicates");
  sim->add_option("--seed", so.seed, "master seed");
  sim->add_option("--out", so.out, "output directory");
  sim->add_option("--n-total", so.n_total, "vertex count");
  sim->add_option("--communities", so.communities, "community count");
  sim->add_option("--k", so.k, "basis size");
  sim->add_option("--order", so.order, "spline order");
  sim->add_option("--noise", so.noise, "response noise variance");
  sim->callback([&] { set_workers(workers); run_simulate(so); });

  FitOpts fo;
  auto* fit = app.add_subcommand("fit", "fit a functional regression model");
  fit->add_option("--data", fo.data, "instance JSON")->required();
  fit->add_option("--model", fo.model, "classic|gwfr|nwfr");
  fit->add_option("--theta", fo.theta, "bandwidth, or 'auto' for CV");
  fit->add_option("--lambda", fo.lambda, "ridge, or 'auto' for scaled");
  fit->add_option("--grid-points", fo.grid_points, "evaluation grid size");
  fit->add_option("--seed", fo.seed, "seed for bandwidth selection");
  fit->add_option("--out-model", fo.out_model, "model JSON path");
  fit->add_option("--out-gof", fo.out_gof, "fit report JSON path");
  fit->add_option("--out-surface", fo.out_surface, "surface CSV path");
  fit->add_option("--surface-vertex", fo.surface_vertex, "surface vertex");
  fit->add_option("--surface-coef", fo.surface_coef, "surface covariate");
  fit->add_option("--manifest", fo.manifest, "manifest path");
  fit->callback([&] { set_workers(workers); run_fit(fo); });

  PermOpts po;
  auto* perm = app.add_subcommand("permtest", "network-effect permutation test");
  perm->add_option("--data", po.data, "instance JSON")->required();
  perm->add_option("--model", po.model, "classic|gwfr|nwfr");
  perm->add_option("--theta", po.theta, "bandwidth, or 'auto' for CV");
  perm->add_option("--coef", po.coef, "covariate index under test");
  perm->add_option("--nperm", po.nperm, "permutation count");
  perm->add_option("--seed", po.seed, "seed");
  perm->add_option("--out", po.out, "report JSON path");
  perm->add_option("--manifest", po.manifest, "manifest path");
  perm->callback([&] { set_workers(workers); run_permtest(po); });

  ConformalOpts co;
  auto* conf = app.add_subcommand("conformal", "split-conformal bands");
  conf->add_option("--data", co.data, "instance JSON")->required();
  conf->add_option("--model", co.model, "classic|gwfr|nwfr");
  conf->add_option("--theta", co.theta, "bandwidth, or 'auto' for CV");
  conf->add_option("--alpha", co.alpha, "miscoverage level");
  conf->add_option("--score", co.score, "d2|dinf");
  conf->add_option("--test-frac", co.test_frac, "held-out test fraction");
  conf->add_option("--cal-frac", co.cal_frac, "calibration fraction");
  conf->add_option("--seed", co.seed, "seed");
  conf->add_option("--grid-points", co.grid_points, "evaluation grid size");
  conf->add_option("--out", co.out, "report JSON path");
  conf->add_option("--out-bands", co.out_bands, "bands CSV path");
  conf->add_option("--manifest", co.manifest, "manifest path");
  conf->callback([&] { set_workers(workers); run_conformal(co); });

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench", "simulation study tables");
  bench->add_option("--scale", bo.scale, "desk|paper");
  bench->add_option("--reps", bo.reps, "replicates per scenario");
  bench->add_option("--seed", bo.seed, "master seed");
  bench->add_option("--alpha", bo.alpha, "conformal miscoverage");
  bench->add_option("--ew", bo.ew, "filter: one|random|inout");
  bench->add_option("--oc", bo.oc, "filter: equal|different");
  bench->add_option("--cbc", bo.cbc, "filter: low|high");
  bench->add_option("--out-csv", bo.out_csv, "study CSV path");
  bench->add_option("--out-md", bo.out_md, "study markdown path");
  bench->add_option("--manifest", bo.manifest, "manifest path");
  bench->callback([&] { set_workers(workers); run_bench(bo); });

  IngestOpts io;
  auto* ing = app.add_subcommand("ingest", "sensor log ingestion");
  ing->add_option("--readings", io.readings, "whitespace sensor log")->required();
  ing->add_option("--connectivity", io.connectivity, "'i j p' table")->required();
  ing->add_option("--coordinates", io.coordinates, "'id x y' table");
  ing->add_option("--window", io.window, "window minutes");
  ing->add_option("--k-impute", io.k_impute, "imputation neighbors");
  ing->add_option("--start", io.start, "range start, YYYY-MM-DD HH:MM");
  ing->add_option("--end", io.end, "range end");
  ing->add_option("--allowlist", io.allowlist, "comma-separated sensor ids");
  ing->add_option("--basis", io.basis, "basis size");
  ing->add_option("--order", io.order, "spline order");
  ing->add_option("--penalty", io.penalty, "smoothing penalty");
  ing->add_flag("--raw-lux", io.raw_lux, "light column is raw Lux");
  ing->add_option("--out", io.out, "instance JSON path");
  ing->add_option("--out-edges", io.out_edges, "edge CSV path");
  ing->add_option("--manifest", io.manifest, "manifest path");
  ing->callback([&] { set_workers(workers); run_ingest(io); });

  PlotOpts plo;
  auto* plot = app.add_subcommand("plotdata", "grid-evaluated CSV exports");
  plot->add_option("--model", plo.model, "model JSON");
  plot->add_option("--data", plo.data, "instance JSON");
  plot->add_option("--bands-from", plo.bands_from, "conformal report JSON");
  plot->add_flag("--surface", plo.surface, "export a beta surface");
  plot->add_flag("--fitted", plo.fitted, "export fitted curves");
  plot->add_flag("--observed", plo.observed, "export observed curves");
  plot->add_option("--vertex", plo.vertex, "surface vertex");
  plot->add_option("--coef", plo.coef, "surface covariate");
  plot->add_option("--grid-points", plo.grid_points, "grid size");
  plot->add_option("--out", plo.out, "output CSV path");
  plot->add_option("--manifest", plo.manifest, "manifest path");
  plot->callback([&] { set_workers(workers); run_plotdata(plo); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

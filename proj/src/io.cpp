#include "nwfr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nwfr/errors.hpp"

namespace nwfr {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json curve_json(const Curve& c) {
  Json j;
  j["basis"] = basis_json(c.basis);
  j["coeffs"] = std::vector<double>(c.coeffs.data(),
                                    c.coeffs.data() + c.coeffs.size());
  return j;
}

Curve curve_from_json(const Json& j) {
  Curve c;
  c.basis = basis_from_json(j.at("basis"));
  const auto v = j.at("coeffs").get<std::vector<double>>();
  c.coeffs = Eigen::Map<const Eigen::VectorXd>(v.data(),
                                               static_cast<long>(v.size()));
  return c;
}

Json modulation_json(const ModulationFn& m) {
  return Json{{"grid", m.grid},
              {"values", m.values},
              {"floor_value", m.floor_value}};
}

ModulationFn modulation_from_json(const Json& j) {
  ModulationFn m;
  m.grid = j.at("grid").get<std::vector<double>>();
  m.values = j.at("values").get<std::vector<double>>();
  m.floor_value = j.at("floor_value").get<double>();
  return m;
}

Json ridge_json(const RidgePolicy& r) {
  return Json{{"kind", r.kind == RidgePolicy::Kind::scaled ? "scaled"
                                                           : "absolute"},
              {"value", r.value}};
}

RidgePolicy ridge_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const double value = j.at("value").get<double>();
  if (kind == "scaled") return RidgePolicy::scaled(value);
  if (kind == "absolute") return RidgePolicy::absolute(value);
  fail(Errc::bad_format, "unknown ridge kind '" + kind + "'");
}

void stamp(Json& j, const char* kind) {
  j["format_version"] = kFormatVersion;
  j["kind"] = kind;
}

}  // namespace

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (long i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::move(rows);
  return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const Json& data = j.at("data");
  if (static_cast<long>(data.size()) != rows)
    fail(Errc::bad_format, "matrix row count mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const Json& row = data.at(static_cast<std::size_t>(i));
    if (static_cast<long>(row.size()) != cols)
      fail(Errc::bad_format, "matrix column count mismatch");
    for (long c = 0; c < cols; ++c)
      m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Json basis_json(const BasisSystem& b) {
  return Json{{"lo", b.lo()},
              {"hi", b.hi()},
              {"size", b.size()},
              {"order", b.order()}};
}

BasisSystem basis_from_json(const Json& j) {
  return make_bspline_basis(j.at("lo").get<double>(), j.at("hi").get<double>(),
                            j.at("size").get<int>(), j.at("order").get<int>());
}

Json network_json(const Network& g) {
  Json edges = Json::array();
  for (const Edge& e : g.edges()) edges.push_back(Json::array({e.u, e.v, e.w}));
  Json j;
  j["n_vertices"] = g.n_vertices();
  j["edges"] = std::move(edges);
  return j;
}

Network network_from_json(const Json& j) {
  std::vector<Edge> edges;
  for (const Json& e : j.at("edges")) {
    if (e.size() != 3) fail(Errc::bad_format, "edge entries are [u, v, w]");
    edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(),
                     e.at(2).get<double>()});
  }
  return build_graph(j.at("n_vertices").get<int>(), edges);
}

Json dataset_json(const FunctionalDataset& d) {
  Json covs = Json::array();
  for (const auto& c : d.covariates) {
    covs.push_back(Json{{"basis", basis_json(c.basis)},
                        {"coeffs", matrix_json(c.coeffs)}});
  }
  Json j;
  j["response_basis"] = basis_json(d.response_basis);
  j["response_coeffs"] = matrix_json(d.response_coeffs);
  j["covariates"] = std::move(covs);
  j["include_intercept"] = d.include_intercept;
  return j;
}

FunctionalDataset dataset_from_json(const Json& j) {
  FunctionalDataset d;
  d.response_basis = basis_from_json(j.at("response_basis"));
  d.response_coeffs = matrix_from_json(j.at("response_coeffs"));
  for (const Json& c : j.at("covariates")) {
    d.covariates.push_back({basis_from_json(c.at("basis")),
                            matrix_from_json(c.at("coeffs"))});
  }
  d.include_intercept = j.at("include_intercept").get<bool>();
  d.validate();
  return d;
}

Json instance_json(const InstanceBundle& b) {
  Json j;
  stamp(j, "instance");
  j["network"] = network_json(b.network);
  j["dataset"] = dataset_json(b.dataset);
  if (b.coordinates.size() > 0) j["coordinates"] = matrix_json(b.coordinates);
  if (!b.true_blocks.empty()) {
    Json blocks = Json::array();
    for (const auto& m : b.true_blocks) blocks.push_back(matrix_json(m));
    j["true_blocks"] = std::move(blocks);
  }
  if (b.communities.k > 0) {
    j["communities"] =
        Json{{"labels", b.communities.labels}, {"k", b.communities.k}};
  }
  if (!b.sensor_ids.empty()) j["sensor_ids"] = b.sensor_ids;
  j["meta"] = b.meta;
  return j;
}

InstanceBundle instance_from_json(const Json& j) {
  InstanceBundle b;
  b.network = network_from_json(j.at("network"));
  b.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("coordinates"))
    b.coordinates = matrix_from_json(j.at("coordinates"));
  if (j.contains("true_blocks")) {
    for (const Json& m : j.at("true_blocks"))
      b.true_blocks.push_back(matrix_from_json(m));
  }
  if (j.contains("communities")) {
    b.communities.labels =
        j.at("communities").at("labels").get<std::vector<int>>();
    b.communities.k = j.at("communities").at("k").get<int>();
  }
  if (j.contains("sensor_ids"))
    b.sensor_ids = j.at("sensor_ids").get<std::vector<int>>();
  if (j.contains("meta")) b.meta = j.at("meta");
  if (b.network.n_vertices() != b.dataset.n_vertices())
    fail(Errc::bad_format, "network and dataset disagree on the vertex count");
  return b;
}

Json model_json(const NwfrFit& fit) {
  Json j;
  stamp(j, "model");
  j["theta"] = fit.theta;
  j["ridge"] = ridge_json(fit.ridge);
  j["provider_id"] = fit.provider_id;
  j["include_intercept"] = fit.include_intercept;
  j["response_basis"] = basis_json(fit.response_basis);
  Json bases = Json::array();
  for (const auto& b : fit.covariate_bases) bases.push_back(basis_json(b));
  j["covariate_bases"] = std::move(bases);
  j["covariate_offsets"] = fit.covariate_offsets;
  j["covariate_sizes"] = fit.covariate_sizes;
  j["vertices"] = fit.vertices;
  Json blocks = Json::array();
  for (const auto& b : fit.blocks) blocks.push_back(matrix_json(b));
  j["blocks"] = std::move(blocks);
  j["cond"] = fit.cond;
  j["lambda"] = fit.lambda;
  j["design"] = matrix_json(fit.design);
  return j;
}

NwfrFit model_from_json(const Json& j) {
  NwfrFit fit;
  fit.theta = j.at("theta").get<double>();
  fit.ridge = ridge_from_json(j.at("ridge"));
  fit.provider_id = j.at("provider_id").get<std::string>();
  fit.include_intercept = j.at("include_intercept").get<bool>();
  fit.response_basis = basis_from_json(j.at("response_basis"));
  for (const Json& b : j.at("covariate_bases"))
    fit.covariate_bases.push_back(basis_from_json(b));
  fit.covariate_offsets = j.at("covariate_offsets").get<std::vector<int>>();
  fit.covariate_sizes = j.at("covariate_sizes").get<std::vector<int>>();
  fit.vertices = j.at("vertices").get<std::vector<int>>();
  for (const Json& b : j.at("blocks"))
    fit.blocks.push_back(matrix_from_json(b));
  fit.cond = j.at("cond").get<std::vector<double>>();
  fit.lambda = j.at("lambda").get<std::vector<double>>();
  fit.design = matrix_from_json(j.at("design"));
  if (fit.blocks.size() != fit.vertices.size())
    fail(Errc::bad_format, "model blocks and vertices disagree");
  return fit;
}

Json gof_json(const GofReport& r) {
  Json j;
  stamp(j, "gof_report");
  j["rimse"] = r.rimse;
  j["r2_integrated"] = r.r2_integrated;
  j["grid"] = r.grid;
  j["r2_pointwise"] = r.r2_pointwise;
  return j;
}

Json perm_json(const PermTestResult& r) {
  Json j;
  stamp(j, "perm_report");
  j["v_obs"] = r.v_obs;
  j["p_value"] = r.p_value;
  j["null_sample"] = r.null_sample;
  j["n_failed"] = r.n_failed;
  return j;
}

Json conformal_json(const ConformalResult& r) {
  Json j;
  stamp(j, "cp_report");
  j["theta"] = r.theta;
  j["k_s"] = r.k_s;
  j["test_ids"] = r.test_ids;
  j["calibration"] = r.plan.calibration;
  j["training"] = r.plan.training;
  j["modulation"] = modulation_json(r.modulation);
  Json bands = Json::array();
  for (const auto& b : r.bands) {
    bands.push_back(Json{{"center", curve_json(b.center)},
                         {"radius", b.radius},
                         {"modulation", modulation_json(b.modulation)}});
  }
  j["bands"] = std::move(bands);
  j["report"] = Json{{"cov_g", r.report.cov_g},
                     {"cov_l", r.report.cov_l},
                     {"abw", r.report.abw},
                     {"interval_score", r.report.interval_score},
                     {"alpha", r.report.alpha},
                     {"score", r.report.kind == ScoreKind::h2 ? "d2" : "dinf"}};
  return j;
}

ConformalResult conformal_from_json(const Json& j) {
  ConformalResult r;
  r.theta = j.at("theta").get<double>();
  r.k_s = j.at("k_s").get<double>();
  r.test_ids = j.at("test_ids").get<std::vector<int>>();
  r.plan.calibration = j.at("calibration").get<std::vector<int>>();
  r.plan.training = j.at("training").get<std::vector<int>>();
  r.modulation = modulation_from_json(j.at("modulation"));
  for (const Json& b : j.at("bands")) {
    PredictionBand band;
    band.center = curve_from_json(b.at("center"));
    band.radius = b.at("radius").get<double>();
    band.modulation = modulation_from_json(b.at("modulation"));
    r.bands.push_back(std::move(band));
  }
  const Json& rep = j.at("report");
  r.report.cov_g = rep.at("cov_g").get<double>();
  r.report.cov_l = rep.at("cov_l").get<double>();
  r.report.abw = rep.at("abw").get<double>();
  r.report.interval_score = rep.at("interval_score").get<double>();
  r.report.alpha = rep.at("alpha").get<double>();
  r.report.kind =
      rep.at("score").get<std::string>() == "dinf" ? ScoreKind::hinf
                                                   : ScoreKind::h2;
  return r;
}

Json manifest_json(const std::string& command, const Json& config,
                   const std::vector<std::string>& outputs) {
  Json j;
  stamp(j, "manifest");
  j["command"] = command;
  j["config"] = config;
  j["outputs"] = outputs;
  return j;
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_failure, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) fail(Errc::io_failure, "short write to '" + path + "'");
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(Errc::bad_format, "'" + path + "' is not valid JSON: " + e.what());
  }
}

Json load_artifact(const std::string& path, const std::string& kind) {
  const Json j = load_json_file(path);
  if (!j.is_object() || !j.contains("kind") || !j.contains("format_version"))
    fail(Errc::bad_format, "'" + path + "' lacks kind/format_version stamps");
  if (j.at("kind").get<std::string>() != kind)
    fail(Errc::bad_format, "'" + path + "' holds a '" +
                               j.at("kind").get<std::string>() +
                               "' artifact, expected '" + kind + "'");
  if (j.at("format_version").get<int>() != kFormatVersion)
    fail(Errc::bad_format,
         "'" + path + "' uses format version " +
             j.at("format_version").dump() + ", this build reads " +
             std::to_string(kFormatVersion));
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_failure, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(Errc::io_failure, "short write to '" + path + "'");
}

std::string edges_csv(const Network& g) {
  std::ostringstream out;
  out << "u,v,w\n";
  for (const Edge& e : g.edges())
    out << e.u << ',' << e.v << ',' << fmt(e.w) << '\n';
  return out.str();
}

std::string bands_csv(const std::vector<int>& vertices,
                      const std::vector<PredictionBand>& bands) {
  if (vertices.size() != bands.size())
    fail(Errc::length_mismatch, "one vertex id per band required");
  std::ostringstream out;
  out << "vertex,t,lower,center,upper\n";
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto lo = band_lower_values(bands[i]);
    const auto mid = band_center_values(bands[i]);
    const auto hi = band_upper_values(bands[i]);
    const auto& grid = bands[i].modulation.grid;
    for (std::size_t t = 0; t < grid.size(); ++t) {
      out << vertices[i] << ',' << fmt(grid[t]) << ',' << fmt(lo[t]) << ','
          << fmt(mid[t]) << ',' << fmt(hi[t]) << '\n';
    }
  }
  return out.str();
}

std::string surface_csv(const Eigen::MatrixXd& values,
                        const std::vector<double>& s_grid,
                        const std::vector<double>& t_grid) {
  if (values.rows() != static_cast<long>(t_grid.size()) ||
      values.cols() != static_cast<long>(s_grid.size()))
    fail(Errc::length_mismatch, "surface grid does not match the value shape");
  std::ostringstream out;
  out << "t,s,value\n";
  for (long t = 0; t < values.rows(); ++t) {
    for (long s = 0; s < values.cols(); ++s) {
      out << fmt(t_grid[static_cast<std::size_t>(t)]) << ','
          << fmt(s_grid[static_cast<std::size_t>(s)]) << ','
          << fmt(values(t, s)) << '\n';
    }
  }
  return out.str();
}

std::string curves_csv(const std::vector<int>& vertices,
                       const std::vector<Curve>& curves,
                       const std::vector<double>& grid) {
  if (vertices.size() != curves.size())
    fail(Errc::length_mismatch, "one vertex id per curve required");
  std::ostringstream out;
  out << "vertex,t,value\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto vals = curve_eval(curves[i], grid);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      out << vertices[i] << ',' << fmt(grid[t]) << ',' << fmt(vals[t]) << '\n';
    }
  }
  return out.str();
}

}  // namespace nwfr

#include "nwfr/intel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nwfr/basis.hpp"
#include "nwfr/errors.hpp"
#include "nwfr/parallel.hpp"

namespace nwfr {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool to_double(const std::string& tok, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(tok, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == tok.size() && std::isfinite(out);
}

bool to_int(const std::string& tok, int& out) {
  std::size_t used = 0;
  try {
    out = std::stoi(tok, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == tok.size();
}

// days since 1970-01-01 for a civil date; classic Gregorian rollover
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

bool parse_date_time(const std::string& date, const std::string& time,
                     double& out) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double s = 0.0;
  char tail = 0;
  if (std::sscanf(date.c_str(), "%d-%d-%d%c", &y, &mo, &d, &tail) != 3)
    return false;
  const int tn = std::sscanf(time.c_str(), "%d:%d:%lf%c", &h, &mi, &s, &tail);
  if (tn != 2 && tn != 3) return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || s < 0.0 || s >= 61.0)
    return false;
  out = 86400.0 * static_cast<double>(days_from_civil(y, mo, d)) + 3600.0 * h +
        60.0 * mi + s;
  return true;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

void impute_variable(const Eigen::MatrixXd& observed, Eigen::MatrixXd& out,
                     const std::vector<int>& ids, int k, const char* name) {
  const int n = static_cast<int>(observed.rows());
  const int w = static_cast<int>(observed.cols());

  // pairwise Euclidean distance over co-observed windows; NaN when the two
  // sensors never report together
  Eigen::MatrixXd dist = Eigen::MatrixXd::Constant(n, n, kNan);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      double sq = 0.0;
      int shared = 0;
      for (int t = 0; t < w; ++t) {
        if (std::isfinite(observed(a, t)) && std::isfinite(observed(b, t))) {
          const double diff = observed(a, t) - observed(b, t);
          sq += diff * diff;
          ++shared;
        }
      }
      if (shared > 0) dist(a, b) = dist(b, a) = std::sqrt(sq);
    }
  }

  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < w; ++t) {
      if (std::isfinite(observed(s, t))) continue;
      std::vector<int> cand;
      for (int b = 0; b < n; ++b) {
        if (b != s && std::isfinite(observed(b, t)) &&
            std::isfinite(dist(s, b))) {
          cand.push_back(b);
        }
      }
      if (static_cast<int>(cand.size()) < k) {
        fail(Errc::insufficient_neighbors,
             std::string(name) + " of sensor " + std::to_string(ids[s]) +
                 " at window " + std::to_string(t) + " has only " +
                 std::to_string(cand.size()) + " usable neighbors, need " +
                 std::to_string(k));
      }
      std::sort(cand.begin(), cand.end(), [&](int a, int b) {
        if (dist(s, a) != dist(s, b)) return dist(s, a) < dist(s, b);
        return ids[a] < ids[b];
      });
      double sum = 0.0;
      for (int q = 0; q < k; ++q) sum += observed(cand[q], t);
      out(s, t) = sum / k;
    }
  }
}

}  // namespace

double parse_datetime(const std::string& text) {
  const auto toks = tokenize(text);
  double out = 0.0;
  if (toks.size() != 2 || !parse_date_time(toks[0], toks[1], out))
    fail(Errc::bad_format,
         "expected 'YYYY-MM-DD HH:MM[:SS]', got '" + text + "'");
  return out;
}

ParseResult parse_readings(std::istream& in) {
  ParseResult res;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks.size() != 8) {
      res.rejects.push_back({line_no, "expected 8 fields, got " +
                                          std::to_string(toks.size())});
      continue;
    }
    SensorReading r;
    r.date = toks[0];
    r.timestamp = toks[1];
    int epoch = 0;
    const char* bad = nullptr;
    if (!parse_date_time(toks[0], toks[1], r.abs_seconds)) {
      bad = "date/time";
    } else if (!to_int(toks[2], epoch)) {
      bad = "epoch";
    } else if (!to_int(toks[3], r.node_id)) {
      bad = "node id";
    } else if (!to_double(toks[4], r.temperature)) {
      bad = "temperature";
    } else if (!to_double(toks[5], r.humidity)) {
      bad = "humidity";
    } else if (!to_double(toks[6], r.light)) {
      bad = "light";
    } else if (!to_double(toks[7], r.voltage)) {
      bad = "voltage";
    }
    if (bad) {
      res.rejects.push_back({line_no, std::string("unreadable ") + bad});
      continue;
    }
    res.readings.push_back(std::move(r));
  }
  return res;
}

ParseResult parse_readings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open '" + path + "'");
  return parse_readings(in);
}

int WindowedSeries::row_of(int sensor_id) const {
  const auto it =
      std::lower_bound(sensor_ids.begin(), sensor_ids.end(), sensor_id);
  if (it == sensor_ids.end() || *it != sensor_id) return -1;
  return static_cast<int>(it - sensor_ids.begin());
}

WindowedSeries clean_and_window(const std::vector<SensorReading>& readings,
                                const TimeWindowSpec& window,
                                const std::vector<int>& allowlist,
                                const CleaningRules& rules) {
  if (window.window_minutes <= 0)
    fail(Errc::empty_range, "window length must be positive");
  const double start = parse_datetime(window.start);
  const double end = parse_datetime(window.end);
  if (!(end > start))
    fail(Errc::empty_range,
         "range '" + window.start + "' .. '" + window.end + "' is empty");
  const double wsec = 60.0 * window.window_minutes;
  const int n_windows = static_cast<int>(std::ceil((end - start) / wsec));

  WindowedSeries out;
  out.window = window;
  out.sensor_ids = allowlist;
  if (out.sensor_ids.empty()) {
    std::set<int> seen;
    for (const auto& r : readings) seen.insert(r.node_id);
    out.sensor_ids.assign(seen.begin(), seen.end());
  } else {
    std::sort(out.sensor_ids.begin(), out.sensor_ids.end());
    out.sensor_ids.erase(
        std::unique(out.sensor_ids.begin(), out.sensor_ids.end()),
        out.sensor_ids.end());
  }
  const int n = out.n_sensors();

  Eigen::MatrixXd sum[3], cnt[3];
  for (int v = 0; v < 3; ++v) {
    sum[v] = Eigen::MatrixXd::Zero(n, n_windows);
    cnt[v] = Eigen::MatrixXd::Zero(n, n_windows);
  }
  out.flagged = Eigen::MatrixXi::Zero(n, n_windows);

  for (const auto& r : readings) {
    if (r.abs_seconds < start || r.abs_seconds >= end) continue;
    const int row = out.row_of(r.node_id);
    if (row < 0) continue;
    const int w = static_cast<int>((r.abs_seconds - start) / wsec);

    const double temp = (std::isfinite(r.temperature) &&
                         r.temperature >= rules.temp_lo &&
                         r.temperature <= rules.temp_hi)
                            ? r.temperature
                            : kNan;
    const double hum =
        (std::isfinite(r.humidity) && r.humidity >= rules.hum_lo &&
         r.humidity <= rules.hum_hi)
            ? r.humidity
            : kNan;
    double light = r.light;
    if (rules.light_is_raw_lux) light = light >= 0.0 ? std::log1p(light) : kNan;
    if (!std::isfinite(light)) light = kNan;

    const double vals[3] = {temp, hum, light};
    for (int v = 0; v < 3; ++v) {
      if (std::isfinite(vals[v])) {
        sum[v](row, w) += vals[v];
        cnt[v](row, w) += 1.0;
      }
    }
    if (!(std::isfinite(r.voltage) && r.voltage >= rules.volt_lo &&
          r.voltage <= rules.volt_hi)) {
      out.flagged(row, w) = 1;
    }
  }

  Eigen::MatrixXd* mats[3] = {&out.temperature, &out.humidity, &out.light};
  for (int v = 0; v < 3; ++v) {
    *mats[v] = Eigen::MatrixXd::Constant(n, n_windows, kNan);
    for (int s = 0; s < n; ++s) {
      for (int w = 0; w < n_windows; ++w) {
        if (cnt[v](s, w) > 0.0) (*mats[v])(s, w) = sum[v](s, w) / cnt[v](s, w);
      }
    }
  }
  return out;
}

WindowedSeries knn_impute(const WindowedSeries& series, int k) {
  if (k <= 0) fail(Errc::invalid_argument, "k must be positive");
  WindowedSeries out = series;
  impute_variable(series.temperature, out.temperature, series.sensor_ids, k,
                  "temperature");
  impute_variable(series.humidity, out.humidity, series.sensor_ids, k,
                  "humidity");
  impute_variable(series.light, out.light, series.sensor_ids, k, "light");
  return out;
}

std::vector<ConnectivityEntry> parse_connectivity(std::istream& in) {
  std::vector<ConnectivityEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    ConnectivityEntry e;
    if (toks.size() != 3 || !to_int(toks[0], e.i) || !to_int(toks[1], e.j) ||
        !to_double(toks[2], e.p)) {
      fail(Errc::bad_format, "connectivity line " + std::to_string(line_no) +
                                 ": expected 'i j p'");
    }
    out.push_back(e);
  }
  return out;
}

std::vector<ConnectivityEntry> parse_connectivity_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open '" + path + "'");
  return parse_connectivity(in);
}

std::vector<Edge> connectivity_to_weights(
    const std::vector<ConnectivityEntry>& table) {
  std::map<std::pair<int, int>, std::pair<double, int>> acc;
  for (const auto& e : table) {
    if (!(e.p > 0.0) || e.p > 1.0 || !std::isfinite(e.p))
      fail(Errc::invalid_probability,
           "reception probability for (" + std::to_string(e.i) + "," +
               std::to_string(e.j) + ") must lie in (0,1], got " +
               std::to_string(e.p));
    if (e.i == e.j) continue;
    const auto key = std::minmax(e.i, e.j);
    double f = -std::log(e.p);
    if (f <= 0.0) f = 0.0;
    auto& slot = acc[key];
    slot.first += f;
    slot.second += 1;
  }
  std::vector<Edge> edges;
  edges.reserve(acc.size());
  for (const auto& [key, slot] : acc) {
    edges.push_back({key.first, key.second, slot.first / slot.second});
  }
  return edges;
}

std::map<int, std::pair<double, double>> parse_coordinates(std::istream& in) {
  std::map<int, std::pair<double, double>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    int id = 0;
    double x = 0.0, y = 0.0;
    if (toks.size() != 3 || !to_int(toks[0], id) || !to_double(toks[1], x) ||
        !to_double(toks[2], y)) {
      fail(Errc::bad_format, "coordinates line " + std::to_string(line_no) +
                                 ": expected 'id x y'");
    }
    out[id] = {x, y};
  }
  return out;
}

std::map<int, std::pair<double, double>> parse_coordinates_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open '" + path + "'");
  return parse_coordinates(in);
}

LabDataset build_lab_dataset(
    const WindowedSeries& complete,
    const std::vector<ConnectivityEntry>& connectivity, int n_basis, int order,
    double penalty, const std::map<int, std::pair<double, double>>& coords) {
  const int n = complete.n_sensors();
  const int w = complete.n_windows();
  if (n < 1 || w < 2)
    fail(Errc::bad_format, "need at least one sensor and two windows");
  const Eigen::MatrixXd* mats[3] = {&complete.humidity, &complete.temperature,
                                    &complete.light};
  for (const auto* m : mats) {
    if (!m->allFinite())
      fail(Errc::bad_format,
           "series still has missing values; impute before smoothing");
  }

  const BasisSystem basis = make_bspline_basis(0.0, 1.0, n_basis, order);
  std::vector<double> grid(w);
  for (int t = 0; t < w; ++t) grid[t] = static_cast<double>(t) / (w - 1);

  LabDataset out;
  out.sensor_ids = complete.sensor_ids;
  out.dataset.response_basis = basis;
  out.dataset.response_coeffs.resize(n, n_basis);
  out.dataset.covariates.resize(2);
  for (auto& c : out.dataset.covariates) {
    c.basis = basis;
    c.coeffs.resize(n, n_basis);
  }
  out.dataset.include_intercept = true;

  std::vector<std::string> errors(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t s) {
    try {
      for (int v = 0; v < 3; ++v) {
        std::vector<std::pair<double, double>> samples(w);
        for (int t = 0; t < w; ++t) samples[t] = {grid[t], (*mats[v])(s, t)};
        const Curve c = smooth_curve(samples, basis, penalty);
        if (v == 0) {
          out.dataset.response_coeffs.row(s) = c.coeffs.transpose();
        } else {
          out.dataset.covariates[v - 1].coeffs.row(s) = c.coeffs.transpose();
        }
      }
    } catch (const std::exception& e) {
      errors[s] = e.what();
    }
  });
  for (int s = 0; s < n; ++s) {
    if (!errors[s].empty())
      fail(Errc::rank_deficient, "smoothing sensor " +
                                     std::to_string(out.sensor_ids[s]) +
                                     " failed: " + errors[s]);
  }

  std::vector<Edge> kept;
  for (const Edge& e : connectivity_to_weights(connectivity)) {
    const int u = complete.row_of(e.u);
    const int v = complete.row_of(e.v);
    if (u >= 0 && v >= 0) kept.push_back({u, v, e.w});
  }
  out.network = build_graph(n, kept);

  if (!coords.empty()) {
    out.coordinates.resize(n, 2);
    for (int s = 0; s < n; ++s) {
      const auto it = coords.find(out.sensor_ids[s]);
      if (it == coords.end())
        fail(Errc::bad_format, "no coordinates for sensor " +
                                   std::to_string(out.sensor_ids[s]));
      out.coordinates(s, 0) = it->second.first;
      out.coordinates(s, 1) = it->second.second;
    }
  }
  return out;
}

}  // namespace nwfr

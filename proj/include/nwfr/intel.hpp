#pragma once

#include <Eigen/Dense>
#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nwfr/graph.hpp"
#include "nwfr/model.hpp"

namespace nwfr {

// One row of an Intel-lab-format sensor log:
//   date time epoch moteid temperature humidity light voltage
struct SensorReading {
  std::string date;       // YYYY-MM-DD
  std::string timestamp;  // HH:MM:SS[.ffffff]
  int node_id = 0;
  double temperature = 0.0;  // deg C
  double humidity = 0.0;     // percent
  double light = 0.0;        // log Lux unless rescaled at windowing
  double voltage = 0.0;      // V
  double abs_seconds = 0.0;  // date+time on one continuous axis
};

struct ParseReject {
  int line_no = 0;  // 1-based
  std::string reason;
};

struct ParseResult {
  std::vector<SensorReading> readings;
  std::vector<ParseReject> rejects;
};

// Malformed rows land in rejects with their line number, never dropped
// silently. Blank lines and '#' comments are skipped without a reject.
ParseResult parse_readings(std::istream& in);
ParseResult parse_readings_file(const std::string& path);

// "YYYY-MM-DD HH:MM[:SS[.ffffff]]" -> seconds on the same axis as
// SensorReading::abs_seconds
double parse_datetime(const std::string& text);

struct CleaningRules {
  double hum_lo = 0.0, hum_hi = 100.0;     // outside -> missing
  double temp_lo = -10.0, temp_hi = 60.0;  // outside -> missing
  double volt_lo = 2.0, volt_hi = 3.0;     // outside -> window flagged
  bool light_is_raw_lux = false;           // apply log1p while windowing
};

struct TimeWindowSpec {
  std::string start = "2004-03-01 21:00";
  std::string end = "2004-03-02 21:00";
  int window_minutes = 15;
};

// Fixed-width window means per sensor and variable. Missing slots are NaN
// until imputation fills them.
struct WindowedSeries {
  std::vector<int> sensor_ids;  // ascending original ids, one row each
  TimeWindowSpec window;
  Eigen::MatrixXd temperature;  // sensors x windows
  Eigen::MatrixXd humidity;
  Eigen::MatrixXd light;
  Eigen::MatrixXi flagged;  // 1 where a voltage anomaly touched the window

  int n_sensors() const { return static_cast<int>(sensor_ids.size()); }
  int n_windows() const { return static_cast<int>(temperature.cols()); }
  int row_of(int sensor_id) const;  // -1 when absent
};

WindowedSeries clean_and_window(const std::vector<SensorReading>& readings,
                                const TimeWindowSpec& window,
                                const std::vector<int>& allowlist,
                                const CleaningRules& rules = {});

// Fills every NaN slot with the mean of the k nearest sensors' observed
// values at that window; nearness is the Euclidean distance over windows
// both sensors observed, ties broken by ascending sensor id. Observed
// values are never altered.
WindowedSeries knn_impute(const WindowedSeries& series, int k = 3);

struct ConnectivityEntry {
  int i = 0;
  int j = 0;
  double p = 0.0;  // reception probability in (0, 1]
};

std::vector<ConnectivityEntry> parse_connectivity(std::istream& in);
std::vector<ConnectivityEntry> parse_connectivity_file(const std::string& path);

// w = -log(p), directions averaged when both are reported; self pairs are
// dropped since the graph has no self-loops. Edges keep the original
// sensor ids.
std::vector<Edge> connectivity_to_weights(
    const std::vector<ConnectivityEntry>& table);

// id -> (x, y)
std::map<int, std::pair<double, double>> parse_coordinates(std::istream& in);
std::map<int, std::pair<double, double>> parse_coordinates_file(
    const std::string& path);

struct LabDataset {
  Network network;
  FunctionalDataset dataset;    // humidity ~ temperature + light
  std::vector<int> sensor_ids;  // vertex -> original id
  Eigen::MatrixXd coordinates;  // N x 2, empty when none were supplied
};

// Smooths each complete series onto [0, 1], keeps the connectivity edges
// between retained sensors, and remaps ids to vertex indices.
LabDataset build_lab_dataset(
    const WindowedSeries& complete,
    const std::vector<ConnectivityEntry>& connectivity, int n_basis,
    int order, double penalty,
    const std::map<int, std::pair<double, double>>& coordinates = {});

}  // namespace nwfr

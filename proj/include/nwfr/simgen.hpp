#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nwfr/conformal.hpp"
#include "nwfr/graph.hpp"
#include "nwfr/model.hpp"

namespace nwfr {

enum class EwRule { one, random, in_out };       // edge weights
enum class OcRule { equal, different };          // community sizes
enum class CbcRule { low, high };                // inter-community links

const char* ew_name(EwRule e);
const char* oc_name(OcRule o);
const char* cbc_name(CbcRule c);
EwRule parse_ew(const std::string& s);
OcRule parse_oc(const std::string& s);
CbcRule parse_cbc(const std::string& s);

struct ScenarioOverrides {
  int n_total = 100;
  int n_communities = 4;
  int k = 21;       // basis size shared by covariate and response
  int order = 4;
  double noise_var = 1e-4;
};

struct ScenarioSpec {
  EwRule ew = EwRule::one;
  OcRule oc = OcRule::equal;
  CbcRule cbc = CbcRule::low;
  int n_total = 100;
  int n_communities = 4;
  int k = 21;
  int order = 4;
  double noise_var = 1e-4;

  std::vector<int> sizes() const;
  double inter_p() const { return cbc == CbcRule::low ? 0.2 : 0.5; }
  WeightRule weight_rule() const;
  std::string name() const;  // e.g. "One/Equal/Low"
  int id() const;            // 0..11 over the rule combinations
};

ScenarioSpec make_scenario(EwRule ew, OcRule oc, CbcRule cbc,
                           const ScenarioOverrides& o = {});

std::vector<ScenarioSpec> all_scenarios(const ScenarioOverrides& o = {});

struct GeneratedInstance {
  Network network;
  FunctionalDataset dataset;  // single covariate, no intercept
  std::vector<Eigen::MatrixXd> true_blocks;  // per vertex, K x K
  Partition communities;
};

// Draws a full scenario instance: weighted SBM graph, covariate and base
// coefficient matrices, per-community transformed blocks, and noisy
// responses. The four community transforms shift the base surface by a
// constant, realized in coefficient space through the all-ones matrix
// (the coefficient representation of the constant surface 1).
GeneratedInstance generate_instance(const ScenarioSpec& spec,
                                    std::uint64_t seed);

struct StudySettings {
  int reps = 20;
  std::uint64_t seed = 1;
  bool run_classic = true;
  bool run_nwfr = true;
  bool run_conformal = true;
  double alpha = 0.05;
  double test_frac = 0.2;
  double cal_frac = 0.5;
  int grid_points = 201;
};

struct StudyRow {
  ScenarioSpec scenario;
  std::string model;   // classic | nwfr | conformal-h2 | conformal-hinf
  std::string metric;  // rimse | r2int | theta | covg | covl | abw | sint
  double mean = 0.0;
  double sd = 0.0;
  int reps = 0;
  std::uint64_t seed = 0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  std::vector<std::string> failures;
};

StudyReport run_study(const std::vector<ScenarioSpec>& scenarios,
                      const StudySettings& settings);

std::string study_csv(const StudyReport& report);
std::string study_markdown(const StudyReport& report);

}  // namespace nwfr

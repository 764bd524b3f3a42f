#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nwfr/conformal.hpp"
#include "nwfr/graph.hpp"
#include "nwfr/model.hpp"

namespace nwfr {

using Json = nlohmann::json;

// bumped on breaking layout changes; readers reject other majors
inline constexpr int kFormatVersion = 1;

Json matrix_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json basis_json(const BasisSystem& b);
BasisSystem basis_from_json(const Json& j);

Json network_json(const Network& g);
Network network_from_json(const Json& j);

Json dataset_json(const FunctionalDataset& d);
FunctionalDataset dataset_from_json(const Json& j);

// Everything a fit needs, plus whatever provenance the producer had:
// simulation truth, ingest ids, sensor coordinates.
struct InstanceBundle {
  Network network;
  FunctionalDataset dataset;
  Eigen::MatrixXd coordinates;                // 0x0 when absent
  std::vector<Eigen::MatrixXd> true_blocks;   // empty when absent
  Partition communities;                      // k == 0 when absent
  std::vector<int> sensor_ids;                // empty when absent
  Json meta = Json::object();
};

Json instance_json(const InstanceBundle& b);
InstanceBundle instance_from_json(const Json& j);

Json model_json(const NwfrFit& fit);
NwfrFit model_from_json(const Json& j);

Json gof_json(const GofReport& r);
Json perm_json(const PermTestResult& r);
Json conformal_json(const ConformalResult& r);
ConformalResult conformal_from_json(const Json& j);

Json manifest_json(const std::string& command, const Json& config,
                   const std::vector<std::string>& outputs);

void write_json_file(const std::string& path, const Json& j);
Json load_json_file(const std::string& path);
// checks kind and format_version on top of plain loading
Json load_artifact(const std::string& path, const std::string& kind);

void write_text_file(const std::string& path, const std::string& text);

std::string edges_csv(const Network& g);                   // u,v,w
std::string bands_csv(const std::vector<int>& vertices,
                      const std::vector<PredictionBand>& bands);
std::string surface_csv(const Eigen::MatrixXd& values,     // t rows, s cols
                        const std::vector<double>& s_grid,
                        const std::vector<double>& t_grid);
std::string curves_csv(const std::vector<int>& vertices,
                       const std::vector<Curve>& curves,
                       const std::vector<double>& grid);

}  // namespace nwfr

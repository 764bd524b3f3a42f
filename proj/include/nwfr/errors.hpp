#pragma once

#include <stdexcept>
#include <string>

namespace nwfr {

// Machine-readable failure reasons. Each maps to one of three CLI exit
// classes: usage (bad arguments), data (bad input content), numeric
// (well-formed input the algorithms cannot handle).
enum class Errc {
  // graph
  duplicate_edge,
  self_loop,
  id_out_of_range,
  negative_weight,
  connectivity_failure,
  // basis
  invalid_dimension,
  out_of_domain,
  rank_deficient,
  basis_mismatch,
  // model
  nonpositive_bandwidth,
  uncovered_vertex,
  dimension_mismatch,
  singular_system,
  missing_block,
  index_out_of_range,
  degenerate_variance,
  all_fits_failed,
  // conformal
  empty_side,
  grid_mismatch,
  empty_scores,
  length_mismatch,
  invalid_combination,
  // ingest
  empty_range,
  insufficient_neighbors,
  invalid_probability,
  // generic
  invalid_argument,
  io_failure,
  bad_format,
};

const char* errc_name(Errc c);

enum class ErrClass { usage, data, numeric };
ErrClass errc_class(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace nwfr

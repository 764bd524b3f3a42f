#include "nwfr/errors.hpp"

namespace nwfr {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::duplicate_edge: return "DuplicateEdge";
    case Errc::self_loop: return "SelfLoop";
    case Errc::id_out_of_range: return "IdOutOfRange";
    case Errc::negative_weight: return "NegativeWeight";
    case Errc::connectivity_failure: return "ConnectivityFailure";
    case Errc::invalid_dimension: return "InvalidDimension";
    case Errc::out_of_domain: return "OutOfDomain";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::basis_mismatch: return "BasisMismatch";
    case Errc::nonpositive_bandwidth: return "NonpositiveBandwidth";
    case Errc::uncovered_vertex: return "UncoveredVertex";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::singular_system: return "SingularSystem";
    case Errc::missing_block: return "MissingBlock";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::degenerate_variance: return "DegenerateVariance";
    case Errc::all_fits_failed: return "AllFitsFailed";
    case Errc::empty_side: return "EmptySide";
    case Errc::grid_mismatch: return "GridMismatch";
    case Errc::empty_scores: return "EmptyScores";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::invalid_combination: return "InvalidCombination";
    case Errc::empty_range: return "EmptyRange";
    case Errc::insufficient_neighbors: return "InsufficientNeighbors";
    case Errc::invalid_probability: return "InvalidProbability";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::io_failure: return "IoFailure";
    case Errc::bad_format: return "BadFormat";
  }
  return "UnknownError";
}

ErrClass errc_class(Errc c) {
  switch (c) {
    case Errc::invalid_argument:
    case Errc::invalid_combination:
    case Errc::nonpositive_bandwidth:
    case Errc::invalid_dimension:
      return ErrClass::usage;
    case Errc::singular_system:
    case Errc::rank_deficient:
    case Errc::degenerate_variance:
    case Errc::all_fits_failed:
    case Errc::uncovered_vertex:
    case Errc::connectivity_failure:
    case Errc::insufficient_neighbors:
      return ErrClass::numeric;
    default:
      return ErrClass::data;
  }
}

}  // namespace nwfr

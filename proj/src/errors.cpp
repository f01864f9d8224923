#include "sparseclust/errors.hpp"

#include <sstream>

namespace sparseclust {

namespace {

std::string alignment_message(std::size_t anchor, std::size_t other, const std::array<double, 2>& dist,
                              double tol) {
    std::ostringstream os;
    os << "alignment failure on pair (" << anchor << ", " << other << "): component distances " << dist[0]
       << " and " << dist[1] << " both exceed tolerance " << tol;
    return os.str();
}

}  // namespace

AlignmentFailure::AlignmentFailure(std::size_t anchor, std::size_t other, std::array<double, 2> distances,
                                   double tolerance)
    : AlgorithmFailure(alignment_message(anchor, other, distances, tolerance)),
      anchor_(anchor),
      other_(other),
      distances_(distances),
      tolerance_(tolerance) {}

}  // namespace sparseclust

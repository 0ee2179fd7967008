#pragma once

#include <string>
#include <vector>

#include "qsm/quantum/eigensolver.hpp"

namespace qsm::quantum {

struct TrackedState {
  double k = 0.0;
  double phase = 0.0;
  Eigen::Index index = 0;
  double overlap = 1.0;  // |<previous|this>|
  StateVector state;
};

// Follows one eigenstate along k_grid by maximal overlap with the previous step.
inline std::vector<TrackedState> track_eigenstate(const TorusHilbert& space, const std::vector<double>& k_grid,
                                                  Eigen::Index start_index, double min_overlap = 0.5) {
  require(!k_grid.empty(), ErrorCode::invalid_argument, "empty k grid");
  std::vector<TrackedState> out;
  out.reserve(k_grid.size());
  for (std::size_t s = 0; s < k_grid.size(); ++s) {
    const SpectralDecomposition d = diagonalize_floquet(space, k_grid[s]);
    TrackedState t;
    t.k = k_grid[s];
    if (s == 0) {
      require(start_index >= 0 && start_index < space.N, ErrorCode::invalid_argument, "start index out of range");
      t.index = start_index;
    } else {
      const Eigen::VectorXd ov = (d.eigenvectors.adjoint() * out.back().state.amplitudes).cwiseAbs();
      t.overlap = ov.maxCoeff(&t.index);
      if (t.overlap <= min_overlap) {
        throw Error(ErrorCode::continuation_lost, "max overlap " + std::to_string(t.overlap) + " at k=" +
                                                      std::to_string(t.k) + " (N=" + std::to_string(space.N) + ")");
      }
    }
    t.phase = d.eigenphases(t.index);
    t.state = d.eigenstate(t.index);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace qsm::quantum

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "resmatch/layers.hpp"

namespace resmatch {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  bool pass = false;

  const GradCheckEntry* worst() const;
};

// Compares analytic gradients against central finite differences for every
// listed parameter. build_loss re-builds the graph from scratch on each call
// and returns a 1×1 loss node, so finite differencing only ever runs the
// forward pass. after_backward is a test hook that can perturb analytic
// gradients before the comparison.
GradCheckReport grad_check(const std::function<Tape::Id(Tape&)>& build_loss,
                           const std::vector<std::pair<std::string, Param*>>& params, double tolerance,
                           double fd_step = 1e-5, const std::function<void()>& after_backward = {});

}  // namespace resmatch

#pragma once

#include <string>
#include <vector>

#include "repu/network.hpp"

namespace repu {

/// Mixed-RePU network computing d f / d x_j (j is 0-based) of a scalar-output
/// source with uniform hidden power p >= 2. Each source hidden layer becomes three
/// layers carrying f, and the tangent as a difference of two ReLU lanes.
MixedRepuNetwork compile_partial(const MixedRepuNetwork& net, int j);

/// All d partials as parallel copies sharing the input; output o is d f / d x_o.
MixedRepuNetwork compile_gradient(const MixedRepuNetwork& net);

struct BlockAudit {
  int block = 0;  // source hidden layer index; D is the readout
  bool ok = true;
  std::string detail;
};

struct AuditReport {
  bool ok = true;
  int first_failure = -1;
  std::vector<BlockAudit> blocks;
  std::string summary() const;
};

/// Checks that `derived` is compile_partial(source, j) for some j: lane widths,
/// activation powers and replicated source weights, block by block.
AuditReport structural_audit(const MixedRepuNetwork& source, const MixedRepuNetwork& derived);

}  // namespace repu

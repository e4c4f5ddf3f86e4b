#pragma once

#include "homeostat/controller.hpp"

namespace homeostat {

/// Reference ingest/reject decision, written from the definition with plain
/// scalar loops (its own forward/backprop, no shared math with
/// counterfactual_decide). Used by `oracle-check` and the test suite.
Decision oracle_decide(const Mlp& net, const HomeostatState& state, int predicted_label);

}  // namespace homeostat

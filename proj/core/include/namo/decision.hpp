#pragma once

#include <string_view>

#include "namo/interval.hpp"

namespace namo {

enum class Strategy { Bypass, Remove };

std::string_view to_string(Strategy s);

struct StrategyDecision {
  Strategy choice = Strategy::Bypass;
  CostInterval bypass_cost;
  CostInterval removal_cost;
  double bypass_utility = 0.0;
  double removal_utility = 0.0;
  int blocking_obstacle = -1;
};

/// [C_nav] + [C_blocked].
CostInterval assemble_bypass_cost(const CostInterval& nav, const CostInterval& blocked);

/// [C_MO] + [C_nav after removal] + [C_blocked after removal].
CostInterval assemble_removal_cost(const CostInterval& removal, const CostInterval& nav_after,
                                   const CostInterval& blocked_after);

/// Laplace criterion under a uniform cost distribution: the midpoint.
double laplace_utility(const CostInterval& interval);

/// Smaller utility wins; ties go to Bypass. Throws "no feasible strategy" when
/// both utilities are infinite.
StrategyDecision decide(const CostInterval& bypass, const CostInterval& removal, int blocking_obstacle = -1);

}  // namespace namo

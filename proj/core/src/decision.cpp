#include "namo/decision.hpp"

#include "namo/error.hpp"

namespace namo {

std::string_view to_string(Strategy s) { return s == Strategy::Bypass ? "Bypass" : "Remove"; }

CostInterval assemble_bypass_cost(const CostInterval& nav, const CostInterval& blocked) { return nav + blocked; }

CostInterval assemble_removal_cost(const CostInterval& removal, const CostInterval& nav_after,
                                   const CostInterval& blocked_after) {
  return removal + nav_after + blocked_after;
}

double laplace_utility(const CostInterval& interval) { return interval.midpoint(); }

StrategyDecision decide(const CostInterval& bypass, const CostInterval& removal, int blocking_obstacle) {
  StrategyDecision d;
  d.bypass_cost = bypass;
  d.removal_cost = removal;
  d.bypass_utility = laplace_utility(bypass);
  d.removal_utility = laplace_utility(removal);
  d.blocking_obstacle = blocking_obstacle;
  if (d.bypass_utility == kInf && d.removal_utility == kInf) throw Error("no feasible strategy");
  d.choice = d.bypass_utility <= d.removal_utility ? Strategy::Bypass : Strategy::Remove;
  return d;
}

}  // namespace namo

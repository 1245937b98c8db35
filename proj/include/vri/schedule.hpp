#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace vri {

enum class Regime { Constant, StateDependent, Custom };
enum class ControlConstraint { NonNegative, UnitInterval };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Constant: return "constant";
    case Regime::StateDependent: return "state_dependent";
    case Regime::Custom: return "custom";
  }
  return "?";
}

inline const char* to_string(ControlConstraint c) {
  return c == ControlConstraint::UnitInterval ? "unit_interval" : "nonnegative";
}

// pi: amount held in the risky asset; a: retained fraction of each claim.
struct Control {
  double pi = 0.0;
  double a = 0.0;
};

struct StrategySchedule {
  DiscreteGrid grid;
  std::vector<double> pi;
  std::vector<double> a;
  Regime regime = Regime::Custom;
  ControlConstraint constraint = ControlConstraint::NonNegative;

  StrategySchedule(DiscreteGrid g, Regime r = Regime::Custom, ControlConstraint c = ControlConstraint::NonNegative)
      : grid(g), pi(g.size(), 0.0), a(g.size(), 0.0), regime(r), constraint(c) {}

  Control at(std::size_t i) const { return {pi.at(i), a.at(i)}; }

  void validate() const {
    if (pi.size() != grid.size() || a.size() != grid.size()) throw ShapeError("schedule: length does not match grid");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(a[i] >= 0)) throw DomainError("schedule: negative retention at node " + std::to_string(i));
      if (constraint == ControlConstraint::UnitInterval && a[i] > 1.0)
        throw DomainError("schedule: retention above 1 at node " + std::to_string(i));
    }
  }
};

}  // namespace vri

#pragma once

#include <memory>
#include <numbers>
#include <string>

#include "aimlake/model.hpp"
#include "aimlake/spectral_operator.hpp"

namespace fixture {

using namespace aimlake;

struct Lake {
  CoefficientFields fields;
  std::shared_ptr<const FieldCore> core;
  std::shared_ptr<const ConstrainedBasis> basis;

  LakeModel model(const ForcingModel& fm = {}) const { return LakeModel(core, basis, Forcing(fm, *core, *basis)); }
};

inline Lake make_lake(const std::string& b, const std::string& nu, const std::string& eta, int points, int cutoff,
                      double side = 2 * std::numbers::pi) {
  Lake l;
  l.fields = sample_fields(Grid::make(side, points, cutoff), {b, ""}, {nu, ""}, {eta, ""});
  l.core = std::make_shared<const FieldCore>(l.fields);
  l.basis = std::make_shared<const ConstrainedBasis>(build_basis(l.fields));
  return l;
}

/// b = 2 + sin x, nu = 1, eta = 0.05 on 64^2 with K = 6.
inline const Lake& reference() {
  static const Lake l = make_lake("2+sin(x)", "1", "0.05", 64, 6);
  return l;
}

/// Flat bottom, unit viscosity, K = 4.
inline const Lake& flat() {
  static const Lake l = make_lake("1", "1", "0", 32, 4);
  return l;
}

inline ForcingModel steady(double amplitude, int mode = 1) {
  return ForcingModel{ForcingKind::SteadyLowMode, amplitude, 0.0, mode, ""};
}

inline std::string source_dir() { return AIMLAKE_SOURCE_DIR; }

}  // namespace fixture

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "liftpose/param_store.hpp"
#include "liftpose/rng.hpp"
#include "liftpose/tape.hpp"

namespace liftpose::testing {

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

/// Relative error with a floor on the denominator.
inline double rel_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

/// Compares reverse-mode gradients of `loss(tape)` w.r.t. every trainable
/// entry of `store` (or a random subset of `per_param` entries per tensor)
/// against central differences with step h.
inline GradCheck check_gradients(ParamStore& store, const std::function<Var(Tape&)>& loss,
                                 std::size_t per_param = 0, double h = 1e-5,
                                 std::uint64_t seed = 7) {
  Gradients analytic;
  double floor = 1e-6;
  {
    Tape tape;
    Var l = loss(tape);
    floor = std::max(floor, 1e-10 * std::max(1.0, std::abs(l.scalar())) / h);
    tape.backward(l);
    analytic = tape.gradients(store);
  }
  auto eval = [&] {
    Tape tape;
    return loss(tape).scalar();
  };
  GradCheck out;
  Rng pick(seed);
  for (auto& [name, p] : store.entries()) {
    if (!p.trainable) continue;
    const Eigen::Index n = p.value.size();
    std::vector<Eigen::Index> idx;
    if (per_param == 0 || static_cast<std::size_t>(n) <= per_param) {
      for (Eigen::Index i = 0; i < n; ++i) idx.push_back(i);
    } else {
      for (std::size_t k = 0; k < per_param; ++k) idx.push_back(static_cast<Eigen::Index>(pick.below(n)));
    }
    for (Eigen::Index i : idx) {
      double& v = p.value.data()[i];
      const double saved = v;
      v = saved + h;
      const double up = eval();
      v = saved - h;
      const double down = eval();
      v = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.at(name).data()[i];
      const double e = rel_error(a, numeric, floor);
      ++out.checked;
      if (e > out.max_rel) {
        out.max_rel = e;
        out.worst = name + "[" + std::to_string(i) + "] analytic " + std::to_string(a) +
                    " numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

/// Random matrix with entries uniform in [lo, hi].
inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

/// Entries bounded away from zero.
inline Matrix random_away_from_zero(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double mag = rng.uniform(0.1, 1.0);
    m.data()[i] = rng.bernoulli(0.5) ? mag : -mag;
  }
  return m;
}

}  // namespace liftpose::testing

#pragma once

// Central finite-difference oracle for graph gradients. Independent of the
// reverse sweep: it only ever evaluates forward passes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "srlfd/grad/graph.hpp"
#include "srlfd/rng.hpp"

namespace srlfd::testing {

using BuildLoss = std::function<grad::NodeId(grad::Graph&)>;

struct FdReport {
  double worst_rel = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
};

inline double fd_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

// Compares every entry of every parameter in `params` against central
// differences with step h.
inline FdReport check_gradients(grad::ParameterSet& params, const BuildLoss& build,
                                double h = 1e-5) {
  grad::Graph g;
  const grad::NodeId loss = build(g);
  const grad::GradientTable table = g.backward(loss);

  auto eval = [&] {
    grad::Graph ge;
    return ge.value(build(ge)).item();
  };

  FdReport rep;
  for (auto& p : params) {
    const grad::Tensor* ga = table.find(p);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double up = eval();
      p.value[i] = saved - h;
      const double down = eval();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = ga ? (*ga)[i] : 0.0;
      const double rel = fd_relative_error(analytic, numeric);
      ++rep.checked;
      if (rel > rep.worst_rel) {
        rep.worst_rel = rel;
        rep.worst_param = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

inline grad::Tensor random_tensor(grad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  grad::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

}  // namespace srlfd::testing

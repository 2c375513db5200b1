#pragma once

#include <vector>

#include "smpm/problems.hpp"
#include "smpm/rng.hpp"
#include "smpm/solver.hpp"

namespace fixture {

using smpm::Matrix;
using smpm::Vector;

inline Vector random_vector(int d, smpm::Rng& rng, double scale = 1.0) {
  Vector v(d);
  for (int k = 0; k < d; ++k) v[k] = scale * rng.normal();
  return v;
}

inline smpm::QuadraticForm random_form(int d, smpm::Rng& rng, double lo, double hi) {
  Vector lam(d);
  for (int k = 0; k < d; ++k) lam[k] = rng.uniform(lo, hi);
  return smpm::QuadraticForm::spectral(smpm::orthogonal_matrix(d, rng), lam, random_vector(d, rng));
}

struct QuadraticSpec {
  double f_lo = 0.0, f_hi = 0.0;  // f eigenvalue range; f = 0 when f_hi == 0
  double mu_g = 0.0;
  double h_lo = 0.5, h_hi = 4.0;
};

// Quadratic instance with constants taken from the eigenvalue ranges of each h_i.
inline smpm::ProblemInstance quadratic_instance(int n, int d, smpm::Rng& rng, const QuadraticSpec& spec = {}) {
  smpm::SmoothOracle f = smpm::SmoothOracle::zero();
  if (spec.f_hi > 0.0) f = smpm::SmoothOracle::quadratic(random_form(d, rng, spec.f_lo, spec.f_hi));
  std::vector<smpm::ProxOracle> h;
  for (int i = 0; i < n; ++i) h.push_back(smpm::ProxOracle::quadratic(random_form(d, rng, spec.h_lo, spec.h_hi)));
  return smpm::make_quadratic_instance(f, spec.mu_g, std::move(h));
}

// Random state around the solution.
inline smpm::SolverState perturbed_state(const smpm::ProblemInstance& inst, smpm::Rng& rng, double scale,
                                         bool track_z = false) {
  smpm::SolverState st = smpm::reference_state(inst, track_z);
  st.x += random_vector(inst.d, rng, scale);
  for (int i = 0; i < inst.n; ++i) st.u.col(i) += random_vector(inst.d, rng, scale);
  smpm::resync(st, inst);
  return st;
}

}  // namespace fixture

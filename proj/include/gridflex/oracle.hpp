#pragma once

#include <vector>

#include "gridflex/dispatch.hpp"
#include "gridflex/network.hpp"

namespace gridflex {

/// Brute-force references used to certify the cutting-plane assessments on
/// small systems. They share evaluate_phi and the LP kernel but none of the
/// cutting-plane machinery.

struct VertexPhi {
  std::vector<int> sign;  // N entries in {-1, +1}
  double phi = 0.0;
};

/// phi at every vertex d_bar + lambda * delta_d o s of the box. N <= 20.
std::vector<VertexPhi> enumerate_vertex_phis(const DispatchMatrices& m,
                                             const Hyperbox& box,
                                             double lambda);

/// Bisection on g(lambda) = max vertex phi; returns sup{lambda : g <= tol}
/// clipped to [0,1]. Returns 0 when the nominal point itself violates.
double det_lambda_oracle(const DispatchMatrices& m, const Hyperbox& box,
                         double tol = 1e-6);

/// Exact worst-case expectation of phi over distributions supported on the
/// box with mean d_bar: an LP over the 2^N vertex masses. N <= 12.
double worst_expectation_oracle(const DispatchMatrices& m, const Hyperbox& box,
                                double lambda);

/// Bisection on worst_expectation_oracle(lambda) <= beta. N <= 12.
double sto_lambda_oracle(const DispatchMatrices& m, const Hyperbox& box,
                         double beta, double tol = 1e-6);

}  // namespace gridflex

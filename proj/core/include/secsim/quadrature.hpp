#pragma once

#include <vector>

namespace secsim {

// Nodes and weights for averaging a function of a Gaussian variable:
//   E[f(X)] ~= sum_i weight[i] * f(mean + sigma * node[i]),  X ~ N(mean, sigma^2).
// Nodes are in units of sigma; weights are positive and sum to 1.
struct gaussian_rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule (Golub-Welsch), rescaled to the probabilists' form
// above. Exact for polynomials f of degree <= 2n-1. n >= 1.
gaussian_rule gauss_hermite(int n);

// Sample points mean + sigma * node[i] for a concrete Gaussian.
std::vector<double> gaussian_nodes(const gaussian_rule& rule, double mean, double sigma);

}  // namespace secsim

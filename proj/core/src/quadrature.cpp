#include "secsim/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "secsim/errors.hpp"

namespace secsim {

gaussian_rule gauss_hermite(int n) {
  if (n < 1) throw config_error("gauss_hermite: need at least one node");
  gaussian_rule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    return rule;
  }
  // Golub-Welsch on the Hermite Jacobi matrix: eigenvalues are the physicists'
  // nodes x_i, squared first eigenvector components are the pdf weights.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = std::sqrt(k / 2.0);
    jacobi(k - 1, k) = beta;
    jacobi(k, k - 1) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double sq2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    // Standard-normal sampling points are sqrt(2) * x_i.
    rule.nodes[i] = sq2 * solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  return rule;
}

std::vector<double> gaussian_nodes(const gaussian_rule& rule, double mean, double sigma) {
  std::vector<double> points(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) points[i] = mean + sigma * rule.nodes[i];
  return points;
}

}  // namespace secsim

#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace pmstm {

// Undirected region graph; dense() returns the symmetric 0/1 adjacency matrix
// with a zero diagonal.
struct AdjacencyStructure {
  int n_regions = 0;
  std::vector<std::pair<int, int>> edges;

  Eigen::MatrixXd dense() const;
};

// Plain-text edge list: header "n <N>", then one "i j" pair per line
// (0-based region indices).
AdjacencyStructure load_adjacency(const std::string& path);

// (I - X(X'X)^{-1}X') A (I - X(X'X)^{-1}X'). X must have full column rank.
Eigen::MatrixXd mi_operator(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A);

// Eigendecomposition of the (symmetrized) operator with eigenvalues sorted in
// non-increasing order, ties broken deterministically and each eigenvector
// sign-fixed so its largest-magnitude entry is positive.
struct SortedEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
SortedEigen sorted_symmetric_eigen(const Eigen::MatrixXd& G);

// Number of eigenvalues of the MI operator above the positivity tolerance.
int positive_eigenvalue_count(const Eigen::VectorXd& values);

// First r eigenvectors of the MI operator; orthonormal and orthogonal to
// col(X). Errors if r exceeds the positive-eigenvalue count.
Eigen::MatrixXd mi_basis(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                         int r);

// Hughes-style default: ceil(0.10 * number of positive eigenvalues).
int default_basis_rank(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A);

// Propagator matrix: the r eigenvectors of (I - P)U(I - P) where P projects
// onto the covariate-reachable directions Psi'X of the reduced system.
// With the MI basis, Psi'X = 0 and the result is the identity basis.
Eigen::MatrixXd mi_propagator(const Eigen::MatrixXd& Psi,
                              const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& U);
Eigen::MatrixXd mi_propagator(const Eigen::MatrixXd& Psi,
                              const Eigen::MatrixXd& X);

// Frobenius calibration of the random-effect precision to the target Q:
// K*^{-1} = clip(Psi' Q Psi), eigenvalues floored at 1e-8 before inversion.
// Psi must have orthonormal columns.
Eigen::MatrixXd k_star(const Eigen::MatrixXd& Psi, const Eigen::MatrixXd& Q);

}  // namespace pmstm

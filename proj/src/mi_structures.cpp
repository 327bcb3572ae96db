#include "pmstm/mi_structures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pmstm/errors.hpp"

namespace pmstm {

Eigen::MatrixXd AdjacencyStructure::dense() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_regions, n_regions);
  for (const auto& [i, j] : edges) {
    A(i, j) = 1.0;
    A(j, i) = 1.0;
  }
  return A;
}

AdjacencyStructure load_adjacency(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("adjacency: cannot open '" + path + "'");
  AdjacencyStructure adj;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    if (!have_header) {
      std::string tag;
      ss >> tag >> adj.n_regions;
      if (ss.fail() || tag != "n" || adj.n_regions <= 0)
        throw ParseError("adjacency: expected header 'n <N>' at line " +
                         std::to_string(line_no));
      have_header = true;
      continue;
    }
    int i, j;
    ss >> i >> j;
    if (ss.fail())
      throw ParseError("adjacency: malformed edge at line " +
                       std::to_string(line_no));
    if (i < 0 || j < 0 || i >= adj.n_regions || j >= adj.n_regions)
      throw ParseError("adjacency: region index out of range at line " +
                       std::to_string(line_no));
    if (i == j)
      throw ParseError("adjacency: self-loop at line " + std::to_string(line_no));
    adj.edges.emplace_back(i, j);
  }
  if (!have_header) throw ParseError("adjacency: missing 'n <N>' header");
  return adj;
}

namespace {

// Projection complement I - X(X'X)^{-1}X' through a rank-revealing QR.
Eigen::MatrixXd projection_complement(const Eigen::MatrixXd& X) {
  const auto n = X.rows();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols())
    throw NumericalError("mi_operator: covariate matrix is rank deficient");
  Eigen::MatrixXd Q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n, X.cols());
  return Eigen::MatrixXd::Identity(n, n) - Q1 * Q1.transpose();
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  int idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v[idx] < 0.0) v = -v;
}

}  // namespace

Eigen::MatrixXd mi_operator(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.rows() != X.rows())
    throw std::invalid_argument("mi_operator: dimension mismatch");
  const Eigen::MatrixXd P = projection_complement(X);
  return P * A * P;
}

SortedEigen sorted_symmetric_eigen(const Eigen::MatrixXd& G) {
  const Eigen::MatrixXd S = 0.5 * (G + G.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw NumericalError("sorted_symmetric_eigen: eigensolver failed");
  const auto n = S.rows();
  Eigen::MatrixXd vectors = es.eigenvectors();
  for (Eigen::Index j = 0; j < n; ++j) fix_sign(vectors.col(j));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& vals = es.eigenvalues();
  const double tie_tol = 1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::fabs(vals[a] - vals[b]) > tie_tol) return vals[a] > vals[b];
    // deterministic tie order: first component where the vectors differ
    for (Eigen::Index i = 0; i < n; ++i) {
      const double da = vectors(i, a), db = vectors(i, b);
      if (std::fabs(da - db) > 1e-12) return da > db;
    }
    return a < b;
  });

  SortedEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values[j] = vals[order[j]];
    out.vectors.col(j) = vectors.col(order[j]);
  }
  return out;
}

int positive_eigenvalue_count(const Eigen::VectorXd& values) {
  const double tol = 1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());
  int count = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values[i] > tol) ++count;
  return count;
}

Eigen::MatrixXd mi_basis(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                         int r) {
  const SortedEigen eig = sorted_symmetric_eigen(mi_operator(X, A));
  const int positives = positive_eigenvalue_count(eig.values);
  if (r < 1 || r > positives)
    throw std::invalid_argument(
        "mi_basis: rank must lie in [1, " + std::to_string(positives) +
        "] (positive eigenvalues), got " + std::to_string(r));
  return eig.vectors.leftCols(r);
}

int default_basis_rank(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A) {
  const SortedEigen eig = sorted_symmetric_eigen(mi_operator(X, A));
  const int positives = positive_eigenvalue_count(eig.values);
  if (positives < 1)
    throw NumericalError("default_basis_rank: operator has no positive eigenvalues");
  return static_cast<int>(std::ceil(0.10 * positives));
}

Eigen::MatrixXd mi_propagator(const Eigen::MatrixXd& Psi,
                              const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& U) {
  const auto r = Psi.cols();
  if (X.rows() != Psi.rows())
    throw std::invalid_argument("mi_propagator: Psi and X row mismatch");
  if (U.rows() != r || U.cols() != r)
    throw std::invalid_argument("mi_propagator: U must be r x r");

  // Reduced system matrix (Psi'X, I_r): the identity block is trivially
  // unconfounded, so the projector only has to annihilate col(Psi'X).
  const Eigen::MatrixXd S = Psi.transpose() * X;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(r, r);
  if (S.cwiseAbs().maxCoeff() > 1e-12) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    if (rank >= r)
      throw NumericalError("mi_propagator: covariate directions span the whole "
                           "reduced space");
    Eigen::MatrixXd Q1 =
        qr.householderQ() * Eigen::MatrixXd::Identity(r, rank);
    P -= Q1 * Q1.transpose();
  }
  const SortedEigen eig = sorted_symmetric_eigen(P * U * P);
  return eig.vectors;
}

Eigen::MatrixXd mi_propagator(const Eigen::MatrixXd& Psi,
                              const Eigen::MatrixXd& X) {
  return mi_propagator(Psi, X,
                       Eigen::MatrixXd::Identity(Psi.cols(), Psi.cols()));
}

Eigen::MatrixXd k_star(const Eigen::MatrixXd& Psi, const Eigen::MatrixXd& Q) {
  if (Q.rows() != Q.cols() || Q.rows() != Psi.rows())
    throw std::invalid_argument("k_star: dimension mismatch");
  const auto r = Psi.cols();
  const Eigen::MatrixXd M = Psi.transpose() * Q * Psi;
  const SortedEigen eig = sorted_symmetric_eigen(M);

  constexpr double kFloor = 1e-8;
  if (eig.values.maxCoeff() <= kFloor)
    throw NumericalError("k_star: projected target is numerically zero");
  Eigen::VectorXd inv_clipped(r);
  for (Eigen::Index i = 0; i < r; ++i)
    inv_clipped[i] = 1.0 / std::max(eig.values[i], kFloor);
  Eigen::MatrixXd K =
      eig.vectors * inv_clipped.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (K + K.transpose());
}

}  // namespace pmstm

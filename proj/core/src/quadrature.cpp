#include "nodalab/quadrature.hpp"

#include "nodalab/common.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace nodalab {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights mu0
// times the squared first eigenvector components.
Rule1D golub_welsch(const std::vector<double>& diag, const std::vector<double>& off, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::VectorXd d(n), e(n > 1 ? n - 1 : 0);
  for (int i = 0; i < n; ++i) d[i] = diag[i];
  for (int i = 0; i + 1 < n; ++i) e[i] = off[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  Rule1D r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()[i]);
    const double v = es.eigenvectors()(0, i);
    r.weights.push_back(mu0 * v * v);
  }
  return r;
}

template <class Make>
const Rule1D& cached(char tag, int n, double param, Make make) {
  static std::mutex mutex;
  static std::map<std::tuple<char, int, double>, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_tuple(tag, n, param);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make()).first;
  return it->second;
}

}  // namespace

Rule1D gauss_legendre(int n, double a, double b) {
  const Rule1D& base = cached('P', n, 0.0, [n] {
    std::vector<double> diag(n, 0.0), off(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    return golub_welsch(diag, off, 2.0);
  });
  Rule1D r = base;
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = mid + half * base.nodes[i];
    r.weights[i] = half * base.weights[i];
  }
  return r;
}

Rule1D gauss_laguerre(int n, double alpha) {
  return cached('L', n, alpha, [n, alpha] {
    std::vector<double> diag(n), off(n > 1 ? n - 1 : 0);
    for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + alpha + 1.0;
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k * (k + alpha));
    return golub_welsch(diag, off, std::tgamma(alpha + 1.0));
  });
}

Rule1D gauss_hermite_normal(int n) {
  return cached('H', n, 0.0, [n] {
    std::vector<double> diag(n, 0.0), off(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
    return golub_welsch(diag, off, 1.0);
  });
}

}  // namespace nodalab

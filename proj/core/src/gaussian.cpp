#include "nodalab/gaussian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace nodalab {

namespace {

constexpr const char* kModule = "kacrice";

double scale_of(const MatX& c) {
  double s = 0.0;
  for (int i = 0; i < c.rows(); ++i) s = std::max(s, std::abs(c(i, i)));
  return s > 0.0 ? s : 1.0;
}

MatX clamp_psd(const MatX& c, const char* op) {
  const double scale = scale_of(c);
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (c + c.transpose()));
  VecX ev = es.eigenvalues();
  bool changed = false;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-6 * scale)
      fail(ErrorKind::DegenerateConditioning, kModule, op,
           "covariance has eigenvalue " + std::to_string(ev[i]) + " (not positive semidefinite)");
    if (ev[i] < 0.0) {
      ev[i] = 0.0;
      changed = true;
    }
  }
  if (!changed) return 0.5 * (c + c.transpose());
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GaussianVector make_gaussian(const MatX& covariance, std::vector<std::string> labels, const VecX& mean) {
  if (covariance.rows() != covariance.cols())
    fail(ErrorKind::InvalidArgument, kModule, "make_gaussian", "covariance must be square");
  const double scale = scale_of(covariance);
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorKind::InvalidArgument, kModule, "make_gaussian", "covariance is not symmetric");
  const int n = static_cast<int>(covariance.rows());
  if (!labels.empty() && static_cast<int>(labels.size()) != n)
    fail(ErrorKind::InvalidArgument, kModule, "make_gaussian", "label count does not match dimension");
  if (mean.size() != 0 && mean.size() != n)
    fail(ErrorKind::InvalidArgument, kModule, "make_gaussian", "mean dimension does not match covariance");
  GaussianVector g;
  g.covariance = clamp_psd(covariance, "make_gaussian");
  g.mean = mean.size() == 0 ? VecX::Zero(n) : mean;
  g.labels = std::move(labels);
  return g;
}

GaussianVector condition(const GaussianVector& joint, const std::vector<int>& observed, const VecX& values) {
  const int n = joint.dimension();
  if (static_cast<int>(observed.size()) != values.size())
    fail(ErrorKind::InvalidArgument, kModule, "condition", "observed values do not match observed coordinates");
  std::vector<char> is_obs(n, 0);
  for (int i : observed) {
    if (i < 0 || i >= n || is_obs[i]) fail(ErrorKind::InvalidArgument, kModule, "condition", "bad observed index");
    is_obs[i] = 1;
  }
  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    if (!is_obs[i]) free.push_back(i);
  const int no = static_cast<int>(observed.size()), nf = static_cast<int>(free.size());
  MatX Coo(no, no), Cfo(nf, no), Cff(nf, nf);
  for (int a = 0; a < no; ++a)
    for (int b = 0; b < no; ++b) Coo(a, b) = joint.covariance(observed[a], observed[b]);
  for (int a = 0; a < nf; ++a) {
    for (int b = 0; b < no; ++b) Cfo(a, b) = joint.covariance(free[a], observed[b]);
    for (int b = 0; b < nf; ++b) Cff(a, b) = joint.covariance(free[a], free[b]);
  }
  GaussianVector out;
  for (int a : free)
    if (!joint.labels.empty()) out.labels.push_back(joint.labels[a]);
  if (no == 0) {
    out.mean = joint.mean;
    out.covariance = joint.covariance;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<MatX> es(Coo);
  const double top = scale_of(Coo);
  if (es.eigenvalues().minCoeff() <= 1e-12 * top)
    fail(ErrorKind::DegenerateConditioning, kModule, "condition",
         "observed block is numerically singular (min eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) +
             ")");
  const MatX Coo_inv =
      es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const MatX B = Cfo * Coo_inv;
  VecX mo(no), mf(nf);
  for (int a = 0; a < no; ++a) mo[a] = joint.mean[observed[a]];
  for (int a = 0; a < nf; ++a) mf[a] = joint.mean[free[a]];
  out.mean = mf + B * (values - mo);
  out.covariance = clamp_psd(Cff - B * Cfo.transpose(), "condition");
  return out;
}

MatX psd_factor(const MatX& covariance) {
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (covariance + covariance.transpose()));
  const VecX root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

double relative_min_eigenvalue(const MatX& covariance) {
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (covariance + covariance.transpose()), Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0)) return 0.0;
  return std::max(0.0, es.eigenvalues().minCoeff()) / top;
}

GaussianSampler::GaussianSampler(const GaussianVector& law) : mean_(law.mean), factor_(psd_factor(law.covariance)) {}

VecX GaussianSampler::draw(Rng& rng) const {
  VecX out(mean_.size());
  draw(rng, out.data());
  return out;
}

void GaussianSampler::draw(Rng& rng, double* out) const {
  const int n = static_cast<int>(mean_.size());
  double z[64];
  VecX zz;
  double* zp = z;
  if (n > 64) {
    zz.resize(n);
    zp = zz.data();
  }
  for (int i = 0; i < n; ++i) zp[i] = rng.normal();
  for (int i = 0; i < n; ++i) {
    double s = mean_[i];
    for (int j = 0; j < n; ++j) s += factor_(i, j) * zp[j];
    out[i] = s;
  }
}

}  // namespace nodalab

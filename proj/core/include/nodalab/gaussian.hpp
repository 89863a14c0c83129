#pragma once

#include "nodalab/common.hpp"
#include "nodalab/rng.hpp"

#include <string>
#include <vector>

namespace nodalab {

struct GaussianVector {
  VecX mean;
  MatX covariance;
  std::vector<std::string> labels;

  int dimension() const { return static_cast<int>(covariance.rows()); }
};

// Validates symmetry (1e-12 relative) and PSD-ness: eigenvalues down to
// -1e-10 * scale are clamped to zero, anything below -1e-6 * scale fails.
GaussianVector make_gaussian(const MatX& covariance, std::vector<std::string> labels = {}, const VecX& mean = VecX());

// Regression formula: law of the unobserved coordinates given the observed
// ones. Raises DegenerateConditioning when the observed block has min
// eigenvalue <= 1e-12 * scale.
GaussianVector condition(const GaussianVector& joint, const std::vector<int>& observed, const VecX& values);

// Symmetric square root factor L with L L^T = C (clamped eigenvalues).
MatX psd_factor(const MatX& covariance);
// Clamped minimum eigenvalue, relative to the largest.
double relative_min_eigenvalue(const MatX& covariance);

class GaussianSampler {
 public:
  explicit GaussianSampler(const GaussianVector& law);
  VecX draw(Rng& rng) const;
  void draw(Rng& rng, double* out) const;
  int dimension() const { return static_cast<int>(mean_.size()); }

 private:
  VecX mean_;
  MatX factor_;
};

}  // namespace nodalab

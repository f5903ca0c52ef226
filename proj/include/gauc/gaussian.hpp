#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "gauc/embedding.hpp"

namespace gauc {

// Eigenvalue floor added to every covariance built here.
inline constexpr double kCovarianceFloor = 1e-6;
inline constexpr double kDefaultShrinkage = 0.1;

// Mean and covariance of an empirical distribution.
class GaussianSummary {
 public:
  GaussianSummary(Eigen::VectorXd mean, Eigen::MatrixXd covariance, std::size_t sample_count);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  std::size_t sample_count() const { return sample_count_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  std::size_t sample_count_;
};

// cov = (1-s) S + s (tr(S)/d) I + floor I, where S is the unbiased sample
// covariance. Needs at least two rows.
GaussianSummary summarize(const Eigen::MatrixXd& samples, double shrinkage = kDefaultShrinkage);
GaussianSummary summarize(const EmbeddingMatrix& samples, double shrinkage = kDefaultShrinkage);

// Single-sample summary: the row itself with floor * I covariance.
GaussianSummary point_summary(const Eigen::VectorXd& point);

// Closed-form KL(p || q), via Cholesky factorisations.
double gaussian_kl(const GaussianSummary& p, const GaussianSummary& q);

// Jensen-Shannon divergence approximated with the moment-matched Gaussian M
// of the equal-weight mixture: KL(p||M)/2 + KL(q||M)/2.
double gaussian_js(const GaussianSummary& p, const GaussianSummary& q);

// Moment-matched mixture used by gaussian_js.
GaussianSummary moment_matched_mixture(const GaussianSummary& p, const GaussianSummary& q);

struct EmidInputs {
  EmidInputs(GaussianSummary visual_p, GaussianSummary visual_q, GaussianSummary text_p, GaussianSummary text_q,
             GaussianSummary response_p, GaussianSummary response_q, GaussianSummary response_ideal);

  GaussianSummary visual_p, visual_q;
  GaussianSummary text_p, text_q;
  GaussianSummary response_p, response_q, response_ideal;
};

// Fractional-power sums of the four JS terms.
struct EmidTerms {
  double visual;    // js(visual_p, visual_q)^(1/2)
  double text;      // js(text_p, text_q)^(1/2)
  double response;  // js(ideal, response_p)^(1/4)
  double shifted;   // js(ideal, response_q)^(1/4)

  double total() const { return visual + text + response + shifted; }
};

EmidTerms emid_terms(const EmidInputs& inputs);
double emid_upper(const EmidInputs& inputs);

}  // namespace gauc

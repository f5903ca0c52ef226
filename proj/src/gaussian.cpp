#include "gauc/gaussian.hpp"

#include <cmath>
#include <string>

#include "gauc/error.hpp"

namespace gauc {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt;
  const auto d = cov.rows();
  Eigen::LLT<Eigen::MatrixXd> retry(cov + kCovarianceFloor * Eigen::MatrixXd::Identity(d, d));
  if (retry.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  return retry;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void check_same_dim(const GaussianSummary& p, const GaussianSummary& q) {
  if (p.dim() != q.dim()) {
    throw ShapeError("Gaussian dims differ: " + std::to_string(p.dim()) + " vs " + std::to_string(q.dim()));
  }
}

}  // namespace

GaussianSummary::GaussianSummary(Eigen::VectorXd mean, Eigen::MatrixXd covariance, std::size_t sample_count)
    : mean_(std::move(mean)), covariance_(std::move(covariance)), sample_count_(sample_count) {
  if (mean_.size() < 1) throw ShapeError("Gaussian summary needs dim >= 1");
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
    throw ShapeError("covariance shape does not match mean");
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) throw DataError("non-finite Gaussian parameters");
  if (((covariance_ - covariance_.transpose()).array().abs() > 1e-12 * (1.0 + covariance_.array().abs().maxCoeff()))
          .any()) {
    throw DataError("covariance is not symmetric");
  }
}

GaussianSummary summarize(const Eigen::MatrixXd& samples, double shrinkage) {
  if (samples.rows() < 2) throw ConfigError("summarize needs at least 2 samples");
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in [0, 1]");
  const auto d = samples.cols();
  const Eigen::VectorXd mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centred = samples.rowwise() - mean.transpose();
  Eigen::MatrixXd s = (centred.transpose() * centred) / static_cast<double>(samples.rows() - 1);
  s = 0.5 * (s + s.transpose());
  const double scale = s.trace() / static_cast<double>(d);
  Eigen::MatrixXd cov = (1.0 - shrinkage) * s;
  cov.diagonal().array() += shrinkage * scale + kCovarianceFloor;
  return {mean, cov, static_cast<std::size_t>(samples.rows())};
}

GaussianSummary summarize(const EmbeddingMatrix& samples, double shrinkage) {
  return summarize(samples.to_eigen(), shrinkage);
}

GaussianSummary point_summary(const Eigen::VectorXd& point) {
  const auto d = point.size();
  return {point, kCovarianceFloor * Eigen::MatrixXd::Identity(d, d), 1};
}

double gaussian_kl(const GaussianSummary& p, const GaussianSummary& q) {
  check_same_dim(p, q);
  const auto lq = factor(q.covariance());
  const auto lp = factor(p.covariance());
  const Eigen::VectorXd diff = q.mean() - p.mean();
  // tr(Sq^-1 Sp) = ||Lq^-1 Lp||_F^2 ; Mahalanobis term = ||Lq^-1 diff||^2.
  const Eigen::MatrixXd a = lq.matrixL().solve(lp.matrixL().toDenseMatrix());
  const Eigen::VectorXd b = lq.matrixL().solve(diff);
  const double trace = a.squaredNorm();
  const double maha = b.squaredNorm();
  const double kl = 0.5 * (trace + maha - static_cast<double>(p.dim()) + log_det(lq) - log_det(lp));
  if (!std::isfinite(kl)) throw NumericalError("KL divergence is not finite");
  if (kl < -1e-10) throw NumericalError("KL divergence is negative beyond rounding: " + std::to_string(kl));
  return kl < 0.0 ? 0.0 : kl;
}

GaussianSummary moment_matched_mixture(const GaussianSummary& p, const GaussianSummary& q) {
  check_same_dim(p, q);
  const Eigen::VectorXd mu = 0.5 * (p.mean() + q.mean());
  // Equals (Sp + mp mp')/2 + (Sq + mq mq')/2 - mu mu'. Both inputs already carry
  // the floor, so none is added here and M == p exactly when p == q.
  const Eigen::VectorXd half_gap = 0.5 * (p.mean() - q.mean());
  Eigen::MatrixXd cov = 0.5 * (p.covariance() + q.covariance()) + half_gap * half_gap.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return {mu, cov, p.sample_count() + q.sample_count()};
}

double gaussian_js(const GaussianSummary& p, const GaussianSummary& q) {
  const auto m = moment_matched_mixture(p, q);
  return 0.5 * gaussian_kl(p, m) + 0.5 * gaussian_kl(q, m);
}

EmidInputs::EmidInputs(GaussianSummary vp, GaussianSummary vq, GaussianSummary tp, GaussianSummary tq,
                       GaussianSummary rp, GaussianSummary rq, GaussianSummary ri)
    : visual_p(std::move(vp)),
      visual_q(std::move(vq)),
      text_p(std::move(tp)),
      text_q(std::move(tq)),
      response_p(std::move(rp)),
      response_q(std::move(rq)),
      response_ideal(std::move(ri)) {
  if (visual_p.dim() != visual_q.dim()) throw ShapeError("visual summaries differ in dim");
  if (text_p.dim() != text_q.dim()) throw ShapeError("text summaries differ in dim");
  if (response_p.dim() != response_q.dim() || response_p.dim() != response_ideal.dim()) {
    throw ShapeError("response summaries differ in dim");
  }
}

EmidTerms emid_terms(const EmidInputs& in) {
  return {std::sqrt(gaussian_js(in.visual_p, in.visual_q)), std::sqrt(gaussian_js(in.text_p, in.text_q)),
          std::pow(gaussian_js(in.response_ideal, in.response_p), 0.25),
          std::pow(gaussian_js(in.response_ideal, in.response_q), 0.25)};
}

double emid_upper(const EmidInputs& inputs) { return emid_terms(inputs).total(); }

}  // namespace gauc

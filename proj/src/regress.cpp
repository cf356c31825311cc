#include "ivtrial/regress.hpp"

#include "ivtrial/error.hpp"

#include <algorithm>
#include <cmath>

namespace ivtrial {

std::string_view to_string(Link link) noexcept {
  return link == Link::linear ? "linear" : "logistic";
}

Link parse_link(std::string_view text) {
  if (text == "linear") return Link::linear;
  if (text == "logistic") return Link::logistic;
  throw Error(ErrorKind::InvalidParam, "unknown link '" + std::string(text) + "' (expected linear|logistic)");
}

DesignMatrix::DesignMatrix(std::size_t rows)
    : names_{std::string(kIntercept)},
      values_(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(rows), 1)) {}

DesignMatrix& DesignMatrix::add(std::string name, std::span<const double> values) {
  if (values.size() != rows()) {
    throw Error(ErrorKind::DimensionMismatch, "column '" + name + "' has " + std::to_string(values.size()) +
                                                  " rows, design has " + std::to_string(rows()));
  }
  if (find(name)) throw Error(ErrorKind::InvalidDesign, "duplicate design column '" + name + "'");
  const auto col = values_.cols();
  values_.conservativeResize(Eigen::NoChange, col + 1);
  values_.col(col) = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  names_.push_back(std::move(name));
  return *this;
}

DesignMatrix& DesignMatrix::add(std::string name, const Eigen::VectorXd& values) {
  return add(std::move(name), std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

std::optional<std::size_t> DesignMatrix::find(std::string_view name) const noexcept {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t DesignMatrix::index_of(std::string_view name) const {
  if (auto idx = find(name)) return *idx;
  throw Error(ErrorKind::ColumnMismatch, "design has no column '" + std::string(name) + "'");
}

DesignMatrix DesignMatrix::with_constant(std::string_view name, double value) const {
  DesignMatrix copy = *this;
  copy.values_.col(static_cast<Eigen::Index>(index_of(name))).setConstant(value);
  return copy;
}

double RegressionFit::coefficient(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::ColumnMismatch, "fit has no coefficient '" + std::string(name) + "'");
  return coefficients[it - names.begin()];
}

double inverse_logit(double eta) noexcept {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

namespace {

void check_shape(const DesignMatrix& x, std::span<const double> y) {
  if (y.size() != x.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "response has " + std::to_string(y.size()) + " rows, design has " + std::to_string(x.rows()));
  }
  if (x.rows() < x.cols()) {
    throw Error(ErrorKind::RankDeficient, std::to_string(x.rows()) + " rows cannot identify " +
                                              std::to_string(x.cols()) + " coefficients");
  }
}

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_checked_qr(const Eigen::MatrixXd& m,
                                                            const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m.rows(), m.cols());
  qr.setThreshold(kRankTolerance);
  qr.compute(m);
  if (qr.rank() < m.cols()) {
    std::string cols;
    for (const auto& n : names) cols += (cols.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::RankDeficient, "design [" + cols + "] has rank " + std::to_string(qr.rank()) + " < " +
                                              std::to_string(m.cols()));
  }
  return qr;
}

}  // namespace

RegressionFit ols_fit(const DesignMatrix& x, std::span<const double> y) {
  check_shape(x, y);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const auto qr = rank_checked_qr(x.values(), x.names());

  RegressionFit out;
  out.link = Link::linear;
  out.names = x.names();
  out.coefficients = qr.solve(yv);
  out.fitted_values = x.values() * out.coefficients;
  out.residuals = yv - out.fitted_values;
  out.converged = true;
  out.iterations = 1;
  return out;
}

RegressionFit logistic_fit(const DesignMatrix& x, std::span<const double> y, const LogisticOptions& options) {
  check_shape(x, y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error(ErrorKind::InvalidParam, "logistic response must be 0/1 (row " + std::to_string(i) + ")");
    }
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const auto n = x.values().rows();
  const auto p = x.values().cols();

  // Standardize every non-intercept column so the separation bound is scale free.
  Eigen::MatrixXd z = x.values();
  Eigen::VectorXd center = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
  for (Eigen::Index j = 1; j < p; ++j) {
    center[j] = z.col(j).mean();
    const double sd = std::sqrt((z.col(j).array() - center[j]).square().mean());
    if (!(sd > 0.0)) {
      throw Error(ErrorKind::RankDeficient, "column '" + x.names()[static_cast<std::size_t>(j)] +
                                                "' is constant and collinear with the intercept");
    }
    scale[j] = sd;
    z.col(j) = (z.col(j).array() - center[j]) / sd;
  }
  rank_checked_qr(z, x.names());

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta(n), sqrt_w(n), work(n);
  bool converged = false;
  int iter = 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(n, p);
  qr.setThreshold(kRankTolerance);
  for (iter = 1; iter <= options.max_iterations; ++iter) {
    eta.noalias() = z * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = std::clamp(inverse_logit(eta[i]), options.weight_clip, 1.0 - options.weight_clip);
      const double w = pi * (1.0 - pi);
      sqrt_w[i] = std::sqrt(w);
      work[i] = sqrt_w[i] * (eta[i] + (yv[i] - pi) / w);
    }
    qr.compute(sqrt_w.asDiagonal() * z);
    const Eigen::VectorXd next = qr.solve(work);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > options.separation_bound) {
      throw Error(ErrorKind::Separation, "coefficient magnitude exceeded " +
                                             std::to_string(options.separation_bound) +
                                             " on standardized data after " + std::to_string(iter) + " iterations");
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (change < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorKind::NonConvergence,
                "IRLS did not converge in " + std::to_string(options.max_iterations) + " iterations");
  }

  RegressionFit out;
  out.link = Link::logistic;
  out.names = x.names();
  out.coefficients.resize(p);
  double intercept = beta[0];
  for (Eigen::Index j = 1; j < p; ++j) {
    out.coefficients[j] = beta[j] / scale[j];
    intercept -= beta[j] * center[j] / scale[j];
  }
  out.coefficients[0] = intercept;
  out.converged = true;
  out.iterations = iter;
  out.fitted_values = predict(out, x);
  out.residuals = yv - out.fitted_values;

  const Eigen::VectorXd lp = x.values() * out.coefficients;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    // log(1 + e^eta) evaluated without overflow
    const double softplus = std::max(lp[i], 0.0) + std::log1p(std::exp(-std::abs(lp[i])));
    ll += yv[i] * lp[i] - softplus;
  }
  out.log_likelihood = ll;
  return out;
}

RegressionFit fit(Link link, const DesignMatrix& x, std::span<const double> y) {
  return link == Link::linear ? ols_fit(x, y) : logistic_fit(x, y);
}

Eigen::VectorXd predict(const RegressionFit& fit, const DesignMatrix& x_new) {
  if (x_new.names() != fit.names) {
    throw Error(ErrorKind::ColumnMismatch, "prediction design columns do not match the fitted design");
  }
  Eigen::VectorXd eta = x_new.values() * fit.coefficients;
  if (fit.link == Link::logistic) {
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      eta[i] = inverse_logit(std::clamp(eta[i], -kLinearPredictorBound, kLinearPredictorBound));
    }
  }
  return eta;
}

double average_marginal_effect(const RegressionFit& fit, const DesignMatrix& x, std::string_view target,
                               double low, double high) {
  x.index_of(target);
  if (x.rows() == 0) throw Error(ErrorKind::DimensionMismatch, "empty design");
  const Eigen::VectorXd hi = predict(fit, x.with_constant(target, high));
  const Eigen::VectorXd lo = predict(fit, x.with_constant(target, low));
  return (hi - lo).mean();
}

}  // namespace ivtrial

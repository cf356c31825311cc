#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivtrial {

enum class Link { linear, logistic };

std::string_view to_string(Link link) noexcept;
Link parse_link(std::string_view text);

/// Named regressor matrix. Column 0 is always the all-ones intercept.
class DesignMatrix {
 public:
  static constexpr std::string_view kIntercept = "(intercept)";

  explicit DesignMatrix(std::size_t rows);

  /// Appends a named column. Names must be unique and the length must match.
  DesignMatrix& add(std::string name, std::span<const double> values);
  DesignMatrix& add(std::string name, const Eigen::VectorXd& values);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  /// Throws ColumnMismatch when absent.
  std::size_t index_of(std::string_view name) const;

  /// Copy with every entry of `name` replaced by `value`.
  DesignMatrix with_constant(std::string_view name, double value) const;

 private:
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
};

struct RegressionFit {
  Link link = Link::linear;
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd fitted_values;  // probability scale for logistic fits
  Eigen::VectorXd residuals;
  bool converged = true;
  int iterations = 0;
  std::optional<double> log_likelihood;  // logistic only

  double coefficient(std::string_view name) const;
};

struct LogisticOptions {
  double tolerance = 1e-8;         // max absolute coefficient change
  int max_iterations = 50;
  double separation_bound = 30.0;  // |coefficient| on standardized data
  double weight_clip = 1e-10;      // probabilities clamped for IRLS weights only
};

/// Largest |linear predictor| used on the probability scale. Keeps reported
/// probabilities strictly inside (0, 1).
inline constexpr double kLinearPredictorBound = 30.0;

/// Relative pivot tolerance for the rank check.
inline constexpr double kRankTolerance = 1e-10;

double inverse_logit(double eta) noexcept;

RegressionFit ols_fit(const DesignMatrix& x, std::span<const double> y);

/// Maximum likelihood logistic regression by iteratively reweighted least
/// squares on internally standardized columns.
RegressionFit logistic_fit(const DesignMatrix& x, std::span<const double> y,
                           const LogisticOptions& options = {});

RegressionFit fit(Link link, const DesignMatrix& x, std::span<const double> y);

/// Linear predictor for OLS fits, inverse-logit of it for logistic fits.
Eigen::VectorXd predict(const RegressionFit& fit, const DesignMatrix& x_new);

/// Mean over rows of predict(target = high) - predict(target = low) with every
/// other column held at its observed value.
double average_marginal_effect(const RegressionFit& fit, const DesignMatrix& x,
                               std::string_view target, double low = 0.0, double high = 1.0);

}  // namespace ivtrial

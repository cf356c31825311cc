#pragma once

#include "ivtrial/error.hpp"
#include "ivtrial/estimators.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ivtrial {

/// One named estimator with its options. `kind` selects the estimator and
/// `part` the output of a multi-output one (e.g. extended_tsls / psi_t).
struct EstimatorSpec {
  std::string label;
  std::string kind;
  std::string part;
  Roles roles;
  Adjustment adjust;
  std::string interaction = "s";
  int guard_resamples = InteractionGuard{}.resamples;

  /// Identity of the underlying computation, ignoring label and part.
  std::string computation_key() const;
};

struct KindInfo {
  std::string_view kind;
  std::vector<std::string_view> parts;  // empty: single output
};

/// Every estimator the registry knows, in a stable order.
const std::vector<KindInfo>& estimator_kinds();

/// Parses "kind[.part] key=value ..." where keys are arm, exposure, outcome,
/// covariates (comma separated), link, interaction, guard. Throws
/// UnknownEstimator or InvalidParam.
EstimatorSpec parse_estimator_spec(std::string label, std::string_view text);

/// Expands a kind without part into one spec per part ("iv_ratio" ->
/// iv_ratio.cace, iv_ratio.hypothetical); labels become kind.part.
std::vector<EstimatorSpec> expand_parts(const EstimatorSpec& spec);

/// Assumption set the estimator stamps, available even when it fails.
std::vector<Assumption> documented_assumptions(const EstimatorSpec& spec);

/// Throws on estimator failure.
EstimandEstimate evaluate(const EstimatorSpec& spec, const TrialData& data);

struct EstimatorOutcome {
  std::optional<EstimandEstimate> estimate;
  ErrorKind error = ErrorKind::InvalidParam;  // meaningful when !estimate
  std::string message;

  bool ok() const noexcept { return estimate.has_value(); }
};

/// Evaluates every spec on one dataset; specs sharing a computation (the
/// parts of extended_tsls, say) run it once. Failures are captured.
std::vector<EstimatorOutcome> evaluate_all(const std::vector<EstimatorSpec>& specs, const TrialData& data);

}  // namespace ivtrial

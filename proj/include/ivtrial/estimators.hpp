#pragma once

#include "ivtrial/regress.hpp"
#include "ivtrial/trial_data.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ivtrial {

enum class Estimand {
  Policy,
  CACE,
  Hypothetical,
  PsiT,
  PsiAt,
  PsiC,
  PolicyInSPlusStar,
  HypotheticalInSPlusStar,
  PolicyInSPlusPlus,
  AlphaA,
  Psi,
  AsTreated,
  PerProtocol,
  Responder,
  ComplierFraction,
  HomogeneityContrast,
};

enum class Assumption { IV1, IV2, IV3, Monotonicity, Homogeneity, NoTxSInteraction };

std::string_view to_string(Estimand e) noexcept;
std::string_view to_string(Assumption a) noexcept;

/// Column roles. `arm` is the randomized instrument, `exposure` the
/// intercurrent event or treatment actually received.
struct Roles {
  std::string arm = "r";
  std::string exposure = "t";
  std::string outcome = "y";
};

/// Baseline covariates entered as main effects, and the outcome link. With a
/// logistic link effects are average marginal effects (risk differences).
struct Adjustment {
  std::vector<std::string> covariates;
  Link link = Link::linear;
};

struct EstimandEstimate {
  Estimand estimand = Estimand::Policy;
  double value = 0.0;
  std::optional<double> se;
  std::vector<Assumption> assumptions;
  std::size_t n = 0;
};

struct ComplianceProfile {
  double p_t_given_r1 = 0.0;
  double p_t_given_r0 = 0.0;
  std::optional<double> pi_c;
  std::optional<double> pi_at;
  std::optional<double> pi_nt;
  std::optional<double> pi_d;

  /// Strata implied by observed p(T|R) once a defier share is posited:
  /// pi_c = (p1 - p0) + pi_d, pi_at = p0 - pi_d, pi_nt = 1 - p1 - pi_d.
  static ComplianceProfile with_defiers(double p1, double p0, double pi_d);
};

/// mean(y | arm=1) - mean(y | arm=0), or the adjusted arm effect when
/// covariates are given (OLS coefficient, or AME for a logistic link).
EstimandEstimate policy_estimate(const TrialData& data, const Roles& roles = {}, const Adjustment& adjust = {});

/// Empirical p(exposure | arm). With monotonicity the strata follow
/// directly and pi_d = 0; without it only the two probabilities are set.
ComplianceProfile compliance_profile(const TrialData& data, const Roles& roles = {}, bool monotonicity = true);

/// pi_c as an estimate, for reports and campaigns.
EstimandEstimate complier_fraction(const TrialData& data, const Roles& roles = {});

/// The same number under its two identifying readings.
struct IvReadings {
  EstimandEstimate cace;          // with Monotonicity
  EstimandEstimate hypothetical;  // with Homogeneity
};

/// cov(arm, outcome) / cov(arm, exposure).
IvReadings iv_ratio(const TrialData& data, const Roles& roles = {});

/// Two-stage least squares. The first stage regresses the exposure on the
/// arm, any extra instruments and the covariates; the second regresses the
/// outcome on the fitted exposure and the covariates. A logistic link uses
/// logistic fits in both stages and reports the AME of the fitted exposure.
struct TslsOptions {
  Adjustment adjust;
  std::vector<std::string> extra_instruments;
};
IvReadings tsls(const TrialData& data, const Roles& roles = {}, const TslsOptions& options = {});

/// Resampling check that an interaction instrument actually differentiates.
struct InteractionGuard {
  int resamples = 100;  // 0 keeps only the absolute check
  double spread_multiple = 2.0;
  double min_abs = 1e-10;
  std::uint64_t seed = 0x5eed'1a7e'0000'0001ULL;
};

struct ExtendedTslsResult {
  EstimandEstimate psi_t;
  EstimandEstimate psi_at;
  EstimandEstimate psi_c;
  EstimandEstimate homogeneity;  // psi_t - psi_at
  double interaction_coefficient = 0.0;
};

/// Two-parameter model: exposure ~ arm + s + arm*s, then
/// outcome ~ That*arm + That*(1-arm) + s. For the linear link s is centred
/// within arm in the second stage, which leaves psi_t and psi_at unchanged
/// in expectation and makes psi_c reproduce iv_ratio exactly.
ExtendedTslsResult extended_tsls(const TrialData& data, std::string_view interaction_covariate,
                                 const Roles& roles = {}, Link link = Link::linear,
                                 const InteractionGuard& guard = {});

struct AdherenceResult {
  EstimandEstimate psi;
  EstimandEstimate alpha_a;
  EstimandEstimate policy_s_plus_plus;
  EstimandEstimate policy_s_plus_star;
  double p_a_given_t1 = 0.0;
  double p_a_given_t0 = 0.0;
};

/// Roles: arm = randomized treatment, exposure = adherence. First stage
/// logistic adherence ~ arm + x + arm*x, second stage OLS
/// outcome ~ arm + Ahat + x.
AdherenceResult adherence_estimands(const TrialData& data, std::string_view interaction_covariate,
                                    const Roles& roles = {}, const InteractionGuard& guard = {});

/// policy_estimate divided by p(exposure = 1 | arm = 1).
EstimandEstimate policy_in_s_plus_star(const TrialData& data, const Roles& roles = {},
                                       const Adjustment& adjust = {});

enum class NaiveKind { as_treated, per_protocol, responder };
std::string_view to_string(NaiveKind kind) noexcept;

/// as_treated and responder contrast exposure groups (adjusted when
/// covariates are given); per_protocol contrasts arms among exposure == 1.
EstimandEstimate naive_estimate(const TrialData& data, NaiveKind kind, const Roles& roles = {},
                                const Adjustment& adjust = {});

struct DefierSensitivityGrid {
  std::vector<double> dace_values;
  std::vector<double> pi_d_values;
  // [dace index][pi_d index]; NaN where undefined
  std::vector<std::vector<double>> implied_cace;
  std::vector<std::vector<bool>> defined;
};

inline constexpr double kDefierGridEpsilon = 1e-8;

/// implied CACE = (observed_iv * (pi_c - pi_d) + DACE * pi_d) / pi_c with
/// pi_c = (p1 - p0) + pi_d. Infeasible or near-singular cells are flagged.
DefierSensitivityGrid defier_sensitivity(const ComplianceProfile& profile, double observed_iv,
                                         const std::vector<double>& dace_values,
                                         const std::vector<double>& pi_d_values,
                                         double epsilon = kDefierGridEpsilon);

namespace assumptions {
std::vector<Assumption> policy();
std::vector<Assumption> complier_fraction();
std::vector<Assumption> cace();
std::vector<Assumption> hypothetical();
std::vector<Assumption> two_parameter();
std::vector<Assumption> adherence();
std::vector<Assumption> policy_in_s_plus_star();
std::vector<Assumption> naive();
}  // namespace assumptions

}  // namespace ivtrial

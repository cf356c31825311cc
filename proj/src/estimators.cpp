#include "ivtrial/estimators.hpp"

#include "ivtrial/error.hpp"
#include "ivtrial/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ivtrial {

std::string_view to_string(Estimand e) noexcept {
  switch (e) {
    case Estimand::Policy: return "Policy";
    case Estimand::CACE: return "CACE";
    case Estimand::Hypothetical: return "Hypothetical";
    case Estimand::PsiT: return "PsiT";
    case Estimand::PsiAt: return "PsiAt";
    case Estimand::PsiC: return "PsiC";
    case Estimand::PolicyInSPlusStar: return "PolicyInSPlusStar";
    case Estimand::HypotheticalInSPlusStar: return "HypotheticalInSPlusStar";
    case Estimand::PolicyInSPlusPlus: return "PolicyInSPlusPlus";
    case Estimand::AlphaA: return "AlphaA";
    case Estimand::Psi: return "Psi";
    case Estimand::AsTreated: return "AsTreated";
    case Estimand::PerProtocol: return "PerProtocol";
    case Estimand::Responder: return "Responder";
    case Estimand::ComplierFraction: return "ComplierFraction";
    case Estimand::HomogeneityContrast: return "HomogeneityContrast";
  }
  return "Unknown";
}

std::string_view to_string(Assumption a) noexcept {
  switch (a) {
    case Assumption::IV1: return "IV1";
    case Assumption::IV2: return "IV2";
    case Assumption::IV3: return "IV3";
    case Assumption::Monotonicity: return "Monotonicity";
    case Assumption::Homogeneity: return "Homogeneity";
    case Assumption::NoTxSInteraction: return "NoTxSInteraction";
  }
  return "Unknown";
}

std::string_view to_string(NaiveKind kind) noexcept {
  switch (kind) {
    case NaiveKind::as_treated: return "as_treated";
    case NaiveKind::per_protocol: return "per_protocol";
    case NaiveKind::responder: return "responder";
  }
  return "unknown";
}

namespace assumptions {
using enum Assumption;
std::vector<Assumption> policy() { return {IV2}; }
std::vector<Assumption> complier_fraction() { return {IV1, IV2, Monotonicity}; }
std::vector<Assumption> cace() { return {IV1, IV2, IV3, Monotonicity}; }
std::vector<Assumption> hypothetical() { return {IV1, IV2, IV3, Homogeneity}; }
std::vector<Assumption> two_parameter() { return {IV1, IV2, Monotonicity, NoTxSInteraction}; }
std::vector<Assumption> adherence() { return {IV1, IV2, NoTxSInteraction}; }
std::vector<Assumption> policy_in_s_plus_star() { return {IV1, IV2, IV3}; }
std::vector<Assumption> naive() { return {}; }
}  // namespace assumptions

ComplianceProfile ComplianceProfile::with_defiers(double p1, double p0, double pi_d) {
  ComplianceProfile p;
  p.p_t_given_r1 = p1;
  p.p_t_given_r0 = p0;
  p.pi_d = pi_d;
  p.pi_c = (p1 - p0) + pi_d;
  p.pi_at = p0 - pi_d;
  p.pi_nt = 1.0 - p1 - pi_d;
  return p;
}

namespace {

struct GroupMeans {
  double mean1 = 0.0;
  double mean0 = 0.0;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
};

GroupMeans split_means(std::span<const double> group, std::span<const double> values) {
  GroupMeans g;
  double s1 = 0.0, s0 = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] == 1.0) {
      s1 += values[i];
      ++g.n1;
    } else {
      s0 += values[i];
      ++g.n0;
    }
  }
  if (g.n1) g.mean1 = s1 / static_cast<double>(g.n1);
  if (g.n0) g.mean0 = s0 / static_cast<double>(g.n0);
  return g;
}

GroupMeans arm_means(const TrialData& data, const std::string& arm, std::string_view value_column) {
  require_binary(data, arm);
  auto g = split_means(data.column(arm), data.column(value_column));
  if (g.n1 == 0 || g.n0 == 0) {
    throw Error(ErrorKind::EmptyArm, "arm column '" + arm + "' has " + std::to_string(g.n1) + " subjects at 1 and " +
                                         std::to_string(g.n0) + " at 0");
  }
  return g;
}

void check_covariates(const std::vector<std::string>& covariates, std::initializer_list<std::string_view> reserved) {
  for (const auto& c : covariates) {
    for (auto r : reserved) {
      if (c == r) throw Error(ErrorKind::InvalidParam, "column '" + c + "' cannot also be a covariate");
    }
  }
}

DesignMatrix design_with(const TrialData& data, std::initializer_list<std::string_view> leading,
                         const std::vector<std::string>& covariates) {
  DesignMatrix x(data.rows());
  for (auto name : leading) x.add(std::string(name), data.column(name));
  for (const auto& c : covariates) x.add(c, data.column(c));
  return x;
}

/// Effect of `target` in `x` on the outcome: coefficient for a linear link,
/// AME over 0 -> 1 for a logistic one.
double regression_effect(const DesignMatrix& x, std::span<const double> y, Link link, std::string_view target) {
  const auto f = fit(link, x, y);
  if (link == Link::linear) return f.coefficient(target);
  return average_marginal_effect(f, x, target, 0.0, 1.0);
}

EstimandEstimate make(Estimand e, double value, std::vector<Assumption> a, std::size_t n) {
  EstimandEstimate out;
  out.estimand = e;
  out.value = value;
  out.assumptions = std::move(a);
  out.n = n;
  return out;
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / (n - 1.0);
}

std::vector<double> product(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

/// Guards the interaction instrument: absolute floor, then the coefficient
/// must exceed `spread_multiple` bootstrap SDs of itself.
template <class Build>
void check_interaction(const TrialData& data, Build build, std::string_view response, Link link,
                       std::string_view coef_name, double coef, const InteractionGuard& guard) {
  if (!(std::abs(coef) >= guard.min_abs)) {
    throw Error(ErrorKind::WeakInteraction,
                "interaction coefficient " + format_shortest(coef) + " is below " + format_shortest(guard.min_abs));
  }
  if (guard.resamples <= 0) return;

  const std::size_t n = data.rows();
  std::vector<double> draws;
  std::vector<std::size_t> idx(n);
  for (int b = 0; b < guard.resamples; ++b) {
    SplitMix64 g(derive_seed(guard.seed, static_cast<std::uint64_t>(b), Stream::guard));
    for (auto& i : idx) i = uniform_below(g, n);
    const auto sample = data.select_rows(idx);
    try {
      const auto x = build(sample);
      draws.push_back(fit(link, x, sample.column(response)).coefficient(coef_name));
    } catch (const Error&) {
      // degenerate resample; counted by omission
    }
  }
  if (draws.size() * 2 < static_cast<std::size_t>(guard.resamples) || draws.size() < 2) {
    throw Error(ErrorKind::WeakInteraction, "first stage failed on " +
                                                std::to_string(guard.resamples - static_cast<int>(draws.size())) +
                                                " of " + std::to_string(guard.resamples) + " guard resamples");
  }
  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= static_cast<double>(draws.size());
  double ss = 0.0;
  for (double d : draws) ss += (d - mean) * (d - mean);
  const double spread = std::sqrt(ss / static_cast<double>(draws.size() - 1));
  if (std::abs(coef) < guard.spread_multiple * spread) {
    throw Error(ErrorKind::WeakInteraction, "interaction coefficient " + format_shortest(coef) + " is within " +
                                                format_shortest(guard.spread_multiple) + " resample SDs (" +
                                                format_shortest(spread) + ") of zero");
  }
}

}  // namespace

EstimandEstimate policy_estimate(const TrialData& data, const Roles& roles, const Adjustment& adjust) {
  const auto g = arm_means(data, roles.arm, roles.outcome);
  double value = g.mean1 - g.mean0;
  if (!adjust.covariates.empty()) {
    check_covariates(adjust.covariates, {roles.arm, roles.outcome});
    value = regression_effect(design_with(data, {roles.arm}, adjust.covariates), data.column(roles.outcome),
                              adjust.link, roles.arm);
  }
  return make(Estimand::Policy, value, assumptions::policy(), data.rows());
}

ComplianceProfile compliance_profile(const TrialData& data, const Roles& roles, bool monotonicity) {
  require_binary(data, roles.exposure);
  const auto g = arm_means(data, roles.arm, roles.exposure);
  ComplianceProfile p;
  p.p_t_given_r1 = g.mean1;
  p.p_t_given_r0 = g.mean0;
  if (!monotonicity) return p;
  if (g.mean1 < g.mean0) {
    throw Error(ErrorKind::NegativeComplierFraction, "p(exposure=1 | arm=1) = " + format_shortest(g.mean1) +
                                                         " is below p(exposure=1 | arm=0) = " +
                                                         format_shortest(g.mean0));
  }
  return ComplianceProfile::with_defiers(g.mean1, g.mean0, 0.0);
}

EstimandEstimate complier_fraction(const TrialData& data, const Roles& roles) {
  const auto p = compliance_profile(data, roles, true);
  return make(Estimand::ComplierFraction, *p.pi_c, assumptions::complier_fraction(), data.rows());
}

IvReadings iv_ratio(const TrialData& data, const Roles& roles) {
  arm_means(data, roles.arm, roles.exposure);
  const auto r = data.column(roles.arm);
  const double cov_rt = sample_covariance(r, data.column(roles.exposure));
  if (!(std::abs(cov_rt) >= 1e-10)) {
    throw Error(ErrorKind::WeakInstrument, "cov(" + roles.arm + ", " + roles.exposure + ") = " +
                                               format_shortest(cov_rt) + " is below 1e-10");
  }
  const double value = sample_covariance(r, data.column(roles.outcome)) / cov_rt;
  return {make(Estimand::CACE, value, assumptions::cace(), data.rows()),
          make(Estimand::Hypothetical, value, assumptions::hypothetical(), data.rows())};
}

IvReadings tsls(const TrialData& data, const Roles& roles, const TslsOptions& options) {
  const auto& covs = options.adjust.covariates;
  for (const auto& c : covs) {
    if (c == roles.arm || c == roles.exposure || c == roles.outcome ||
        std::find(options.extra_instruments.begin(), options.extra_instruments.end(), c) !=
            options.extra_instruments.end()) {
      throw Error(ErrorKind::InvalidParam, "instrument or role column '" + c + "' cannot enter the outcome model");
    }
  }
  arm_means(data, roles.arm, roles.exposure);
  const Link link = options.adjust.link;

  DesignMatrix first(data.rows());
  first.add(roles.arm, data.column(roles.arm));
  for (const auto& z : options.extra_instruments) first.add(z, data.column(z));
  for (const auto& c : covs) first.add(c, data.column(c));
  const auto stage1 = fit(link, first, data.column(roles.exposure));
  const double slope = stage1.coefficient(roles.arm);
  if (!(std::abs(slope) >= 1e-10)) {
    throw Error(ErrorKind::WeakInstrument, "first-stage coefficient on '" + roles.arm + "' is " +
                                               format_shortest(slope));
  }

  DesignMatrix second(data.rows());
  second.add("fitted_exposure", stage1.fitted_values);
  for (const auto& c : covs) second.add(c, data.column(c));
  const double value = regression_effect(second, data.column(roles.outcome), link, "fitted_exposure");
  return {make(Estimand::CACE, value, assumptions::cace(), data.rows()),
          make(Estimand::Hypothetical, value, assumptions::hypothetical(), data.rows())};
}

ExtendedTslsResult extended_tsls(const TrialData& data, std::string_view interaction_covariate,
                                 const Roles& roles, Link link, const InteractionGuard& guard) {
  const std::string s(interaction_covariate);
  check_covariates({s}, {roles.arm, roles.exposure, roles.outcome});
  const auto profile = compliance_profile(data, roles, true);

  const std::string inter = roles.arm + ":" + s;
  auto first_design = [&](const TrialData& d) {
    DesignMatrix x(d.rows());
    x.add(roles.arm, d.column(roles.arm));
    x.add(s, d.column(s));
    x.add(inter, product(d.column(roles.arm), d.column(s)));
    return x;
  };
  const auto stage1 = fit(link, first_design(data), data.column(roles.exposure));
  const double coef = stage1.coefficient(inter);
  check_interaction(data, first_design, roles.exposure, link, inter, coef, guard);

  const auto r = data.column(roles.arm);
  const auto sv = data.column(s);
  const auto n = data.rows();
  Eigen::VectorXd fitted_arm1(n), fitted_arm0(n), s_main(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    fitted_arm1[k] = stage1.fitted_values[k] * r[i];
    fitted_arm0[k] = stage1.fitted_values[k] * (1.0 - r[i]);
    s_main[k] = sv[i];
  }
  if (link == Link::linear) {
    const auto g = split_means(r, sv);
    for (std::size_t i = 0; i < n; ++i) s_main[static_cast<Eigen::Index>(i)] -= r[i] == 1.0 ? g.mean1 : g.mean0;
  }
  DesignMatrix second(n);
  second.add("fitted_exposure:arm1", fitted_arm1);
  second.add("fitted_exposure:arm0", fitted_arm0);
  second.add(s, s_main);
  const auto stage2 = fit(link, second, data.column(roles.outcome));

  double psi_t = 0.0, psi_at = 0.0;
  if (link == Link::linear) {
    psi_t = stage2.coefficient("fitted_exposure:arm1");
    psi_at = stage2.coefficient("fitted_exposure:arm0");
  } else {
    psi_t = average_marginal_effect(stage2, second, "fitted_exposure:arm1");
    psi_at = average_marginal_effect(stage2, second, "fitted_exposure:arm0");
  }

  const double p1 = profile.p_t_given_r1;
  const double p0 = profile.p_t_given_r0;
  if (!(p1 - p0 > 0.0)) {
    throw Error(ErrorKind::WeakInstrument, "complier fraction is zero; psi_c is not identified");
  }
  // pi_c + pi_at = p1 and pi_at = p0 under monotonicity
  const double psi_c = (psi_t * p1 - psi_at * p0) / (p1 - p0);

  ExtendedTslsResult out;
  out.psi_t = make(Estimand::PsiT, psi_t, assumptions::two_parameter(), n);
  out.psi_at = make(Estimand::PsiAt, psi_at, assumptions::two_parameter(), n);
  out.psi_c = make(Estimand::PsiC, psi_c, assumptions::two_parameter(), n);
  out.homogeneity = make(Estimand::HomogeneityContrast, psi_t - psi_at, assumptions::two_parameter(), n);
  out.interaction_coefficient = coef;
  return out;
}

AdherenceResult adherence_estimands(const TrialData& data, std::string_view interaction_covariate,
                                    const Roles& roles, const InteractionGuard& guard) {
  const std::string x(interaction_covariate);
  check_covariates({x}, {roles.arm, roles.exposure, roles.outcome});
  require_binary(data, roles.exposure);
  const auto g = arm_means(data, roles.arm, roles.exposure);
  const double p1 = g.mean1, p0 = g.mean0;
  if (!(p1 > p0)) {
    throw Error(ErrorKind::AdherenceOrderViolated, "p(adherent | arm=1) = " + format_shortest(p1) +
                                                       " does not exceed p(adherent | arm=0) = " +
                                                       format_shortest(p0));
  }

  const std::string inter = roles.arm + ":" + x;
  auto first_design = [&](const TrialData& d) {
    DesignMatrix m(d.rows());
    m.add(roles.arm, d.column(roles.arm));
    m.add(x, d.column(x));
    m.add(inter, product(d.column(roles.arm), d.column(x)));
    return m;
  };
  const auto stage1 = logistic_fit(first_design(data), data.column(roles.exposure));
  check_interaction(data, first_design, roles.exposure, Link::logistic, inter, stage1.coefficient(inter), guard);

  DesignMatrix second(data.rows());
  second.add(roles.arm, data.column(roles.arm));
  second.add("fitted_adherence", stage1.fitted_values);
  second.add(x, data.column(x));
  const auto stage2 = ols_fit(second, data.column(roles.outcome));
  const double psi = stage2.coefficient(roles.arm);
  const double alpha = stage2.coefficient("fitted_adherence");
  const auto n = data.rows();

  AdherenceResult out;
  out.psi = make(Estimand::Psi, psi, assumptions::adherence(), n);
  out.alpha_a = make(Estimand::AlphaA, alpha, assumptions::adherence(), n);
  out.policy_s_plus_plus = make(Estimand::PolicyInSPlusPlus, psi, assumptions::adherence(), n);
  out.policy_s_plus_star =
      make(Estimand::PolicyInSPlusStar, psi + alpha * (p1 - p0) / p1, assumptions::adherence(), n);
  out.p_a_given_t1 = p1;
  out.p_a_given_t0 = p0;
  return out;
}

EstimandEstimate policy_in_s_plus_star(const TrialData& data, const Roles& roles, const Adjustment& adjust) {
  require_binary(data, roles.exposure);
  const auto policy = policy_estimate(data, roles, adjust);
  const auto g = arm_means(data, roles.arm, roles.exposure);
  if (!(g.mean1 > 0.0)) {
    throw Error(ErrorKind::EmptyStratum, "no subject with " + roles.exposure + "=1 in arm " + roles.arm + "=1");
  }
  return make(Estimand::PolicyInSPlusStar, policy.value / g.mean1, assumptions::policy_in_s_plus_star(),
              data.rows());
}

EstimandEstimate naive_estimate(const TrialData& data, NaiveKind kind, const Roles& roles, const Adjustment& adjust) {
  require_binary(data, roles.exposure);
  const Estimand estimand = kind == NaiveKind::as_treated   ? Estimand::AsTreated
                            : kind == NaiveKind::responder ? Estimand::Responder
                                                           : Estimand::PerProtocol;
  const TrialData subset = kind == NaiveKind::per_protocol ? data.filter_equal(roles.exposure, 1.0) : data;
  const std::string& group = kind == NaiveKind::per_protocol ? roles.arm : roles.exposure;
  check_covariates(adjust.covariates, {roles.arm, roles.exposure, roles.outcome});
  require_binary(subset, group);

  const auto g = split_means(subset.column(group), subset.column(roles.outcome));
  if (g.n1 == 0 || g.n0 == 0) {
    throw Error(ErrorKind::EmptyStratum, std::string(to_string(kind)) + ": comparison group '" + group +
                                             "' has " + std::to_string(g.n1) + " subjects at 1 and " +
                                             std::to_string(g.n0) + " at 0");
  }
  double value = g.mean1 - g.mean0;
  if (!adjust.covariates.empty()) {
    value = regression_effect(design_with(subset, {group}, adjust.covariates), subset.column(roles.outcome),
                              adjust.link, group);
  }
  return make(estimand, value, assumptions::naive(), subset.rows());
}

DefierSensitivityGrid defier_sensitivity(const ComplianceProfile& profile, double observed_iv,
                                         const std::vector<double>& dace_values,
                                         const std::vector<double>& pi_d_values, double epsilon) {
  DefierSensitivityGrid grid;
  grid.dace_values = dace_values;
  grid.pi_d_values = pi_d_values;
  const double p1 = profile.p_t_given_r1;
  const double p0 = profile.p_t_given_r0;
  const double diff = p1 - p0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double dace : dace_values) {
    std::vector<double> row;
    std::vector<bool> ok;
    for (double pi_d : pi_d_values) {
      const auto strata = ComplianceProfile::with_defiers(p1, p0, pi_d);
      const double pi_c = *strata.pi_c;
      const bool feasible = pi_d >= 0.0 && *strata.pi_at >= -epsilon && *strata.pi_nt >= -epsilon;
      const bool defined = feasible && pi_c >= epsilon && std::abs(pi_c - pi_d) >= epsilon &&
                           std::isfinite(observed_iv) && std::isfinite(dace);
      // written as weights so pi_d = 0 returns observed_iv bit for bit
      row.push_back(defined ? observed_iv * (diff / pi_c) + dace * (pi_d / pi_c) : nan);
      ok.push_back(defined);
    }
    grid.implied_cace.push_back(std::move(row));
    grid.defined.push_back(std::move(ok));
  }
  return grid;
}

}  // namespace ivtrial

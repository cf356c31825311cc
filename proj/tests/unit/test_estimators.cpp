#include "ivtrial/dgp.hpp"
#include "ivtrial/error.hpp"
#include "ivtrial/estimators.hpp"
#include "ivtrial/registry.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace ivtrial;
using enum Assumption;

namespace {

TrialData table(std::initializer_list<std::pair<const char*, std::vector<double>>> cols) {
  TrialData d;
  for (const auto& [name, values] : cols) d.add_column(name, values);
  return d;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidParam;
}

// random trial with imperfect compliance and a confounder
TrialData random_trial(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> r(n), t(n), y(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = static_cast<double>(gen() & 1);
    s[i] = static_cast<double>((gen() >> 1) & 1);
    const double u = nd(gen);
    const double p = 1.0 / (1.0 + std::exp(-(-2.0 + 2.5 * r[i] + 1.5 * r[i] * s[i] + u)));
    t[i] = std::bernoulli_distribution(p)(gen) ? 1.0 : 0.0;
    y[i] = 10.0 - 3.0 * t[i] + 2.0 * u + nd(gen);
  }
  return table({{"r", r}, {"s", s}, {"t", t}, {"y", y}});
}

// Normal-equation least squares, independent of the library's QR path.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

}  // namespace

TEST_CASE("policy: arithmetic, symmetry, empty arm") {
  const auto d = table({{"r", {0, 0, 1, 1}}, {"y", {2, 4, 5, 7}}});
  const auto e = policy_estimate(d);
  CHECK(e.value == 3.0);
  CHECK(e.estimand == Estimand::Policy);
  CHECK(e.assumptions == std::vector{IV2});
  CHECK(e.n == 4);

  const auto same = table({{"r", {0, 1, 0, 1}}, {"y", {2, 2, 9, 9}}});
  CHECK(policy_estimate(same).value == 0.0);

  const auto one_arm = table({{"r", {1, 1}}, {"y", {2, 3}}});
  CHECK(kind_of([&] { policy_estimate(one_arm); }) == ErrorKind::EmptyArm);
  const auto not_binary = table({{"r", {0, 2}}, {"y", {2, 3}}});
  CHECK(kind_of([&] { policy_estimate(not_binary); }) == ErrorKind::InvalidParam);
}

TEST_CASE("compliance profile") {
  // 3 of 5 treated in arm 1, 1 of 5 in arm 0
  const auto d = table({{"r", {1, 1, 1, 1, 1, 0, 0, 0, 0, 0}}, {"t", {1, 1, 1, 0, 0, 1, 0, 0, 0, 0}}});
  const auto p = compliance_profile(d);
  CHECK(*p.pi_c == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(*p.pi_at == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(*p.pi_nt == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(*p.pi_d == 0.0);
  CHECK(*p.pi_c + *p.pi_at + *p.pi_nt + *p.pi_d == doctest::Approx(1.0).epsilon(1e-12));

  const auto perfect = table({{"r", {1, 1, 0, 0}}, {"t", {1, 1, 0, 0}}});
  const auto q = compliance_profile(perfect);
  CHECK(*q.pi_c == 1.0);
  CHECK(*q.pi_at == 0.0);
  CHECK(*q.pi_nt == 0.0);

  // 0.65 / 0.07 -> 0.58
  const auto s = ComplianceProfile::with_defiers(0.65, 0.07, 0.0);
  CHECK(*s.pi_c == doctest::Approx(0.58).epsilon(1e-12));

  const auto reversed = table({{"r", {1, 1, 0, 0}}, {"t", {0, 0, 1, 0}}});
  CHECK(kind_of([&] { compliance_profile(reversed); }) == ErrorKind::NegativeComplierFraction);
  const auto loose = compliance_profile(reversed, {}, false);
  CHECK(loose.p_t_given_r1 == 0.0);
  CHECK(loose.p_t_given_r0 == 0.5);
  CHECK_FALSE(loose.pi_c);

  const auto cf = complier_fraction(d);
  CHECK(cf.assumptions == std::vector{IV1, IV2, Monotonicity});
}

TEST_CASE("iv ratio: readings, independence, weak instrument") {
  const auto d = table({{"r", {0, 0, 0, 0, 1, 1, 1, 1}},
                        {"t", {0, 0, 1, 0, 1, 1, 0, 1}},
                        {"y", {2, 4, 6, 4, 7, 9, 3, 8}}});
  const auto iv = iv_ratio(d);
  CHECK(iv.cace.value == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(iv.cace.value == iv.hypothetical.value);
  CHECK(iv.cace.assumptions == std::vector{IV1, IV2, IV3, Monotonicity});
  CHECK(iv.hypothetical.assumptions == std::vector{IV1, IV2, IV3, Homogeneity});

  const auto flat = table({{"r", {0, 0, 1, 1}}, {"t", {0, 1, 1, 1}}, {"y", {3, 5, 5, 3}}});
  CHECK(iv_ratio(flat).cace.value == 0.0);

  const auto constant_t = table({{"r", {0, 0, 1, 1}}, {"t", {1, 1, 1, 1}}, {"y", {3, 5, 5, 3}}});
  CHECK(kind_of([&] { iv_ratio(constant_t); }) == ErrorKind::WeakInstrument);
}

TEST_CASE("decomposition identity and TSLS equivalence on random data") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto d = random_trial(seed, 300 + 10 * seed);
    const double iv = iv_ratio(d).cace.value;
    const double ratio = policy_estimate(d).value / *compliance_profile(d).pi_c;
    CHECK(std::abs(iv - ratio) <= 1e-12 * std::abs(iv));
    CHECK(std::abs(tsls(d).cace.value - iv) < 1e-10);
  }
}

TEST_CASE("tsls: six-row manual two-stage with a covariate") {
  const std::vector<double> r{0, 0, 0, 1, 1, 1}, x{1, 3, 2, 2, 5, 1}, t{0, 1, 0, 1, 1, 0},
      y{3.0, 6.5, 2.0, 8.0, 9.5, 4.0};
  const auto d = table({{"r", r}, {"t", t}, {"y", y}, {"x", x}});

  Eigen::MatrixXd z(6, 3), w(6, 3);
  Eigen::VectorXd tv(6), yv(6);
  for (int i = 0; i < 6; ++i) {
    z.row(i) << 1.0, r[i], x[i];
    tv[i] = t[i];
    yv[i] = y[i];
  }
  const Eigen::VectorXd that = z * normal_equations(z, tv);
  for (int i = 0; i < 6; ++i) w.row(i) << 1.0, that[i], x[i];
  const double manual = normal_equations(w, yv)[1];

  TslsOptions opts;
  opts.adjust.covariates = {"x"};
  CHECK(tsls(d, {}, opts).cace.value == doctest::Approx(manual).epsilon(1e-10));

  opts.adjust.covariates = {"r"};
  CHECK(kind_of([&] { tsls(d, {}, opts); }) == ErrorKind::InvalidParam);
  const auto weak = table({{"r", {0, 0, 1, 1}}, {"t", {0, 1, 0, 1}}, {"y", {1, 2, 3, 4}}});
  CHECK(kind_of([&] { tsls(weak); }) == ErrorKind::WeakInstrument);
}

TEST_CASE("extended tsls: psi_c identity and stamps") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = random_trial(seed, 2000);
    const auto ext = extended_tsls(d, "s");
    const double iv = iv_ratio(d).cace.value;
    CHECK(std::abs(ext.psi_c.value - iv) < 1e-6);
    const auto p = compliance_profile(d);
    const double pi_c = *p.pi_c, pi_at = *p.pi_at;
    CHECK(ext.psi_c.value ==
          doctest::Approx((ext.psi_t.value * (pi_c + pi_at) - ext.psi_at.value * pi_at) / pi_c).epsilon(1e-12));
    CHECK(ext.homogeneity.value == doctest::Approx(ext.psi_t.value - ext.psi_at.value).epsilon(1e-12));
    CHECK(ext.psi_t.assumptions == std::vector{IV1, IV2, Monotonicity, NoTxSInteraction});
  }
}

TEST_CASE("extended tsls: weak interaction") {
  // s does not modulate compliance at all
  std::vector<double> r, s, t, y;
  for (int i = 0; i < 400; ++i) {
    r.push_back(i % 2);
    s.push_back((i / 2) % 2);
    t.push_back((i % 2) && (i % 5 != 0) ? 1.0 : ((i % 7 == 0) ? 1.0 : 0.0));
    y.push_back(static_cast<double>(i % 11));
  }
  const auto d = table({{"r", r}, {"s", s}, {"t", t}, {"y", y}});
  CHECK(kind_of([&] { extended_tsls(d, "s"); }) == ErrorKind::WeakInteraction);
}

TEST_CASE("extended tsls recovers both effects on pain-trial data") {
  auto config = default_config(Model::pain_trial_a);
  config.n = 40000;
  config.seed = 99;
  const auto d = generate(config).observed();
  const auto ext = extended_tsls(d, "s");
  CHECK(ext.psi_t.value == doctest::Approx(-20.0).epsilon(0.05));
  CHECK(ext.psi_at.value == doctest::Approx(-10.0).epsilon(0.6));
  CHECK(std::abs(ext.psi_c.value - iv_ratio(d).cace.value) < 1e-6);
}

TEST_CASE("policy in S+*") {
  // policy = 0.3 - 0.5 = -0.2, p(event | arm=1) = 0.5
  const auto d = table({{"r", {1, 1, 1, 1, 0, 0, 0, 0, 0, 0}},
                        {"t", {1, 1, 0, 0, 0, 0, 0, 0, 0, 0}},
                        {"y", {0.3, 0.3, 0.3, 0.3, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}}});
  const auto e = policy_in_s_plus_star(d);
  CHECK(e.value == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(e.assumptions == std::vector{IV1, IV2, IV3});

  const auto always = table({{"r", {1, 1, 0, 0}}, {"t", {1, 1, 0, 1}}, {"y", {4, 2, 1, 1}}});
  CHECK(policy_in_s_plus_star(always).value == policy_estimate(always).value);

  const auto never = table({{"r", {1, 1, 0, 0}}, {"t", {0, 0, 0, 1}}, {"y", {4, 2, 1, 1}}});
  CHECK(kind_of([&] { policy_in_s_plus_star(never); }) == ErrorKind::EmptyStratum);
}

TEST_CASE("adherence estimands") {
  auto config = default_config(Model::adherence_c);
  config.n = 20000;
  config.seed = 5;
  const auto d = generate(config).observed();
  const Roles roles{"t", "a", "y"};
  const auto res = adherence_estimands(d, "x", roles);
  const double p1 = res.p_a_given_t1, p0 = res.p_a_given_t0;
  CHECK(res.policy_s_plus_star.value ==
        doctest::Approx(res.psi.value + res.alpha_a.value * (p1 - p0) / p1).epsilon(1e-12));
  CHECK(res.policy_s_plus_plus.value == res.psi.value);
  CHECK(res.psi.assumptions == std::vector{IV1, IV2, NoTxSInteraction});
  const auto t = truth(config).values;
  CHECK(std::abs(res.psi.value - t.at("psi")) < 0.03);
  CHECK(std::abs(res.alpha_a.value - t.at("alpha_a")) < 0.05);

  // 0.8 / 0.4 adherence, psi -0.3, alpha -0.4 -> -0.5
  CHECK(-0.3 + -0.4 * (0.8 - 0.4) / 0.8 == doctest::Approx(-0.5).epsilon(1e-15));

  config.set("alpha_a", 0.0);
  const auto flat = adherence_estimands(generate(config).observed(), "x", roles);
  CHECK(std::abs(flat.policy_s_plus_star.value - flat.psi.value) < 0.02);
  CHECK(std::abs(flat.alpha_a.value) < 0.05);

  const auto reversed = table({{"t", {1, 1, 0, 0}}, {"a", {0, 1, 1, 1}}, {"y", {1, 2, 3, 4}}, {"x", {0, 1, 0, 1}}});
  CHECK(kind_of([&] { adherence_estimands(reversed, "x", roles); }) == ErrorKind::AdherenceOrderViolated);
}

TEST_CASE("naive comparators") {
  const auto d = table({{"r", {0, 0, 0, 0, 1, 1, 1, 1}},
                        {"t", {0, 0, 1, 0, 1, 1, 0, 1}},
                        {"y", {2, 4, 6, 4, 7, 9, 3, 8}}});
  const auto at = naive_estimate(d, NaiveKind::as_treated);
  CHECK(at.value == doctest::Approx(7.5 - 13.0 / 4.0).epsilon(1e-14));
  CHECK(at.assumptions.empty());
  CHECK(at.estimand == Estimand::AsTreated);

  const auto pp = naive_estimate(d, NaiveKind::per_protocol);
  CHECK(pp.value == doctest::Approx(8.0 - 6.0).epsilon(1e-14));
  CHECK(pp.n == 4);

  const auto resp = naive_estimate(d, NaiveKind::responder);
  CHECK(resp.value == at.value);
  CHECK(resp.estimand == Estimand::Responder);

  const auto none_treated = table({{"r", {0, 1}}, {"t", {0, 0}}, {"y", {1, 2}}});
  CHECK(kind_of([&] { naive_estimate(none_treated, NaiveKind::as_treated); }) == ErrorKind::EmptyStratum);
  CHECK(kind_of([&] { naive_estimate(none_treated, NaiveKind::per_protocol); }) == ErrorKind::EmptyStratum);
}

TEST_CASE("defier sensitivity grid") {
  const auto profile = ComplianceProfile::with_defiers(0.6, 0.1, 0.0);
  const std::vector<double> daces{-20, -5, 0, 5, 20};
  const std::vector<double> pis{0.0, 0.1, 0.2};
  const auto grid = defier_sensitivity(profile, -10.0, daces, pis);
  for (std::size_t i = 0; i < daces.size(); ++i) {
    CHECK(grid.defined[i][0]);
    CHECK(grid.implied_cace[i][0] == -10.0);
  }
  // (-10 * 0.5 + (-5)(0.1)) / 0.6
  CHECK(grid.implied_cace[1][1] == doctest::Approx(-9.1666666667).epsilon(1e-9));
  // linear in DACE at fixed pi_d
  const double step = grid.implied_cace[1][1] - grid.implied_cace[0][1];
  CHECK(grid.implied_cace[2][1] - grid.implied_cace[1][1] == doctest::Approx(step * 5.0 / 15.0).epsilon(1e-12));
  // pi_d = 0.2 exceeds p0 = 0.1, leaving a negative always-taker share
  CHECK_FALSE(grid.defined[0][2]);
  // equal effects across strata form a fixed point
  const auto fixed = defier_sensitivity(profile, -7.0, {-7.0}, {0.05, 0.1});
  CHECK(fixed.implied_cace[0][1] == doctest::Approx(-7.0).epsilon(1e-14));

  // pi_d beyond p0 leaves a negative always-taker share: undefined
  const auto infeasible = defier_sensitivity(profile, -10.0, {0.0}, {0.15, -0.01});
  CHECK_FALSE(infeasible.defined[0][0]);
  CHECK_FALSE(infeasible.defined[0][1]);
  CHECK(std::isnan(infeasible.implied_cace[0][0]));

  // pi_c == pi_d flagged
  const auto degenerate = defier_sensitivity(ComplianceProfile::with_defiers(0.4, 0.4, 0.0), -10.0, {1.0}, {0.1});
  CHECK_FALSE(degenerate.defined[0][0]);
}

TEST_CASE("registry: parsing, expansion, stamps") {
  const auto spec = parse_estimator_spec("x", "tsls.hypothetical arm=t exposure=z covariates=a,b link=logistic");
  CHECK(spec.kind == "tsls");
  CHECK(spec.part == "hypothetical");
  CHECK(spec.roles.arm == "t");
  CHECK(spec.adjust.covariates == std::vector<std::string>{"a", "b"});
  CHECK(spec.adjust.link == Link::logistic);
  CHECK(kind_of([] { parse_estimator_spec("x", "mystery"); }) == ErrorKind::UnknownEstimator);
  CHECK(kind_of([] { parse_estimator_spec("x", "iv_ratio.nope"); }) == ErrorKind::UnknownEstimator);
  CHECK(kind_of([] { parse_estimator_spec("x", "policy colour=red"); }) == ErrorKind::InvalidParam);

  const auto parts = expand_parts(parse_estimator_spec("extended_tsls", "extended_tsls"));
  REQUIRE(parts.size() == 4);
  CHECK(parts[2].label == "extended_tsls.psi_c");

  // each estimator stamps exactly its documented set, success or not
  const auto d = random_trial(3, 1500);
  for (const auto& k : estimator_kinds()) {
    if (k.kind == "adherence") continue;
    auto base = parse_estimator_spec(std::string(k.kind), k.kind);
    for (const auto& s : expand_parts(base)) {
      const auto e = evaluate(s, d);
      CHECK(e.assumptions == documented_assumptions(s));
    }
  }
  const auto outcomes = evaluate_all({parse_estimator_spec("bad", "policy arm=missing")}, d);
  CHECK_FALSE(outcomes[0].ok());
  CHECK(outcomes[0].error == ErrorKind::MissingColumn);
}

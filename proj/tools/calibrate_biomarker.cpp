// Calibrates the two unpublished biomarker-model coefficients.
//   alpha_x: outcome prevalence 0.53 (closed form, prevalence is linear in it)
//   alpha_u: x-adjusted responder AME of -0.059 on one large draw (bisection)
#include "ivtrial/dgp.hpp"
#include "ivtrial/estimators.hpp"

#include <CLI11.hpp>

#include <cstdio>

using namespace ivtrial;

int main(int argc, char** argv) {
  double prevalence = 0.53, responder = -0.059, lo = -0.2, hi = 0.2;
  std::size_t n = 1'000'000;
  std::uint64_t seed = 20240601;
  int iterations = 30;
  CLI::App app{"Calibrate alpha_x and alpha_u of the biomarker model"};
  app.add_option("--prevalence", prevalence);
  app.add_option("--responder", responder);
  app.add_option("--n", n);
  app.add_option("--seed", seed);
  app.add_option("--lo", lo);
  app.add_option("--hi", hi);
  app.add_option("--iterations", iterations);
  CLI11_PARSE(app, argc, argv);

  auto config = default_config(Model::biomarker_b);
  config.set("alpha_x", 0.0);
  const double base = truth(config).values.at("prevalence");
  const double alpha_x = (prevalence - base) / config.get("x_intercept");
  config.set("alpha_x", alpha_x);
  config.n = n;
  config.seed = seed;

  const Roles roles{"t", "z", "y"};
  const Adjustment adjust{{"x"}, Link::logistic};
  auto responder_at = [&](double alpha_u) {
    config.set("alpha_u", alpha_u);
    const auto data = generate(config).observed();
    return naive_estimate(data, NaiveKind::responder, roles, adjust).value;
  };

  double f_lo = responder_at(lo) - responder, f_hi = responder_at(hi) - responder;
  if (f_lo * f_hi > 0) {
    std::fprintf(stderr, "target not bracketed: f(%g)=%g f(%g)=%g\n", lo, f_lo, hi, f_hi);
    return 1;
  }
  for (int k = 0; k < iterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = responder_at(mid) - responder;
    if ((f_mid < 0) == (f_lo < 0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  const double alpha_u = 0.5 * (lo + hi);
  config.set("alpha_u", alpha_u);
  std::printf("alpha_x = %.6g\nalpha_u = %.6g\n", alpha_x, alpha_u);
  std::printf("prevalence (analytic) = %.6f\n", truth(config).values.at("prevalence"));
  std::printf("responder AME (n=%zu) = %.6f\n", n, responder_at(alpha_u));
  return 0;
}

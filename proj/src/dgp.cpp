#include "ivtrial/dgp.hpp"

#include "ivtrial/error.hpp"
#include "ivtrial/regress.hpp"
#include "ivtrial/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ivtrial {

std::string_view to_string(Model m) noexcept {
  switch (m) {
    case Model::pain_trial_a: return "pain_trial_a";
    case Model::biomarker_b: return "biomarker_b";
    case Model::adherence_c: return "adherence_c";
  }
  return "unknown";
}

std::string_view to_string(Variant v) noexcept {
  return v == Variant::confounded ? "confounded" : "randomized_compliance";
}

Model parse_model(std::string_view text) {
  if (text == "pain_trial_a" || text == "A" || text == "a") return Model::pain_trial_a;
  if (text == "biomarker_b" || text == "B" || text == "b") return Model::biomarker_b;
  if (text == "adherence_c" || text == "C" || text == "c") return Model::adherence_c;
  throw Error(ErrorKind::InvalidParam,
              "unknown model '" + std::string(text) + "' (expected pain_trial_a|biomarker_b|adherence_c or A|B|C)");
}

Variant parse_variant(std::string_view text) {
  if (text == "confounded") return Variant::confounded;
  if (text == "randomized_compliance") return Variant::randomized_compliance;
  throw Error(ErrorKind::InvalidParam,
              "unknown variant '" + std::string(text) + "' (expected confounded|randomized_compliance)");
}

const std::map<std::string, double>& default_params(Model model) {
  static const std::map<std::string, double> pain{
      {"p_r", 0.5},        {"p_s", 0.5},          {"u_sd", 0.5},      {"t_intercept", -3.0},
      {"t_r", 2.0},        {"t_s", 0.0},          {"t_rs", 5.0},      {"t_u", 1.0},
      {"y_intercept", 63}, {"psi_t", -20.0},      {"psi_at", -10.0},  {"y_u", 3.0},
      {"y_noise_sd", 12.0},
  };
  // alpha_x, alpha_u: calibrated by tools/calibrate_biomarker (see configs/setting_1.conf)
  static const std::map<std::string, double> biomarker{
      {"p_t", 0.5},        {"u_sd", 2.0},         {"x_intercept", -1.0}, {"x_u", 1.0},
      {"x_noise_sd", 2.0}, {"z_intercept", 0.0},  {"z_t", 3.0},          {"z_x", 2.0},
      {"z_xt", -4.0},      {"z_u", -3.0},         {"alpha_0", 0.6},      {"psi_b", -0.15},
      {"psi_ar", -0.05},   {"psi_z", 0.01},       {"alpha_x", 0.01587},  {"alpha_u", -0.02986},
      {"py_noise_sd", 0.01},
  };
  static const std::map<std::string, double> adherence{
      {"p_t", 0.5},        {"u_sd", 4.0},         {"x_u", 0.2},        {"x_noise_sd", 1.0},
      {"z_x", 0.2},        {"z_u", 0.1},          {"z_t", 0.2},        {"z_noise_sd", 1.0},
      {"a_intercept", 1.0}, {"a_t", 2.0},         {"a_x", 0.0},        {"a_xt", -6.0},
      {"a_u", 1.0},        {"a_z", 1.0},          {"y_intercept", 8.0}, {"psi_t", -0.3},
      {"alpha_a", -0.4},   {"y_x", -0.1},         {"y_u", -0.1},       {"y_z", -0.1},
      {"y_noise_sd", 0.2},
  };
  switch (model) {
    case Model::pain_trial_a: return pain;
    case Model::biomarker_b: return biomarker;
    case Model::adherence_c: return adherence;
  }
  return pain;
}

DgpConfig default_config(Model model, Variant variant) {
  DgpConfig c;
  c.model = model;
  c.variant = variant;
  c.params = default_params(model);
  return c;
}

void DgpConfig::set(const std::string& name, double value) {
  const auto it = params.find(name);
  if (it == params.end()) {
    throw Error(ErrorKind::InvalidParam, "model " + std::string(to_string(model)) + " has no parameter '" + name + "'");
  }
  it->second = value;
}

double DgpConfig::get(const std::string& name) const {
  const auto it = params.find(name);
  if (it == params.end()) {
    throw Error(ErrorKind::InvalidParam, "model " + std::string(to_string(model)) + " has no parameter '" + name + "'");
  }
  return it->second;
}

void validate(const DgpConfig& config) {
  if (config.n == 0) throw Error(ErrorKind::InvalidParam, "n must be at least 1");
  if (config.variant == Variant::randomized_compliance && config.model != Model::pain_trial_a) {
    throw Error(ErrorKind::InvalidParam, "variant randomized_compliance applies to pain_trial_a only");
  }
  const auto& defaults = default_params(config.model);
  for (const auto& [name, unused] : defaults) {
    if (!config.params.count(name)) throw Error(ErrorKind::InvalidParam, "parameter '" + name + "' is missing");
  }
  for (const auto& [name, value] : config.params) {
    if (!defaults.count(name)) {
      throw Error(ErrorKind::InvalidParam,
                  "model " + std::string(to_string(config.model)) + " has no parameter '" + name + "'");
    }
    if (!std::isfinite(value)) throw Error(ErrorKind::InvalidParam, "parameter '" + name + "' is not finite");
    if (name.ends_with("_sd") && value < 0.0) {
      throw Error(ErrorKind::InvalidParam, "standard deviation '" + name + "' is negative");
    }
    if (name.starts_with("p_") && (value < 0.0 || value > 1.0)) {
      throw Error(ErrorKind::InvalidParam, "probability '" + name + "' is outside [0, 1]");
    }
  }
}

TrialData GeneratedData::observed() const {
  std::vector<std::string> keep;
  for (const auto& n : data.names()) {
    if (std::find(latent.begin(), latent.end(), n) == latent.end()) keep.push_back(n);
  }
  return data.project(keep);
}

namespace {

double b01(bool v) { return v ? 1.0 : 0.0; }

GeneratedData generate_pain(const DgpConfig& c) {
  const double p_r = c.get("p_r"), p_s = c.get("p_s"), u_sd = c.get("u_sd");
  const double t0 = c.get("t_intercept"), t_r = c.get("t_r"), t_s = c.get("t_s"), t_rs = c.get("t_rs"),
               t_u = c.get("t_u");
  const double y0 = c.get("y_intercept"), psi_t = c.get("psi_t"), y_u = c.get("y_u"), y_sd = c.get("y_noise_sd");
  const double psi_at = c.variant == Variant::randomized_compliance ? psi_t : c.get("psi_at");

  std::vector<double> r(c.n), s(c.n), t(c.n), y(c.n), u(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    SplitMix64 g(derive_seed(c.seed, i, Stream::subject));
    r[i] = b01(bernoulli(g, p_r));
    s[i] = b01(bernoulli(g, p_s));
    u[i] = u_sd * standard_normal(g);
    const double eta = t0 + t_r * r[i] + t_s * s[i] + t_rs * r[i] * s[i] + t_u * u[i];
    t[i] = b01(bernoulli(g, inverse_logit(eta)));
    y[i] = y0 + psi_t * t[i] * r[i] + psi_at * t[i] * (1.0 - r[i]) + y_u * u[i] + y_sd * standard_normal(g);
  }
  GeneratedData out;
  out.data.add_column("r", std::move(r)).add_column("s", std::move(s)).add_column("t", std::move(t));
  out.data.add_column("y", std::move(y)).add_column("u", std::move(u));
  out.latent = {"u"};
  return out;
}

GeneratedData generate_biomarker(const DgpConfig& c) {
  const double p_t = c.get("p_t"), u_sd = c.get("u_sd");
  const double x0 = c.get("x_intercept"), x_u = c.get("x_u"), x_sd = c.get("x_noise_sd");
  const double z0 = c.get("z_intercept"), z_t = c.get("z_t"), z_x = c.get("z_x"), z_xt = c.get("z_xt"),
               z_u = c.get("z_u");
  const double a0 = c.get("alpha_0"), psi_b = c.get("psi_b"), psi_ar = c.get("psi_ar"), psi_z = c.get("psi_z"),
               a_x = c.get("alpha_x"), a_u = c.get("alpha_u"), py_sd = c.get("py_noise_sd");

  std::vector<double> t(c.n), x(c.n), z(c.n), y(c.n), u(c.n);
  GeneratedData out;
  for (std::size_t i = 0; i < c.n; ++i) {
    SplitMix64 g(derive_seed(c.seed, i, Stream::subject));
    t[i] = b01(bernoulli(g, p_t));
    u[i] = u_sd * standard_normal(g);
    x[i] = x0 + x_u * u[i] + x_sd * standard_normal(g);
    const double eta = z0 + z_t * t[i] + z_x * x[i] + z_xt * x[i] * t[i] + z_u * u[i];
    z[i] = b01(bernoulli(g, inverse_logit(eta)));
    double p = a0 + psi_b * z[i] * t[i] + psi_ar * z[i] * (1.0 - t[i]) + a_x * x[i] + a_u * u[i] + psi_z * z[i] +
               py_sd * standard_normal(g);
    // linear-probability outcome: clamp, and count it
    if (p < 0.0 || p > 1.0) {
      ++out.clamp_events;
      p = std::clamp(p, 0.0, 1.0);
    }
    y[i] = b01(bernoulli(g, p));
  }
  out.data.add_column("t", std::move(t)).add_column("x", std::move(x)).add_column("z", std::move(z));
  out.data.add_column("y", std::move(y)).add_column("u", std::move(u));
  out.latent = {"u"};
  return out;
}

GeneratedData generate_adherence(const DgpConfig& c) {
  const double p_t = c.get("p_t"), u_sd = c.get("u_sd"), x_u = c.get("x_u"), x_sd = c.get("x_noise_sd");
  const double z_x = c.get("z_x"), z_u = c.get("z_u"), z_t = c.get("z_t"), z_sd = c.get("z_noise_sd");
  const double a0 = c.get("a_intercept"), a_t = c.get("a_t"), a_x = c.get("a_x"), a_xt = c.get("a_xt"),
               a_u = c.get("a_u"), a_z = c.get("a_z");
  const double y0 = c.get("y_intercept"), psi_t = c.get("psi_t"), alpha_a = c.get("alpha_a"), y_x = c.get("y_x"),
               y_u = c.get("y_u"), y_z = c.get("y_z"), y_sd = c.get("y_noise_sd");

  std::vector<double> t(c.n), x(c.n), a(c.n), y(c.n), u(c.n), z(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    SplitMix64 g(derive_seed(c.seed, i, Stream::subject));
    t[i] = b01(bernoulli(g, p_t));
    u[i] = u_sd * standard_normal(g);
    x[i] = x_u * u[i] + x_sd * standard_normal(g);
    z[i] = z_x * x[i] + z_u * u[i] + z_t * t[i] + z_sd * standard_normal(g);
    const double eta = a0 + a_t * t[i] + a_x * x[i] + a_xt * x[i] * t[i] + a_u * u[i] + a_z * z[i];
    a[i] = b01(bernoulli(g, inverse_logit(eta)));
    y[i] = y0 + psi_t * t[i] + alpha_a * a[i] + y_x * x[i] + y_u * u[i] + y_z * z[i] + y_sd * standard_normal(g);
  }
  GeneratedData out;
  out.data.add_column("t", std::move(t)).add_column("x", std::move(x)).add_column("a", std::move(a));
  out.data.add_column("y", std::move(y)).add_column("u", std::move(u)).add_column("z", std::move(z));
  out.latent = {"u", "z"};
  return out;
}

}  // namespace

GeneratedData generate(const DgpConfig& config) {
  validate(config);
  switch (config.model) {
    case Model::pain_trial_a: return generate_pain(config);
    case Model::biomarker_b: return generate_biomarker(config);
    case Model::adherence_c: return generate_adherence(config);
  }
  throw Error(ErrorKind::InvalidParam, "unknown model");
}

double logistic_normal_mean(double mu, double sigma) {
  if (sigma == 0.0) return inverse_logit(mu);
  // composite Simpson on [-12, 12]; the normal tail beyond is < 1e-32
  constexpr int panels = 4000;
  constexpr double lo = -12.0, hi = 12.0;
  const double h = (hi - lo) / panels;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto f = [&](double z) { return inverse_logit(mu + sigma * z) * norm * std::exp(-0.5 * z * z); };
  double sum = f(lo) + f(hi);
  for (int k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(lo + k * h);
  return sum * h / 3.0;
}

Truth truth(const DgpConfig& c) {
  validate(c);
  Truth out;
  out.method = "analytic";
  auto& v = out.values;
  switch (c.model) {
    case Model::pain_trial_a: {
      const double sigma = std::abs(c.get("t_u")) * c.get("u_sd");
      const double t0 = c.get("t_intercept"), t_r = c.get("t_r"), t_s = c.get("t_s"), t_rs = c.get("t_rs");
      const double p_s = c.get("p_s");
      const double p1 =
          (1 - p_s) * logistic_normal_mean(t0 + t_r, sigma) + p_s * logistic_normal_mean(t0 + t_r + t_s + t_rs, sigma);
      const double p0 = (1 - p_s) * logistic_normal_mean(t0, sigma) + p_s * logistic_normal_mean(t0 + t_s, sigma);
      const double psi_t = c.get("psi_t");
      const double psi_at = c.variant == Variant::randomized_compliance ? psi_t : c.get("psi_at");
      v["p_t_given_r1"] = p1;
      v["p_t_given_r0"] = p0;
      v["pi_c"] = p1 - p0;
      v["pi_at"] = p0;
      v["pi_nt"] = 1.0 - p1;
      v["psi_t"] = psi_t;
      v["psi_at"] = psi_at;
      v["psi_c"] = psi_t == psi_at ? psi_t : (psi_t * p1 - psi_at * p0) / (p1 - p0);
      v["policy"] = psi_t * p1 - psi_at * p0;
      v["mean_y"] = c.get("y_intercept") + c.get("p_r") * psi_t * p1 + (1 - c.get("p_r")) * psi_at * p0;
      break;
    }
    case Model::biomarker_b: {
      const double u_sd = c.get("u_sd"), x0 = c.get("x_intercept"), x_u = c.get("x_u"), x_sd = c.get("x_noise_sd");
      const double z0 = c.get("z_intercept"), z_t = c.get("z_t"), z_x = c.get("z_x"), z_xt = c.get("z_xt"),
                   z_u = c.get("z_u");
      auto p_z = [&](double t) {
        const double slope = z_x + z_xt * t;
        const double mu = z0 + z_t * t + slope * x0;
        const double on_u = slope * x_u + z_u;
        return logistic_normal_mean(mu, std::sqrt(on_u * on_u * u_sd * u_sd + slope * slope * x_sd * x_sd));
      };
      const double pz1 = p_z(1.0), pz0 = p_z(0.0), p_t = c.get("p_t");
      const double eff1 = c.get("psi_b") + c.get("psi_z");
      const double eff0 = c.get("psi_ar") + c.get("psi_z");
      const double policy = eff1 * pz1 - eff0 * pz0;
      v["p_z_given_t1"] = pz1;
      v["p_z_given_t0"] = pz0;
      v["hypothetical_s_plus_star"] = eff1;
      v["hypothetical_s_plus_plus"] = eff0;
      v["policy"] = policy;
      v["policy_s_plus_star"] = policy / pz1;
      // ignores the (rare) clamping of the linear-probability outcome
      v["prevalence"] = c.get("alpha_0") + p_t * eff1 * pz1 + (1 - p_t) * eff0 * pz0 + c.get("alpha_x") * x0;
      break;
    }
    case Model::adherence_c: {
      const double u_sd = c.get("u_sd"), x_u = c.get("x_u"), x_sd = c.get("x_noise_sd");
      const double z_x = c.get("z_x"), z_u = c.get("z_u"), z_t = c.get("z_t"), z_sd = c.get("z_noise_sd");
      const double a0 = c.get("a_intercept"), a_t = c.get("a_t"), a_x = c.get("a_x"), a_xt = c.get("a_xt"),
                   a_u = c.get("a_u"), a_z = c.get("a_z");
      auto p_a = [&](double t) {
        // Z substituted: eta = mu + on_x * X + on_u * U + a_z * z_sd * N
        const double on_x = a_x + a_xt * t + a_z * z_x;
        const double on_u = a_u + a_z * z_u;
        const double mu = a0 + a_t * t + a_z * z_t * t;
        const double total_u = on_x * x_u + on_u;
        const double var = total_u * total_u * u_sd * u_sd + on_x * on_x * x_sd * x_sd + a_z * a_z * z_sd * z_sd;
        return logistic_normal_mean(mu, std::sqrt(var));
      };
      const double p1 = p_a(1.0), p0 = p_a(0.0);
      const double psi = c.get("psi_t") + c.get("y_z") * z_t;
      const double alpha = c.get("alpha_a");
      v["p_a_given_t1"] = p1;
      v["p_a_given_t0"] = p0;
      v["psi"] = psi;
      v["alpha_a"] = alpha;
      v["policy"] = psi + alpha * (p1 - p0);
      v["policy_s_plus_plus"] = psi;
      v["policy_s_plus_star"] = psi + alpha * (p1 - p0) / p1;
      v["mean_y"] = c.get("y_intercept") + c.get("p_t") * (psi + alpha * p1) + (1 - c.get("p_t")) * alpha * p0;
      break;
    }
  }
  return out;
}

}  // namespace ivtrial

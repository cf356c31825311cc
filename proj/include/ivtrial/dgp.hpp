#pragma once

#include "ivtrial/trial_data.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ivtrial {

enum class Model {
  pain_trial_a,  // randomization R, migraine history S, treatment T, pain score Y
  biomarker_b,   // randomized T, baseline X, biomarker response Z, binary Y
  adherence_c,   // randomized T, baseline X, adherence A, HbA1c-like Y
};

/// randomized_compliance forces psi_at = psi_t (pain trial only).
enum class Variant { confounded, randomized_compliance };

std::string_view to_string(Model m) noexcept;
std::string_view to_string(Variant v) noexcept;
Model parse_model(std::string_view text);      // also accepts A, B, C
Variant parse_variant(std::string_view text);

struct DgpConfig {
  Model model = Model::pain_trial_a;
  Variant variant = Variant::confounded;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::map<std::string, double> params;  // always the full set for `model`

  /// Throws InvalidParam for a name the model does not have.
  void set(const std::string& name, double value);
  double get(const std::string& name) const;
};

/// Defaults for every coefficient of the model.
DgpConfig default_config(Model model, Variant variant = Variant::confounded);
const std::map<std::string, double>& default_params(Model model);

/// Throws InvalidParam (n = 0, negative SD, probability outside [0, 1],
/// unknown parameter, variant on a model that lacks it).
void validate(const DgpConfig& config);

struct GeneratedData {
  TrialData data;                   // observed columns first, then latent ones
  std::vector<std::string> latent;  // names of latent columns in `data`
  std::size_t clamp_events = 0;     // probabilities pulled back into [0, 1]

  /// Observed columns only.
  TrialData observed() const;
};

/// Subject i draws from its own generator seeded from (seed, i), so output is
/// independent of evaluation order and any prefix of a larger draw matches a
/// smaller one.
GeneratedData generate(const DgpConfig& config);

struct Truth {
  std::map<std::string, double> values;
  std::string method;  // "analytic"
};

/// Population values of the estimands, from closed forms plus a 1-D
/// quadrature of the logistic-normal integral.
Truth truth(const DgpConfig& config);

/// E[expit(mu + sigma * Z)], Z standard normal.
double logistic_normal_mean(double mu, double sigma);

}  // namespace ivtrial

#include "ivtrial/registry.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

namespace ivtrial {

const std::vector<KindInfo>& estimator_kinds() {
  static const std::vector<KindInfo> kinds{
      {"policy", {}},
      {"complier_fraction", {}},
      {"iv_ratio", {"cace", "hypothetical"}},
      {"tsls", {"cace", "hypothetical"}},
      {"extended_tsls", {"psi_t", "psi_at", "psi_c", "homogeneity"}},
      {"policy_in_s_plus_star", {}},
      {"adherence", {"psi", "alpha_a", "policy_s_plus_plus", "policy_s_plus_star"}},
      {"as_treated", {}},
      {"per_protocol", {}},
      {"responder", {}},
  };
  return kinds;
}

namespace {

const KindInfo& kind_info(std::string_view kind) {
  const auto& kinds = estimator_kinds();
  const auto it = std::find_if(kinds.begin(), kinds.end(), [&](const KindInfo& k) { return k.kind == kind; });
  if (it == kinds.end()) {
    std::string known;
    for (const auto& k : kinds) known += (known.empty() ? "" : ", ") + std::string(k.kind);
    throw Error(ErrorKind::UnknownEstimator, "unknown estimator '" + std::string(kind) + "' (known: " + known + ")");
  }
  return *it;
}

std::size_t part_index(const EstimatorSpec& spec) {
  const auto& info = kind_info(spec.kind);
  if (info.parts.empty() || spec.part.empty()) return 0;
  const auto it = std::find(info.parts.begin(), info.parts.end(), spec.part);
  if (it == info.parts.end()) {
    throw Error(ErrorKind::UnknownEstimator, "estimator '" + spec.kind + "' has no output '" + spec.part + "'");
  }
  return static_cast<std::size_t>(it - info.parts.begin());
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    if (comma > start) out.emplace_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

/// Every output of one computation, in the kind's part order.
std::vector<EstimandEstimate> compute(const EstimatorSpec& spec, const TrialData& data) {
  const auto& k = spec.kind;
  InteractionGuard guard;
  guard.resamples = spec.guard_resamples;
  if (k == "policy") return {policy_estimate(data, spec.roles, spec.adjust)};
  if (k == "complier_fraction") return {complier_fraction(data, spec.roles)};
  if (k == "iv_ratio") {
    auto r = iv_ratio(data, spec.roles);
    return {r.cace, r.hypothetical};
  }
  if (k == "tsls") {
    auto r = tsls(data, spec.roles, TslsOptions{spec.adjust, {}});
    return {r.cace, r.hypothetical};
  }
  if (k == "extended_tsls") {
    auto r = extended_tsls(data, spec.interaction, spec.roles, spec.adjust.link, guard);
    // binary intercurrent event on a risk scale: psi_t is the hypothetical effect in S+*
    if (spec.adjust.link == Link::logistic) r.psi_t.estimand = Estimand::HypotheticalInSPlusStar;
    return {r.psi_t, r.psi_at, r.psi_c, r.homogeneity};
  }
  if (k == "policy_in_s_plus_star") return {policy_in_s_plus_star(data, spec.roles, spec.adjust)};
  if (k == "adherence") {
    auto r = adherence_estimands(data, spec.interaction, spec.roles, guard);
    return {r.psi, r.alpha_a, r.policy_s_plus_plus, r.policy_s_plus_star};
  }
  if (k == "as_treated") return {naive_estimate(data, NaiveKind::as_treated, spec.roles, spec.adjust)};
  if (k == "per_protocol") return {naive_estimate(data, NaiveKind::per_protocol, spec.roles, spec.adjust)};
  if (k == "responder") return {naive_estimate(data, NaiveKind::responder, spec.roles, spec.adjust)};
  kind_info(k);  // throws
  return {};
}

}  // namespace

std::string EstimatorSpec::computation_key() const {
  std::string key = kind + "|" + roles.arm + "|" + roles.exposure + "|" + roles.outcome + "|";
  for (const auto& c : adjust.covariates) key += c + ",";
  key += "|" + std::string(to_string(adjust.link)) + "|" + interaction + "|" + std::to_string(guard_resamples);
  return key;
}

EstimatorSpec parse_estimator_spec(std::string label, std::string_view text) {
  std::istringstream words{std::string(text)};
  std::string head;
  if (!(words >> head)) throw Error(ErrorKind::UnknownEstimator, "estimator '" + label + "' has no kind");
  EstimatorSpec spec;
  spec.label = std::move(label);
  if (const auto dot = head.find('.'); dot != std::string::npos) {
    spec.kind = head.substr(0, dot);
    spec.part = head.substr(dot + 1);
  } else {
    spec.kind = head;
  }
  part_index(spec);  // validates kind and part

  std::string option;
  while (words >> option) {
    const auto eq = option.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::InvalidParam, "estimator '" + spec.label + "': expected key=value, got '" + option + "'");
    }
    const auto key = option.substr(0, eq);
    const auto value = option.substr(eq + 1);
    if (key == "arm") spec.roles.arm = value;
    else if (key == "exposure") spec.roles.exposure = value;
    else if (key == "outcome") spec.roles.outcome = value;
    else if (key == "covariates") spec.adjust.covariates = split_list(value);
    else if (key == "link") spec.adjust.link = parse_link(value);
    else if (key == "interaction") spec.interaction = value;
    else if (key == "guard") {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), spec.guard_resamples);
      if (ec != std::errc() || ptr != value.data() + value.size() || spec.guard_resamples < 0) {
        throw Error(ErrorKind::InvalidParam, "estimator '" + spec.label + "': guard must be a count, got '" + value + "'");
      }
    } else {
      throw Error(ErrorKind::InvalidParam, "estimator '" + spec.label + "': unknown option '" + key + "'");
    }
  }
  return spec;
}

std::vector<EstimatorSpec> expand_parts(const EstimatorSpec& spec) {
  const auto& info = kind_info(spec.kind);
  if (info.parts.empty() || !spec.part.empty()) return {spec};
  std::vector<EstimatorSpec> out;
  for (auto part : info.parts) {
    auto s = spec;
    s.part = std::string(part);
    s.label = spec.kind + "." + s.part;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Assumption> documented_assumptions(const EstimatorSpec& spec) {
  const auto& k = spec.kind;
  const auto part = part_index(spec);
  if (k == "policy") return assumptions::policy();
  if (k == "complier_fraction") return assumptions::complier_fraction();
  if (k == "iv_ratio" || k == "tsls") return part == 0 ? assumptions::cace() : assumptions::hypothetical();
  if (k == "extended_tsls") return assumptions::two_parameter();
  if (k == "policy_in_s_plus_star") return assumptions::policy_in_s_plus_star();
  if (k == "adherence") return assumptions::adherence();
  return assumptions::naive();
}

EstimandEstimate evaluate(const EstimatorSpec& spec, const TrialData& data) {
  const auto idx = part_index(spec);
  return compute(spec, data).at(idx);
}

std::vector<EstimatorOutcome> evaluate_all(const std::vector<EstimatorSpec>& specs, const TrialData& data) {
  struct Cached {
    std::vector<EstimandEstimate> values;
    ErrorKind error = ErrorKind::InvalidParam;
    std::string message;
    bool ok = false;
  };
  std::map<std::string, Cached> cache;
  std::vector<EstimatorOutcome> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    EstimatorOutcome o;
    try {
      const auto idx = part_index(spec);
      const auto key = spec.computation_key();
      auto it = cache.find(key);
      if (it == cache.end()) {
        Cached c;
        try {
          c.values = compute(spec, data);
          c.ok = true;
        } catch (const Error& e) {
          c.error = e.kind();
          c.message = e.what();
        }
        it = cache.emplace(key, std::move(c)).first;
      }
      if (it->second.ok) {
        o.estimate = it->second.values.at(idx);
      } else {
        o.error = it->second.error;
        o.message = it->second.message;
      }
    } catch (const Error& e) {
      o.error = e.kind();
      o.message = e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace ivtrial

#include "ivtrial/montecarlo.hpp"

#include "ivtrial/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace ivtrial {

std::string format_fixed6(double value) {
  if (!std::isfinite(value)) return "null";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void validate(const CampaignSpec& spec) {
  if (spec.replications == 0) throw Error(ErrorKind::InvalidParam, "replications must be at least 1");
  if (spec.estimators.empty()) throw Error(ErrorKind::InvalidParam, "campaign has no estimators");
  if (spec.bootstrap_reps != 0 && spec.bootstrap_reps < kMinBootstrapReps) {
    throw Error(ErrorKind::InvalidParam, "bootstrap needs at least " + std::to_string(kMinBootstrapReps) +
                                             " resamples, got " + std::to_string(spec.bootstrap_reps));
  }
  std::set<std::string> labels;
  for (const auto& e : spec.estimators) {
    if (!labels.insert(e.label).second) throw Error(ErrorKind::InvalidParam, "duplicate estimator label '" + e.label + "'");
    documented_assumptions(e);  // validates kind and part
  }
  validate(spec.dgp);
}

std::size_t CampaignResult::index_of(std::string_view label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw Error(ErrorKind::UnknownEstimator, "campaign has no estimator '" + std::string(label) + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t replication) {
  return derive_seed(master_seed, replication, Stream::data);
}

namespace {

std::optional<double> sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

struct ReplicationRow {
  std::vector<std::optional<double>> values;
  std::vector<std::optional<double>> se;
  std::vector<std::optional<ErrorKind>> errors;
  std::size_t clamp_events = 0;
};

ReplicationRow run_one(const CampaignSpec& spec, std::size_t i) {
  auto config = spec.dgp;
  config.seed = replication_seed(spec.master_seed, i);
  const auto generated = generate(config);
  const auto outcomes = evaluate_all(spec.estimators, generated.data);

  ReplicationRow row;
  row.clamp_events = generated.clamp_events;
  for (const auto& o : outcomes) {
    row.values.push_back(o.ok() ? std::optional<double>(o.estimate->value) : std::nullopt);
    row.errors.push_back(o.ok() ? std::nullopt : std::optional<ErrorKind>(o.error));
  }
  if (spec.bootstrap_reps > 0) {
    row.se = bootstrap_se_all(generated.data, spec.estimators, spec.bootstrap_reps,
                              derive_seed(spec.master_seed, i, Stream::bootstrap));
  }
  return row;
}

}  // namespace

std::vector<EstimatorSummary> summarize(const CampaignResult& result) {
  std::vector<EstimatorSummary> out;
  for (std::size_t e = 0; e < result.labels.size(); ++e) {
    EstimatorSummary s;
    s.label = result.labels[e];
    std::vector<double> ok;
    for (std::size_t i = 0; i < result.values.size(); ++i) {
      if (result.values[i][e]) {
        ok.push_back(*result.values[i][e]);
      } else {
        ++s.n_fail;
        if (result.errors[i][e]) ++s.failures[*result.errors[i][e]];
      }
    }
    s.n_ok = ok.size();
    if (!ok.empty()) {
      double sum = 0.0;
      for (double v : ok) sum += v;
      s.mean = sum / static_cast<double>(ok.size());
    }
    s.mc_sd = sample_sd(ok);
    out.push_back(std::move(s));
  }
  return out;
}

CampaignResult run_campaign(const CampaignSpec& spec) {
  validate(spec);
  std::vector<ReplicationRow> rows(spec.replications);

  unsigned threads = spec.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, spec.replications));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const auto i = next.fetch_add(1);
      if (i >= spec.replications) return;
      try {
        rows[i] = run_one(spec, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = spec.replications;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  CampaignResult result;
  for (const auto& e : spec.estimators) result.labels.push_back(e.label);
  for (auto& row : rows) {
    result.values.push_back(std::move(row.values));
    result.errors.push_back(std::move(row.errors));
    if (spec.bootstrap_reps > 0) result.bootstrap_se.push_back(std::move(row.se));
    result.clamp_events += row.clamp_events;
  }
  result.summary = summarize(result);
  return result;
}

std::vector<std::optional<double>> bootstrap_se_all(const TrialData& data, const std::vector<EstimatorSpec>& specs,
                                                    std::size_t reps, std::uint64_t seed) {
  if (reps < kMinBootstrapReps) {
    throw Error(ErrorKind::InvalidParam, "bootstrap needs at least " + std::to_string(kMinBootstrapReps) +
                                             " resamples, got " + std::to_string(reps));
  }
  if (data.rows() == 0) throw Error(ErrorKind::InvalidParam, "cannot bootstrap an empty dataset");
  std::vector<std::vector<double>> draws(specs.size());
  std::vector<std::size_t> idx(data.rows());
  for (std::size_t b = 0; b < reps; ++b) {
    SplitMix64 g(derive_seed(seed, b, Stream::bootstrap));
    for (auto& i : idx) i = uniform_below(g, data.rows());
    const auto outcomes = evaluate_all(specs, data.select_rows(idx));
    for (std::size_t e = 0; e < specs.size(); ++e) {
      if (outcomes[e].ok()) draws[e].push_back(outcomes[e].estimate->value);
    }
  }
  std::vector<std::optional<double>> out;
  for (const auto& d : draws) {
    const auto failed = reps - d.size();
    if (static_cast<double>(failed) > kMaxResampleFailureShare * static_cast<double>(reps)) {
      out.push_back(std::nullopt);
    } else {
      out.push_back(sample_sd(d));
    }
  }
  return out;
}

double bootstrap_se(const TrialData& data, const EstimatorSpec& spec, std::size_t reps, std::uint64_t seed) {
  const auto se = bootstrap_se_all(data, {spec}, reps, seed);
  if (!se[0]) {
    throw Error(ErrorKind::TooManyResampleFailures,
                "estimator '" + spec.label + "' failed on more than 5% of " + std::to_string(reps) + " resamples");
  }
  return *se[0];
}

std::vector<double> export_distribution(const CampaignResult& result, std::string_view label) {
  const auto e = result.index_of(label);
  std::vector<double> out;
  for (const auto& row : result.values) {
    if (row[e]) out.push_back(*row[e]);
  }
  return out;
}

void write_per_replication_csv(std::ostream& out, const CampaignResult& result, std::uint64_t master_seed) {
  out << "replication,seed";
  for (const auto& l : result.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    out << i << ',' << replication_seed(master_seed, i);
    for (const auto& v : result.values[i]) out << ',' << (v ? format_shortest(*v) : "NA");
    out << '\n';
  }
}

namespace {

std::string json_number(const std::optional<double>& v) { return v ? format_shortest(*v) : "null"; }

std::string json_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

void write_summary_json(std::ostream& out, const CampaignResult& result) {
  out << "{\n  \"estimators\": {\n";
  for (std::size_t e = 0; e < result.summary.size(); ++e) {
    const auto& s = result.summary[e];
    out << "    \"" << json_escape(s.label) << "\": {\"mean\": " << json_number(s.mean)
        << ", \"mc_sd\": " << json_number(s.mc_sd) << ", \"n_ok\": " << s.n_ok << ", \"n_fail\": " << s.n_fail
        << ", \"failures\": {";
    bool first = true;
    for (const auto& [kind, count] : s.failures) {
      out << (first ? "" : ", ") << '"' << to_string(kind) << "\": " << count;
      first = false;
    }
    out << "}}" << (e + 1 < result.summary.size() ? "," : "") << '\n';
  }
  out << "  },\n  \"replications\": " << result.values.size() << ",\n  \"clamp_events\": " << result.clamp_events
      << ",\n  \"note\": \"mean and mc_sd exclude failed replications; n_fail counts them by error kind\"\n}\n";
}

CampaignSpec campaign_from_config(const KeyValueFile& file) {
  auto fail = [&](const KeyValueFile::Entry& e, const std::string& why) {
    throw Error(ErrorKind::InvalidParam, file.source + " line " + std::to_string(e.line) + ": " + why);
  };
  const auto* model = file.find("model");
  if (!model) throw Error(ErrorKind::InvalidParam, file.source + ": missing 'model'");

  CampaignSpec spec;
  Variant variant = Variant::confounded;
  if (const auto* v = file.find("variant")) variant = parse_variant(v->value);
  spec.dgp = default_config(parse_model(model->value), variant);

  for (const auto& e : file.entries) {
    const auto what = file.source + " line " + std::to_string(e.line) + " (" + e.key + ")";
    if (e.key == "model" || e.key == "variant") continue;
    if (e.key == "n") spec.dgp.n = parse_u64(e.value, what);
    else if (e.key == "replications") spec.replications = parse_u64(e.value, what);
    else if (e.key == "master_seed") spec.master_seed = parse_u64(e.value, what);
    else if (e.key == "bootstrap") spec.bootstrap_reps = parse_u64(e.value, what);
    else if (e.key == "threads") spec.threads = static_cast<unsigned>(parse_u64(e.value, what));
    else if (e.key.starts_with("param.")) {
      try {
        spec.dgp.set(e.key.substr(6), parse_double(e.value, what));
      } catch (const Error& err) {
        fail(e, err.what());
      }
    } else if (e.key.starts_with("estimator.")) {
      spec.estimators.push_back(parse_estimator_spec(e.key.substr(10), e.value));
    } else {
      fail(e, "unknown key '" + e.key + "'");
    }
  }
  validate(spec);
  return spec;
}

}  // namespace ivtrial

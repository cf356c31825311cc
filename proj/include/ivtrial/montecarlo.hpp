#pragma once

#include "ivtrial/config.hpp"
#include "ivtrial/dgp.hpp"
#include "ivtrial/registry.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ivtrial {

inline constexpr std::size_t kDefaultBootstrapReps = 500;
inline constexpr std::size_t kMinBootstrapReps = 100;
inline constexpr double kMaxResampleFailureShare = 0.05;

struct CampaignSpec {
  DgpConfig dgp;  // dgp.seed is ignored; replication seeds derive from master_seed
  std::size_t replications = 1;
  std::vector<EstimatorSpec> estimators;
  std::size_t bootstrap_reps = 0;  // 0 disables per-dataset bootstrap SEs
  std::uint64_t master_seed = 1;
  unsigned threads = 1;            // 0: hardware concurrency
};

/// Throws InvalidParam (no replications, no estimators, duplicate labels,
/// bootstrap below the minimum) or UnknownEstimator.
void validate(const CampaignSpec& spec);

struct EstimatorSummary {
  std::string label;
  std::size_t n_ok = 0;
  std::size_t n_fail = 0;
  std::optional<double> mean;
  std::optional<double> mc_sd;  // undefined below two successes
  std::map<ErrorKind, std::size_t> failures;
};

struct CampaignResult {
  std::vector<std::string> labels;
  // [replication][estimator]; empty where the estimator failed
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::vector<std::optional<double>>> bootstrap_se;  // empty unless requested
  std::vector<std::vector<std::optional<ErrorKind>>> errors;
  std::vector<EstimatorSummary> summary;
  std::size_t clamp_events = 0;

  std::size_t index_of(std::string_view label) const;  // throws UnknownEstimator
};

/// Seed of replication i's dataset.
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t replication);

/// Replications run in parallel by index; the result does not depend on the
/// thread count.
CampaignResult run_campaign(const CampaignSpec& spec);

/// Mean and SD (n - 1) of the successful replications, in replication order.
std::vector<EstimatorSummary> summarize(const CampaignResult& result);

/// SD over `reps` resamples of whole records. Failed resamples are dropped;
/// more than 5% failed throws TooManyResampleFailures.
double bootstrap_se(const TrialData& data, const EstimatorSpec& spec, std::size_t reps, std::uint64_t seed);

/// Same, for several estimators over shared resamples. Entry i is empty when
/// estimator i exceeded the failure share.
std::vector<std::optional<double>> bootstrap_se_all(const TrialData& data, const std::vector<EstimatorSpec>& specs,
                                                    std::size_t reps, std::uint64_t seed);

/// Successful per-replication values of one estimator, in replication order.
std::vector<double> export_distribution(const CampaignResult& result, std::string_view label);

/// Wide CSV: replication, seed, then one column per estimator (NA on failure).
void write_per_replication_csv(std::ostream& out, const CampaignResult& result, std::uint64_t master_seed);

/// {"estimators": {label: {mean, mc_sd, n_ok, n_fail, failures}}, "note": ...}
void write_summary_json(std::ostream& out, const CampaignResult& result);

/// Campaign from a key-value file: model, variant, n, replications,
/// master_seed, bootstrap, threads, param.<name>, estimator.<label>.
CampaignSpec campaign_from_config(const KeyValueFile& file);

/// Fixed six-decimal rendering used by every report.
std::string format_fixed6(double value);

}  // namespace ivtrial

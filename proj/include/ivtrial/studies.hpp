#pragma once

#include "ivtrial/montecarlo.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ivtrial {

/// A published Monte Carlo mean (and SD where one exists) for one estimator.
struct StudyTarget {
  std::string label;
  double mean = 0.0;
  double mean_tolerance = 0.0;
  std::optional<double> sd;
  double sd_relative_tolerance = 0.30;
  std::string note;
};

/// SD(numerator) / SD(denominator) across replications.
struct SdRatioTarget {
  std::string numerator;
  std::string denominator;
  double ratio = 0.0;
  double tolerance = 0.0;
};

struct Study {
  std::string name;
  std::string description;
  std::string config_text;  // the shipped configs/<name>.conf
  CampaignSpec campaign;
  std::vector<StudyTarget> targets;
  std::vector<SdRatioTarget> ratios;
};

const std::vector<std::string>& study_names();
/// Throws InvalidParam for an unknown name.
Study load_study(std::string_view name);

inline constexpr std::size_t kMinComparisonReps = 200;

struct ComparisonRow {
  std::string quantity;   // estimator label, or "a/b" for ratios
  std::string statistic;  // mean | mc_sd | sd_ratio
  double published = 0.0;
  std::optional<double> replicated;
  double tolerance = 0.0;  // absolute
  std::string status;      // PASS | FAIL | INSUFFICIENT_REPS
  std::string note;
};

std::vector<ComparisonRow> compare(const Study& study, const CampaignResult& result,
                                   std::size_t min_reps = kMinComparisonReps);

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

}  // namespace ivtrial

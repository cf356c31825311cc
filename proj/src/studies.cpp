#include "ivtrial/studies.hpp"

#include "ivtrial/study_configs.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ivtrial {

const std::vector<std::string>& study_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : kStudyConfigs) out.emplace_back(entry.name);
    return out;
  }();
  return names;
}

namespace {

const char* const kCalibrationNote = "depends on calibrated alpha_x/alpha_u (no published values)";

void add_targets(Study& s) {
  if (s.name == "section_5_4") {
    s.description = "pain trial, homogeneity violated (psi_t=-20, psi_at=-10)";
    s.targets = {
        {"iv_ratio", -20.9, 0.5, std::nullopt, 0.3, ""},
        {"psi_t", -20.0, 0.5, std::nullopt, 0.3, ""},
        {"psi_at", -10.0, 0.7, std::nullopt, 0.3, ""},
        {"complier_fraction", 0.58, 0.02, std::nullopt, 0.3, ""},
    };
  } else if (s.name == "section_5_4_1") {
    s.description = "pain trial, psi_at=psi_t=-20, u-adjusted as-treated vs iv ratio efficiency";
    s.targets = {
        {"iv_ratio", -20.0, 0.3, 1.36, 0.3, ""},
        {"as_treated", -20.0, 0.3, 0.82, 0.3, "adjusted for u"},
    };
    s.ratios = {{"as_treated", "iv_ratio", 0.60, 0.10}};
  } else if (s.name == "setting_1") {
    s.description = "biomarker response, logistic AMEs adjusted for x";
    s.targets = {
        {"policy", -0.085, 0.03, 0.044, 0.3, kCalibrationNote},
        {"policy_s_plus_minus", -0.250, 0.03, 0.130, 0.3, kCalibrationNote},
        {"responder", -0.059, 0.03, 0.045, 0.3, kCalibrationNote},
        {"policy_s_plus_star", -0.130, 0.02, 0.065, 0.3, ""},
        {"hypothetical_s_plus_star", -0.150, 0.02, 0.078, 0.3, ""},
    };
  } else if (s.name == "setting_2") {
    s.description = "general non-adherence, x-adjusted";
    s.targets = {
        {"policy", -0.37, 0.02, 0.047, 0.3, ""},
        {"policy_s_plus_plus", -0.32, 0.02, 0.038, 0.3, ""},
        {"policy_s_plus_star", -0.39, 0.02, 0.051, 0.3, ""},
        {"per_protocol", -0.26, 0.02, 0.045, 0.3, ""},
        {"alpha_a", -0.40, 0.03, 0.071, 0.3, ""},
    };
  }
}

}  // namespace

Study load_study(std::string_view name) {
  const auto it = std::find_if(std::begin(kStudyConfigs), std::end(kStudyConfigs),
                               [&](const StudyConfigText& e) { return e.name == name; });
  if (it == std::end(kStudyConfigs)) {
    std::string known;
    for (const auto& n : study_names()) known += (known.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::InvalidParam, "unknown study '" + std::string(name) + "' (known: " + known + ")");
  }
  Study s;
  s.name = std::string(name);
  s.config_text = std::string(it->text);
  s.campaign = campaign_from_config(parse_key_values(s.config_text, "configs/" + s.name + ".conf"));
  add_targets(s);
  return s;
}

std::vector<ComparisonRow> compare(const Study& study, const CampaignResult& result, std::size_t min_reps) {
  const bool enough = result.values.size() >= min_reps;
  auto judge = [&](ComparisonRow& row) {
    if (!enough) row.status = "INSUFFICIENT_REPS";
    else if (row.replicated && std::abs(*row.replicated - row.published) <= row.tolerance) row.status = "PASS";
    else row.status = "FAIL";
  };
  std::vector<ComparisonRow> rows;
  for (const auto& t : study.targets) {
    const auto& s = result.summary.at(result.index_of(t.label));
    ComparisonRow mean{t.label, "mean", t.mean, s.mean, t.mean_tolerance, "", t.note};
    judge(mean);
    rows.push_back(std::move(mean));
    if (t.sd) {
      ComparisonRow sd{t.label, "mc_sd", *t.sd, s.mc_sd, *t.sd * t.sd_relative_tolerance, "", t.note};
      judge(sd);
      rows.push_back(std::move(sd));
    }
  }
  for (const auto& r : study.ratios) {
    const auto& num = result.summary.at(result.index_of(r.numerator));
    const auto& den = result.summary.at(result.index_of(r.denominator));
    std::optional<double> value;
    if (num.mc_sd && den.mc_sd && *den.mc_sd > 0.0) value = *num.mc_sd / *den.mc_sd;
    ComparisonRow row{r.numerator + "/" + r.denominator, "sd_ratio", r.ratio, value, r.tolerance, "", ""};
    judge(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "quantity,statistic,published,replicated,tolerance,status,note\n";
  for (const auto& r : rows) {
    out << r.quantity << ',' << r.statistic << ',' << format_shortest(r.published) << ','
        << (r.replicated ? format_fixed6(*r.replicated) : "NA") << ',' << format_shortest(r.tolerance) << ','
        << r.status << ',' << (r.note.empty() ? "" : "\"" + r.note + "\"") << '\n';
  }
}

}  // namespace ivtrial

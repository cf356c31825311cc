#include "ivtrial/cli.hpp"

#include "ivtrial/config.hpp"
#include "ivtrial/dag.hpp"
#include "ivtrial/dgp.hpp"
#include "ivtrial/estimators.hpp"
#include "ivtrial/montecarlo.hpp"
#include "ivtrial/registry.hpp"
#include "ivtrial/studies.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef IVTRIAL_VERSION
#define IVTRIAL_VERSION "0.0.0"
#endif

namespace ivtrial {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParam:
    case ErrorKind::UnknownEstimator:
      return kExitUsage;
    case ErrorKind::ParseError:
    case ErrorKind::MissingColumn:
    case ErrorKind::IoError:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InvalidGraph:
    case ErrorKind::UnknownNode:
      return kExitData;
    default:
      return kExitNumerical;
  }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) noexcept {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string json_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

/// Writes to `path`, or to `out` when path is empty or "-".
template <class Write>
void emit(const std::string& path, std::ostream& out, Write write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing (--out)");
  write(file);
  if (!file) throw Error(ErrorKind::IoError, "write to '" + path + "' failed (--out)");
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string model;
  std::string variant;
  std::string config;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
  bool emit_latent = false;
  std::vector<std::string> overrides;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  DgpConfig config;
  std::vector<std::pair<std::string, double>> params;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::string model = a.model, variant = a.variant;

  if (!a.config.empty()) {
    const auto file = load_key_values(a.config);
    for (const auto& e : file.entries) {
      const auto what = a.config + " line " + std::to_string(e.line) + " (" + e.key + ")";
      if (e.key == "model") { if (model.empty()) model = e.value; }
      else if (e.key == "variant") { if (variant.empty()) variant = e.value; }
      else if (e.key == "n") n = parse_u64(e.value, what);
      else if (e.key == "seed") seed = parse_u64(e.value, what);
      else if (e.key.starts_with("param.")) params.emplace_back(e.key.substr(6), parse_double(e.value, what));
      else throw Error(ErrorKind::InvalidParam, what + ": unknown key for simulate");
    }
  }
  if (model.empty()) throw Error(ErrorKind::InvalidParam, "--model is required (or 'model' in --config)");
  config = default_config(parse_model(model), variant.empty() ? Variant::confounded : parse_variant(variant));
  config.n = a.n ? a.n : n.value_or(1000);
  config.seed = a.seed_set ? a.seed : seed.value_or(1);
  for (const auto& [k, v] : params) config.set(k, v);
  for (const auto& o : a.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidParam, "--set expects name=value, got '" + o + "'");
    config.set(o.substr(0, eq), parse_double(o.substr(eq + 1), "--set " + o.substr(0, eq)));
  }

  const auto generated = generate(config);
  const auto data = a.emit_latent ? generated.data : generated.observed();
  emit(a.out, out, [&](std::ostream& s) { write_csv(s, data); });
  if (!a.out.empty() && a.out != "-") {
    out << "wrote " << data.rows() << " rows (" << to_string(config.model) << ", seed " << config.seed << ") to "
        << a.out << "; clamp events: " << generated.clamp_events << '\n';
  }
  return kExitOk;
}

// ---- estimate ---------------------------------------------------------------

struct EstimateArgs {
  std::string data;
  std::string estimators = "policy,complier_fraction,iv_ratio";
  std::string r_col = "r", t_col = "t", y_col = "y", a_col;
  std::string covariates;
  std::string interaction = "s";
  std::string link = "linear";
  std::size_t bootstrap = 0;
  std::uint64_t seed = 1;
  std::string out;
};

bool uses_exposure(const EstimatorSpec& s) { return s.kind != "policy"; }

void check_binary_column(const TrialData& data, const std::string& name, const std::string& flag) {
  const auto col = data.column(name);
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col[i] != 0.0 && col[i] != 1.0) {
      throw Error(ErrorKind::ParseError, "column '" + name + "' (" + flag + "), data row " + std::to_string(i + 1) +
                                             " (line " + std::to_string(i + 2) + "): expected 0/1, got " +
                                             format_shortest(col[i]));
    }
  }
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const auto bytes = read_file(a.data);
  std::istringstream in(bytes);
  const auto data = read_csv(in, a.data);

  const auto covariates = split_commas(a.covariates);
  const Link link = parse_link(a.link);
  std::vector<EstimatorSpec> specs;
  for (const auto& name : split_commas(a.estimators)) {
    auto base = parse_estimator_spec(name, name);
    base.roles = {a.r_col, a.t_col, a.y_col};
    if (!a.a_col.empty() && (base.kind == "adherence" || base.kind == "per_protocol")) base.roles.exposure = a.a_col;
    base.adjust = {covariates, link};
    base.interaction = a.interaction;
    for (auto& s : expand_parts(base)) specs.push_back(std::move(s));
  }
  if (specs.empty()) throw Error(ErrorKind::InvalidParam, "--estimators lists nothing");

  // every column a requested estimator needs, with the flag that names it
  std::vector<std::pair<std::string, std::string>> needed{{a.r_col, "--r-col"}, {a.y_col, "--y-col"}};
  for (const auto& s : specs) {
    if (uses_exposure(s)) needed.emplace_back(s.roles.exposure, s.roles.exposure == a.a_col ? "--a-col" : "--t-col");
    if (s.kind == "extended_tsls" || s.kind == "adherence") needed.emplace_back(s.interaction, "--interaction");
  }
  for (const auto& c : covariates) needed.emplace_back(c, "--covariates");
  for (const auto& [col, flag] : needed) {
    if (!data.has(col)) throw Error(ErrorKind::MissingColumn, "column '" + col + "' (" + flag + ") not in " + a.data);
  }
  check_binary_column(data, a.r_col, "--r-col");
  for (const auto& s : specs) {
    if (uses_exposure(s)) check_binary_column(data, s.roles.exposure, s.roles.exposure == a.a_col ? "--a-col" : "--t-col");
  }

  const auto outcomes = evaluate_all(specs, data);
  std::vector<std::optional<double>> se(specs.size());
  std::vector<bool> se_failed(specs.size(), false);
  if (a.bootstrap > 0) {
    se = bootstrap_se_all(data, specs, a.bootstrap, a.seed);
    for (std::size_t i = 0; i < specs.size(); ++i) se_failed[i] = outcomes[i].ok() && !se[i];
  }

  std::string canonical = "estimate\n";
  for (const auto& s : specs) canonical += s.label + "=" + s.computation_key() + "\n";
  canonical += "bootstrap=" + std::to_string(a.bootstrap) + "\nseed=" + std::to_string(a.seed) + "\n";
  const auto hash = fnv1a64(bytes, fnv1a64(canonical));

  std::ostringstream json;
  json << "{\n  \"estimates\": {\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& o = outcomes[i];
    const auto stamped = o.ok() ? o.estimate->assumptions : documented_assumptions(specs[i]);
    json << "    " << json_string(specs[i].label) << ": {\n";
    json << "      \"estimand\": "
         << (o.ok() ? json_string(to_string(o.estimate->estimand)) : std::string("null")) << ",\n";
    json << "      \"estimate\": " << (o.ok() ? format_fixed6(o.estimate->value) : "null") << ",\n";
    json << "      \"se\": " << (se[i] && o.ok() ? format_fixed6(*se[i]) : "null") << ",\n";
    json << "      \"assumptions\": [";
    for (std::size_t k = 0; k < stamped.size(); ++k) json << (k ? ", " : "") << json_string(to_string(stamped[k]));
    json << "],\n";
    json << "      \"n\": " << (o.ok() ? o.estimate->n : data.rows()) << ",\n";
    json << "      \"warnings\": [";
    std::vector<std::string> warnings;
    if (!o.ok()) warnings.push_back(o.message);
    if (se_failed[i]) {
      warnings.push_back(std::string(to_string(ErrorKind::TooManyResampleFailures)) +
                         ": more than 5% of bootstrap resamples failed");
    }
    for (std::size_t k = 0; k < warnings.size(); ++k) json << (k ? ", " : "") << json_string(warnings[k]);
    json << "]\n    }" << (i + 1 < specs.size() ? "," : "") << '\n';
  }
  json << "  },\n  \"provenance\": {\n";
  json << "    \"command\": \"estimate\",\n";
  json << "    \"config_hash\": \"fnv1a64:" << hex64(hash) << "\",\n";
  json << "    \"seed\": " << a.seed << ",\n";
  json << "    \"version\": \"" << IVTRIAL_VERSION << "\"\n  }\n}\n";
  emit(a.out, out, [&](std::ostream& s) { s << json.str(); });
  return kExitOk;
}

// ---- replicate --------------------------------------------------------------

struct ReplicateArgs {
  std::string study;
  std::string config;
  std::size_t reps = 0;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  bool threads_set = false;
  std::size_t bootstrap = 0;
  bool bootstrap_set = false;
};

int cmd_replicate(const ReplicateArgs& a, std::ostream& out) {
  std::optional<Study> study;
  CampaignSpec spec;
  if (!a.study.empty() && !a.config.empty()) {
    throw Error(ErrorKind::InvalidParam, "give either --study or --config, not both");
  }
  if (!a.study.empty()) {
    study = load_study(a.study);
    spec = study->campaign;
  } else if (!a.config.empty()) {
    spec = campaign_from_config(load_key_values(a.config));
  } else {
    throw Error(ErrorKind::InvalidParam, "--study or --config is required");
  }
  if (a.reps) spec.replications = a.reps;
  if (a.seed_set) spec.master_seed = a.seed;
  if (a.threads_set) spec.threads = a.threads;
  if (a.bootstrap_set) spec.bootstrap_reps = a.bootstrap;

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create --out directory '" + a.out + "': " + ec.message());
  const std::filesystem::path dir(a.out);

  const auto result = run_campaign(spec);
  emit((dir / "per_replication.csv").string(), out,
       [&](std::ostream& s) { write_per_replication_csv(s, result, spec.master_seed); });
  emit((dir / "summary.json").string(), out, [&](std::ostream& s) { write_summary_json(s, result); });

  out << (study ? study->name : a.config) << ": " << spec.replications << " replications, n=" << spec.dgp.n
      << ", master seed " << spec.master_seed << "\n";
  for (const auto& s : result.summary) {
    out << "  " << s.label << ": mean " << (s.mean ? format_fixed6(*s.mean) : "NA") << ", mc_sd "
        << (s.mc_sd ? format_fixed6(*s.mc_sd) : "NA") << ", failed " << s.n_fail << '\n';
  }
  if (study) {
    const auto rows = compare(*study, result);
    emit((dir / "comparison.csv").string(), out, [&](std::ostream& s) { write_comparison_csv(s, rows); });
    out << "comparison with published values:\n";
    for (const auto& r : rows) {
      out << "  " << r.quantity << ' ' << r.statistic << ": published " << format_shortest(r.published)
          << ", replicated " << (r.replicated ? format_fixed6(*r.replicated) : "NA") << ", tolerance "
          << format_fixed6(r.tolerance) << " -> " << r.status << '\n';
    }
  }
  out << "wrote " << a.out << '\n';
  return kExitOk;
}

// ---- sensitivity ------------------------------------------------------------

struct SensitivityArgs {
  std::string data;
  std::string dace_range = "-30:0";
  std::string pi_d_range = "0:0.1";
  std::size_t steps = 11;
  std::string r_col = "r", t_col = "t", y_col = "y";
  std::string out;
};

std::vector<double> parse_range(const std::string& text, std::size_t steps, const std::string& flag) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorKind::InvalidParam, flag + " expects lo:hi, got '" + text + "'");
  const double lo = parse_double(text.substr(0, colon), flag);
  const double hi = parse_double(text.substr(colon + 1), flag);
  if (hi < lo) throw Error(ErrorKind::InvalidParam, flag + ": upper end below lower end");
  if (steps == 0) throw Error(ErrorKind::InvalidParam, "--steps must be at least 1");
  std::vector<double> out;
  for (std::size_t k = 0; k < steps; ++k) {
    out.push_back(steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1));
  }
  return out;
}

int cmd_sensitivity(const SensitivityArgs& a, std::ostream& out) {
  const auto data = read_csv_file(a.data);
  for (const auto& [col, flag] : {std::pair{a.r_col, "--r-col"}, {a.t_col, "--t-col"}, {a.y_col, "--y-col"}}) {
    if (!data.has(col)) throw Error(ErrorKind::MissingColumn, "column '" + col + "' (" + flag + ") not in " + a.data);
  }
  check_binary_column(data, a.r_col, "--r-col");
  check_binary_column(data, a.t_col, "--t-col");
  const Roles roles{a.r_col, a.t_col, a.y_col};
  const double iv = iv_ratio(data, roles).cace.value;
  const auto profile = compliance_profile(data, roles, false);
  const auto grid = defier_sensitivity(profile, iv, parse_range(a.dace_range, a.steps, "--dace-range"),
                                       parse_range(a.pi_d_range, a.steps, "--pi-d-range"));
  emit(a.out, out, [&](std::ostream& s) {
    s << "dace,pi_d,implied_cace,defined\n";
    for (std::size_t i = 0; i < grid.dace_values.size(); ++i) {
      for (std::size_t j = 0; j < grid.pi_d_values.size(); ++j) {
        s << format_shortest(grid.dace_values[i]) << ',' << format_shortest(grid.pi_d_values[j]) << ','
          << (grid.defined[i][j] ? format_shortest(grid.implied_cace[i][j]) : "NA") << ','
          << (grid.defined[i][j] ? 1 : 0) << '\n';
      }
    }
  });
  return kExitOk;
}

// ---- check-iv ---------------------------------------------------------------

struct CheckIvArgs {
  std::string dag;
  std::string instrument = "R", treatment = "T", outcome = "Y";
  std::string confounders = "U";
};

int cmd_check_iv(const CheckIvArgs& a, std::ostream& out) {
  const auto g = load_dag(a.dag);
  const auto confounders = split_commas(a.confounders);
  const auto report = check_iv(g, a.instrument, a.treatment, a.outcome, confounders);

  out << "nodes:";
  for (const auto& n : g.nodes()) out << ' ' << n.name << (n.latent ? "(latent)" : "");
  out << "\nedges:";
  for (const auto& e : g.edges()) out << ' ' << e.from << "->" << e.to;
  out << "\ninstrument " << a.instrument << ", treatment " << a.treatment << ", outcome " << a.outcome
      << ", confounders {";
  for (std::size_t i = 0; i < confounders.size(); ++i) out << (i ? ", " : "") << confounders[i];
  out << "}\n";

  auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  out << "IV1 relevance: " << verdict(report.iv1);
  if (report.relevance_path) {
    out << "  directed path ";
    for (std::size_t i = 0; i < report.relevance_path->size(); ++i) out << (i ? " -> " : "") << (*report.relevance_path)[i];
  } else {
    out << "  no directed path " << a.instrument << " -> " << a.treatment;
  }
  out << '\n';
  auto witnesses = [&](const std::vector<PathVerdict>& paths) {
    for (const auto& p : paths) {
      out << "  open path " << to_string(p);
      if (!p.rules.empty()) {
        out << "  [";
        for (std::size_t k = 0; k < p.rules.size(); ++k) {
          out << (k ? ", " : "") << to_string(p.rules[k]) << " at " << p.nodes[k + 1];
        }
        out << ']';
      }
      out << '\n';
    }
  };
  out << "IV2 randomization: " << verdict(report.iv2) << '\n';
  witnesses(report.iv2_open_paths);
  out << "IV3 exclusion restriction: " << verdict(report.iv3) << '\n';
  witnesses(report.iv3_open_paths);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instrumental-variable estimands for randomized trials", "ivtrial"};
  app.set_version_flag("--version", IVTRIAL_VERSION);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a dataset from one of the trial models");
  simulate->add_option("--model", sim.model, "pain_trial_a | biomarker_b | adherence_c (or A | B | C)");
  simulate->add_option("--variant", sim.variant, "confounded | randomized_compliance (pain_trial_a only)");
  simulate->add_option("--n", sim.n, "Number of subjects (default 1000)");
  simulate->add_option("--seed", sim.seed, "Dataset seed (default 1)")->each([&](const std::string&) { sim.seed_set = true; });
  simulate->add_option("--out", sim.out, "Output CSV path (stdout if omitted)");
  simulate->add_flag("--emit-latent", sim.emit_latent, "Also write latent columns (u, and z for adherence_c)");
  simulate->add_option("--set", sim.overrides, "Parameter override name=value (repeatable)");
  simulate->add_option("--config", sim.config, "Key-value file: model, variant, n, seed, param.<name>");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate estimands from a CSV dataset");
  estimate->add_option("--data", est.data, "Input CSV")->required();
  estimate->add_option("--estimators", est.estimators, "Comma-separated estimator kinds, optionally kind.part");
  estimate->add_option("--r-col", est.r_col, "Randomized arm column");
  estimate->add_option("--t-col", est.t_col, "Treatment received / intercurrent event column");
  estimate->add_option("--y-col", est.y_col, "Outcome column");
  estimate->add_option("--a-col", est.a_col, "Adherence column (adherence and per_protocol estimators)");
  estimate->add_option("--covariates", est.covariates, "Comma-separated adjustment covariates");
  estimate->add_option("--interaction", est.interaction, "Covariate interacted with the arm in two-parameter models");
  estimate->add_option("--link", est.link, "linear | logistic");
  estimate->add_option("--bootstrap", est.bootstrap, "Bootstrap resamples for standard errors (0: none, else >= 100)");
  estimate->add_option("--seed", est.seed, "Bootstrap seed");
  estimate->add_option("--out", est.out, "Report path (stdout if omitted)");

  ReplicateArgs rep;
  auto* replicate = app.add_subcommand("replicate", "Run a simulation study and compare with published values");
  replicate->add_option("--study", rep.study, "section_5_4 | section_5_4_1 | setting_1 | setting_2");
  replicate->add_option("--config", rep.config, "Campaign key-value file instead of a built-in study");
  replicate->add_option("--reps", rep.reps, "Replications (default from the study)");
  replicate->add_option("--out", rep.out, "Output directory")->required();
  replicate->add_option("--seed", rep.seed, "Master seed")->each([&](const std::string&) { rep.seed_set = true; });
  replicate->add_option("--threads", rep.threads, "Worker threads (0: all cores)")->each([&](const std::string&) {
    rep.threads_set = true;
  });
  replicate->add_option("--bootstrap", rep.bootstrap, "Per-dataset bootstrap resamples")->each([&](const std::string&) {
    rep.bootstrap_set = true;
  });

  SensitivityArgs sens;
  auto* sensitivity = app.add_subcommand("sensitivity", "Implied CACE over a (DACE, defier share) grid");
  sensitivity->add_option("--data", sens.data, "Input CSV")->required();
  sensitivity->add_option("--dace-range", sens.dace_range, "lo:hi for the defier effect");
  sensitivity->add_option("--pi-d-range", sens.pi_d_range, "lo:hi for the defier share");
  sensitivity->add_option("--steps", sens.steps, "Grid points per axis");
  sensitivity->add_option("--r-col", sens.r_col, "Randomized arm column");
  sensitivity->add_option("--t-col", sens.t_col, "Treatment received column");
  sensitivity->add_option("--y-col", sens.y_col, "Outcome column");
  sensitivity->add_option("--out", sens.out, "Grid CSV path (stdout if omitted)");

  CheckIvArgs civ;
  auto* check = app.add_subcommand("check-iv", "Check IV1-IV3 on a DAG file");
  check->add_option("--dag", civ.dag, "DAG file")->required();
  check->add_option("--instrument", civ.instrument, "Instrument node");
  check->add_option("--treatment", civ.treatment, "Treatment node");
  check->add_option("--outcome", civ.outcome, "Outcome node");
  check->add_option("--confounders", civ.confounders, "Comma-separated confounder nodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*estimate) return cmd_estimate(est, out);
    if (*replicate) return cmd_replicate(rep, out);
    if (*sensitivity) return cmd_sensitivity(sens, out);
    if (*check) return cmd_check_iv(civ, out);
  } catch (const Error& e) {
    err << "ivtrial: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "ivtrial: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace ivtrial

#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "biaslens/audit.hpp"
#include "biaslens/error.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/report.hpp"

namespace biaslens::cli {
namespace {

struct SharedOptions {
  std::int64_t cutoff = 10;
  std::string feature = "gender";
  std::vector<std::string> values{"female", "male"};
  std::string unknown_token = "unknown";
  bool strict = false;
  std::uint64_t seed = kDefaultSeed;
  std::string format = "json";
  std::string out = "biaslens-out";
  unsigned jobs = 1;
};

void add_shared(CLI::App& cmd, SharedOptions& o) {
  cmd.add_option("--config", "Flat key=value file; flags override it");
  cmd.add_option("--cutoff", o.cutoff, "Cutoff n of the evaluated window")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--feature", o.feature, "Feature name")->capture_default_str();
  cmd.add_option("--values", o.values, "Comma-separated feature values")
      ->delimiter(',')
      ->capture_default_str();
  cmd.add_option("--unknown-token", o.unknown_token,
                 "Label value that marks an unknown")
      ->capture_default_str();
  cmd.add_flag("--strict", o.strict,
               "Fail on unlabelled entities in the window");
  cmd.add_option("--seed", o.seed, "Seed for jitter and simulation")
      ->envname("BIASLENS_SEED")
      ->capture_default_str();
  cmd.add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  cmd.add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd.add_option("--jobs", o.jobs, "Topics evaluated concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r");
  std::string out = text.substr(first, last - first + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

bool given_on_command_line(const std::vector<std::string>& args,
                           const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Appends settings from `--config FILE` (flat "key = value" lines, '#'
// comments, repeated keys for repeatable options) for every option not
// already given as a flag.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(path, 0, "file", "cannot open for reading", ErrorCode::kIo);
  }
  std::vector<std::string> expanded = args;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#' || stripped.front() == ';') {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path, line_no, stripped, "expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const std::string flag = "--" + key;
    if (key.empty() || key == "config") {
      throw ParseError(path, line_no, key, "invalid key");
    }
    if (given_on_command_line(args, flag)) continue;
    if (key == "strict" || key == "keep-iris") {
      if (value == "true" || value == "1") expanded.push_back(flag);
      continue;
    }
    expanded.push_back(flag);
    expanded.push_back(value);
  }
  return expanded;
}

ReportFormat format_of(const std::string& text) {
  return text == "csv" ? ReportFormat::kCsv : ReportFormat::kJson;
}

void print_summary(const Report& report, std::ostream& out) {
  std::map<std::string, std::int64_t> topics;
  for (const auto& r : report.records) {
    if (r.value == report.meta.values.front()) ++topics[r.source];
  }
  out << "cutoff " << report.meta.cutoff << ", feature "
      << report.meta.feature << ", seed " << report.meta.seed << "\n";
  for (const auto& [source, n] : topics) {
    out << "  source " << source << ": " << n << " topics\n";
  }
  out << std::left << std::setw(16) << "source" << std::setw(12) << "value"
      << std::right << std::setw(8) << "MB" << std::setw(8) << "SB"
      << std::setw(8) << "MAB" << std::setw(8) << "min" << std::setw(8)
      << "max" << "\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& s : report.summaries) {
    out << std::left << std::setw(16) << s.source << std::setw(12) << s.value
        << std::right << std::setw(8) << s.mb << std::setw(8) << s.sb
        << std::setw(8) << s.mab << std::setw(8) << s.min_bias.value()
        << std::setw(8) << s.max_bias.value() << "\n";
  }
  out << std::defaultfloat;
  if (!report.skipped.empty()) {
    std::map<std::string, std::int64_t> reasons;
    for (const auto& s : report.skipped) ++reasons[s.reason];
    out << "skipped:";
    for (const auto& [reason, n] : reasons) out << " " << reason << "=" << n;
    out << "\n";
  }
}

std::vector<SourceFile> source_files(const std::vector<std::string>& specs) {
  std::vector<SourceFile> files;
  for (const auto& s : specs) files.push_back(parse_source_file(s));
  return files;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Representation bias audit of ranked search results",
               "biaslens"};
  app.require_subcommand(1);

  SharedOptions eval_shared;
  std::string runs_path;
  std::vector<std::string> label_paths;
  std::vector<std::string> target_specs;
  std::vector<std::string> member_specs;
  std::vector<std::string> sparql_specs;
  std::vector<std::string> value_map_specs;
  SparqlConfig sparql;
  bool keep_iris = false;
  std::string sd = "sample";
  std::int64_t table_k = 11;
  std::int64_t buckets = 10;

  auto* evaluate = app.add_subcommand(
      "evaluate", "Measure bias of every joinable topic and write a report");
  add_shared(*evaluate, eval_shared);
  evaluate->add_option("--runs", runs_path, "Ranked runs TSV")->required();
  evaluate->add_option("--labels", label_paths, "Label catalog TSV (repeatable)");
  evaluate->add_option("--target", target_specs,
                       "LABEL=FILE pre-aggregated target counts (repeatable)");
  evaluate->add_option("--members", member_specs,
                       "LABEL=FILE topic membership TSV (repeatable)");
  evaluate->add_option("--sparql", sparql_specs,
                       "LABEL=FILE SPARQL results export (repeatable)");
  evaluate->add_option("--topic-var", sparql.topic_var, "SPARQL topic variable")
      ->capture_default_str();
  evaluate->add_option("--entity-var", sparql.entity_var,
                       "SPARQL entity variable")
      ->capture_default_str();
  evaluate->add_option("--value-var", sparql.value_var, "SPARQL value variable")
      ->capture_default_str();
  evaluate->add_option("--value-map", value_map_specs,
                       "RAW=VALUE mapping for SPARQL values (repeatable)");
  evaluate->add_flag("--keep-iris", keep_iris,
                     "Keep full IRIs instead of their terminal segment");
  evaluate->add_option("--sd", sd, "Standard deviation divisor")
      ->check(CLI::IsMember({"sample", "population"}))
      ->capture_default_str();
  evaluate->add_option("--k", table_k, "Rows per ranked bias table")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--buckets", buckets,
                       "Target-ratio buckets for unbiased exemplars")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SharedOptions sim_shared;
  std::string spec_path;
  std::string sim_value;
  auto* simulate = app.add_subcommand(
      "simulate", "Write a synthetic runs/labels/targets corpus");
  add_shared(*simulate, sim_shared);
  simulate
      ->add_option("--spec", spec_path,
                   "TSV rows: topic_id, target_ratio, bias, window")
      ->required();
  simulate->add_option("--value", sim_value,
                       "Feature value the bias refers to (default: first)");

  SharedOptions rep_shared;
  std::string report_path;
  std::int64_t rep_k = 11;
  std::int64_t rep_buckets = 10;
  auto* report_cmd = app.add_subcommand(
      "report", "Re-derive tables and bundles from a stored report.json");
  add_shared(*report_cmd, rep_shared);
  report_cmd->add_option("--report", report_path, "report.json to read")
      ->required();
  auto* rep_k_opt = report_cmd->add_option("--k", rep_k, "Rows per ranked table")
                        ->check(CLI::PositiveNumber);
  auto* rep_buckets_opt =
      report_cmd->add_option("--buckets", rep_buckets, "Exemplar buckets")
          ->check(CLI::PositiveNumber);

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return kInputError;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_name() == "RequiredError" && !app.get_subcommands().empty()) {
      err << app.get_subcommands().front()->help();
    }
    return kInputError;
  }

  try {
    if (evaluate->parsed()) {
      AuditConfig config;
      config.cutoff = eval_shared.cutoff;
      config.scheme = FeatureScheme(eval_shared.feature, eval_shared.values,
                                    eval_shared.unknown_token);
      config.runs = runs_path;
      config.labels.assign(label_paths.begin(), label_paths.end());
      config.targets = source_files(target_specs);
      config.members = source_files(member_specs);
      config.sparql = source_files(sparql_specs);
      config.sparql_config = sparql;
      config.sparql_config.shorten_iris = !keep_iris;
      for (const auto& spec : value_map_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos) {
          throw Error(ErrorCode::kInvalidArgument,
                      "expected RAW=VALUE, got '" + spec + "'");
        }
        config.sparql_config.value_map[spec.substr(0, eq)] = spec.substr(eq + 1);
      }
      config.strict = eval_shared.strict;
      config.seed = eval_shared.seed;
      config.sd_mode = sd == "population" ? SdMode::kPopulation : SdMode::kSample;
      config.table_k = table_k;
      config.buckets = buckets;
      config.jobs = eval_shared.jobs;

      Report report = run_evaluate(config);
      auto written =
          write_report(report, format_of(eval_shared.format), eval_shared.out);
      print_summary(report, out);
      for (const auto& path : written) out << "wrote " << path.string() << "\n";
      return kOk;
    }

    if (simulate->parsed()) {
      FeatureScheme scheme(sim_shared.feature, sim_shared.values,
                           sim_shared.unknown_token);
      const std::string value =
          sim_value.empty() ? scheme.values().front() : sim_value;
      std::ifstream in(spec_path, std::ios::binary);
      if (!in) {
        throw ParseError(spec_path, 0, "file", "cannot open for reading",
                         ErrorCode::kIo);
      }
      auto rows = parse_simulation_spec(in, spec_path);
      auto corpus = simulate_corpus(scheme, value, rows, sim_shared.seed,
                                    spec_path);
      auto written = write_corpus(corpus, scheme, sim_shared.out);
      out << "simulated " << rows.size() << " topics for value '" << value
          << "'\n";
      for (const auto& path : written) out << "wrote " << path.string() << "\n";
      return kOk;
    }

    if (report_cmd->parsed()) {
      std::ifstream in(report_path, std::ios::binary);
      if (!in) {
        throw ParseError(report_path, 0, "file", "cannot open for reading",
                         ErrorCode::kIo);
      }
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(report_path, 1, "json", e.what());
      }
      Report stored = report_from_json(doc);
      const std::uint64_t seed = report_cmd->get_option("--seed")->count() > 0
                                     ? rep_shared.seed
                                     : stored.meta.seed;
      Report derived = rederive_report(
          stored, rep_k_opt->count() > 0 ? rep_k : stored.meta.table_k,
          rep_buckets_opt->count() > 0 ? rep_buckets : stored.meta.buckets,
          seed);
      auto written =
          write_report(derived, format_of(rep_shared.format), rep_shared.out);
      for (const auto& section : derived.sections) {
        out << section.source << "/" << section.value << ": "
            << section.tables.towards.size() << " towards"
            << (section.tables.towards_truncated ? " (truncated)" : "") << ", "
            << section.tables.against.size() << " against"
            << (section.tables.against_truncated ? " (truncated)" : "")
            << "\n";
      }
      for (const auto& path : written) out << "wrote " << path.string() << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return e.is_strict_violation() ? kStrictViolation : kInputError;
  }
  return kInputError;
}

}  // namespace biaslens::cli

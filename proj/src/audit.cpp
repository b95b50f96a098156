#include "biaslens/audit.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "biaslens/error.hpp"
#include "biaslens/metrics.hpp"

namespace biaslens {
namespace {

namespace fs = std::filesystem;

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(path.string(), 0, "file", "cannot open for reading",
                     ErrorCode::kIo);
  }
  return in;
}

struct Task {
  const std::string* source;
  const RankedRun* run;
  const TargetCounts* target;
};

}  // namespace

SourceFile parse_source_file(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected LABEL=FILE, got '" + text + "'");
  }
  return {text.substr(0, eq), fs::path(text.substr(eq + 1))};
}

Report run_evaluate(const AuditConfig& config) {
  if (config.cutoff < 1) {
    throw Error(ErrorCode::kInvalidArgument, "cutoff must be >= 1");
  }
  if (config.targets.empty() && config.members.empty() &&
      config.sparql.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "at least one target source is required");
  }
  const FeatureScheme& scheme = config.scheme;
  ReportMeta meta;
  meta.seed = config.seed;
  meta.cutoff = config.cutoff;
  meta.feature = scheme.feature_name();
  meta.values = scheme.values();
  meta.unknown_token = scheme.unknown_token();
  meta.sd_mode = config.sd_mode;
  meta.strict = config.strict;
  meta.table_k = config.table_k;
  meta.buckets = config.buckets;
  if (!scheme.is_binary()) {
    meta.notes.push_back(
        "multi-valued scheme evaluated one value against the rest; ideal "
        "counts across values need not sum to the window");
  }

  std::vector<RankedRun> runs;
  {
    auto in = open_input(config.runs);
    runs = parse_runs(in, config.runs.string());
  }

  LabelCatalog catalog(scheme.feature_name());
  std::map<std::string, MembershipTable> memberships;
  std::vector<std::string> source_order;
  auto add_source = [&](const std::string& label) {
    if (std::find(source_order.begin(), source_order.end(), label) !=
        source_order.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "target source '" + label + "' given more than once");
    }
    source_order.push_back(label);
  };

  SparqlConfig sparql_config = config.sparql_config;
  sparql_config.strict = sparql_config.strict || config.strict;
  for (const auto& file : config.sparql) {
    auto in = open_input(file.path);
    SparqlImport import =
        parse_sparql_results(in, scheme, sparql_config, file.path.string());
    catalog.merge(import.labels);
    meta.notes.insert(meta.notes.end(), import.warnings.begin(),
                      import.warnings.end());
    memberships[file.label] = std::move(import.members);
  }
  for (const auto& path : config.labels) {
    auto in = open_input(path);
    catalog.merge(parse_labels(in, scheme, path.string()));
  }
  for (const auto& conflict : catalog.conflicts()) {
    meta.notes.push_back(
        "label override for '" + conflict.entity_id + "': " +
        provenance_name(conflict.kept.provenance) + " value '" +
        conflict.kept.value.value_or(scheme.unknown_token()) + "' over " +
        provenance_name(conflict.overridden.provenance) + " value '" +
        conflict.overridden.value.value_or(scheme.unknown_token()) + "'");
  }

  std::vector<SkippedTopic> skipped;
  std::map<std::string, std::map<std::string, TargetCounts>> targets;
  auto store = [&](const std::string& label, std::vector<TargetCounts> list) {
    auto& slot = targets[label];
    for (auto& t : list) slot.emplace(t.topic_id, std::move(t));
  };
  for (const auto& file : config.targets) {
    add_source(file.label);
    auto in = open_input(file.path);
    store(file.label, parse_target_counts(in, scheme, file.path.string()));
  }
  for (const auto& file : config.members) {
    add_source(file.label);
    auto in = open_input(file.path);
    memberships[file.label] = parse_members(in, file.path.string());
  }
  for (const auto& file : config.sparql) add_source(file.label);
  for (const auto& [label, table] : memberships) {
    std::vector<SkippedTopic> empty;
    store(label, counts_from_membership(table, catalog, scheme, &empty));
    for (auto& s : empty) {
      s.source = label;
      skipped.push_back(std::move(s));
    }
  }
  meta.sources = source_order;

  std::set<std::string> run_topics;
  for (const auto& run : runs) run_topics.insert(run.topic_id);

  std::vector<Task> tasks;
  for (const auto& label : source_order) {
    const auto& by_topic = targets[label];
    for (const auto& run : runs) {
      auto it = by_topic.find(run.topic_id);
      if (it == by_topic.end()) {
        const bool empty_population = std::any_of(
            skipped.begin(), skipped.end(), [&](const SkippedTopic& s) {
              return s.source == label && s.topic_id == run.topic_id;
            });
        if (!empty_population) skipped.push_back({label, run.topic_id, "no-target"});
        continue;
      }
      tasks.push_back({&label, &run, &it->second});
    }
    for (const auto& [topic, target] : by_topic) {
      if (!run_topics.count(topic)) skipped.push_back({label, topic, "no-run"});
    }
  }
  if (tasks.empty()) {
    throw Error(ErrorCode::kEmptyJoin,
                "no topic has a run, labels and a target population in any "
                "source; nothing to evaluate");
  }

  // Each task writes its own slot, so output order never depends on
  // scheduling.
  std::vector<std::vector<BiasRecord>> results(tasks.size());
  std::vector<std::optional<Error>> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& task = tasks[i];
      try {
        EvalOptions options{config.strict, *task.source};
        for (const auto& value : scheme.values()) {
          results[i].push_back(bias_at_n(*task.run, catalog, *task.target,
                                         scheme, value, config.cutoff,
                                         options));
        }
      } catch (const Error& e) {
        failures[i] = e;
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(
      config.jobs, static_cast<unsigned>(tasks.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& failure : failures) {
    if (failure) throw *failure;
  }

  std::vector<BiasRecord> records;
  std::int64_t short_lists = 0;
  for (auto& batch : results) {
    for (auto& r : batch) {
      if (r.cutoff_effective < r.cutoff_requested) ++short_lists;
      records.push_back(std::move(r));
    }
  }
  if (short_lists > 0) {
    meta.notes.push_back(std::to_string(short_lists) +
                         " records evaluated on lists shorter than the cutoff");
  }
  return build_report(std::move(meta), std::move(records), std::move(skipped));
}

Report rederive_report(const Report& report, std::int64_t table_k,
                       std::int64_t buckets, std::uint64_t seed) {
  ReportMeta meta = report.meta;
  meta.table_k = table_k;
  meta.buckets = buckets;
  meta.seed = seed;
  return build_report(std::move(meta), report.records, report.skipped);
}

std::vector<SimulationRow> parse_simulation_spec(std::istream& in,
                                                 const std::string& source) {
  std::vector<SimulationRow> rows;
  std::string line;
  std::int64_t line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (!line.empty() && line.back() == '\t') fields.emplace_back();
    if (!seen_data && fields == std::vector<std::string>{"topic_id",
                                                        "target_ratio", "bias",
                                                        "window"}) {
      seen_data = true;
      continue;
    }
    seen_data = true;
    if (fields.size() != 4) {
      throw ParseError(source, line_no, "row",
                       "expected 4 fields, got " + std::to_string(fields.size()));
    }
    SimulationRow row;
    row.line = line_no;
    row.topic_id = fields[0];
    if (row.topic_id.empty()) {
      throw ParseError(source, line_no, "topic_id", "empty field");
    }
    auto ratio = [&](const std::string& text, const char* name) {
      try {
        return Ratio::parse(text);
      } catch (const Error& e) {
        throw ParseError(source, line_no, name, e.what());
      }
    };
    row.target = ratio(fields[1], "target_ratio");
    row.bias = ratio(fields[2], "bias");
    auto [ptr, ec] = std::from_chars(fields[3].data(),
                                     fields[3].data() + fields[3].size(),
                                     row.window);
    if (ec != std::errc() || ptr != fields[3].data() + fields[3].size() ||
        row.window < 1) {
      throw ParseError(source, line_no, "window",
                       "expected a positive integer, got '" + fields[3] + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

SyntheticCorpus simulate_corpus(const FeatureScheme& scheme,
                                const std::string& value,
                                const std::vector<SimulationRow>& rows,
                                std::uint64_t seed,
                                const std::string& source_name) {
  scheme.require(value);
  SyntheticCorpus corpus;
  corpus.labels = LabelCatalog(scheme.feature_name());
  std::set<std::string> topics;
  for (const auto& row : rows) {
    if (!topics.insert(row.topic_id).second) {
      throw ParseError(source_name, row.line, "topic_id",
                       "duplicate topic '" + row.topic_id + "'");
    }
    SyntheticTopic topic;
    try {
      topic = simulate_run(scheme, value, row.topic_id, row.target, row.bias,
                           row.window, seed);
    } catch (const Error& e) {
      throw ParseError(source_name, row.line, "bias", e.what(), e.code());
    }
    corpus.runs.push_back(std::move(topic.run));
    corpus.labels.merge(topic.labels);
    corpus.targets.push_back(std::move(topic.target));
  }
  auto by_topic = [](const auto& a, const auto& b) {
    return a.topic_id < b.topic_id;
  };
  std::sort(corpus.runs.begin(), corpus.runs.end(), by_topic);
  std::sort(corpus.targets.begin(), corpus.targets.end(), by_topic);
  return corpus;
}

std::vector<fs::path> write_corpus(const SyntheticCorpus& corpus,
                                   const FeatureScheme& scheme,
                                   const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot create '" + dir.string() + "': " + ec.message());
  }
  std::ostringstream runs, labels, targets;
  write_runs(runs, corpus.runs);
  write_labels(labels, corpus.labels, scheme);
  write_target_counts(targets, corpus.targets, scheme);
  const std::vector<std::pair<std::string, std::string>> files{
      {"runs.tsv", runs.str()},
      {"labels.tsv", labels.str()},
      {"targets.tsv", targets.str()}};

  std::vector<fs::path> written;
  for (const auto& [name, contents] : files) {
    const fs::path tmp = dir / ("." + name + ".tmp");
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.close();
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
  }
  for (const auto& [name, contents] : files) {
    fs::rename(dir / ("." + name + ".tmp"), dir / name, ec);
    if (ec) {
      throw Error(ErrorCode::kIo, "cannot write '" + (dir / name).string() +
                                      "': " + ec.message());
    }
    written.push_back(dir / name);
  }
  return written;
}

}  // namespace biaslens

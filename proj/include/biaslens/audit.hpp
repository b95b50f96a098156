#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "biaslens/ingest.hpp"
#include "biaslens/report.hpp"
#include "biaslens/types.hpp"

namespace biaslens {

inline constexpr std::uint64_t kDefaultSeed = 20191201;

// A labelled input file, e.g. "kb=targets_kb.tsv".
struct SourceFile {
  std::string label;
  std::filesystem::path path;
};

// Parses "LABEL=PATH"; throws kInvalidArgument otherwise.
SourceFile parse_source_file(const std::string& text);

struct AuditConfig {
  std::int64_t cutoff = 10;
  FeatureScheme scheme{"gender", {"female", "male"}, "unknown"};
  std::filesystem::path runs;
  std::vector<std::filesystem::path> labels;
  std::vector<SourceFile> targets;  // pre-aggregated counts per source
  std::vector<SourceFile> members;  // membership tables per source
  std::vector<SourceFile> sparql;   // SPARQL exports: members and kb labels
  SparqlConfig sparql_config;
  bool strict = false;
  std::uint64_t seed = kDefaultSeed;
  SdMode sd_mode = SdMode::kSample;
  std::int64_t table_k = 11;
  std::int64_t buckets = 10;
  unsigned jobs = 1;
};

// Loads every input, joins runs x labels x targets per source and measures
// each joinable topic for every value of the scheme. Topics missing an
// input are listed in Report::skipped. Throws kEmptyJoin when nothing can be
// evaluated and kUnlabeledEntity in strict mode.
Report run_evaluate(const AuditConfig& config);

// Re-derives sections of a stored report with new table options.
Report rederive_report(const Report& report, std::int64_t table_k,
                       std::int64_t buckets, std::uint64_t seed);

struct SimulationRow {
  std::int64_t line = 0;
  std::string topic_id;
  Ratio target;
  Ratio bias;
  std::int64_t window = 0;
};

// topic_id, target_ratio, bias, window. Ratios accept "a/b" or decimals.
std::vector<SimulationRow> parse_simulation_spec(
    std::istream& in, const std::string& source_name = "<spec>");

struct SyntheticCorpus {
  std::vector<RankedRun> runs;
  LabelCatalog labels;
  std::vector<TargetCounts> targets;
};

// Infeasible rows raise a ParseError naming their line.
SyntheticCorpus simulate_corpus(const FeatureScheme& scheme,
                                const std::string& value,
                                const std::vector<SimulationRow>& rows,
                                std::uint64_t seed,
                                const std::string& source_name = "<spec>");

// Writes runs.tsv, labels.tsv and targets.tsv into `dir`.
std::vector<std::filesystem::path> write_corpus(
    const SyntheticCorpus& corpus, const FeatureScheme& scheme,
    const std::filesystem::path& dir);

}  // namespace biaslens

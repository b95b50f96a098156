#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "biaslens/types.hpp"

namespace biaslens {

inline constexpr const char* kReportSchema = "biaslens-report/1";

// Bias counts on the 1/n grid. counts[k + n] holds bin center k/n.
struct Histogram {
  std::string source;
  std::string value;
  std::int64_t cutoff = 0;
  std::vector<std::int64_t> counts;
  // Records from short lists whose bias is not on the 1/n grid; they are
  // binned to the nearest center (half away from zero).
  std::int64_t off_grid = 0;
  std::int64_t total = 0;

  // Bias-free reference: every record at 0.
  std::vector<std::int64_t> reference() const;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

Histogram build_histogram(std::span<const BiasRecord> records,
                          std::string_view c, std::int64_t n);

struct ScatterPoint {
  std::string source;
  std::string topic_id;
  std::string value;
  Ratio target;  // ideal target ratio at the cutoff
  Ratio model;
  std::int64_t cell_x = 0;
  std::int64_t cell_y = 0;
  double dx = 0.0;
  double dy = 0.0;
  bool on_diagonal = false;

  friend bool operator==(const ScatterPoint& a, const ScatterPoint& b);
};

// Target-vs-model points with deterministic jitter strictly inside each
// 1/n grid square, sorted by topic_id.
std::vector<ScatterPoint> build_scatter(std::span<const BiasRecord> records,
                                        std::string_view c, std::int64_t n,
                                        std::uint64_t seed);

struct RankedTables {
  std::vector<BiasRecord> towards;  // largest positive bias first
  std::vector<BiasRecord> against;  // most negative bias first
  bool towards_truncated = false;
  bool against_truncated = false;

  friend bool operator==(const RankedTables&, const RankedTables&) = default;
};

// Ties on bias fall back to the larger |model - raw target|, then topic_id.
RankedTables ranked_bias_table(std::span<const BiasRecord> records,
                               std::string_view c, std::int64_t k);

// Records of value `c` with zero bias, the pool exemplars are drawn from.
std::vector<BiasRecord> unbiased_candidates(std::span<const BiasRecord> records,
                                            std::string_view c);

struct ExemplarBucket {
  std::int64_t index = 0;  // center index / buckets
  std::optional<BiasRecord> exemplar;
  std::int64_t population = 0;

  friend bool operator==(const ExemplarBucket&,
                         const ExemplarBucket&) = default;
};

struct ExemplarTable {
  std::int64_t buckets = 10;
  std::vector<ExemplarBucket> rows;  // buckets + 1 rows, gaps included
  std::vector<std::string> warnings;

  friend bool operator==(const ExemplarTable&, const ExemplarTable&) = default;
};

// Among zero-bias records of value `c`, picks per target-ratio bucket the
// topic with the largest population (ties by topic_id). The ideal target
// ratio is rounded half away from zero onto the 1/buckets grid.
ExemplarTable unbiased_exemplars(
    std::span<const BiasRecord> records, std::string_view c,
    const std::map<std::string, std::int64_t>& populations,
    std::int64_t buckets = 10);

struct ReportMeta {
  std::string schema = kReportSchema;
  std::uint64_t seed = 0;
  std::int64_t cutoff = 10;
  std::string feature;
  std::vector<std::string> values;
  std::string unknown_token = "unknown";
  std::vector<std::string> sources;
  SdMode sd_mode = SdMode::kSample;
  bool strict = false;
  std::int64_t table_k = 11;
  std::int64_t buckets = 10;
  std::vector<std::string> notes;

  friend bool operator==(const ReportMeta&, const ReportMeta&) = default;
};

// Derived artifacts for one (target source, feature value) pair.
struct ReportSection {
  std::string source;
  std::string value;
  Histogram histogram;
  std::vector<ScatterPoint> scatter;
  RankedTables tables;
  ExemplarTable unbiased;

  friend bool operator==(const ReportSection&,
                         const ReportSection&) = default;
};

struct Report {
  ReportMeta meta;
  std::vector<BiasSummary> summaries;
  std::vector<BiasRecord> records;
  std::vector<SkippedTopic> skipped;
  std::vector<ReportSection> sections;

  friend bool operator==(const Report&, const Report&) = default;
};

// Sorts records, then computes summaries and every section from them.
Report build_report(ReportMeta meta, std::vector<BiasRecord> records,
                    std::vector<SkippedTopic> skipped);

enum class ReportFormat { kJson, kCsv };

nlohmann::ordered_json report_to_json(const Report& report);
// Throws Error(kSchemaVersion) for any schema other than kReportSchema.
Report report_from_json(const nlohmann::json& doc);

std::string render_json(const Report& report);
// File name -> contents for the CSV bundle.
std::map<std::string, std::string> render_csv_bundle(const Report& report);

// Writes report.json or the CSV bundle into `dir`. Files are staged under
// temporary names and renamed only after every one was written.
std::vector<std::filesystem::path> write_report(
    const Report& report, ReportFormat format,
    const std::filesystem::path& dir);

}  // namespace biaslens

#include "biaslens/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>
#include <tuple>

#include "biaslens/error.hpp"
#include "biaslens/metrics.hpp"
#include "hash.hpp"

namespace biaslens {
namespace {

using Json = nlohmann::ordered_json;

// round(num / den) with halves away from zero; den > 0.
std::int64_t round_half_away(__int128 num, __int128 den) {
  const __int128 mag = num < 0 ? -num : num;
  const __int128 q = (2 * mag + den) / (2 * den);
  return static_cast<std::int64_t>(num < 0 ? -q : q);
}

// Nearest index on the 1/n grid for a ratio.
std::int64_t grid_index(const Ratio& r, std::int64_t n) {
  return round_half_away(static_cast<__int128>(r.num()) * n, r.den());
}

std::vector<BiasRecord> of_value(std::span<const BiasRecord> records,
                                 std::string_view c) {
  std::vector<BiasRecord> out;
  for (const auto& r : records) {
    if (r.value == c) out.push_back(r);
  }
  return out;
}

double jitter(std::uint64_t key, std::uint64_t salt, std::int64_t n) {
  const double half = 0.5 / static_cast<double>(n);
  // 52-bit draw so that u never rounds to 0 or 1.
  const std::uint64_t bits = detail::mix64(key ^ salt);
  const double u =
      (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
  double d = (u - 0.5) / static_cast<double>(n);
  if (d >= half) d = std::nextafter(half, 0.0);
  if (d <= -half) d = std::nextafter(-half, 0.0);
  return d;
}

bool record_order(const BiasRecord& a, const BiasRecord& b) {
  return std::tie(a.source, a.value, a.topic_id) <
         std::tie(b.source, b.value, b.topic_id);
}

// --- JSON ------------------------------------------------------------------

Json ratio_json(const Ratio& r) {
  return Json{{"exact", r.to_string()}, {"decimal", r.value()}};
}

Ratio ratio_from(const nlohmann::json& j) {
  if (j.is_object()) return Ratio::parse(j.at("exact").get<std::string>());
  return Ratio::parse(j.get<std::string>());
}

Json record_json(const BiasRecord& r) {
  return Json{
      {"source", r.source},
      {"topic_id", r.topic_id},
      {"value", r.value},
      {"cutoff_requested", r.cutoff_requested},
      {"cutoff_effective", r.cutoff_effective},
      {"model_ratio", ratio_json(r.model_ratio)},
      {"target_ratio_raw", ratio_json(r.target_ratio_raw)},
      {"delta", ratio_json(r.delta)},
      {"target_ratio_at_cutoff", ratio_json(r.target_ratio_at_cutoff)},
      {"bias", ratio_json(r.bias)},
      {"unknown_in_window", r.unknown_in_window},
  };
}

BiasRecord record_from(const nlohmann::json& j) {
  BiasRecord r;
  r.source = j.at("source").get<std::string>();
  r.topic_id = j.at("topic_id").get<std::string>();
  r.value = j.at("value").get<std::string>();
  r.cutoff_requested = j.at("cutoff_requested").get<std::int64_t>();
  r.cutoff_effective = j.at("cutoff_effective").get<std::int64_t>();
  r.model_ratio = ratio_from(j.at("model_ratio"));
  r.target_ratio_raw = ratio_from(j.at("target_ratio_raw"));
  r.delta = ratio_from(j.at("delta"));
  r.target_ratio_at_cutoff = ratio_from(j.at("target_ratio_at_cutoff"));
  r.bias = ratio_from(j.at("bias"));
  r.unknown_in_window = j.at("unknown_in_window").get<std::int64_t>();
  return r;
}

Json summary_json(const BiasSummary& s) {
  return Json{
      {"source", s.source},
      {"value", s.value},
      {"topic_count", s.topic_count},
      {"MB", s.mb},
      {"SB", s.sb},
      {"MAB", s.mab},
      {"min", s.min_bias.value()},
      {"max", s.max_bias.value()},
      {"min_exact", s.min_bias.to_string()},
      {"max_exact", s.max_bias.to_string()},
      {"sd_mode", sd_mode_name(s.sd_mode)},
      {"single_sample", s.single_sample},
  };
}

SdMode sd_mode_from(const std::string& text) {
  if (text == "sample") return SdMode::kSample;
  if (text == "population") return SdMode::kPopulation;
  throw Error(ErrorCode::kParse, "unknown sd_mode '" + text + "'");
}

BiasSummary summary_from(const nlohmann::json& j) {
  BiasSummary s;
  s.source = j.at("source").get<std::string>();
  s.value = j.at("value").get<std::string>();
  s.topic_count = j.at("topic_count").get<std::int64_t>();
  s.mb = j.at("MB").get<double>();
  s.sb = j.at("SB").get<double>();
  s.mab = j.at("MAB").get<double>();
  s.min_bias = Ratio::parse(j.at("min_exact").get<std::string>());
  s.max_bias = Ratio::parse(j.at("max_exact").get<std::string>());
  s.sd_mode = sd_mode_from(j.at("sd_mode").get<std::string>());
  s.single_sample = j.at("single_sample").get<bool>();
  return s;
}

Json histogram_json(const Histogram& h) {
  Json bins = Json::array();
  const auto reference = h.reference();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const Ratio center(static_cast<std::int64_t>(i) - h.cutoff, h.cutoff);
    bins.push_back(Json{{"bin", center.to_string()},
                        {"decimal", center.value()},
                        {"count", h.counts[i]},
                        {"reference", reference[i]}});
  }
  return Json{{"source", h.source}, {"value", h.value},
              {"cutoff", h.cutoff}, {"total", h.total},
              {"off_grid", h.off_grid}, {"bins", std::move(bins)}};
}

Histogram histogram_from(const nlohmann::json& j) {
  Histogram h;
  h.source = j.at("source").get<std::string>();
  h.value = j.at("value").get<std::string>();
  h.cutoff = j.at("cutoff").get<std::int64_t>();
  h.total = j.at("total").get<std::int64_t>();
  h.off_grid = j.at("off_grid").get<std::int64_t>();
  for (const auto& bin : j.at("bins")) {
    h.counts.push_back(bin.at("count").get<std::int64_t>());
  }
  return h;
}

Json point_json(const ScatterPoint& p, std::int64_t n) {
  const double step = 1.0 / static_cast<double>(n);
  return Json{{"topic_id", p.topic_id},
              {"target", ratio_json(p.target)},
              {"model", ratio_json(p.model)},
              {"cell", Json::array({p.cell_x, p.cell_y})},
              {"jitter", Json::array({p.dx, p.dy})},
              {"x", static_cast<double>(p.cell_x) * step + p.dx},
              {"y", static_cast<double>(p.cell_y) * step + p.dy},
              {"on_diagonal", p.on_diagonal}};
}

ScatterPoint point_from(const nlohmann::json& j, const std::string& source,
                        const std::string& value) {
  ScatterPoint p;
  p.source = source;
  p.value = value;
  p.topic_id = j.at("topic_id").get<std::string>();
  p.target = ratio_from(j.at("target"));
  p.model = ratio_from(j.at("model"));
  p.cell_x = j.at("cell").at(0).get<std::int64_t>();
  p.cell_y = j.at("cell").at(1).get<std::int64_t>();
  p.dx = j.at("jitter").at(0).get<double>();
  p.dy = j.at("jitter").at(1).get<double>();
  p.on_diagonal = j.at("on_diagonal").get<bool>();
  return p;
}

Json records_json(const std::vector<BiasRecord>& records) {
  Json out = Json::array();
  for (const auto& r : records) out.push_back(record_json(r));
  return out;
}

std::vector<BiasRecord> records_from(const nlohmann::json& j) {
  std::vector<BiasRecord> out;
  for (const auto& r : j) out.push_back(record_from(r));
  return out;
}

Json exemplars_json(const ExemplarTable& t) {
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    const Ratio center(row.index, t.buckets);
    rows.push_back(Json{
        {"bucket", center.to_string()},
        {"decimal", center.value()},
        {"population", row.population},
        {"record", row.exemplar ? record_json(*row.exemplar) : Json(nullptr)}});
  }
  return Json{{"buckets", t.buckets},
              {"rows", std::move(rows)},
              {"warnings", t.warnings}};
}

ExemplarTable exemplars_from(const nlohmann::json& j) {
  ExemplarTable t;
  t.buckets = j.at("buckets").get<std::int64_t>();
  for (const auto& row : j.at("rows")) {
    ExemplarBucket b;
    b.index = Ratio::parse(row.at("bucket").get<std::string>())
                  .over(t.buckets)
                  .num();
    b.population = row.at("population").get<std::int64_t>();
    if (!row.at("record").is_null()) b.exemplar = record_from(row.at("record"));
    t.rows.push_back(std::move(b));
  }
  t.warnings = j.at("warnings").get<std::vector<std::string>>();
  return t;
}

// --- CSV -------------------------------------------------------------------

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<const char*> header) {
    std::vector<std::string> fields(header.begin(), header.end());
    row(fields);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::string num(std::int64_t v) { return std::to_string(v); }
std::string dec(double v) { return format_decimal(v); }

std::vector<std::string> record_cells(const BiasRecord& r) {
  return {r.topic_id,
          num(r.cutoff_requested),
          num(r.cutoff_effective),
          r.model_ratio.to_string(),
          dec(r.model_ratio.value()),
          r.target_ratio_raw.to_string(),
          dec(r.target_ratio_raw.value()),
          r.delta.to_string(),
          dec(r.delta.value()),
          r.target_ratio_at_cutoff.to_string(),
          dec(r.target_ratio_at_cutoff.value()),
          r.bias.to_string(),
          dec(r.bias.value()),
          num(r.unknown_in_window)};
}

#define BIASLENS_RECORD_COLUMNS                                           \
  "topic_id", "cutoff_requested", "cutoff_effective", "model_ratio",      \
      "model_ratio_decimal", "target_ratio_raw", "target_ratio_raw_decimal", \
      "delta", "delta_decimal", "target_ratio_at_cutoff",                 \
      "target_ratio_at_cutoff_decimal", "bias", "bias_decimal",           \
      "unknown_in_window"

std::vector<std::string> concat(std::vector<std::string> head,
                                const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

std::vector<std::int64_t> Histogram::reference() const {
  std::vector<std::int64_t> ref(counts.size(), 0);
  if (!ref.empty()) ref[static_cast<std::size_t>(cutoff)] = total;
  return ref;
}

bool operator==(const ScatterPoint& a, const ScatterPoint& b) {
  return a.source == b.source && a.topic_id == b.topic_id &&
         a.value == b.value && identical(a.target, b.target) &&
         identical(a.model, b.model) && a.cell_x == b.cell_x &&
         a.cell_y == b.cell_y && a.dx == b.dx && a.dy == b.dy &&
         a.on_diagonal == b.on_diagonal;
}

Histogram build_histogram(std::span<const BiasRecord> records,
                          std::string_view c, std::int64_t n) {
  if (n < 1) {
    throw Error(ErrorCode::kInvalidArgument, "histogram cutoff must be >= 1");
  }
  Histogram h;
  h.value = std::string(c);
  h.cutoff = n;
  h.counts.assign(static_cast<std::size_t>(2 * n + 1), 0);
  for (const auto& r : records) {
    if (r.value != c) continue;
    if (h.source.empty()) h.source = r.source;
    if (!r.bias.is_on_grid(n)) ++h.off_grid;
    const std::int64_t k = std::clamp<std::int64_t>(grid_index(r.bias, n), -n, n);
    ++h.counts[static_cast<std::size_t>(k + n)];
    ++h.total;
  }
  return h;
}

std::vector<ScatterPoint> build_scatter(std::span<const BiasRecord> records,
                                        std::string_view c, std::int64_t n,
                                        std::uint64_t seed) {
  if (n < 1) {
    throw Error(ErrorCode::kInvalidArgument, "scatter cutoff must be >= 1");
  }
  auto selected = of_value(records, c);
  std::stable_sort(selected.begin(), selected.end(),
                   [](const BiasRecord& a, const BiasRecord& b) {
                     return a.topic_id < b.topic_id;
                   });
  std::vector<ScatterPoint> points;
  points.reserve(selected.size());
  for (const auto& r : selected) {
    ScatterPoint p;
    p.source = r.source;
    p.topic_id = r.topic_id;
    p.value = r.value;
    p.target = r.target_ratio_at_cutoff;
    p.model = r.model_ratio;
    p.cell_x = grid_index(p.target, n);
    p.cell_y = grid_index(p.model, n);
    const std::uint64_t key = detail::mix64(
        seed ^ detail::mix64(detail::fnv1a(r.topic_id) ^
                             detail::mix64(detail::fnv1a(r.value))));
    p.dx = jitter(key, 0x1, n);
    p.dy = jitter(key, 0x2, n);
    p.on_diagonal = r.bias == Ratio(0, 1);
    points.push_back(std::move(p));
  }
  return points;
}

RankedTables ranked_bias_table(std::span<const BiasRecord> records,
                               std::string_view c, std::int64_t k) {
  if (k < 1) {
    throw Error(ErrorCode::kInvalidArgument, "table size must be >= 1");
  }
  const Ratio zero(0, 1);
  RankedTables tables;
  for (const auto& r : records) {
    if (r.value != c) continue;
    if (r.bias > zero) tables.towards.push_back(r);
    if (r.bias < zero) tables.against.push_back(r);
  }
  auto spread = [](const BiasRecord& r) {
    return (r.model_ratio - r.target_ratio_raw).abs();
  };
  auto tie_break = [&](const BiasRecord& a, const BiasRecord& b) {
    const auto sa = spread(a);
    const auto sb = spread(b);
    if (sa != sb) return sa > sb;
    return a.topic_id < b.topic_id;
  };
  std::sort(tables.towards.begin(), tables.towards.end(),
            [&](const BiasRecord& a, const BiasRecord& b) {
              if (a.bias != b.bias) return a.bias > b.bias;
              return tie_break(a, b);
            });
  std::sort(tables.against.begin(), tables.against.end(),
            [&](const BiasRecord& a, const BiasRecord& b) {
              if (a.bias != b.bias) return a.bias < b.bias;
              return tie_break(a, b);
            });
  const auto limit = static_cast<std::size_t>(k);
  tables.towards_truncated = tables.towards.size() < limit;
  tables.against_truncated = tables.against.size() < limit;
  if (tables.towards.size() > limit) tables.towards.resize(limit);
  if (tables.against.size() > limit) tables.against.resize(limit);
  return tables;
}

std::vector<BiasRecord> unbiased_candidates(std::span<const BiasRecord> records,
                                            std::string_view c) {
  std::vector<BiasRecord> out;
  for (const auto& r : records) {
    if (r.value == c && r.bias == Ratio(0, 1)) out.push_back(r);
  }
  return out;
}

ExemplarTable unbiased_exemplars(
    std::span<const BiasRecord> records, std::string_view c,
    const std::map<std::string, std::int64_t>& populations,
    std::int64_t buckets) {
  if (buckets < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bucket count must be >= 1");
  }
  ExemplarTable table;
  table.buckets = buckets;
  for (std::int64_t i = 0; i <= buckets; ++i) {
    table.rows.push_back(ExemplarBucket{i, std::nullopt, 0});
  }
  for (const auto& r : unbiased_candidates(records, c)) {
    auto pop = populations.find(r.topic_id);
    if (pop == populations.end()) {
      table.warnings.push_back("topic '" + r.topic_id +
                               "' has no population; skipped");
      continue;
    }
    const std::int64_t index = std::clamp<std::int64_t>(
        grid_index(r.target_ratio_at_cutoff, buckets), 0, buckets);
    ExemplarBucket& bucket = table.rows[static_cast<std::size_t>(index)];
    const bool better =
        !bucket.exemplar || pop->second > bucket.population ||
        (pop->second == bucket.population &&
         r.topic_id < bucket.exemplar->topic_id);
    if (better) {
      bucket.exemplar = r;
      bucket.population = pop->second;
    }
  }
  return table;
}

Report build_report(ReportMeta meta, std::vector<BiasRecord> records,
                    std::vector<SkippedTopic> skipped) {
  Report report;
  std::sort(records.begin(), records.end(), record_order);
  std::sort(skipped.begin(), skipped.end());
  report.meta = std::move(meta);
  report.records = std::move(records);
  report.skipped = std::move(skipped);

  for (const auto& source : report.meta.sources) {
    for (const auto& value : report.meta.values) {
      std::vector<BiasRecord> slice;
      std::map<std::string, std::int64_t> populations;
      for (const auto& r : report.records) {
        if (r.source == source && r.value == value) {
          slice.push_back(r);
          populations[r.topic_id] = r.population();
        }
      }
      if (slice.empty()) continue;
      report.summaries.push_back(
          aggregate(slice, value, source, report.meta.sd_mode));
      ReportSection section;
      section.source = source;
      section.value = value;
      section.histogram = build_histogram(slice, value, report.meta.cutoff);
      section.histogram.source = source;
      section.scatter =
          build_scatter(slice, value, report.meta.cutoff, report.meta.seed);
      section.tables = ranked_bias_table(slice, value, report.meta.table_k);
      section.unbiased =
          unbiased_exemplars(slice, value, populations, report.meta.buckets);
      report.sections.push_back(std::move(section));
    }
  }
  return report;
}

nlohmann::ordered_json report_to_json(const Report& report) {
  const ReportMeta& m = report.meta;
  Json meta{{"schema", m.schema},
            {"seed", m.seed},
            {"cutoff", m.cutoff},
            {"feature", m.feature},
            {"values", m.values},
            {"unknown_token", m.unknown_token},
            {"sources", m.sources},
            {"sd_mode", sd_mode_name(m.sd_mode)},
            {"strict", m.strict},
            {"table_k", m.table_k},
            {"buckets", m.buckets},
            {"notes", m.notes}};

  Json summaries = Json::array();
  for (const auto& s : report.summaries) summaries.push_back(summary_json(s));

  Json skipped = Json::array();
  for (const auto& s : report.skipped) {
    skipped.push_back(
        Json{{"source", s.source}, {"topic_id", s.topic_id}, {"reason", s.reason}});
  }

  Json histogram = Json::array();
  Json scatter = Json::array();
  Json tables = Json::array();
  for (const auto& section : report.sections) {
    histogram.push_back(histogram_json(section.histogram));
    Json points = Json::array();
    for (const auto& p : section.scatter) {
      points.push_back(point_json(p, m.cutoff));
    }
    scatter.push_back(Json{{"source", section.source},
                           {"value", section.value},
                           {"points", std::move(points)}});
    tables.push_back(
        Json{{"source", section.source},
             {"value", section.value},
             {"towards", records_json(section.tables.towards)},
             {"against", records_json(section.tables.against)},
             {"towards_truncated", section.tables.towards_truncated},
             {"against_truncated", section.tables.against_truncated},
             {"unbiased", exemplars_json(section.unbiased)}});
  }

  return Json{{"meta", std::move(meta)},
              {"summaries", std::move(summaries)},
              {"records", records_json(report.records)},
              {"skipped", std::move(skipped)},
              {"histogram", std::move(histogram)},
              {"scatter", std::move(scatter)},
              {"tables", std::move(tables)}};
}

Report report_from_json(const nlohmann::json& doc) {
  const std::string schema =
      doc.contains("meta") ? doc["meta"].value("schema", "") : "";
  if (schema != kReportSchema) {
    throw Error(ErrorCode::kSchemaVersion,
                "unsupported report schema '" + schema + "', expected '" +
                    kReportSchema + "'");
  }
  try {
    Report report;
    const auto& m = doc.at("meta");
    report.meta.schema = schema;
    report.meta.seed = m.at("seed").get<std::uint64_t>();
    report.meta.cutoff = m.at("cutoff").get<std::int64_t>();
    report.meta.feature = m.at("feature").get<std::string>();
    report.meta.values = m.at("values").get<std::vector<std::string>>();
    report.meta.unknown_token = m.at("unknown_token").get<std::string>();
    report.meta.sources = m.at("sources").get<std::vector<std::string>>();
    report.meta.sd_mode = sd_mode_from(m.at("sd_mode").get<std::string>());
    report.meta.strict = m.at("strict").get<bool>();
    report.meta.table_k = m.at("table_k").get<std::int64_t>();
    report.meta.buckets = m.at("buckets").get<std::int64_t>();
    report.meta.notes = m.at("notes").get<std::vector<std::string>>();

    for (const auto& s : doc.at("summaries")) {
      report.summaries.push_back(summary_from(s));
    }
    report.records = records_from(doc.at("records"));
    for (const auto& s : doc.at("skipped")) {
      report.skipped.push_back({s.at("source").get<std::string>(),
                                s.at("topic_id").get<std::string>(),
                                s.at("reason").get<std::string>()});
    }
    const auto& histograms = doc.at("histogram");
    const auto& scatters = doc.at("scatter");
    const auto& tables = doc.at("tables");
    if (histograms.size() != scatters.size() ||
        histograms.size() != tables.size()) {
      throw Error(ErrorCode::kParse, "report sections have mismatched sizes");
    }
    for (std::size_t i = 0; i < histograms.size(); ++i) {
      ReportSection section;
      section.source = tables[i].at("source").get<std::string>();
      section.value = tables[i].at("value").get<std::string>();
      section.histogram = histogram_from(histograms[i]);
      for (const auto& p : scatters[i].at("points")) {
        section.scatter.push_back(point_from(p, section.source, section.value));
      }
      section.tables.towards = records_from(tables[i].at("towards"));
      section.tables.against = records_from(tables[i].at("against"));
      section.tables.towards_truncated =
          tables[i].at("towards_truncated").get<bool>();
      section.tables.against_truncated =
          tables[i].at("against_truncated").get<bool>();
      section.unbiased = exemplars_from(tables[i].at("unbiased"));
      report.sections.push_back(std::move(section));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed report: ") + e.what());
  }
}

std::string render_json(const Report& report) {
  return report_to_json(report).dump(2) + "\n";
}

std::map<std::string, std::string> render_csv_bundle(const Report& report) {
  std::map<std::string, std::string> files;
  const auto& m = report.meta;

  CsvWriter summaries({"source", "value", "topic_count", "MB", "SB", "MAB",
                       "min", "min_decimal", "max", "max_decimal", "sd_mode",
                       "single_sample"});
  for (const auto& s : report.summaries) {
    summaries.row({s.source, s.value, num(s.topic_count), dec(s.mb), dec(s.sb),
                   dec(s.mab), s.min_bias.to_string(), dec(s.min_bias.value()),
                   s.max_bias.to_string(), dec(s.max_bias.value()),
                   sd_mode_name(s.sd_mode), s.single_sample ? "1" : "0"});
  }
  files["summaries.csv"] = summaries.str();

  CsvWriter records({"source", "value", BIASLENS_RECORD_COLUMNS});
  for (const auto& r : report.records) {
    records.row(concat({r.source, r.value}, record_cells(r)));
  }
  files["records.csv"] = records.str();

  CsvWriter histogram({"source", "value", "cutoff", "bin", "bin_decimal",
                       "count", "reference", "off_grid"});
  CsvWriter scatter({"source", "value", "topic_id", "target", "target_decimal",
                     "model", "model_decimal", "cell_x", "cell_y", "dx", "dy",
                     "x", "y", "on_diagonal"});
  CsvWriter towards({"source", "value", "rank", BIASLENS_RECORD_COLUMNS,
                     "truncated"});
  CsvWriter against({"source", "value", "rank", BIASLENS_RECORD_COLUMNS,
                     "truncated"});
  CsvWriter unbiased({"source", "value", "bucket", "bucket_decimal",
                      "population", BIASLENS_RECORD_COLUMNS});
  const double step = 1.0 / static_cast<double>(m.cutoff);
  for (const auto& section : report.sections) {
    const auto& h = section.histogram;
    const auto reference = h.reference();
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const Ratio center(static_cast<std::int64_t>(i) - h.cutoff, h.cutoff);
      histogram.row({section.source, section.value, num(h.cutoff),
                     center.to_string(), dec(center.value()), num(h.counts[i]),
                     num(reference[i]), num(h.off_grid)});
    }
    for (const auto& p : section.scatter) {
      scatter.row({section.source, section.value, p.topic_id,
                   p.target.to_string(), dec(p.target.value()),
                   p.model.to_string(), dec(p.model.value()), num(p.cell_x),
                   num(p.cell_y), dec(p.dx), dec(p.dy),
                   dec(static_cast<double>(p.cell_x) * step + p.dx),
                   dec(static_cast<double>(p.cell_y) * step + p.dy),
                   p.on_diagonal ? "1" : "0"});
    }
    auto emit_ranked = [&](CsvWriter& out, const std::vector<BiasRecord>& rows,
                           bool truncated) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto cells = concat({section.source, section.value, num(i + 1)},
                            record_cells(rows[i]));
        cells.push_back(truncated ? "1" : "0");
        out.row(cells);
      }
    };
    emit_ranked(towards, section.tables.towards,
                section.tables.towards_truncated);
    emit_ranked(against, section.tables.against,
                section.tables.against_truncated);
    for (const auto& row : section.unbiased.rows) {
      const Ratio center(row.index, section.unbiased.buckets);
      std::vector<std::string> cells{section.source, section.value,
                                     center.to_string(), dec(center.value()),
                                     num(row.population)};
      if (row.exemplar) {
        cells = concat(cells, record_cells(*row.exemplar));
      } else {
        cells.resize(cells.size() + 14);
      }
      unbiased.row(cells);
    }
  }
  files["histogram.csv"] = histogram.str();
  files["scatter.csv"] = scatter.str();
  files["table_towards.csv"] = towards.str();
  files["table_against.csv"] = against.str();
  files["table_unbiased.csv"] = unbiased.str();
  return files;
}

std::vector<std::filesystem::path> write_report(
    const Report& report, ReportFormat format,
    const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> files;
  if (format == ReportFormat::kJson) {
    files["report.json"] = render_json(report);
  } else {
    files = render_csv_bundle(report);
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot create '" + dir.string() + "': " + ec.message());
  }
  std::vector<std::pair<fs::path, fs::path>> staged;
  auto discard = [&] {
    for (const auto& [tmp, final_path] : staged) fs::remove(tmp, ec);
  };
  for (const auto& [name, contents] : files) {
    const fs::path final_path = dir / name;
    const fs::path tmp = dir / ("." + name + ".tmp");
    staged.emplace_back(tmp, final_path);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.close();
    if (!out) {
      discard();
      throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    }
  }
  std::vector<fs::path> written;
  for (const auto& [tmp, final_path] : staged) {
    fs::rename(tmp, final_path, ec);
    if (ec) {
      discard();
      throw Error(ErrorCode::kIo, "cannot rename '" + tmp.string() +
                                      "': " + ec.message());
    }
    written.push_back(final_path);
  }
  return written;
}

}  // namespace biaslens

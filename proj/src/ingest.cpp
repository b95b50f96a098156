#include "biaslens/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <string_view>
#include <system_error>

#include <nlohmann/json.hpp>

#include "biaslens/error.hpp"

namespace biaslens {
namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

struct Row {
  std::int64_t line = 0;
  std::vector<std::string> fields;
};

// Reads data rows, dropping comments, blank lines and a leading header whose
// fields match `columns` (optional trailing columns may be omitted).
class TsvReader {
 public:
  TsvReader(std::istream& in, std::string source,
            std::vector<std::string> columns, std::size_t required)
      : in_(in),
        source_(std::move(source)),
        columns_(std::move(columns)),
        required_(required) {}

  bool next(Row& row) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      auto fields = split_tabs(line);
      if (!seen_data_ && is_header(fields)) {
        seen_data_ = true;
        continue;
      }
      seen_data_ = true;
      if (fields.size() < required_ || fields.size() > columns_.size()) {
        throw error(line_no_, columns_[std::min(fields.size(),
                                                columns_.size() - 1)],
                    "expected " + std::to_string(required_) + ".." +
                        std::to_string(columns_.size()) + " fields, got " +
                        std::to_string(fields.size()));
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].empty() && i < required_) {
          throw error(line_no_, columns_[i], "empty field");
        }
      }
      row.line = line_no_;
      row.fields = std::move(fields);
      return true;
    }
    if (in_.bad()) {
      throw Error(ErrorCode::kIo, source_ + ": read failure");
    }
    return false;
  }

  ParseError error(std::int64_t line, const std::string& field,
                   const std::string& detail,
                   ErrorCode code = ErrorCode::kParse) const {
    return ParseError(source_, line, field, detail, code);
  }

 private:
  bool is_header(const std::vector<std::string>& fields) const {
    if (fields.size() < required_ || fields.size() > columns_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i] != columns_[i]) return false;
    }
    return true;
  }

  std::istream& in_;
  std::string source_;
  std::vector<std::string> columns_;
  std::size_t required_;
  std::int64_t line_no_ = 0;
  bool seen_data_ = false;
};

std::int64_t parse_integer(const TsvReader& reader, const Row& row,
                           std::size_t index, const std::string& field) {
  const std::string& text = row.fields[index];
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw reader.error(row.line, field, "not an integer: '" + text + "'");
  }
  return value;
}

std::string terminal_segment(const std::string& iri) {
  auto pos = iri.find_last_of("/#");
  if (pos == std::string::npos || pos + 1 == iri.size()) return iri;
  return iri.substr(pos + 1);
}

struct Term {
  bool bound = false;
  bool is_iri = false;
  std::string value;
};

// One RDF term in SPARQL TSV syntax: <iri>, "literal"@lang, "lit"^^<dt> or
// a bare token.
Term parse_tsv_term(const std::string& field) {
  Term term;
  if (field.empty()) return term;
  term.bound = true;
  if (field.size() >= 2 && field.front() == '<' && field.back() == '>') {
    term.is_iri = true;
    term.value = field.substr(1, field.size() - 2);
    return term;
  }
  if (field.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < field.size(); ++i) {
      char ch = field[i];
      if (ch == '\\' && i + 1 < field.size()) {
        char esc = field[++i];
        switch (esc) {
          case 't': out += '\t'; break;
          case 'n': out += '\n'; break;
          case 'r': out += '\r'; break;
          default: out += esc; break;
        }
      } else if (ch == '"') {
        break;
      } else {
        out += ch;
      }
    }
    term.value = std::move(out);
    return term;
  }
  term.value = field;
  return term;
}

Term parse_json_term(const nlohmann::json& binding, const std::string& var) {
  Term term;
  auto it = binding.find(var);
  if (it == binding.end() || !it->is_object()) return term;
  term.bound = true;
  term.is_iri = it->value("type", "") == "uri";
  term.value = it->value("value", "");
  return term;
}

struct SparqlRow {
  std::int64_t line = 0;
  Term topic;
  Term entity;
  Term value;
};

class SparqlBuilder {
 public:
  SparqlBuilder(const FeatureScheme& scheme, const SparqlConfig& config,
                std::string source)
      : scheme_(scheme), config_(config), source_(std::move(source)) {}

  void add(const SparqlRow& row) {
    if (!row.topic.bound) {
      throw ParseError(source_, row.line, config_.topic_var, "unbound topic");
    }
    if (!row.entity.bound) {
      throw ParseError(source_, row.line, config_.entity_var,
                       "unbound entity");
    }
    if (config_.strict && !row.entity.is_iri) {
      throw ParseError(source_, row.line, config_.entity_var,
                       "entity '" + row.entity.value + "' is not an IRI",
                       ErrorCode::kNonIriEntity);
    }
    const std::string topic = shorten(row.topic);
    const std::string entity = shorten(row.entity);
    result_.members.topics[topic].insert(entity);

    std::optional<std::string> value;
    if (row.value.bound) {
      std::string raw = shorten(row.value);
      if (auto it = config_.value_map.find(raw); it != config_.value_map.end()) {
        raw = it->second;
      }
      if (scheme_.contains(raw)) {
        value = raw;
      } else if (raw != scheme_.unknown_token()) {
        if (config_.strict) {
          throw ParseError(source_, row.line, config_.value_var,
                           "value '" + raw + "' is not declared for feature '" +
                               scheme_.feature_name() + "'",
                           ErrorCode::kSchemeViolation);
        }
        result_.warnings.push_back(source_ + ":" + std::to_string(row.line) +
                                   ": value '" + raw + "' for entity '" +
                                   entity + "' treated as unknown");
      }
    }

    auto [it, inserted] = values_.try_emplace(entity, value);
    if (!inserted && it->second != value) {
      if (config_.strict) {
        throw ParseError(source_, row.line, config_.value_var,
                         "entity '" + entity + "' has conflicting values",
                         ErrorCode::kSchemeViolation);
      }
      if (it->second) {
        result_.warnings.push_back("entity '" + entity +
                                   "' has conflicting values; labelled unknown");
      }
      it->second = std::nullopt;
    }
  }

  SparqlImport finish() {
    result_.labels = LabelCatalog(scheme_.feature_name());
    for (const auto& [entity, value] : values_) {
      result_.labels.assign(entity, Label{value, Provenance::kKb});
    }
    return std::move(result_);
  }

 private:
  std::string shorten(const Term& term) const {
    return term.is_iri && config_.shorten_iris ? terminal_segment(term.value)
                                               : term.value;
  }

  const FeatureScheme& scheme_;
  const SparqlConfig& config_;
  std::string source_;
  SparqlImport result_;
  std::map<std::string, std::optional<std::string>> values_;
};

SparqlImport parse_sparql_json(std::istream& in, SparqlBuilder& builder,
                               const SparqlConfig& config,
                               const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 1, "json", e.what());
  }
  const auto* bindings = doc.contains("results") &&
                                 doc["results"].contains("bindings")
                             ? &doc["results"]["bindings"]
                             : nullptr;
  if (bindings == nullptr || !bindings->is_array()) {
    throw ParseError(source, 1, "results.bindings", "missing bindings array");
  }
  if (doc.contains("head") && doc["head"].contains("vars")) {
    const auto& vars = doc["head"]["vars"];
    for (const auto* var : {&config.topic_var, &config.entity_var,
                            &config.value_var}) {
      if (std::find(vars.begin(), vars.end(), *var) == vars.end()) {
        throw ParseError(source, 1, *var, "binding column missing from head.vars");
      }
    }
  }
  std::int64_t row_no = 0;
  for (const auto& binding : *bindings) {
    ++row_no;
    SparqlRow row;
    row.line = row_no;
    row.topic = parse_json_term(binding, config.topic_var);
    row.entity = parse_json_term(binding, config.entity_var);
    row.value = parse_json_term(binding, config.value_var);
    builder.add(row);
  }
  return builder.finish();
}

SparqlImport parse_sparql_tsv(std::istream& in, SparqlBuilder& builder,
                              const SparqlConfig& config,
                              const std::string& source) {
  std::string line;
  std::int64_t line_no = 0;
  std::vector<std::string> header;
  std::size_t topic_col = 0, entity_col = 0, value_col = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (header.empty()) {
      for (auto& f : fields) {
        if (!f.empty() && (f.front() == '?' || f.front() == '$')) f.erase(0, 1);
      }
      header = fields;
      auto locate = [&](const std::string& var) {
        auto it = std::find(header.begin(), header.end(), var);
        if (it == header.end()) {
          throw ParseError(source, line_no, var, "binding column missing");
        }
        return static_cast<std::size_t>(it - header.begin());
      };
      topic_col = locate(config.topic_var);
      entity_col = locate(config.entity_var);
      value_col = locate(config.value_var);
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no, "row",
                       "expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()));
    }
    SparqlRow row;
    row.line = line_no;
    row.topic = parse_tsv_term(fields[topic_col]);
    row.entity = parse_tsv_term(fields[entity_col]);
    row.value = parse_tsv_term(fields[value_col]);
    builder.add(row);
  }
  if (header.empty()) {
    throw ParseError(source, line_no, "header", "missing header line");
  }
  return builder.finish();
}

}  // namespace

std::vector<RankedRun> parse_runs(std::istream& in,
                                  const std::string& source_name) {
  TsvReader reader(in, source_name, {"topic_id", "rank", "entity_id"}, 3);
  std::map<std::string, RankedRun> runs;
  std::map<std::string, std::set<std::string>> seen;
  Row row;
  while (reader.next(row)) {
    const std::string& topic = row.fields[0];
    const std::int64_t rank = parse_integer(reader, row, 1, "rank");
    const std::string& entity = row.fields[2];
    RankedRun& run = runs[topic];
    run.topic_id = topic;
    const auto expected = static_cast<std::int64_t>(run.entries.size()) + 1;
    if (rank != expected) {
      throw reader.error(row.line, "rank",
                         rank < expected
                             ? "duplicate rank " + std::to_string(rank) +
                                   " for topic '" + topic + "'"
                             : "rank gap: expected " +
                                   std::to_string(expected) + ", got " +
                                   std::to_string(rank) + " for topic '" +
                                   topic + "'");
    }
    if (!seen[topic].insert(entity).second) {
      throw reader.error(row.line, "entity_id",
                         "duplicate entity '" + entity + "' in topic '" +
                             topic + "'");
    }
    run.entries.push_back(entity);
  }
  std::vector<RankedRun> out;
  out.reserve(runs.size());
  for (auto& [topic, run] : runs) out.push_back(std::move(run));
  return out;
}

LabelCatalog parse_labels(std::istream& in, const FeatureScheme& scheme,
                          const std::string& source_name) {
  TsvReader reader(in, source_name,
                   {"entity_id", "feature_name", "value", "provenance"}, 3);
  LabelCatalog catalog(scheme.feature_name());
  Row row;
  while (reader.next(row)) {
    if (row.fields[1] != scheme.feature_name()) continue;
    Label label;
    const std::string& value = row.fields[2];
    if (value != scheme.unknown_token()) {
      if (!scheme.contains(value)) {
        throw reader.error(row.line, "value",
                           "value '" + value +
                               "' is not declared for feature '" +
                               scheme.feature_name() + "'",
                           ErrorCode::kSchemeViolation);
      }
      label.value = value;
    }
    if (row.fields.size() > 3 && !row.fields[3].empty()) {
      auto provenance = parse_provenance(row.fields[3]);
      if (!provenance) {
        throw reader.error(row.line, "provenance",
                           "unknown provenance '" + row.fields[3] +
                               "' (expected manual, kb or inferred)");
      }
      label.provenance = *provenance;
    }
    try {
      catalog.assign(row.fields[0], label);
    } catch (const Error& e) {
      throw reader.error(row.line, "value", e.what(), e.code());
    }
  }
  return catalog;
}

MembershipTable parse_members(std::istream& in,
                              const std::string& source_name) {
  TsvReader reader(in, source_name, {"topic_id", "entity_id"}, 2);
  MembershipTable table;
  Row row;
  while (reader.next(row)) {
    table.topics[row.fields[0]].insert(row.fields[1]);
  }
  return table;
}

std::vector<TargetCounts> parse_target_counts(std::istream& in,
                                              const FeatureScheme& scheme,
                                              const std::string& source_name) {
  TsvReader reader(in, source_name,
                   {"topic_id", "feature_name", "value", "count", "total"}, 4);
  std::map<std::string, TargetCounts> topics;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> declared_totals;
  std::map<std::string, std::int64_t> last_line;
  Row row;
  while (reader.next(row)) {
    if (row.fields[1] != scheme.feature_name()) continue;
    const std::string& topic = row.fields[0];
    const std::string& value = row.fields[2];
    const bool is_unknown = value == scheme.unknown_token();
    if (!is_unknown && !scheme.contains(value)) {
      throw reader.error(row.line, "value",
                         "value '" + value + "' is not declared for feature '" +
                             scheme.feature_name() + "'",
                         ErrorCode::kSchemeViolation);
    }
    const std::int64_t count = parse_integer(reader, row, 3, "count");
    if (count < 0) {
      throw reader.error(row.line, "count",
                         "negative count " + std::to_string(count));
    }
    TargetCounts& target = topics[topic];
    if (target.topic_id.empty()) {
      target.topic_id = topic;
      target.feature_name = scheme.feature_name();
      for (const auto& v : scheme.values()) target.counts[v] = 0;
    }
    auto it = declared_totals.try_emplace(topic, -1, 0).first;
    if (row.fields.size() > 4 && !row.fields[4].empty()) {
      const std::int64_t total = parse_integer(reader, row, 4, "total");
      if (it->second.first >= 0 && it->second.first != total) {
        throw reader.error(row.line, "total",
                           "inconsistent totals for topic '" + topic + "'");
      }
      it->second = {total, row.line};
    }
    if (last_line.count(topic + '\t' + value)) {
      throw reader.error(row.line, "value",
                         "duplicate count for value '" + value +
                             "' in topic '" + topic + "'");
    }
    last_line[topic + '\t' + value] = row.line;
    if (is_unknown) {
      target.unknown = count;
      continue;
    }
    target.counts[value] = count;
    target.total += count;
  }
  std::vector<TargetCounts> out;
  out.reserve(topics.size());
  for (auto& [topic, target] : topics) {
    const auto& [declared, line] = declared_totals[topic];
    if (declared >= 0 && declared != target.total) {
      throw ParseError(source_name, line, "total",
                       "declared total " + std::to_string(declared) +
                           " does not match recomputed " +
                           std::to_string(target.total) + " for topic '" +
                           topic + "'");
    }
    out.push_back(std::move(target));
  }
  return out;
}

std::vector<TargetCounts> counts_from_membership(
    const MembershipTable& members, const LabelCatalog& labels,
    const FeatureScheme& scheme, std::vector<SkippedTopic>* skipped) {
  std::vector<TargetCounts> out;
  for (const auto& [topic, entities] : members.topics) {
    TargetCounts target;
    target.topic_id = topic;
    target.feature_name = scheme.feature_name();
    for (const auto& v : scheme.values()) target.counts[v] = 0;
    for (const auto& entity : entities) {
      auto value = labels.value_of(entity);
      if (value && scheme.contains(*value)) {
        ++target.counts[*value];
        ++target.total;
      } else {
        ++target.unknown;
      }
    }
    if (target.total == 0) {
      if (skipped != nullptr) {
        skipped->push_back({"", topic, "empty-population"});
        continue;
      }
      throw Error(ErrorCode::kEmptyPopulation,
                  "topic '" + topic + "' has no labelled members");
    }
    out.push_back(std::move(target));
  }
  return out;
}

SparqlImport parse_sparql_results(std::istream& in, const FeatureScheme& scheme,
                                  const SparqlConfig& config,
                                  const std::string& source_name) {
  SparqlBuilder builder(scheme, config, source_name);
  in >> std::ws;
  if (in.peek() == '{') {
    return parse_sparql_json(in, builder, config, source_name);
  }
  return parse_sparql_tsv(in, builder, config, source_name);
}

MembershipTable filter_topics(const MembershipTable& members,
                              const std::set<std::string>& topics) {
  MembershipTable out;
  for (const auto& [topic, entities] : members.topics) {
    if (topics.count(topic)) out.topics.emplace(topic, entities);
  }
  return out;
}

void write_runs(std::ostream& out, const std::vector<RankedRun>& runs) {
  out << "topic_id\trank\tentity_id\n";
  for (const auto& run : runs) {
    for (std::size_t i = 0; i < run.entries.size(); ++i) {
      out << run.topic_id << '\t' << i + 1 << '\t' << run.entries[i] << '\n';
    }
  }
}

void write_labels(std::ostream& out, const LabelCatalog& labels,
                  const FeatureScheme& scheme) {
  out << "entity_id\tfeature_name\tvalue\tprovenance\n";
  for (const auto& [entity, label] : labels.assignments()) {
    out << entity << '\t' << labels.feature_name() << '\t'
        << label.value.value_or(scheme.unknown_token()) << '\t'
        << provenance_name(label.provenance) << '\n';
  }
}

void write_members(std::ostream& out, const MembershipTable& members) {
  out << "topic_id\tentity_id\n";
  for (const auto& [topic, entities] : members.topics) {
    for (const auto& entity : entities) out << topic << '\t' << entity << '\n';
  }
}

void write_target_counts(std::ostream& out,
                         const std::vector<TargetCounts>& targets,
                         const FeatureScheme& scheme) {
  out << "topic_id\tfeature_name\tvalue\tcount\n";
  for (const auto& target : targets) {
    for (const auto& [value, count] : target.counts) {
      out << target.topic_id << '\t' << target.feature_name << '\t' << value
          << '\t' << count << '\n';
    }
    if (target.unknown > 0) {
      out << target.topic_id << '\t' << target.feature_name << '\t'
          << scheme.unknown_token() << '\t' << target.unknown << '\n';
    }
  }
}

}  // namespace biaslens

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "biaslens/types.hpp"

namespace biaslens {

// Tab-separated inputs. Every reader skips '#' comment lines and accepts one
// header line whose fields equal the canonical column names; fields may not
// contain tabs and there is no quoting. Errors are ParseError carrying the
// source name, 1-based line number and offending field.

// topic_id, rank, entity_id. Ranks of a topic must appear in order starting
// at 1. Runs come back sorted by topic_id.
std::vector<RankedRun> parse_runs(std::istream& in,
                                  const std::string& source_name = "<runs>");

// entity_id, feature_name, value[, provenance]. Lines for other features are
// skipped. The scheme's unknown token records an explicit unknown.
LabelCatalog parse_labels(std::istream& in, const FeatureScheme& scheme,
                          const std::string& source_name = "<labels>");

// topic_id, entity_id.
MembershipTable parse_members(std::istream& in,
                              const std::string& source_name = "<members>");

// topic_id, feature_name, value, count[, total]. Values of the scheme that
// are absent for a topic count as zero; an optional total column must match
// the recomputed sum of its topic. A row carrying the unknown token records
// unlabelled members, which stay out of the total.
std::vector<TargetCounts> parse_target_counts(
    std::istream& in, const FeatureScheme& scheme,
    const std::string& source_name = "<targets>");

// Value counts over the labelled members of each topic. Unknown members are
// tallied in TargetCounts::unknown and left out of the total. A topic without
// labelled members throws kEmptyPopulation, or is appended to `skipped` with
// reason "empty-population" when that list is provided.
std::vector<TargetCounts> counts_from_membership(
    const MembershipTable& members, const LabelCatalog& labels,
    const FeatureScheme& scheme, std::vector<SkippedTopic>* skipped = nullptr);

struct SparqlConfig {
  std::string topic_var = "topic";
  std::string entity_var = "entity";
  std::string value_var = "value";
  // Keep only the segment after the last '/' or '#' of IRIs.
  bool shorten_iris = true;
  // Reject entity bindings that are not IRIs and values outside the scheme.
  bool strict = false;
  // Raw (shortened) value -> scheme value, e.g. Q6581072 -> female.
  std::map<std::string, std::string> value_map;
};

struct SparqlImport {
  MembershipTable members;
  LabelCatalog labels;
  std::vector<std::string> warnings;
};

// W3C SPARQL results, JSON or TSV (detected from the first byte). Rows with
// an unbound or unmapped value label the entity as unknown.
SparqlImport parse_sparql_results(std::istream& in, const FeatureScheme& scheme,
                                  const SparqlConfig& config,
                                  const std::string& source_name = "<sparql>");

MembershipTable filter_topics(const MembershipTable& members,
                              const std::set<std::string>& topics);

void write_runs(std::ostream& out, const std::vector<RankedRun>& runs);
void write_labels(std::ostream& out, const LabelCatalog& labels,
                  const FeatureScheme& scheme);
void write_members(std::ostream& out, const MembershipTable& members);
void write_target_counts(std::ostream& out,
                         const std::vector<TargetCounts>& targets,
                         const FeatureScheme& scheme);

}  // namespace biaslens

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biaslens/ratio.hpp"

namespace biaslens {

// A categorical feature and its admissible values. Schemes with two values
// get the binary symmetry guarantees; larger ones are evaluated one value
// against the rest.
class FeatureScheme {
 public:
  FeatureScheme() = default;
  // Throws Error(kSchemeViolation) on fewer than two values, duplicates,
  // empty strings or an unknown token that collides with a value.
  FeatureScheme(std::string feature_name, std::vector<std::string> values,
                std::string unknown_token = "unknown");

  const std::string& feature_name() const { return feature_name_; }
  const std::vector<std::string>& values() const { return values_; }
  const std::string& unknown_token() const { return unknown_token_; }

  bool contains(std::string_view value) const;
  bool is_binary() const { return values_.size() == 2; }

  // Throws Error(kSchemeViolation) when `value` is not declared.
  void require(std::string_view value) const;

 private:
  std::string feature_name_;
  std::vector<std::string> values_;
  std::string unknown_token_ = "unknown";
};

struct RankedRun {
  std::string topic_id;
  // entries[i] holds the entity shown at rank i + 1.
  std::vector<std::string> entries;

  friend bool operator==(const RankedRun&, const RankedRun&) = default;
};

enum class Provenance { kInferred = 0, kKb = 1, kManual = 2 };

const char* provenance_name(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view text);

struct Label {
  // nullopt marks an explicit unknown.
  std::optional<std::string> value;
  Provenance provenance = Provenance::kKb;

  friend bool operator==(const Label&, const Label&) = default;
};

struct LabelConflict {
  std::string entity_id;
  Label kept;
  Label overridden;

  friend bool operator==(const LabelConflict&, const LabelConflict&) = default;
};

class LabelCatalog {
 public:
  LabelCatalog() = default;
  explicit LabelCatalog(std::string feature_name)
      : feature_name_(std::move(feature_name)) {}

  const std::string& feature_name() const { return feature_name_; }
  const std::map<std::string, Label>& assignments() const {
    return assignments_;
  }
  const std::vector<LabelConflict>& conflicts() const { return conflicts_; }

  // Applies the provenance priority manual > kb > inferred. A conflicting
  // assignment at equal priority throws Error(kSchemeViolation).
  void assign(const std::string& entity_id, Label label);

  // Returns nullptr for entities the catalog has never seen.
  const Label* find(const std::string& entity_id) const;
  // Value for the entity, nullopt when missing or explicitly unknown.
  std::optional<std::string> value_of(const std::string& entity_id) const;

  // Adds every assignment from `other` through assign().
  void merge(const LabelCatalog& other);

  friend bool operator==(const LabelCatalog& a, const LabelCatalog& b) {
    return a.feature_name_ == b.feature_name_ &&
           a.assignments_ == b.assignments_;
  }

 private:
  std::string feature_name_;
  std::map<std::string, Label> assignments_;
  std::vector<LabelConflict> conflicts_;
};

// Population counts of each feature value over one topic's reference set.
struct TargetCounts {
  std::string topic_id;
  std::string feature_name;
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;
  // Members without a label; reported but excluded from `total`.
  std::int64_t unknown = 0;

  std::int64_t count(const std::string& value) const {
    auto it = counts.find(value);
    return it == counts.end() ? 0 : it->second;
  }

  friend bool operator==(const TargetCounts&, const TargetCounts&) = default;
};

// topic -> population members.
struct MembershipTable {
  std::map<std::string, std::set<std::string>> topics;

  friend bool operator==(const MembershipTable&,
                         const MembershipTable&) = default;
};

struct BiasRecord {
  std::string source;
  std::string topic_id;
  std::string value;
  std::int64_t cutoff_requested = 0;
  std::int64_t cutoff_effective = 0;
  Ratio model_ratio;             // k / m
  Ratio target_ratio_raw;        // counts[c] / total
  Ratio delta;                   // frac(target_ratio_raw * m)
  Ratio target_ratio_at_cutoff;  // ideal count / m
  Ratio bias;                    // model - ideal, over m
  std::int64_t unknown_in_window = 0;

  std::int64_t population() const { return target_ratio_raw.den(); }

  friend bool operator==(const BiasRecord& a, const BiasRecord& b);
};

enum class SdMode { kSample, kPopulation };

const char* sd_mode_name(SdMode mode);

struct BiasSummary {
  std::string value;
  std::string source;
  std::int64_t topic_count = 0;
  double mb = 0.0;
  double sb = 0.0;
  double mab = 0.0;
  Ratio min_bias;
  Ratio max_bias;
  SdMode sd_mode = SdMode::kSample;
  // Sample SD of one topic is undefined; reported as 0 with this flag set.
  bool single_sample = false;

  friend bool operator==(const BiasSummary&, const BiasSummary&) = default;
};

struct SkippedTopic {
  std::string source;
  std::string topic_id;
  std::string reason;

  friend bool operator==(const SkippedTopic&, const SkippedTopic&) = default;
  friend auto operator<=>(const SkippedTopic&, const SkippedTopic&) = default;
};

}  // namespace biaslens

#include "biaslens/types.hpp"

#include <algorithm>
#include <set>

#include "biaslens/error.hpp"

namespace biaslens {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kSchemeViolation: return "scheme-violation";
    case ErrorCode::kEmptyPopulation: return "empty-population";
    case ErrorCode::kEmptyRun: return "empty-run";
    case ErrorCode::kUnlabeledEntity: return "unlabeled-entity";
    case ErrorCode::kTopicMismatch: return "topic-mismatch";
    case ErrorCode::kEmptyAggregate: return "empty-aggregate";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kSchemaVersion: return "schema-version";
    case ErrorCode::kNonIriEntity: return "non-iri-entity";
    case ErrorCode::kEmptyJoin: return "empty-join";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

ParseError::ParseError(std::string file, std::int64_t line, std::string field,
                       const std::string& detail, ErrorCode code)
    : Error(code, file + ":" + std::to_string(line) + ": field '" + field +
                      "': " + detail),
      file_(std::move(file)),
      line_(line),
      field_(std::move(field)) {}

FeatureScheme::FeatureScheme(std::string feature_name,
                             std::vector<std::string> values,
                             std::string unknown_token)
    : feature_name_(std::move(feature_name)),
      values_(std::move(values)),
      unknown_token_(std::move(unknown_token)) {
  if (feature_name_.empty()) {
    throw Error(ErrorCode::kSchemeViolation, "feature name is empty");
  }
  if (values_.size() < 2) {
    throw Error(ErrorCode::kSchemeViolation,
                "feature '" + feature_name_ + "' needs at least two values");
  }
  std::set<std::string> seen;
  for (const auto& v : values_) {
    if (v.empty()) {
      throw Error(ErrorCode::kSchemeViolation, "empty feature value");
    }
    if (!seen.insert(v).second) {
      throw Error(ErrorCode::kSchemeViolation,
                  "duplicate feature value '" + v + "'");
    }
  }
  if (unknown_token_.empty() || seen.count(unknown_token_)) {
    throw Error(ErrorCode::kSchemeViolation,
                "unknown token '" + unknown_token_ +
                    "' must be non-empty and distinct from every value");
  }
}

bool FeatureScheme::contains(std::string_view value) const {
  return std::find(values_.begin(), values_.end(), value) != values_.end();
}

void FeatureScheme::require(std::string_view value) const {
  if (!contains(value)) {
    throw Error(ErrorCode::kSchemeViolation,
                "value '" + std::string(value) +
                    "' is not declared for feature '" + feature_name_ + "'");
  }
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kInferred: return "inferred";
    case Provenance::kKb: return "kb";
    case Provenance::kManual: return "manual";
  }
  return "kb";
}

std::optional<Provenance> parse_provenance(std::string_view text) {
  if (text == "inferred") return Provenance::kInferred;
  if (text == "kb") return Provenance::kKb;
  if (text == "manual") return Provenance::kManual;
  return std::nullopt;
}

void LabelCatalog::assign(const std::string& entity_id, Label label) {
  auto [it, inserted] = assignments_.try_emplace(entity_id, label);
  if (inserted) return;
  Label& current = it->second;
  if (current.value == label.value) {
    current.provenance = std::max(current.provenance, label.provenance);
    return;
  }
  if (current.provenance == label.provenance) {
    throw Error(ErrorCode::kSchemeViolation,
                "entity '" + entity_id + "' has conflicting " +
                    provenance_name(label.provenance) + " labels");
  }
  if (label.provenance > current.provenance) {
    conflicts_.push_back({entity_id, label, current});
    current = label;
  } else {
    conflicts_.push_back({entity_id, current, label});
  }
}

const Label* LabelCatalog::find(const std::string& entity_id) const {
  auto it = assignments_.find(entity_id);
  return it == assignments_.end() ? nullptr : &it->second;
}

std::optional<std::string> LabelCatalog::value_of(
    const std::string& entity_id) const {
  const Label* label = find(entity_id);
  if (label == nullptr) return std::nullopt;
  return label->value;
}

void LabelCatalog::merge(const LabelCatalog& other) {
  for (const auto& [entity, label] : other.assignments_) {
    assign(entity, label);
  }
  conflicts_.insert(conflicts_.end(), other.conflicts_.begin(),
                    other.conflicts_.end());
}

bool operator==(const BiasRecord& a, const BiasRecord& b) {
  return a.source == b.source && a.topic_id == b.topic_id &&
         a.value == b.value && a.cutoff_requested == b.cutoff_requested &&
         a.cutoff_effective == b.cutoff_effective &&
         identical(a.model_ratio, b.model_ratio) &&
         identical(a.target_ratio_raw, b.target_ratio_raw) &&
         identical(a.delta, b.delta) &&
         identical(a.target_ratio_at_cutoff, b.target_ratio_at_cutoff) &&
         identical(a.bias, b.bias) &&
         a.unknown_in_window == b.unknown_in_window;
}

const char* sd_mode_name(SdMode mode) {
  return mode == SdMode::kSample ? "sample" : "population";
}

}  // namespace biaslens

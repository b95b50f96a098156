#include "biaslens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "biaslens/error.hpp"
#include "hash.hpp"

namespace biaslens {
namespace {

void require_positive_cutoff(std::int64_t n) {
  if (n < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "cutoff must be >= 1, got " + std::to_string(n));
  }
}

void require_unit_interval(const Ratio& r, const char* what) {
  if (r < Ratio(0, 1) || r > Ratio(1, 1)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " " + r.to_string() +
                    " is outside [0, 1]");
  }
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace

Ratio target_ratio(const TargetCounts& counts, const FeatureScheme& scheme,
                   std::string_view c) {
  scheme.require(c);
  if (counts.total < 1) {
    throw Error(ErrorCode::kEmptyPopulation,
                "topic '" + counts.topic_id + "' has an empty population");
  }
  std::int64_t k = counts.count(std::string(c));
  if (k < 0 || k > counts.total) {
    throw Error(ErrorCode::kInvalidArgument,
                "topic '" + counts.topic_id + "' count for '" +
                    std::string(c) + "' is outside [0, total]");
  }
  return Ratio(k, counts.total);
}

Ratio naive_target_ratio_at_n(const RankedRun& run, const LabelCatalog& labels,
                              std::string_view c, std::int64_t n) {
  return model_ratio_at_n(run, labels, c, n, false).ratio;
}

WindowCount model_ratio_at_n(const RankedRun& run, const LabelCatalog& labels,
                             std::string_view c, std::int64_t n, bool strict) {
  require_positive_cutoff(n);
  if (run.entries.empty()) {
    throw Error(ErrorCode::kEmptyRun,
                "run for topic '" + run.topic_id + "' is empty");
  }
  const auto m = std::min<std::int64_t>(
      n, static_cast<std::int64_t>(run.entries.size()));
  std::int64_t hits = 0;
  std::int64_t unknown = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    auto value = labels.value_of(run.entries[i]);
    if (!value) {
      if (strict) {
        throw Error(ErrorCode::kUnlabeledEntity,
                    "topic '" + run.topic_id + "': entity '" +
                        run.entries[i] + "' at rank " + std::to_string(i + 1) +
                        " has no '" + labels.feature_name() + "' label");
      }
      ++unknown;
    } else if (*value == c) {
      ++hits;
    }
  }
  return {Ratio(hits, m), m, unknown};
}

IdealTarget ideal_target_ratio_at_n(const Ratio& target, const Ratio& model,
                                    std::int64_t m) {
  require_positive_cutoff(m);
  require_unit_interval(target, "target ratio");
  require_unit_interval(model, "model ratio");
  if (!model.is_on_grid(m)) {
    throw Error(ErrorCode::kInvalidArgument,
                "model ratio " + model.to_string() + " is not on the 1/" +
                    std::to_string(m) + " grid");
  }
  const Ratio scaled = target * m;
  const Ratio delta = scaled.fractional_part();
  const std::int64_t lo = scaled.floor();
  const Ratio half(1, 2);

  std::int64_t ideal = lo;
  if (delta > half) {
    ideal = lo + 1;
  } else if (delta == half) {
    // Candidates lo and lo + 1 sit 1/m apart and the model count is an
    // integer, so exactly one of them is nearest.
    const std::int64_t model_count = model.over(m).num();
    ideal = model_count <= lo ? lo : lo + 1;
  }
  return {Ratio(ideal, m), delta};
}

BiasRecord bias_at_n(const RankedRun& run, const LabelCatalog& labels,
                     const TargetCounts& target, const FeatureScheme& scheme,
                     std::string_view c, std::int64_t n,
                     const EvalOptions& options) {
  if (run.topic_id != target.topic_id) {
    throw Error(ErrorCode::kTopicMismatch,
                "run topic '" + run.topic_id + "' does not match target '" +
                    target.topic_id + "'");
  }
  if (labels.feature_name() != scheme.feature_name() ||
      target.feature_name != scheme.feature_name()) {
    throw Error(ErrorCode::kSchemeViolation,
                "labels, target and scheme disagree on the feature for topic '" +
                    run.topic_id + "'");
  }
  const Ratio raw = target_ratio(target, scheme, c);
  const WindowCount window = model_ratio_at_n(run, labels, c, n, options.strict);
  const IdealTarget ideal =
      ideal_target_ratio_at_n(raw, window.ratio, window.window);

  BiasRecord record;
  record.source = options.source;
  record.topic_id = run.topic_id;
  record.value = std::string(c);
  record.cutoff_requested = n;
  record.cutoff_effective = window.window;
  record.model_ratio = window.ratio;
  record.target_ratio_raw = raw;
  record.delta = ideal.delta;
  record.target_ratio_at_cutoff = ideal.ratio;
  record.bias = window.ratio - ideal.ratio;
  record.unknown_in_window = window.unknown_in_window;
  return record;
}

BiasSummary aggregate(std::span<const BiasRecord> records, std::string_view c,
                      std::string_view source_label, SdMode sd_mode) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyAggregate,
                "no records to aggregate for value '" + std::string(c) + "'");
  }
  BiasSummary summary;
  summary.value = std::string(c);
  summary.source = std::string(source_label);
  summary.topic_count = static_cast<std::int64_t>(records.size());
  summary.sd_mode = sd_mode;
  summary.min_bias = records.front().bias;
  summary.max_bias = records.front().bias;

  CompensatedSum sum;
  CompensatedSum abs_sum;
  for (const auto& r : records) {
    if (r.value != c) {
      throw Error(ErrorCode::kInvalidArgument,
                  "record for topic '" + r.topic_id + "' has value '" +
                      r.value + "', expected '" + std::string(c) + "'");
    }
    const double b = r.bias.value();
    sum.add(b);
    abs_sum.add(std::abs(b));
    if (r.bias < summary.min_bias) summary.min_bias = r.bias;
    if (r.bias > summary.max_bias) summary.max_bias = r.bias;
  }
  const auto count = static_cast<double>(records.size());
  summary.mb = sum.value() / count;
  summary.mab = abs_sum.value() / count;

  CompensatedSum squares;
  for (const auto& r : records) {
    const double d = r.bias.value() - summary.mb;
    squares.add(d * d);
  }
  if (sd_mode == SdMode::kPopulation) {
    summary.sb = std::sqrt(squares.value() / count);
  } else if (records.size() == 1) {
    summary.sb = 0.0;
    summary.single_sample = true;
  } else {
    summary.sb = std::sqrt(squares.value() / (count - 1.0));
  }
  return summary;
}

SyntheticTopic simulate_run(const FeatureScheme& scheme, std::string_view c,
                            const std::string& topic_id, const Ratio& target,
                            const Ratio& bias, std::int64_t m,
                            std::uint64_t seed) {
  scheme.require(c);
  require_positive_cutoff(m);
  if (target < Ratio(0, 1) || target > Ratio(1, 1)) {
    throw Error(ErrorCode::kInfeasible,
                "topic '" + topic_id + "': target ratio " + target.to_string() +
                    " violates 0 <= target <= 1");
  }
  if (!bias.is_on_grid(m)) {
    throw Error(ErrorCode::kInfeasible,
                "topic '" + topic_id + "': bias " + bias.to_string() +
                    " is not on the 1/" + std::to_string(m) + " grid");
  }
  const std::int64_t bias_count = bias.over(m).num();

  // Find the model count k with k - ideal(k) == bias_count. Outside the
  // tie case the ideal count is fixed; at a tie it follows k.
  const Ratio scaled = target * m;
  const std::int64_t lo = scaled.floor();
  const Ratio delta = scaled.fractional_part();
  std::int64_t k = 0;
  if (delta < Ratio(1, 2)) {
    k = lo + bias_count;
  } else if (delta > Ratio(1, 2)) {
    k = lo + 1 + bias_count;
  } else {
    k = bias_count <= 0 ? lo + bias_count : lo + 1 + bias_count;
  }
  if (k < 0) {
    throw Error(ErrorCode::kInfeasible,
                "topic '" + topic_id + "': model count " + std::to_string(k) +
                    " violates model count >= 0");
  }
  if (k > m) {
    throw Error(ErrorCode::kInfeasible,
                "topic '" + topic_id + "': model count " + std::to_string(k) +
                    " violates model count <= window " + std::to_string(m));
  }

  const std::string* other = nullptr;
  for (const auto& v : scheme.values()) {
    if (v != c) {
      other = &v;
      break;
    }
  }

  SyntheticTopic topic;
  topic.run.topic_id = topic_id;
  topic.labels = LabelCatalog(scheme.feature_name());
  topic.target.topic_id = topic_id;
  topic.target.feature_name = scheme.feature_name();
  for (const auto& v : scheme.values()) topic.target.counts[v] = 0;
  topic.target.counts[std::string(c)] = target.num();
  topic.target.counts[*other] = target.den() - target.num();
  topic.target.total = target.den();

  // Place the k c-labelled entities at seeded ranks (Fisher-Yates).
  std::vector<bool> is_c(static_cast<std::size_t>(m), false);
  std::fill_n(is_c.begin(), k, true);
  std::mt19937_64 rng(seed ^ detail::fnv1a(topic_id));
  for (std::int64_t i = m - 1; i > 0; --i) {
    auto j = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(is_c[i], is_c[j]);
  }
  for (std::int64_t i = 0; i < m; ++i) {
    std::string entity = topic_id + "/e" + std::to_string(i + 1);
    topic.labels.assign(entity,
                        Label{is_c[i] ? std::string(c) : *other,
                              Provenance::kKb});
    topic.run.entries.push_back(std::move(entity));
  }
  return topic;
}

}  // namespace biaslens

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "biaslens/ratio.hpp"
#include "biaslens/types.hpp"

namespace biaslens {

// Share of value `c` in the reference population: counts[c] / total.
Ratio target_ratio(const TargetCounts& counts, const FeatureScheme& scheme,
                   std::string_view c);

// Share of `c` among the top min(n, |run|) results, read as if the window
// were a sample of the population. Diagnostic only; never feeds the bias.
Ratio naive_target_ratio_at_n(const RankedRun& run, const LabelCatalog& labels,
                              std::string_view c, std::int64_t n);

struct WindowCount {
  Ratio ratio;  // count / window
  std::int64_t window = 0;
  std::int64_t unknown_in_window = 0;
};

// Model ratio over the effective window m = min(n, |run|). Unlabeled
// documents stay in the denominator and join no numerator; with `strict`
// any unlabeled document in the window throws kUnlabeledEntity.
WindowCount model_ratio_at_n(const RankedRun& run, const LabelCatalog& labels,
                             std::string_view c, std::int64_t n,
                             bool strict = false);

struct IdealTarget {
  Ratio ratio;  // over m
  Ratio delta;  // frac(target * m)
};

// Rounds the population ratio onto the 1/m grid. Fractional parts below
// one half round down, above one half round up, and an exact half picks
// the candidate nearest the observed model ratio.
IdealTarget ideal_target_ratio_at_n(const Ratio& target, const Ratio& model,
                                    std::int64_t m);

struct EvalOptions {
  bool strict = false;
  std::string source;
};

// Signed representation bias of `c` for one topic: model ratio minus the
// ideal target ratio. Positive means `c` is over-represented.
BiasRecord bias_at_n(const RankedRun& run, const LabelCatalog& labels,
                     const TargetCounts& target, const FeatureScheme& scheme,
                     std::string_view c, std::int64_t n,
                     const EvalOptions& options = {});

// MB, SB, MAB, min and max of the bias across `records`, all of which must
// carry value `c`. Topics are weighted equally.
BiasSummary aggregate(std::span<const BiasRecord> records, std::string_view c,
                      std::string_view source_label,
                      SdMode sd_mode = SdMode::kSample);

struct SyntheticTopic {
  RankedRun run;
  LabelCatalog labels;
  TargetCounts target;
};

// Builds a topic whose measured bias at cutoff m is exactly `bias`.
// `target` fixes the population as target.num() of `c` over target.den().
// Throws kInfeasible when the implied model count falls outside [0, m].
SyntheticTopic simulate_run(const FeatureScheme& scheme, std::string_view c,
                            const std::string& topic_id, const Ratio& target,
                            const Ratio& bias, std::int64_t m,
                            std::uint64_t seed);

}  // namespace biaslens

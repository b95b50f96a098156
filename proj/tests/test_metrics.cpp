#include <doctest.h>

#include <random>
#include <set>
#include <vector>

#include "biaslens/error.hpp"
#include "biaslens/metrics.hpp"
#include "fixture_util.hpp"
#include "oracles.hpp"

using namespace biaslens;
using biaslens::testing::gender_scheme;
using biaslens::testing::make_topic;

namespace {

BiasRecord measure(std::int64_t female, std::int64_t window,
                   std::int64_t target_female, std::int64_t target_total,
                   const std::string& c = "female", std::int64_t n = 10) {
  auto t = make_topic("t", female, window, target_female, target_total);
  return bias_at_n(t.run, t.labels, t.target, gender_scheme(), c, n);
}

}  // namespace

TEST_SUITE("ratio") {
  TEST_CASE("parse accepts fractions and decimals") {
    CHECK(identical(Ratio::parse("4/10"), Ratio(4, 10)));
    CHECK(Ratio::parse("-0.042") == Ratio(-42, 1000));
    CHECK(Ratio::parse("0.5") == Ratio(1, 2));
    CHECK(Ratio::parse("1") == Ratio(1, 1));
    CHECK(Ratio::parse(".25") == Ratio(1, 4));
    CHECK_THROWS_AS(Ratio::parse("1/0"), Error);
    CHECK_THROWS_AS(Ratio::parse("abc"), Error);
    CHECK_THROWS_AS(Ratio::parse("0.5.1"), Error);
  }

  TEST_CASE("floor, ceil and fractional part on negative values") {
    Ratio r(-7, 2);
    CHECK(r.floor() == -4);
    CHECK(r.ceil() == -3);
    CHECK(identical(r.fractional_part(), Ratio(1, 2)));
    CHECK(identical(Ratio(33, 100) * 10, Ratio(330, 100)));
    CHECK(identical((Ratio(33, 100) * 10).fractional_part(), Ratio(30, 100)));
  }

  TEST_CASE("grid helpers") {
    CHECK(Ratio(1, 2).is_on_grid(10));
    CHECK_FALSE(Ratio(1, 3).is_on_grid(10));
    CHECK(identical(Ratio(1, 2).over(10), Ratio(5, 10)));
    CHECK_THROWS(Ratio(1, 3).over(10));
    CHECK(Ratio(4, 10).to_string() == "4/10");
  }
}

TEST_SUITE("target_ratio") {
  TEST_CASE("population shares") {
    const auto scheme = gender_scheme();
    auto half = make_topic("t", 0, 1, 5, 10).target;
    CHECK(target_ratio(half, scheme, "female") == Ratio(1, 2));
    auto none = make_topic("t", 0, 1, 0, 7).target;
    CHECK(target_ratio(none, scheme, "female") == Ratio(0, 1));
  }

  TEST_CASE("ten-entity fixture matches enumeration") {
    const auto scheme = gender_scheme();
    std::vector<std::string> members{"f", "m", "m", "f", "m",
                                     "m", "f", "m", "m", "m"};
    TargetCounts counts;
    counts.topic_id = "t";
    counts.feature_name = "gender";
    for (const auto& g : members) {
      ++counts.counts[g == "f" ? "female" : "male"];
      ++counts.total;
    }
    const auto r = target_ratio(counts, scheme, "female");
    CHECK(identical(r, Ratio(3, 10)));
    CHECK(r.value() == doctest::Approx(0.3));
  }

  TEST_CASE("errors") {
    const auto scheme = gender_scheme();
    auto t = make_topic("t", 0, 1, 5, 10).target;
    try {
      target_ratio(t, scheme, "other");
      FAIL("expected a scheme violation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSchemeViolation);
    }
    t.total = 0;
    t.counts = {{"female", 0}, {"male", 0}};
    try {
      target_ratio(t, scheme, "female");
      FAIL("expected an empty population");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyPopulation);
    }
  }
}

TEST_SUITE("window ratios") {
  TEST_CASE("naive target ratio at n") {
    auto t = make_topic("t", 6, 10, 1, 2);
    CHECK(naive_target_ratio_at_n(t.run, t.labels, "female", 10) == Ratio(6, 10));

    auto saturated = make_topic("t", 7, 7, 1, 2);
    const auto r = naive_target_ratio_at_n(saturated.run, saturated.labels,
                                           "female", 10);
    CHECK(identical(r, Ratio(7, 7)));

    // five c at odd ranks in a run of ten, cut at five
    RankedRun run{"t", {}};
    LabelCatalog labels("gender");
    for (int i = 1; i <= 10; ++i) {
      std::string e = "e" + std::to_string(i);
      labels.assign(e, Label{i % 2 == 1 ? "female" : "male", Provenance::kKb});
      run.entries.push_back(e);
    }
    CHECK(identical(naive_target_ratio_at_n(run, labels, "female", 5),
                    Ratio(3, 5)));
  }

  TEST_CASE("model ratio examples") {
    auto announcer = make_topic("announcer", 0, 10, 5, 10);
    auto w = model_ratio_at_n(announcer.run, announcer.labels, "female", 10);
    CHECK(identical(w.ratio, Ratio(0, 10)));

    auto archivist = make_topic("archivist", 9, 10, 1, 10);
    w = model_ratio_at_n(archivist.run, archivist.labels, "female", 10);
    CHECK(identical(w.ratio, Ratio(9, 10)));

    auto short_run = make_topic("t", 4, 8, 1, 2);
    w = model_ratio_at_n(short_run.run, short_run.labels, "female", 10);
    CHECK(identical(w.ratio, Ratio(4, 8)));
    CHECK(w.window == 8);
  }

  TEST_CASE("unknown labels stay in the denominator") {
    auto t = make_topic("t", 3, 10, 1, 2, 2);
    auto w = model_ratio_at_n(t.run, t.labels, "female", 10);
    CHECK(identical(w.ratio, Ratio(3, 10)));
    CHECK(w.unknown_in_window == 2);
    auto m = model_ratio_at_n(t.run, t.labels, "male", 10);
    CHECK(identical(m.ratio, Ratio(5, 10)));

    try {
      model_ratio_at_n(t.run, t.labels, "female", 10, true);
      FAIL("strict mode must reject unlabelled entities");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnlabeledEntity);
      CHECK(e.is_strict_violation());
    }
    // unknowns outside the window are irrelevant
    CHECK_NOTHROW(model_ratio_at_n(t.run, t.labels, "female", 3, true));
  }

  TEST_CASE("empty run and bad cutoff") {
    RankedRun empty{"t", {}};
    LabelCatalog labels("gender");
    try {
      model_ratio_at_n(empty, labels, "female", 10);
      FAIL("expected empty-run");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyRun);
    }
    CHECK_THROWS_AS(naive_target_ratio_at_n(empty, labels, "female", 10), Error);
    auto t = make_topic("t", 1, 2, 1, 2);
    CHECK_THROWS_AS(model_ratio_at_n(t.run, t.labels, "female", 0), Error);
  }
}

TEST_SUITE("ideal_target_ratio_at_n") {
  TEST_CASE("tie resolved toward the model") {
    auto five = ideal_target_ratio_at_n(Ratio(1, 2), Ratio(5, 11), 11);
    CHECK(identical(five.ratio, Ratio(5, 11)));
    CHECK(five.delta == Ratio(1, 2));
    auto six = ideal_target_ratio_at_n(Ratio(1, 2), Ratio(6, 11), 11);
    CHECK(identical(six.ratio, Ratio(6, 11)));
    // far from both candidates the nearer one still wins
    CHECK(identical(ideal_target_ratio_at_n(Ratio(1, 2), Ratio(0, 11), 11).ratio,
                    Ratio(5, 11)));
    CHECK(identical(ideal_target_ratio_at_n(Ratio(1, 2), Ratio(11, 11), 11).ratio,
                    Ratio(6, 11)));
  }

  TEST_CASE("floor, ceiling and degenerate cases") {
    for (std::int64_t k = 0; k <= 10; ++k) {
      auto r = ideal_target_ratio_at_n(Ratio(33, 100), Ratio(k, 10), 10);
      CHECK(identical(r.ratio, Ratio(3, 10)));
      CHECK(r.delta == Ratio(3, 10));
      auto all = ideal_target_ratio_at_n(Ratio(1, 1), Ratio(k, 10), 10);
      CHECK(identical(all.ratio, Ratio(10, 10)));
      CHECK(all.delta == Ratio(0, 1));
      auto up = ideal_target_ratio_at_n(Ratio(37, 100), Ratio(k, 10), 10);
      CHECK(identical(up.ratio, Ratio(4, 10)));
    }
  }

  TEST_CASE("preconditions") {
    CHECK_THROWS_AS(ideal_target_ratio_at_n(Ratio(1, 2), Ratio(1, 3), 10), Error);
    CHECK_THROWS_AS(ideal_target_ratio_at_n(Ratio(3, 2), Ratio(1, 2), 10), Error);
    CHECK_THROWS_AS(ideal_target_ratio_at_n(Ratio(1, 2), Ratio(1, 2), 0), Error);
  }

  TEST_CASE("agrees with the three-case oracle") {
    std::int64_t cases = 0;
    for (std::int64_t p = 0; p <= 100; ++p) {
      for (std::int64_t m = 1; m <= 20; ++m) {
        for (std::int64_t k = 0; k <= m; ++k) {
          auto got = ideal_target_ratio_at_n(Ratio(p, 100), Ratio(k, m), m);
          REQUIRE(got.ratio.den() == m);
          REQUIRE(got.ratio.num() == oracle::ideal_count(p, 100, m, k));
          ++cases;
        }
      }
    }
    CHECK(cases == 101 * 230);
  }

  TEST_CASE("distance to the raw ratio is at most half a grid step") {
    for (std::int64_t p = 0; p <= 100; ++p) {
      for (std::int64_t m = 1; m <= 20; ++m) {
        for (std::int64_t k = 0; k <= m; ++k) {
          const Ratio raw(p, 100);
          auto got = ideal_target_ratio_at_n(raw, Ratio(k, m), m);
          const Ratio gap = (got.ratio - raw).abs();
          CHECK(gap <= Ratio(1, 2 * m));
          if (got.delta == Ratio(1, 2)) CHECK(gap == Ratio(1, 2 * m));
        }
      }
    }
  }
}

TEST_SUITE("bias_at_n") {
  TEST_CASE("published rows") {
    auto announcer = measure(0, 10, 5, 10);
    CHECK(identical(announcer.bias, Ratio(-5, 10)));
    auto archivist = measure(9, 10, 1, 10);
    CHECK(identical(archivist.bias, Ratio(8, 10)));
    auto librarian = measure(2, 10, 6, 10);
    CHECK(identical(librarian.bias, Ratio(-4, 10)));
    auto fair = measure(5, 10, 5, 10);
    CHECK(fair.bias == Ratio(0, 1));
  }

  TEST_CASE("record carries every intermediate quantity") {
    auto r = measure(4, 8, 33, 100);
    CHECK(r.cutoff_requested == 10);
    CHECK(r.cutoff_effective == 8);
    CHECK(identical(r.model_ratio, Ratio(4, 8)));
    CHECK(identical(r.target_ratio_raw, Ratio(33, 100)));
    CHECK(r.delta == Ratio(64, 100));  // 2.64 -> 0.64
    CHECK(identical(r.target_ratio_at_cutoff, Ratio(3, 8)));
    CHECK(identical(r.bias, Ratio(1, 8)));
    CHECK(r.population() == 100);
  }

  TEST_CASE("mismatches") {
    auto a = make_topic("a", 1, 2, 1, 2);
    auto b = make_topic("b", 1, 2, 1, 2);
    try {
      bias_at_n(a.run, a.labels, b.target, gender_scheme(), "female", 10);
      FAIL("expected topic mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTopicMismatch);
    }
    a.target.feature_name = "age";
    CHECK_THROWS_AS(
        bias_at_n(a.run, a.labels, a.target, gender_scheme(), "female", 10),
        Error);
  }

  TEST_CASE("grid property and binary symmetry, exhaustive for m <= 12") {
    std::int64_t checked = 0;
    for (std::int64_t m = 1; m <= 12; ++m) {
      for (std::int64_t total = 1; total <= 2 * m; ++total) {
        for (std::int64_t tf = 0; tf <= total; ++tf) {
          for (std::int64_t k = 0; k <= m; ++k) {
            auto f = measure(k, m, tf, total, "female", m);
            auto mm = measure(k, m, tf, total, "male", m);
            REQUIRE(f.bias.is_on_grid(m));
            REQUIRE(f.bias.abs() <= Ratio(1, 1));
            REQUIRE(f.bias == Ratio(0, 1) - mm.bias);
            ++checked;
          }
        }
      }
    }
    CHECK(checked > 0);
  }

  TEST_CASE("bias grows by 1/m per model count, pausing only at a tie") {
    for (std::int64_t m = 1; m <= 12; ++m) {
      for (std::int64_t tf = 0; tf <= 20; ++tf) {
        auto previous = measure(0, m, tf, 20, "female", m);
        for (std::int64_t k = 1; k <= m; ++k) {
          auto r = measure(k, m, tf, 20, "female", m);
          const Ratio step = r.bias - previous.bias;
          if (r.delta == Ratio(1, 2) && r.target_ratio_at_cutoff !=
                                            previous.target_ratio_at_cutoff) {
            CHECK(step == Ratio(0, 1));
          } else {
            CHECK(step == Ratio(1, m));
          }
          previous = r;
        }
      }
    }
  }

  TEST_CASE("repeated evaluation is bit-identical") {
    auto a = measure(3, 10, 37, 100);
    auto b = measure(3, 10, 37, 100);
    CHECK(a == b);
  }
}

TEST_SUITE("aggregate") {
  auto with_bias = [](std::vector<Ratio> biases) {
    std::vector<BiasRecord> records;
    int i = 0;
    for (const auto& b : biases) {
      BiasRecord r;
      r.topic_id = "t" + std::to_string(i++);
      r.value = "female";
      r.bias = b;
      records.push_back(r);
    }
    return records;
  };

  TEST_CASE("symmetric cancellation") {
    auto records = with_bias({Ratio(1, 10), Ratio(-1, 10)});
    auto s = aggregate(records, "female", "kb");
    CHECK(s.mb == doctest::Approx(0.0));
    CHECK(s.mab == doctest::Approx(0.1));
    CHECK(s.topic_count == 2);
    CHECK(s.mab >= std::abs(s.mb));
  }

  TEST_CASE("singleton") {
    auto records = with_bias({Ratio(5, 10)});
    auto s = aggregate(records, "female", "kb");
    CHECK(s.mb == 0.5);
    CHECK(s.sb == 0.0);
    CHECK(s.single_sample);
    CHECK(s.mab == 0.5);
    CHECK(identical(s.min_bias, Ratio(5, 10)));
    CHECK(identical(s.max_bias, Ratio(5, 10)));
  }

  TEST_CASE("sample and population divisors") {
    auto records = with_bias({Ratio(1, 10), Ratio(3, 10), Ratio(-2, 10)});
    auto sample = aggregate(records, "female", "kb", SdMode::kSample);
    auto pop = aggregate(records, "female", "kb", SdMode::kPopulation);
    std::vector<double> xs{0.1, 0.3, -0.2};
    auto o = oracle::single_pass(xs);
    CHECK(sample.sb == doctest::Approx(o.sd_sample).epsilon(1e-14));
    CHECK(pop.sb == doctest::Approx(o.sd_population).epsilon(1e-14));
    CHECK_FALSE(pop.single_sample);
  }

  TEST_CASE("matches single-pass oracle on 454 synthetic records") {
    std::mt19937_64 rng(454);
    std::vector<Ratio> biases;
    std::vector<double> xs;
    for (int i = 0; i < 454; ++i) {
      const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 10);
      const std::int64_t k =
          static_cast<std::int64_t>(rng() % (2 * m + 1)) - m;
      biases.emplace_back(k, m);
      xs.push_back(static_cast<double>(k) / static_cast<double>(m));
    }
    auto s = aggregate(with_bias(biases), "female", "kb");
    auto o = oracle::single_pass(xs);
    CHECK(std::abs(s.mb - o.mean) <= 1e-12);
    CHECK(std::abs(s.sb - o.sd_sample) <= 1e-12);
    CHECK(std::abs(s.mab - o.mean_abs) <= 1e-12);
    CHECK(s.min_bias.value() == o.min);
    CHECK(s.max_bias.value() == o.max);
    CHECK(s.mab >= std::abs(s.mb));
    CHECK(s.min_bias.value() <= s.mb);
    CHECK(s.mb <= s.max_bias.value());
  }

  TEST_CASE("errors") {
    std::vector<BiasRecord> none;
    try {
      aggregate(none, "female", "kb");
      FAIL("expected empty aggregate");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyAggregate);
    }
    auto records = with_bias({Ratio(1, 10)});
    records[0].value = "male";
    CHECK_THROWS_AS(aggregate(records, "female", "kb"), Error);
  }
}

TEST_SUITE("simulate_run") {
  TEST_CASE("bias-free construction") {
    auto t = simulate_run(gender_scheme(), "female", "t", Ratio(1, 2),
                          Ratio(0, 1), 10, 1);
    CHECK(t.run.entries.size() == 10);
    auto w = model_ratio_at_n(t.run, t.labels, "female", 10);
    CHECK(identical(w.ratio, Ratio(5, 10)));
  }

  TEST_CASE("announcer pattern") {
    auto t = simulate_run(gender_scheme(), "female", "announcer", Ratio(1, 2),
                          Ratio(-1, 2), 10, 1);
    auto w = model_ratio_at_n(t.run, t.labels, "female", 10);
    CHECK(w.ratio == Ratio(0, 1));
  }

  TEST_CASE("infeasible requests name the bound") {
    try {
      simulate_run(gender_scheme(), "female", "t", Ratio(1, 2), Ratio(6, 10),
                   10, 1);
      FAIL("expected infeasible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInfeasible);
      CHECK(std::string(e.what()).find("<= window 10") != std::string::npos);
    }
    try {
      simulate_run(gender_scheme(), "female", "t", Ratio(1, 2), Ratio(-6, 10),
                   10, 1);
      FAIL("expected infeasible");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(">= 0") != std::string::npos);
    }
    CHECK_THROWS_AS(simulate_run(gender_scheme(), "female", "t", Ratio(1, 2),
                                 Ratio(1, 3), 10, 1),
                    Error);
  }

  TEST_CASE("round trip over 1000 seeded triples") {
    std::mt19937_64 rng(2019);
    const auto scheme = gender_scheme();
    int planted = 0;
    while (planted < 1000) {
      const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 15);
      const std::int64_t q = 1 + static_cast<std::int64_t>(rng() % 60);
      const std::int64_t p = static_cast<std::int64_t>(rng() % (q + 1));
      const std::int64_t b = static_cast<std::int64_t>(rng() % (2 * m + 1)) - m;
      const Ratio target(p, q);
      const Ratio bias(b, m);
      SyntheticTopic t;
      try {
        t = simulate_run(scheme, "female", "t" + std::to_string(planted),
                         target, bias, m, rng());
      } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::kInfeasible);
        continue;
      }
      auto r = bias_at_n(t.run, t.labels, t.target, scheme, "female", m);
      REQUIRE(r.bias == bias);
      ++planted;
    }
  }

  TEST_CASE("same seed gives the same topic") {
    auto a = simulate_run(gender_scheme(), "female", "t", Ratio(3, 10),
                          Ratio(2, 10), 10, 99);
    auto b = simulate_run(gender_scheme(), "female", "t", Ratio(3, 10),
                          Ratio(2, 10), 10, 99);
    CHECK(a.run == b.run);
    CHECK(a.labels == b.labels);
    CHECK(a.target == b.target);
  }
}

TEST_SUITE("feature scheme") {
  TEST_CASE("validation") {
    CHECK_THROWS_AS(FeatureScheme("g", {"a"}), Error);
    CHECK_THROWS_AS(FeatureScheme("g", {"a", "a"}), Error);
    CHECK_THROWS_AS(FeatureScheme("g", {"a", ""}), Error);
    CHECK_THROWS_AS(FeatureScheme("g", {"a", "b"}, "a"), Error);
    CHECK_THROWS_AS(FeatureScheme("", {"a", "b"}), Error);
    FeatureScheme three("age", {"young", "middle", "old"});
    CHECK_FALSE(three.is_binary());
    CHECK(three.contains("middle"));
  }

  TEST_CASE("one-vs-rest on a three-valued scheme") {
    FeatureScheme scheme("age", {"young", "middle", "old"});
    RankedRun run{"t", {"a", "b", "c", "d"}};
    LabelCatalog labels("age");
    labels.assign("a", Label{"young", Provenance::kKb});
    labels.assign("b", Label{"old", Provenance::kKb});
    labels.assign("c", Label{"old", Provenance::kKb});
    labels.assign("d", Label{"middle", Provenance::kKb});
    TargetCounts target{"t", "age", {{"young", 2}, {"middle", 3}, {"old", 5}}, 10, 0};
    auto young = bias_at_n(run, labels, target, scheme, "young", 4);
    auto old = bias_at_n(run, labels, target, scheme, "old", 4);
    CHECK(identical(young.bias, Ratio(0, 4)));   // 1/4 vs round(0.8)=1
    CHECK(identical(old.bias, Ratio(0, 4)));     // 2/4 vs round(2.0)=2
  }
}

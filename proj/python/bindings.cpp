#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "biaslens/audit.hpp"
#include "biaslens/error.hpp"
#include "biaslens/ingest.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/report.hpp"

namespace py = pybind11;
using namespace biaslens;

namespace {

SdMode sd_mode_of(const std::string& text) {
  if (text == "sample") return SdMode::kSample;
  if (text == "population") return SdMode::kPopulation;
  throw py::value_error("sd must be 'sample' or 'population'");
}

Provenance provenance_of(const std::string& text) {
  auto p = parse_provenance(text);
  if (!p) throw py::value_error("unknown provenance '" + text + "'");
  return *p;
}

std::vector<SourceFile> source_files(
    const std::map<std::string, std::filesystem::path>& specs) {
  std::vector<SourceFile> out;
  for (const auto& [label, path] : specs) out.push_back({label, path});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Representation-bias metrics for ranked result lists";

  auto& error =
      py::register_exception<Error>(m, "BiaslensError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", error.ptr());

  py::class_<Ratio>(m, "Ratio")
      .def(py::init<std::int64_t, std::int64_t>(), py::arg("num"),
           py::arg("den") = 1)
      .def_static("parse", &Ratio::parse)
      .def_property_readonly("num", &Ratio::num)
      .def_property_readonly("den", &Ratio::den)
      .def("__float__", &Ratio::value)
      .def("__str__", &Ratio::to_string)
      .def("__repr__",
           [](const Ratio& r) { return "Ratio(" + r.to_string() + ")"; })
      .def("__eq__", [](const Ratio& a, const Ratio& b) { return a == b; })
      .def("__lt__", [](const Ratio& a, const Ratio& b) { return a < b; })
      .def("__hash__",
           [](const Ratio& r) {
             auto s = r.reduced();
             return py::hash(py::make_tuple(s.num(), s.den()));
           })
      .def("identical", &identical);

  py::class_<FeatureScheme>(m, "FeatureScheme")
      .def(py::init<std::string, std::vector<std::string>, std::string>(),
           py::arg("feature"), py::arg("values"),
           py::arg("unknown_token") = "unknown")
      .def_property_readonly("feature", &FeatureScheme::feature_name)
      .def_property_readonly("values", &FeatureScheme::values)
      .def_property_readonly("unknown_token", &FeatureScheme::unknown_token);

  py::class_<RankedRun>(m, "RankedRun")
      .def(py::init([](std::string topic, std::vector<std::string> entries) {
             return RankedRun{std::move(topic), std::move(entries)};
           }),
           py::arg("topic_id"), py::arg("entries"))
      .def_readonly("topic_id", &RankedRun::topic_id)
      .def_readonly("entries", &RankedRun::entries);

  py::class_<LabelCatalog>(m, "LabelCatalog")
      .def(py::init<std::string>(), py::arg("feature"))
      .def(
          "assign",
          [](LabelCatalog& c, const std::string& entity,
             std::optional<std::string> value, const std::string& provenance) {
            c.assign(entity, Label{std::move(value), provenance_of(provenance)});
          },
          py::arg("entity"), py::arg("value"), py::arg("provenance") = "kb")
      .def("value_of", &LabelCatalog::value_of)
      .def("__len__",
           [](const LabelCatalog& c) { return c.assignments().size(); })
      .def_property_readonly("conflicts", [](const LabelCatalog& c) {
        py::list out;
        for (const auto& x : c.conflicts()) {
          out.append(py::make_tuple(x.entity_id, x.kept.value,
                                    x.overridden.value));
        }
        return out;
      });

  py::class_<TargetCounts>(m, "TargetCounts")
      .def(py::init([](std::string topic, std::string feature,
                       std::map<std::string, std::int64_t> counts,
                       std::int64_t unknown) {
             TargetCounts t{std::move(topic), std::move(feature),
                            std::move(counts), 0, unknown};
             for (const auto& [value, n] : t.counts) t.total += n;
             return t;
           }),
           py::arg("topic_id"), py::arg("feature"), py::arg("counts"),
           py::arg("unknown") = 0)
      .def_readonly("topic_id", &TargetCounts::topic_id)
      .def_readonly("counts", &TargetCounts::counts)
      .def_readonly("total", &TargetCounts::total)
      .def_readonly("unknown", &TargetCounts::unknown);

  py::class_<BiasRecord>(m, "BiasRecord")
      .def_readonly("source", &BiasRecord::source)
      .def_readonly("topic_id", &BiasRecord::topic_id)
      .def_readonly("value", &BiasRecord::value)
      .def_readonly("cutoff_requested", &BiasRecord::cutoff_requested)
      .def_readonly("cutoff_effective", &BiasRecord::cutoff_effective)
      .def_readonly("model_ratio", &BiasRecord::model_ratio)
      .def_readonly("target_ratio_raw", &BiasRecord::target_ratio_raw)
      .def_readonly("delta", &BiasRecord::delta)
      .def_readonly("target_ratio_at_cutoff",
                    &BiasRecord::target_ratio_at_cutoff)
      .def_readonly("bias", &BiasRecord::bias)
      .def_readonly("unknown_in_window", &BiasRecord::unknown_in_window);

  py::class_<BiasSummary>(m, "BiasSummary")
      .def_readonly("value", &BiasSummary::value)
      .def_readonly("source", &BiasSummary::source)
      .def_readonly("topic_count", &BiasSummary::topic_count)
      .def_readonly("mb", &BiasSummary::mb)
      .def_readonly("sb", &BiasSummary::sb)
      .def_readonly("mab", &BiasSummary::mab)
      .def_readonly("min", &BiasSummary::min_bias)
      .def_readonly("max", &BiasSummary::max_bias)
      .def_readonly("single_sample", &BiasSummary::single_sample);

  m.def("target_ratio", &target_ratio, py::arg("counts"), py::arg("scheme"),
        py::arg("value"));
  m.def(
      "model_ratio_at_n",
      [](const RankedRun& run, const LabelCatalog& labels,
         const std::string& c, std::int64_t n, bool strict) {
        auto w = model_ratio_at_n(run, labels, c, n, strict);
        return py::make_tuple(w.ratio, w.window, w.unknown_in_window);
      },
      py::arg("run"), py::arg("labels"), py::arg("value"), py::arg("n"),
      py::arg("strict") = false);
  m.def(
      "ideal_target_ratio_at_n",
      [](const Ratio& target, const Ratio& model, std::int64_t m) {
        auto r = ideal_target_ratio_at_n(target, model, m);
        return py::make_tuple(r.ratio, r.delta);
      },
      py::arg("target"), py::arg("model"), py::arg("m"));
  m.def(
      "bias_at_n",
      [](const RankedRun& run, const LabelCatalog& labels,
         const TargetCounts& target, const FeatureScheme& scheme,
         const std::string& c, std::int64_t n, bool strict,
         const std::string& source) {
        return bias_at_n(run, labels, target, scheme, c, n,
                         EvalOptions{strict, source});
      },
      py::arg("run"), py::arg("labels"), py::arg("target"), py::arg("scheme"),
      py::arg("value"), py::arg("n") = 10, py::arg("strict") = false,
      py::arg("source") = "");
  m.def(
      "aggregate",
      [](const std::vector<BiasRecord>& records, const std::string& c,
         const std::string& source, const std::string& sd) {
        return aggregate(records, c, source, sd_mode_of(sd));
      },
      py::arg("records"), py::arg("value"), py::arg("source") = "",
      py::arg("sd") = "sample");
  m.def(
      "simulate_run",
      [](const FeatureScheme& scheme, const std::string& c,
         const std::string& topic, const Ratio& target, const Ratio& bias,
         std::int64_t m, std::uint64_t seed) {
        auto t = simulate_run(scheme, c, topic, target, bias, m, seed);
        return py::make_tuple(t.run, t.labels, t.target);
      },
      py::arg("scheme"), py::arg("value"), py::arg("topic_id"),
      py::arg("target"), py::arg("bias"), py::arg("m"),
      py::arg("seed") = kDefaultSeed);

  m.def(
      "parse_runs",
      [](const std::string& text, const std::string& name) {
        std::istringstream in(text);
        return parse_runs(in, name);
      },
      py::arg("text"), py::arg("source_name") = "<runs>");
  m.def(
      "parse_labels",
      [](const std::string& text, const FeatureScheme& scheme,
         const std::string& name) {
        std::istringstream in(text);
        return parse_labels(in, scheme, name);
      },
      py::arg("text"), py::arg("scheme"), py::arg("source_name") = "<labels>");
  m.def(
      "parse_target_counts",
      [](const std::string& text, const FeatureScheme& scheme,
         const std::string& name) {
        std::istringstream in(text);
        return parse_target_counts(in, scheme, name);
      },
      py::arg("text"), py::arg("scheme"), py::arg("source_name") = "<targets>");

  m.def(
      "evaluate_json",
      [](const std::filesystem::path& runs,
         const std::vector<std::filesystem::path>& labels,
         const std::map<std::string, std::filesystem::path>& targets,
         const std::map<std::string, std::filesystem::path>& members,
         std::int64_t cutoff, const FeatureScheme& scheme, bool strict,
         std::uint64_t seed, const std::string& sd, unsigned jobs) {
        AuditConfig config;
        config.runs = runs;
        config.labels = labels;
        config.targets = source_files(targets);
        config.members = source_files(members);
        config.cutoff = cutoff;
        config.scheme = scheme;
        config.strict = strict;
        config.seed = seed;
        config.sd_mode = sd_mode_of(sd);
        config.jobs = jobs;
        Report report;
        {
          py::gil_scoped_release release;
          report = run_evaluate(config);
        }
        return render_json(report);
      },
      py::arg("runs"), py::arg("labels"), py::arg("targets"),
      py::arg("members"), py::arg("cutoff"), py::arg("scheme"),
      py::arg("strict"), py::arg("seed"), py::arg("sd"), py::arg("jobs"));

  m.attr("DEFAULT_SEED") = kDefaultSeed;
  m.attr("REPORT_SCHEMA") = kReportSchema;
}

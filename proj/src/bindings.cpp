#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "srt/eval.hpp"
#include "srt/feedback_parser.hpp"
#include "srt/gateway.hpp"
#include "srt/prompting.hpp"
#include "srt/stage1.hpp"
#include "srt/stage2.hpp"
#include "srt/types.hpp"

namespace py = pybind11;
using namespace srt;

namespace {

stage1::AblationVariant variant_from_name(const std::string& name) {
  return stage1::AblationVariant::from_name(name);
}

}  // namespace

PYBIND11_MODULE(_srt_core, m) {
  m.doc() = "Self-refinement data pipeline core";

  py::enum_<ResponseRole>(m, "ResponseRole")
      .value("initial", ResponseRole::initial)
      .value("refinement", ResponseRole::refinement)
      .value("candidate", ResponseRole::candidate);

  py::class_<Instruction>(m, "Instruction")
      .def(py::init([](std::string id, std::string text, std::string source, int turn_count) {
             return Instruction{std::move(id), std::move(text), std::move(source), turn_count};
           }),
           py::arg("id"), py::arg("text"), py::arg("source") = "", py::arg("turn_count") = 1)
      .def_readwrite("id", &Instruction::id)
      .def_readwrite("text", &Instruction::text)
      .def_readwrite("source", &Instruction::source)
      .def_readwrite("turn_count", &Instruction::turn_count);

  py::class_<ModelResponse>(m, "ModelResponse")
      .def(py::init([](std::string text, ResponseRole role, double temperature, int iteration) {
             return ModelResponse{std::move(text), role, temperature, iteration};
           }),
           py::arg("text"), py::arg("role") = ResponseRole::initial,
           py::arg("temperature") = 0.0, py::arg("iteration") = 0)
      .def_readwrite("text", &ModelResponse::text)
      .def_readwrite("role", &ModelResponse::role)
      .def_readwrite("temperature", &ModelResponse::temperature)
      .def_readwrite("iteration", &ModelResponse::iteration);

  py::class_<CritiqueFeedback>(m, "CritiqueFeedback")
      .def(py::init<>())
      .def_readwrite("weaknesses", &CritiqueFeedback::weaknesses)
      .def_readwrite("suggestions", &CritiqueFeedback::suggestions)
      .def_readwrite("overall_score", &CritiqueFeedback::overall_score)
      .def_readwrite("raw_text", &CritiqueFeedback::raw_text);

  py::class_<Segment>(m, "Segment")
      .def_property_readonly("kind", [](const Segment& s) { return to_string(s.kind); })
      .def_readonly("begin", &Segment::begin)
      .def_readonly("end", &Segment::end);

  py::class_<TrainingSequence>(m, "TrainingSequence")
      .def_readonly("full_text", &TrainingSequence::full_text)
      .def_readonly("mask_spans", &TrainingSequence::mask_spans)
      .def_readonly("segment_map", &TrainingSequence::segment_map);

  // prompting
  m.def("render_critic_prompt", &prompting::render_critic_prompt, py::arg("instruction"),
        py::arg("response"));
  m.def("render_score_only_prompt", &prompting::render_score_only_prompt, py::arg("instruction"),
        py::arg("response"));
  m.def("critic_template", [] { return std::string(prompting::critic_template()); });

  // parsing
  m.def("parse_critic_output", [](const std::string& raw) {
    auto outcome = parser::parse_critic_output(raw);
    py::dict d;
    d["status"] = parser::to_string(outcome.status);
    d["leniently_parsed"] = outcome.leniently_parsed;
    py::list violations;
    for (auto v : outcome.violations) violations.append(parser::to_string(v));
    d["violations"] = violations;
    if (outcome.feedback) {
      d["weaknesses"] = outcome.feedback->weaknesses;
      d["suggestions"] = outcome.feedback->suggestions;
      d["overall_score"] = outcome.feedback->overall_score;
    }
    if (outcome.refinement_text) d["refinement_text"] = *outcome.refinement_text;
    return d;
  });
  m.def("parse_score_only", [](const std::string& raw) -> py::object {
    auto outcome = parser::parse_score_only(raw);
    if (!outcome.score) return py::none();
    return py::int_(*outcome.score);
  });
  m.def("format_critic_output", &parser::format_critic_output, py::arg("weaknesses"),
        py::arg("suggestions"), py::arg("score"), py::arg("refinement"));

  // sequence building over a minimal record interface
  m.def(
      "build_sft_sequence",
      [](const std::string& instruction, const std::string& initial,
         const std::string& weaknesses, const std::string& suggestions, int score,
         const std::string& refinement, const std::string& variant) {
        AnnotatedExample ex;
        ex.instruction = {"py", instruction, "", 1};
        ex.initial = {initial, ResponseRole::initial, 0.7, 0};
        ex.initial_independent_score = score;
        ex.feedback = {weaknesses, suggestions, score, "Overall Score: [[" +
                                                            std::to_string(score) + "]]"};
        RefinementRecord record;
        record.response = {refinement, ResponseRole::refinement, 0.0, 1};
        record.feedback = ex.feedback;
        record.independent_score = score;
        ex.refinements.push_back(std::move(record));
        ex.best_index = 0;
        return stage1::build_sft_sequence(ex, variant_from_name(variant));
      },
      py::arg("instruction"), py::arg("initial"), py::arg("weaknesses"), py::arg("suggestions"),
      py::arg("score"), py::arg("refinement"), py::arg("variant") = "full");

  m.def("select_best_refinement", [](const std::vector<int>& scores) {
    AnnotatedExample ex;
    ex.instruction = {"py", "x", "", 1};
    ex.initial = {"y", ResponseRole::initial, 0.7, 0};
    for (std::size_t i = 0; i < scores.size(); ++i) {
      RefinementRecord r;
      r.response = {"r", ResponseRole::refinement, 0.0, static_cast<int>(i + 1)};
      r.independent_score = scores[i];
      ex.refinements.push_back(std::move(r));
    }
    return select_best_refinement(ex);
  });

  m.def("rerank_select", [](const std::vector<py::object>& scores) {
    std::vector<std::optional<int>> s;
    for (const auto& obj : scores) {
      if (obj.is_none()) s.push_back(std::nullopt);
      else s.push_back(obj.cast<int>());
    }
    return eval::rerank_select(s);
  });

  m.def("score_distribution_stats", [](const std::vector<std::pair<int, int>>& pairs) {
    auto stats = eval::score_distribution_stats(pairs);
    py::dict d;
    d["initial_histogram"] = stats.initial_histogram;
    d["refined_histogram"] = stats.refined_histogram;
    d["mean_improvement"] =
        stats.mean_improvement ? py::object(py::float_(*stats.mean_improvement)) : py::none();
    return d;
  });
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mtie/chat.hpp"
#include "mtie/datasets.hpp"
#include "mtie/error.hpp"
#include "mtie/eval.hpp"
#include "mtie/parse.hpp"
#include "mtie/pipeline.hpp"
#include "mtie/schema.hpp"

namespace py = pybind11;
using namespace mtie;

namespace {

PyObject* g_error = nullptr;

py::dict triple_dict(const Triple& t) {
  py::dict d;
  d["subject"] = t.subject;
  d["relation"] = t.relation;
  d["object"] = t.object;
  d["attributes"] = t.attributes;
  d["subject_type"] = t.subject_type;
  d["object_type"] = t.object_type;
  return d;
}

py::dict event_dict(const EventRecord& e) {
  py::list args;
  for (const auto& a : e.arguments) args.append(py::make_tuple(a.role, a.content));
  py::dict d;
  d["event_type"] = e.event_type;
  d["arguments"] = args;
  return d;
}

py::list elements(const TripleSet& ts) {
  py::list out;
  for (const auto& t : ts) out.append(triple_dict(t));
  return out;
}

py::list elements(const EntitySet& es) {
  py::list out;
  for (const auto& e : es) out.append(py::make_tuple(e.name, e.type));
  return out;
}

py::list elements(const EventSet& es) {
  py::list out;
  for (const auto& e : es) out.append(event_dict(e));
  return out;
}

py::object gold_object(const std::optional<GoldAnnotation>& gold) {
  if (!gold) return py::none();
  return std::visit([](const auto& set) -> py::object { return elements(set); }, gold->elements);
}

py::dict result_dict(const ExtractionResult& r) {
  py::dict d;
  d["sample_id"] = r.sample_id;
  d["task"] = std::string(to_string(r.task));
  switch (r.task) {
    case Task::RE: d["triples"] = elements(r.triples); break;
    case Task::NER: d["entities"] = elements(r.entities); break;
    case Task::EE: d["events"] = elements(r.events); break;
  }
  d["turns_used"] = r.turns_used;
  d["warnings"] = r.warnings;
  d["transcript_ref"] = r.transcript_ref ? py::object(py::str(*r.transcript_ref)) : py::none();
  return d;
}

py::dict answer_dict(const ParsedAnswer& a) {
  py::dict d;
  d["warnings"] = a.warnings;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TypeList>) {
          d["kind"] = "TypeList";
          d["names"] = v.names;
        } else if constexpr (std::is_same_v<T, PairTable>) {
          d["kind"] = "PairTable";
          d["header"] = v.header;
          d["rows"] = v.rows;
        } else if constexpr (std::is_same_v<T, EntityList>) {
          d["kind"] = "EntityList";
          d["items"] = v.items;
        } else if constexpr (std::is_same_v<T, RoleTable>) {
          d["kind"] = "RoleTable";
          py::list rows;
          for (const auto& r : v.rows) rows.append(py::make_tuple(r.event_type, r.role, r.content));
          d["rows"] = rows;
        } else {
          d["kind"] = "NoneAnswer";
        }
      },
      a.value);
  return d;
}

py::dict metric_dict(const MetricReport& m) {
  py::dict per;
  for (const auto& [type, c] : m.per_type) {
    auto prf = micro_f1(c.tp, c.n_pred, c.n_gold);
    per[py::str(type)] = py::dict(py::arg("tp") = c.tp, py::arg("n_pred") = c.n_pred, py::arg("n_gold") = c.n_gold,
                                  py::arg("precision") = prf.precision, py::arg("recall") = prf.recall,
                                  py::arg("f1") = prf.f1);
  }
  py::dict d;
  d["task"] = std::string(to_string(m.task));
  d["regime"] = std::string(to_string(m.regime));
  d["label"] = m.label();
  d["tp"] = m.tp;
  d["n_pred"] = m.n_pred;
  d["n_gold"] = m.n_gold;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["per_type"] = per;
  d["table"] = m.to_table();
  return d;
}

std::unique_ptr<ChatBackend> make_backend(const TaskSchema& schema, const std::vector<Sample>& samples,
                                          const std::string& kind, const std::optional<std::string>& transcripts,
                                          const std::optional<std::string>& fingerprint) {
  auto k = parse_backend_kind(kind);
  if (k == BackendConfig::Kind::GoldOracle) return std::make_unique<GoldOracleBackend>(schema, samples);
  if (k == BackendConfig::Kind::Replay) {
    if (!transcripts) throw Error(ErrorCode::ConfigError, "replay needs a transcripts path");
    auto store = TranscriptStore::load(*transcripts);
    std::string fp;
    if (fingerprint) {
      fp = *fingerprint;
    } else {
      auto fps = store->fingerprints();
      if (fps.size() != 1) throw Error(ErrorCode::ConfigError, "transcripts hold several fingerprints; pass one");
      fp = fps.front();
    }
    return std::make_unique<ReplayBackend>(store, fp);
  }
  throw Error(ErrorCode::ConfigError, "live backends are only available through the command-line tool");
}

}  // namespace

PYBIND11_MODULE(_mtie, m) {
  m.doc() = "Multi-turn zero-shot information extraction: schemas, parsers, pipeline and scoring.";

  g_error = PyErr_NewException("mtie.Error", PyExc_RuntimeError, nullptr);
  Py_INCREF(g_error);
  m.add_object("Error", py::handle(g_error));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_steal<py::object>(PyObject_CallFunction(g_error, "s", e.what()));
      if (!inst) return;
      inst.attr("code") = std::string(error_code_name(e.code()));
      inst.attr("detail") = e.detail();
      PyErr_SetObject(g_error, inst.ptr());
    }
  });

  py::class_<TaskSchema>(m, "TaskSchema")
      .def_readonly("name", &TaskSchema::name)
      .def_property_readonly("task", [](const TaskSchema& s) { return std::string(to_string(s.task)); })
      .def_property_readonly("language", [](const TaskSchema& s) { return std::string(to_string(s.language)); })
      .def_readonly("skip_stage1", &TaskSchema::skip_stage1)
      .def("type_names", &TaskSchema::type_names)
      .def("inverse_relations",
           [](const TaskSchema& s) {
             std::vector<std::pair<std::string, std::string>> out;
             for (const auto& inv : s.inverse_relations) out.emplace_back(inv.inverse, inv.canonical);
             return out;
           })
      .def("to_yaml", [](const TaskSchema& s) { return serialize_schema(s); })
      .def("__repr__", [](const TaskSchema& s) {
        return "<TaskSchema " + s.name + " " + std::string(to_string(s.task)) + " " +
               std::to_string(s.type_names().size()) + " types>";
      });

  py::class_<Sample>(m, "Sample")
      .def_readonly("id", &Sample::id)
      .def_readonly("sentence", &Sample::sentence)
      .def_property_readonly("gold", [](const Sample& s) { return gold_object(s.gold); })
      .def("__repr__", [](const Sample& s) { return "<Sample " + s.id + ">"; });

  py::class_<BatchReport>(m, "BatchReport")
      .def_property_readonly("task", [](const BatchReport& r) { return std::string(to_string(r.task)); })
      .def_readonly("schema_name", &BatchReport::schema_name)
      .def_readonly("wall_seconds", &BatchReport::wall_seconds)
      .def_property_readonly("succeeded", &BatchReport::succeeded)
      .def_property_readonly("failed", &BatchReport::failed)
      .def_property_readonly("turns", &BatchReport::turns)
      .def_property_readonly("results",
                             [](const BatchReport& r) {
                               py::list out;
                               for (const auto& o : r.outcomes) {
                                 if (o.result) {
                                   out.append(result_dict(*o.result));
                                 } else {
                                   py::dict d;
                                   d["sample_id"] = o.failure->sample_id;
                                   d["error"] = std::string(error_code_name(o.failure->code));
                                   d["message"] = o.failure->message;
                                   out.append(d);
                                 }
                               }
                               return out;
                             })
      .def("to_jsonl", [](const BatchReport& r) { return to_jsonl(r); });

  m.def("load_schema", [](const std::filesystem::path& p) { return load_schema(p); }, py::arg("path"));
  m.def("parse_schema", [](const std::string& doc) { return parse_schema(doc); }, py::arg("document"));

  m.def(
      "load_dataset",
      [](const std::filesystem::path& p, const std::string& format, const TaskSchema& schema) {
        return load_dataset(p, parse_dataset_format(format), schema);
      },
      py::arg("path"), py::arg("format"), py::arg("schema"));
  m.def("subsample", &subsample, py::arg("samples"), py::arg("n"), py::arg("seed"));

  m.def(
      "run_batch",
      [](const std::vector<Sample>& samples, const TaskSchema& schema, const std::string& backend,
         const std::optional<std::string>& transcripts, const std::optional<std::string>& fingerprint,
         std::size_t workers, std::optional<bool> skip_stage1, bool span_check) {
        auto b = make_backend(schema, samples, backend, transcripts, fingerprint);
        ExtractionOptions opts;
        opts.workers = workers;
        opts.skip_stage1 = skip_stage1;
        opts.span_check = span_check;
        py::gil_scoped_release release;
        return run_batch(samples, schema, *b, opts);
      },
      py::arg("samples"), py::arg("schema"), py::arg("backend") = "gold-oracle", py::arg("transcripts") = py::none(),
      py::arg("fingerprint") = py::none(), py::arg("workers") = 4, py::arg("skip_stage1") = py::none(),
      py::arg("span_check") = false);

  m.def(
      "read_batch_report", [](const std::filesystem::path& p) { return read_batch_report(p); }, py::arg("path"));

  m.def(
      "score",
      [](const BatchReport& report, const std::vector<Sample>& gold, const std::string& regime,
         const TaskSchema& schema) { return metric_dict(score_report(report, gold, parse_regime(regime), schema)); },
      py::arg("report"), py::arg("gold"), py::arg("regime"), py::arg("schema"));

  m.def(
      "token_f1",
      [](const std::string& pred, const std::string& gold, const std::string& language) {
        return token_f1(pred, gold, parse_language(language));
      },
      py::arg("pred"), py::arg("gold"), py::arg("language") = "EN");

  m.def("is_none_signal", [](const std::string& s) { return is_none_signal(s); }, py::arg("reply"));
  m.def(
      "parse_type_list",
      [](const std::string& r, const std::vector<std::string>& inv) { return answer_dict(parse_type_list(r, inv)); },
      py::arg("reply"), py::arg("inventory"));
  m.def(
      "parse_event_types",
      [](const std::string& r, const std::vector<std::string>& inv) { return answer_dict(parse_event_types(r, inv)); },
      py::arg("reply"), py::arg("inventory"));
  m.def(
      "parse_pair_table",
      [](const std::string& r, const std::pair<std::string, std::string>& header) {
        return answer_dict(parse_pair_table(r, header));
      },
      py::arg("reply"), py::arg("header"));
  m.def(
      "parse_entity_list",
      [](const std::string& r, const std::vector<std::string>& inv) { return answer_dict(parse_entity_list(r, inv)); },
      py::arg("reply"), py::arg("inventory"));
  m.def(
      "parse_role_table",
      [](const std::string& r, const std::string& event_type, const std::vector<std::string>& roles) {
        return answer_dict(parse_role_table(r, event_type, roles));
      },
      py::arg("reply"), py::arg("event_type"), py::arg("roles"));

  m.def(
      "transcript_key",
      [](const std::string& fingerprint, const std::vector<std::pair<std::string, std::string>>& messages) {
        std::vector<ChatMessage> history;
        for (const auto& [role, content] : messages) history.push_back({parse_role(role), content});
        return transcript_key(fingerprint, history);
      },
      py::arg("fingerprint"), py::arg("messages"));
}

// Python bindings. Structured values cross the boundary as JSON text; the
// pure-Python wrapper in advgame/__init__.py converts them to dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "advgame/config.hpp"
#include "advgame/enforcers.hpp"
#include "advgame/error.hpp"
#include "advgame/game.hpp"
#include "advgame/grid.hpp"
#include "advgame/metrics.hpp"
#include "advgame/player.hpp"
#include "advgame/viz.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace advgame {
namespace {

Answer parse_answer(const std::string& text) {
  auto a = Answer::parse(text, AttributeVocab::clevr());
  if (!a) throw Error(ErrorClass::kInvalidArgument, "not an answer: '" + text + "'");
  return *a;
}

SceneGraph scene_arg(const std::string& text) { return scene_from_json(json::parse(text)); }

Displacement displacement_arg(const std::string& text) { return displacement_from_json(json::parse(text)); }

std::string check_scene_py(const std::string& scene, const std::string& overrides) {
  json o = json::parse(overrides);
  const RunConfig cfg = run_config_from_json(json{{"constraints", o}});
  json out = json::array();
  for (const auto& v : check_scene(scene_arg(scene), cfg.constraints).violations) {
    out.push_back({{"kind", violation_kind_name(v.kind)},
                   {"objects", v.objects},
                   {"measured", v.measured},
                   {"threshold", v.threshold}});
  }
  return out.dump();
}

std::string execute_py(const std::string& program, const std::string& scene) {
  const Answer a = execute(program_from_json(json::parse(program)), scene_arg(scene));
  return a.determined() ? a.to_string() : "";
}

std::string apply_displacement_py(const std::string& scene, const std::string& d) {
  return scene_to_json(apply_displacement(scene_arg(scene), displacement_arg(d), GridSpec{})).dump();
}

std::string t_test_py(const std::vector<double>& xs, double mu0) {
  const TTest t = one_sample_t_test(xs, mu0);
  return json{{"t", t.t}, {"p", t.p}, {"mean", t.mean}, {"stddev", t.stddev}, {"n", t.n}}.dump();
}

std::string transcript_metrics_py(const std::string& path) {
  std::map<std::string, std::vector<RoundRecord>> by_phase;
  for (auto& e : read_transcript(path, AttributeVocab::clevr())) by_phase[e.phase].push_back(std::move(e.record));
  json out = json::object();
  for (const auto& [phase, recs] : by_phase) {
    const auto cd = consistency_and_drop(recs);
    out[phase] = {{"rounds", recs.size()}, {"consistency", cd.consistency}, {"drop", cd.drop}};
  }
  return out.dump();
}

std::string resolve_config_py(const std::string& overrides) {
  return run_config_from_json(json::parse(overrides)).to_json().dump();
}

struct Session {
  RunConfig cfg;
  std::vector<Item> items;
  std::vector<MiniGame> games;

  explicit Session(const std::string& overrides) : cfg(run_config_from_json(json::parse(overrides))) {
    items = make_items(load_scenes(cfg.paths.scenes), load_questions(cfg.paths.questions));
  }

  PlayerHandle player() { return make_player(cfg.player, lookup_for(items)); }

  std::size_t build() {
    auto handle = player();
    const auto& c = cfg.minigame.curation;
    const bool curate = c.require_player_correct || c.require_fooling || c.limit > 0 || c.max_objects < kMaxObjects;
    const auto pool = curate ? curate_items(items, handle, cfg.game_config(), c) : items;
    games = build_minigames(pool, cfg.minigame.size, cfg.minigame.count, derive_seed(cfg.seed, 3),
                            cfg.minigame.shuffle_heads);
    return games.size();
  }

  const MiniGame& game(int index) const {
    if (index < 0 || index >= static_cast<int>(games.size())) {
      throw Error(ErrorClass::kInvalidArgument, "no mini-game " + std::to_string(index) + "; call build() first");
    }
    return games[static_cast<std::size_t>(index)];
  }

  std::string minigame_json(int index) const {
    const MiniGame& g = game(index);
    json items_j = json::array();
    for (const auto& it : g.items) items_j.push_back(item_to_json(it));
    return json{{"id", g.id}, {"seed", g.seed}, {"items", items_j}}.dump();
  }

  std::string search(int index) {
    auto handle = player();
    const auto r = run_search(game(index), handle, cfg);
    const auto cd = consistency_and_drop(r.records);
    std::size_t successes = 0;
    for (const auto& it : r.items) successes += it.success;
    return json{{"queries", r.records.size()}, {"successes", successes}, {"consistency", cd.consistency},
                {"drop", cd.drop}}
        .dump();
  }

  std::string adversary(int index) {
    auto handle = player();
    const auto run = run_adversary(game(index), handle, cfg);
    const auto cd = consistency_and_drop(run.eval);
    return json{{"episodes", run.train.episodes_done},
                {"rounds", run.eval.size()},
                {"consistency", cd.consistency},
                {"drop", cd.drop},
                {"final_reward", run.train.trace.empty() ? 0.0 : run.train.trace.back().mean_reward}}
        .dump();
  }

  std::string exhaustive(int index, int item, const std::vector<int>& movable) {
    auto handle = player();
    const MiniGame& g = game(index);
    if (item < 0 || item >= static_cast<int>(g.items.size())) throw Error(ErrorClass::kInvalidArgument, "no such item");
    const auto r = exhaustive_search(g.items[static_cast<std::size_t>(item)], handle, cfg.game_config(), movable);
    json fooling = json::array();
    for (const auto& d : r.fooling) fooling.push_back(displacement_to_json(d));
    return json{{"old_answer", r.old_answer.to_string()}, {"enumerated", r.enumerated}, {"valid", r.valid},
                {"rarity", r.rarity}, {"fooling", fooling}}
        .dump();
  }
};

}  // namespace
}  // namespace advgame

PYBIND11_MODULE(_advgame, m) {
  using namespace advgame;
  m.doc() = "Adversarial scene-manipulation game (native core)";

  static py::exception<Error> error(m, "AdvgameError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object cls = error;
      py::object exc = cls(std::string(error_class_name(e.error_class())) + ": " + e.what());
      exc.attr("error_class") = error_class_name(e.error_class());
      PyErr_SetObject(error.ptr(), exc.ptr());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("calc_reward",
        [](std::optional<std::string> new_answer, const std::string& old_answer, const std::string& gt) {
          std::optional<Answer> n;
          if (new_answer) n = parse_answer(*new_answer);
          return calc_reward(n, parse_answer(old_answer), parse_answer(gt));
        },
        py::arg("new_answer"), py::arg("old_answer"), py::arg("gt"));
  m.def("relative_drop", &relative_drop, py::arg("x"), py::arg("y"));
  m.def("reported_relative_drop", &reported_relative_drop, py::arg("x"), py::arg("y"));
  m.def("t_test_json", &t_test_py, py::arg("samples"), py::arg("mu0") = 0.0);
  m.def("transcript_metrics_json", &transcript_metrics_py, py::arg("path"));

  m.def("check_scene_json", &check_scene_py, py::arg("scene"), py::arg("constraints") = "{}");
  m.def("execute_json", &execute_py, py::arg("program"), py::arg("scene"));
  m.def("apply_displacement_json", &apply_displacement_py, py::arg("scene"), py::arg("displacement"));
  m.def("render_topdown_json", [](const std::string& scene) { return render_topdown(scene_arg(scene)); },
        py::arg("scene"));

  m.def("encode_request_json",
        [](std::uint64_t round_id, const std::string& scene, const std::vector<std::string>& question) {
          return encode_request(round_id, scene_arg(scene), question);
        },
        py::arg("round_id"), py::arg("scene"), py::arg("question"));
  m.def("encode_response",
        [](std::uint64_t round_id, const std::string& answer) { return encode_response(round_id, parse_answer(answer)); },
        py::arg("round_id"), py::arg("answer"));
  m.def("redaction_findings", &redaction_findings, py::arg("message"));

  m.def("grid_config_count",
        [](int n_objects, bool stationary) {
          GridDatasetSpec s;
          s.n_objects = n_objects;
          s.stationary = stationary;
          s.validate();
          return movable_config_count(s);
        },
        py::arg("n_objects"), py::arg("stationary") = false);
  m.def("decode_config",
        [](long long id, int n_objects) {
          GridDatasetSpec s;
          s.n_objects = n_objects;
          return decode_config(id, s);
        },
        py::arg("config_id"), py::arg("n_objects"));
  m.def("encode_config",
        [](const std::vector<int>& cells, int n_objects) {
          GridDatasetSpec s;
          s.n_objects = n_objects;
          return encode_config(cells, s);
        },
        py::arg("cells"), py::arg("n_objects"));

  m.def("resolve_config_json", &resolve_config_py, py::arg("overrides") = "{}");

  py::class_<Session>(m, "Session")
      .def(py::init<const std::string&>(), py::arg("overrides") = "{}")
      .def_property_readonly("item_count", [](const Session& s) { return s.items.size(); })
      .def("build", &Session::build, py::call_guard<py::gil_scoped_release>())
      .def("minigame_json", &Session::minigame_json, py::arg("index"))
      .def("search_json", &Session::search, py::arg("index"), py::call_guard<py::gil_scoped_release>())
      .def("adversary_json", &Session::adversary, py::arg("index"), py::call_guard<py::gil_scoped_release>())
      .def("exhaustive_json", &Session::exhaustive, py::arg("index"), py::arg("item"), py::arg("movable"),
           py::call_guard<py::gil_scoped_release>());

  m.attr("__version__") = ADVGAME_VERSION;
}

#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "advgame/game.hpp"
#include "advgame/program.hpp"
#include "advgame/scene.hpp"

namespace advgame::testing {

struct Obj {
  const char* shape;
  const char* color;
  const char* size;
  const char* material;
  double x;
  double y;
};

inline SceneGraph make_scene(std::initializer_list<Obj> objs) {
  SceneGraph s;
  const auto& v = *s.vocab;
  for (const auto& o : objs) {
    SceneObject so;
    so.shape = *v.index_of(AttributeKind::kShape, o.shape);
    so.color = *v.index_of(AttributeKind::kColor, o.color);
    so.size = *v.index_of(AttributeKind::kSize, o.size);
    so.material = *v.index_of(AttributeKind::kMaterial, o.material);
    so.x = o.x;
    so.y = o.y;
    s.objects.push_back(so);
  }
  return s;
}

inline FunctionalProgram program(std::initializer_list<ProgramNode> nodes) {
  FunctionalProgram p;
  p.nodes = nodes;
  return p;
}

inline std::vector<std::string> words(const std::string& text) { return split_question(text); }

// Verified items from the bundled corpus.
inline const std::vector<Item>& corpus_items() {
  static const std::vector<Item> items = [] {
    const std::string dir = std::string(ADVGAME_SOURCE_DIR) + "/data/corpus/";
    const auto scenes = load_scenes(dir + "scenes.json");
    const auto questions = load_questions(dir + "questions.json");
    return make_items(scenes, questions);
  }();
  return items;
}

}  // namespace advgame::testing

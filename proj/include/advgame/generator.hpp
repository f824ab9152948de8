#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "advgame/enforcers.hpp"
#include "advgame/game.hpp"
#include "advgame/rng.hpp"
#include "advgame/scene.hpp"

namespace advgame {

struct SceneGenConfig {
  int min_objects = kMinObjects;
  int max_objects = kMaxObjects;
  SceneConstraintConfig constraints;
  // Placement tries per object before the scene is restarted.
  int attempts_per_object = 100;
  int max_restarts = 1000;

  void validate() const;
};

// Objects are placed one at a time uniformly in the bounds and rejected
// until the partial scene passes the constraints; the finished scene is
// checked again in full (later objects can occlude earlier ones).
SceneGraph generate_scene(Rng& rng, const SceneGenConfig& cfg, int image_index,
                          std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());

std::vector<SceneGraph> generate_scenes(int count, std::uint64_t seed, const SceneGenConfig& cfg,
                                        std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());

// Template questions with determinate answers on `scene`, distinct by text.
// Fewer than `count` come back when the templates run dry.
std::vector<QuestionRecord> generate_questions(const SceneGraph& scene, int count, Rng& rng);

std::vector<QuestionRecord> generate_corpus_questions(std::span<const SceneGraph> scenes, int per_scene,
                                                      std::uint64_t seed);

}  // namespace advgame

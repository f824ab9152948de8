#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "advgame/enforcers.hpp"
#include "advgame/game.hpp"
#include "advgame/rng.hpp"
#include "advgame/scene.hpp"

namespace advgame {

enum class HopFamily { kOnehop, kTwohop, kMixhop };

const char* hop_family_name(HopFamily f);
std::optional<HopFamily> parse_hop_family(std::string_view name);

struct GridDatasetSpec {
  int n_objects = 2;
  // Pins the last object; required for four objects.
  bool stationary = false;
  int stationary_cell = -1;  // -1 means the grid's center cell
  HopFamily family = HopFamily::kOnehop;
  double split_percent = 50.0;
  int trials = 10;
  std::uint64_t seed = 0;
  GridSpec grid;
  SceneConstraintConfig constraints;

  void validate() const;
  int movable() const { return n_objects - (stationary ? 1 : 0); }
  int cells() const { return grid.bins * grid.bins; }
  int pinned_cell() const;
};

// cells^n_objects, counting every cell of a pinned object too.
long long raw_config_count(const GridDatasetSpec& spec);
// cells^movable: the placements that are actually enumerated.
long long movable_config_count(const GridDatasetSpec& spec);

// Mixed-radix codec: id = sum cell_i * cells^i over movable objects.
std::vector<int> decode_config(long long id, const GridDatasetSpec& spec);
long long encode_config(const std::vector<int>& cells, const GridDatasetSpec& spec);

struct GridTemplate {
  std::string id;
  int hops = 1;
  std::vector<std::string> text;  // tokens; <K>, <A>, <R1>, <R2> are slots
};

struct GridTemplates {
  std::string version;
  std::vector<GridTemplate> onehop;
  std::vector<GridTemplate> twohop;

  // The template file shipped with the library.
  static const GridTemplates& bundled();
  static GridTemplates from_json(const nlohmann::json& j);
};

struct GridItem {
  long long config_id = 0;
  SceneGraph scene;
  bool valid = false;
  std::vector<QuestionRecord> questions;
  bool question_free = false;
};

// Object identities for a spec: distinct colors, seeded shapes/sizes/materials.
std::vector<SceneObject> grid_identities(const GridDatasetSpec& spec);

GridItem make_grid_item(long long config_id, const GridDatasetSpec& spec);

// Visits ids [begin, end) in order; end < 0 means all. Invalid placements
// are visited too, flagged, so counts can be audited.
void enumerate_configs(const GridDatasetSpec& spec, const std::function<void(GridItem&&)>& visit,
                       long long begin = 0, long long end = -1);

// Questions whose programs run to a determinate answer on the item's scene.
// Mixhop draws the family per question from `rng`.
std::vector<QuestionRecord> make_questions(const GridItem& item, HopFamily family, Rng& rng,
                                           const GridTemplates& templates = GridTemplates::bundled());

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Uniform partition per trial seed; |train| = floor(n * percent / 100).
std::vector<Split> split(std::size_t n, double percent, std::span<const std::uint64_t> trial_seeds);

// Trial seeds derived from the spec seed.
std::vector<std::uint64_t> trial_seeds(const GridDatasetSpec& spec);

struct GridDatasetSummary {
  long long raw = 0;
  long long movable = 0;
  long long valid = 0;
  long long invalid = 0;
  long long question_free = 0;
  long long questions = 0;
};

// Writes sharded scene/question files and manifest.json under `dir`.
GridDatasetSummary write_grid_dataset(const GridDatasetSpec& spec, const std::string& dir,
                                      long long shard_size = 20000);

nlohmann::json grid_spec_to_json(const GridDatasetSpec& spec);

}  // namespace advgame

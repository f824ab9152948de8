#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"
#include "advgame/grid.hpp"
#include "advgame/rng.hpp"

using namespace advgame;

namespace {

GridDatasetSpec spec_for(int n, bool stationary = false) {
  GridDatasetSpec s;
  s.n_objects = n;
  s.stationary = stationary;
  return s;
}

long long visit_count(const GridDatasetSpec& spec, long long* valid = nullptr) {
  long long n = 0;
  long long v = 0;
  enumerate_configs(spec, [&](GridItem&& it) {
    ++n;
    v += it.valid;
  });
  if (valid) *valid = v;
  return n;
}

int relate_nodes(const FunctionalProgram& p) {
  return static_cast<int>(std::count_if(p.nodes.begin(), p.nodes.end(),
                                        [](const ProgramNode& n) { return n.function == "relate"; }));
}

}  // namespace

TEST(GridCounts, TwoObjects) {
  const auto s = spec_for(2);
  EXPECT_EQ(raw_config_count(s), 2401);
  EXPECT_EQ(movable_config_count(s), 2401);
  long long valid = 0;
  EXPECT_EQ(visit_count(s, &valid), 2401);
  EXPECT_GT(valid, 0);
  EXPECT_LT(valid, 2401);  // coincident placements are rejected
}

TEST(GridCounts, ThreeObjects) {
  const auto s = spec_for(3);
  EXPECT_EQ(raw_config_count(s), 117649);
  EXPECT_EQ(visit_count(s), 117649);
}

TEST(GridCounts, FourObjectsNeedAStationary) {
  EXPECT_THROW(spec_for(4).validate(), Error);
  const auto s = spec_for(4, true);
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(raw_config_count(s), 5764801);
  EXPECT_EQ(movable_config_count(s), 117649);
  EXPECT_EQ(s.pinned_cell(), 24);
}

TEST(GridCodec, RoundTripsRandomIds) {
  for (int n : {2, 3}) {
    const auto s = spec_for(n);
    Rng rng(static_cast<std::uint64_t>(n));
    for (int t = 0; t < 10000; ++t) {
      const long long id = static_cast<long long>(rng.below(static_cast<std::uint64_t>(movable_config_count(s))));
      const auto cells = decode_config(id, s);
      ASSERT_EQ(static_cast<int>(cells.size()), s.movable());
      for (int c : cells) ASSERT_TRUE(c >= 0 && c < 49);
      ASSERT_EQ(encode_config(cells, s), id);
    }
  }
}

TEST(GridCodec, MixedRadixOrder) {
  const auto s = spec_for(2);
  EXPECT_EQ(decode_config(0, s), (std::vector<int>{0, 0}));
  EXPECT_EQ(decode_config(1, s), (std::vector<int>{1, 0}));
  EXPECT_EQ(decode_config(49, s), (std::vector<int>{0, 1}));
  EXPECT_EQ(decode_config(2400, s), (std::vector<int>{48, 48}));
  EXPECT_THROW(decode_config(2401, s), Error);
}

TEST(GridItems, StationaryObjectStaysPut) {
  auto s = spec_for(3, true);
  s.stationary_cell = 10;
  const auto a = make_grid_item(0, s);
  const auto b = make_grid_item(48, s);
  EXPECT_EQ(a.scene.objects[2].x, b.scene.objects[2].x);
  EXPECT_EQ(a.scene.objects[2].y, b.scene.objects[2].y);
  EXPECT_NE(a.scene.objects[0].x, b.scene.objects[0].x);
}

TEST(GridItems, DistinctColors) {
  const auto ids = grid_identities(spec_for(4, true));
  std::set<int> colors;
  for (const auto& o : ids) colors.insert(o.color);
  EXPECT_EQ(colors.size(), 4u);
}

TEST(GridSplit, SizesAndDeterminism) {
  const auto s = spec_for(2);
  const auto seeds = trial_seeds(s);
  ASSERT_EQ(seeds.size(), 10u);
  const auto a = split(2401, 50.0, seeds);
  const auto b = split(2401, 50.0, seeds);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].train.size(), 1200u);
    EXPECT_EQ(a[t].test.size(), 1201u);
    EXPECT_EQ(a[t].train, b[t].train);
    std::vector<std::size_t> all = a[t].train;
    all.insert(all.end(), a[t].test.begin(), a[t].test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
  }
  std::set<std::vector<std::size_t>> distinct;
  for (const auto& sp : a) distinct.insert(sp.train);
  EXPECT_EQ(distinct.size(), a.size());
}

TEST(GridQuestions, FamiliesAndDeterminacy) {
  const auto s = spec_for(3);
  Rng rng(4);
  int checked = 0;
  for (long long id = 0; id < 117649 && checked < 40; id += 2917) {
    const auto item = make_grid_item(id, s);
    if (!item.valid) continue;
    ++checked;
    for (HopFamily f : {HopFamily::kOnehop, HopFamily::kTwohop, HopFamily::kMixhop}) {
      for (const auto& q : make_questions(item, f, rng)) {
        const Answer a = execute(q.program, item.scene);
        ASSERT_TRUE(a.determined());
        EXPECT_EQ(a.to_string(), q.answer);
        const int hops = relate_nodes(q.program);
        if (f == HopFamily::kOnehop) EXPECT_EQ(hops, 1);
        if (f == HopFamily::kTwohop) EXPECT_EQ(hops, 2);
        if (f == HopFamily::kMixhop) EXPECT_TRUE(hops == 1 || hops == 2);
      }
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(GridTemplates, BundledHasBothFamilies) {
  const auto& t = GridTemplates::bundled();
  EXPECT_FALSE(t.onehop.empty());
  EXPECT_FALSE(t.twohop.empty());
  EXPECT_FALSE(t.version.empty());
}

TEST(GridDataset, WritesManifestAndShards) {
  const auto dir = std::filesystem::temp_directory_path() / "advgame_grid_ds";
  std::filesystem::remove_all(dir);
  const auto summary = write_grid_dataset(spec_for(2), dir.string(), 1000);
  EXPECT_EQ(summary.raw, 2401);
  EXPECT_EQ(summary.valid + summary.invalid, 2401);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  std::filesystem::remove_all(dir);
}

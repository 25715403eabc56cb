#include <gtest/gtest.h>

#include "sets/mining.hpp"
#include "sets/store.hpp"
#include "sets/synthetic.hpp"
#include "test_support.hpp"

using namespace sets;
using sets::testing::TempDir;

namespace {

ShapeletStore mined() {
  const auto m = make_motif_dataset({.per_class = 12, .seed = 3});
  MiningConfig cfg;
  cfg.candidate_budget = 300;
  cfg.seed = 5;
  return mine_contracted(m.data, cfg).store;
}

Shapelet shapelet(ShapeletId id, const ClassLabel& c, std::size_t dim, double quality) {
  Shapelet s;
  s.id = id;
  s.class_assoc = c;
  s.dim = dim;
  s.quality = quality;
  s.values = {0, 1, 0};
  return s;
}

}  // namespace

TEST(Store, JsonRoundTrip) {
  const auto store = mined();
  ASSERT_FALSE(store.empty());
  const auto j = to_json(store);
  EXPECT_EQ(j.at("format_version"), 1);
  const auto back = store_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  ASSERT_EQ(back.size(), store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    EXPECT_EQ(back.shapelet(i).values, store.shapelet(i).values);
    EXPECT_EQ(back.shapelet(i).occurrences.size(), store.shapelet(i).occurrences.size());
    EXPECT_EQ(back.shapelet(i).distribution.mean_start, store.shapelet(i).distribution.mean_start);
  }
  EXPECT_EQ(back.seed(), 5u);
  EXPECT_EQ(back.config().candidate_budget, 300u);
}

TEST(Store, FileRoundTripIsByteStable) {
  TempDir dir;
  const auto store = mined();
  save_store(store, dir / "a.json");
  save_store(load_store(dir / "a.json"), dir / "b.json");
  EXPECT_EQ(sets::testing::read_file(dir / "a.json"), sets::testing::read_file(dir / "b.json"));
}

TEST(Store, IndexAgreesWithFlatList) {
  const ShapeletStore store({shapelet(0, "A", 1, 0.3), shapelet(1, "B", 0, 0.9), shapelet(2, "A", 1, 0.7),
                             shapelet(3, "A", 0, 0.2)},
                            {}, 2, 10, {"A", "B"});
  EXPECT_EQ(store.by_class_dim("A", 1), (std::vector<ShapeletId>{2, 0}));
  EXPECT_EQ(store.by_class_dim("A", 0), (std::vector<ShapeletId>{3}));
  EXPECT_EQ(store.by_class_dim("B", 1), (std::vector<ShapeletId>{}));
  EXPECT_EQ(store.by_class_dim("C", 0), (std::vector<ShapeletId>{}));
  EXPECT_DOUBLE_EQ(*store.best_quality(0), 0.9);
  EXPECT_DOUBLE_EQ(*store.best_quality(1), 0.7);
  std::size_t listed = 0;
  for (const auto& c : store.classes())
    for (std::size_t d = 0; d < store.dims(); ++d) listed += store.by_class_dim(c, d).size();
  EXPECT_EQ(listed, store.size());
}

TEST(Store, RejectsInconsistentShapelets) {
  EXPECT_THROW(ShapeletStore({shapelet(1, "A", 0, 0.5)}, {}, 1, 10, {"A", "B"}), ContractError);
  auto s = shapelet(0, "A", 0, 0.5);
  s.class_assoc.reset();
  EXPECT_THROW(ShapeletStore({s}, {}, 1, 10, {"A", "B"}), ContractError);
}

TEST(Store, LoadErrors) {
  TempDir dir;
  EXPECT_THROW(load_store(dir / "missing.json"), LoadError);
  sets::testing::write_file(dir / "bad.json", "{not json");
  EXPECT_THROW(load_store(dir / "bad.json"), LoadError);
  auto j = to_json(mined());
  j["format_version"] = 99;
  sets::testing::write_file(dir / "v99.json", j.dump());
  EXPECT_THROW(load_store(dir / "v99.json"), LoadError);
}

TEST(Store, MiningConfigRoundTrip) {
  MiningConfig c;
  c.budget = MiningConfig::Budget::Seconds;
  c.time_budget_seconds = 14400;
  c.min_length = 4;
  c.max_length = 12;
  c.normalize = false;
  c.top_q = 3;
  c.occ_threshold = MiningConfig::OccThreshold::Percentile;
  c.occ_percentile = 25;
  c.seed = 77;
  EXPECT_EQ(to_json(mining_config_from_json(to_json(c))).dump(), to_json(c).dump());
}

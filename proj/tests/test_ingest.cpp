#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>
#include <vector>

#include "city3dqa/detail/exact_sum.hpp"
#include "city3dqa/ingest.hpp"
#include "city3dqa/rng.hpp"
#include "test_support.hpp"

using namespace city3dqa;
using namespace city3dqa::ingest;

namespace {

std::vector<PointRecord> random_records(Rng& rng, std::size_t n,
                                        std::uint32_t instances,
                                        std::uint32_t classes = 3) {
  std::vector<PointRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PointRecord rec;
    // mixed magnitudes make the exact-sum guarantees earn their keep
    const double scale = (i % 7 == 0) ? 1e6 : (i % 3 == 0 ? 1e-3 : 1e2);
    rec.position = {(rng.unit() * 2 - 1) * scale, (rng.unit() * 2 - 1) * scale,
                    rng.unit() * 50};
    rec.instance_id = static_cast<std::uint32_t>(rng.bounded(instances));
    rec.class_id = rec.instance_id % classes;
    records.push_back(rec);
  }
  return records;
}

}  // namespace

TEST_CASE("parse_point_record worked examples") {
  PointRecord rec = parse_point_record("1.5 -2.0 10.0 3 42", 1);
  CHECK(rec.position == Vec3{1.5, -2.0, 10.0});
  CHECK(rec.class_id == 3);
  CHECK(rec.instance_id == 42);

  rec = parse_point_record("0 0 0 0 0", 2);
  CHECK(rec.position == Vec3{0, 0, 0});
  CHECK(rec.class_id == 0);
  CHECK(rec.instance_id == 0);
}

TEST_CASE("parse_point_record errors name the field and line") {
  try {
    parse_point_record("1.0 2.0 3.0 x 5", 17);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("field 4") != std::string::npos);
    CHECK(e.line == 17);
  }
  CHECK_THROWS_AS(parse_point_record("1 2 3 4", 1), ParseError);
  CHECK_THROWS_AS(parse_point_record("1 2 3 4 5 6", 1), ParseError);
  CHECK_THROWS_AS(parse_point_record("1 2 3 -4 5", 1), ParseError);
  CHECK_THROWS_AS(parse_point_record("nan 2 3 4 5", 1), ParseError);
}

TEST_CASE("xyzci reader skips comments and blank lines") {
  std::stringstream ss("# city cloud\n\n  # indented comment\n1 2 3 0 7\n");
  XyzciReader reader(ss);
  auto rec = reader.next();
  REQUIRE(rec.has_value());
  CHECK(rec->instance_id == 7);
  CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("stream_scene_stats two-point example") {
  std::vector<PointRecord> records = {{{0, 0, 0}, 1, 5}, {{2, 2, 2}, 1, 5}};
  VectorSource source(records);
  SceneStats stats = stream_scene_stats(source);
  REQUIRE(stats.size() == 1);
  const auto& acc = stats.at(5);
  CHECK(acc.class_id == 1);
  CHECK(acc.stats.count == 2);
  CHECK(acc.stats.sum() == Vec3{2, 2, 2});
  CHECK(acc.stats.min == Vec3{0, 0, 0});
  CHECK(acc.stats.max == Vec3{2, 2, 2});
}

TEST_CASE("stream_scene_stats empty source") {
  std::vector<PointRecord> none;
  VectorSource source(none);
  CHECK(stream_scene_stats(source).empty());
}

TEST_CASE("stream_scene_stats flags class conflicts") {
  std::vector<PointRecord> records = {{{0, 0, 0}, 1, 5}, {{1, 1, 1}, 2, 5}};
  VectorSource source(records);
  CHECK_THROWS_AS(stream_scene_stats(source), ConsistencyError);
}

TEST_CASE("streaming equals naive in-memory grouping") {
  Rng rng(21);
  std::vector<PointRecord> records = random_records(rng, 10000, 5);
  VectorSource source(records);
  SceneStats stats = stream_scene_stats(source);

  std::map<std::uint32_t, std::vector<Vec3>> groups;
  for (const PointRecord& rec : records) {
    groups[rec.instance_id].push_back(rec.position);
  }
  REQUIRE(stats.size() == groups.size());
  for (const auto& [id, points] : groups) {
    const auto& acc = stats.at(id);
    REQUIRE(acc.stats.count == points.size());
    Vec3 sum{0, 0, 0}, mn = points[0], mx = points[0];
    for (const Vec3& p : points) {
      sum = sum + p;
      Aabb box{mn, mx};
      box.expand(p);
      mn = box.min;
      mx = box.max;
    }
    CHECK(acc.stats.min == mn);
    CHECK(acc.stats.max == mx);
    const double n = static_cast<double>(points.size());
    CHECK_THAT(acc.stats.sum().x / n,
               Catch::Matchers::WithinRel(sum.x / n, 1e-12));
    CHECK_THAT(acc.stats.sum().y / n,
               Catch::Matchers::WithinRel(sum.y / n, 1e-12));
  }
}

TEST_CASE("chunked accumulation merged equals sequential exactly") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PointRecord> records =
        random_records(rng, 2000 + rng.bounded(2000), 7);
    VectorSource all(records);
    SceneStats sequential = stream_scene_stats(all);

    // random chunking, merged left-to-right and right-to-left
    std::vector<SceneStats> chunks;
    std::size_t pos = 0;
    while (pos < records.size()) {
      std::size_t len = 1 + rng.bounded(records.size() - pos);
      std::vector<PointRecord> chunk(records.begin() + pos,
                                     records.begin() + pos + len);
      VectorSource src(chunk);
      chunks.push_back(stream_scene_stats(src));
      pos += len;
    }
    SceneStats forward;
    for (const SceneStats& c : chunks) {
      forward = merge_scene_stats(std::move(forward), c);
    }
    SceneStats backward;
    for (auto it = chunks.rbegin(); it != chunks.rend(); ++it) {
      backward = merge_scene_stats(std::move(backward), *it);
    }
    REQUIRE(forward.size() == sequential.size());
    REQUIRE(backward.size() == sequential.size());
    for (const auto& [id, acc] : sequential) {
      CHECK(forward.at(id).stats.same_as(acc.stats));
      CHECK(backward.at(id).stats.same_as(acc.stats));
      CHECK(forward.at(id).stats.sum() == acc.stats.sum());
      CHECK(backward.at(id).stats.sum() == acc.stats.sum());
    }
  }
}

TEST_CASE("exact sum components stay bounded") {
  city3dqa::detail::ExactSum sum;
  Rng rng(23);
  for (int i = 0; i < 100000; ++i) {
    sum.add((rng.unit() * 2 - 1) * (i % 5 == 0 ? 1e7 : 1e-2));
  }
  CHECK(sum.component_count() <= 40);
}

TEST_CASE("finalize_instances worked examples") {
  SceneStats stats;
  stats[3].class_id = 0;
  stats[3].stats.add({0, 0, 0});
  stats[3].stats.add({2, 2, 2});
  ClassMap classes{{0, "boat"}};
  std::vector<Instance> instances = finalize_instances(stats, classes);
  REQUIRE(instances.size() == 1);
  CHECK(instances[0].centroid == Vec3{1, 1, 1});
  CHECK(instances[0].aabb.min == Vec3{0, 0, 0});
  CHECK(instances[0].aabb.max == Vec3{2, 2, 2});
  CHECK(instances[0].point_count == 2);
  CHECK(instances[0].class_label == "boat");

  SceneStats single;
  single[9].class_id = 0;
  single[9].stats.add({5, 6, 7});
  std::vector<Instance> one = finalize_instances(single, classes);
  CHECK(one[0].centroid == Vec3{5, 6, 7});
  CHECK(one[0].aabb.min == one[0].aabb.max);
}

TEST_CASE("finalize_instances centroid matches brute force on random stats") {
  Rng rng(24);
  std::vector<PointRecord> records = random_records(rng, 5000, 6, 2);
  VectorSource source(records);
  SceneStats stats = stream_scene_stats(source);
  ClassMap classes{{0, "building"}, {1, "boat"}, {2, "vehicle"}};
  std::vector<Instance> instances = finalize_instances(stats, classes);
  for (const Instance& inst : instances) {
    Vec3 sum{0, 0, 0};
    std::uint64_t n = 0;
    for (const PointRecord& rec : records) {
      if (rec.instance_id != inst.id) continue;
      sum = sum + rec.position;
      ++n;
    }
    REQUIRE(n == inst.point_count);
    CHECK_THAT(inst.centroid.x, Catch::Matchers::WithinRel(
                                    sum.x / static_cast<double>(n), 1e-9));
    CHECK_THAT(inst.centroid.y, Catch::Matchers::WithinRel(
                                    sum.y / static_cast<double>(n), 1e-9));
    CHECK_THAT(inst.centroid.z, Catch::Matchers::WithinRel(
                                    sum.z / static_cast<double>(n), 1e-9));
    CHECK(inst.aabb.contains(inst.centroid));
  }
}

TEST_CASE("finalize_instances needs every class id mapped") {
  SceneStats stats;
  stats[0].class_id = 42;
  stats[0].stats.add({0, 0, 0});
  CHECK_THROWS_AS(finalize_instances(stats, ClassMap{{0, "x"}}), ConfigError);
}

TEST_CASE("finalize_instances category from lexicon and overrides") {
  SceneStats stats;
  stats[0].class_id = 0;
  stats[0].stats.add({0, 0, 0});
  stats[1].class_id = 0;
  stats[1].stats.add({9, 9, 9});
  ClassMap classes{{0, "building"}};
  Lexicon lex = testsupport::pool_lexicon();
  CategoryOverrides overrides{{1, "office building"}};
  std::vector<Instance> instances =
      finalize_instances(stats, classes, &lex, &overrides);
  CHECK(instances[0].category_label == "residential building");
  CHECK(instances[1].category_label == "office building");
}

TEST_CASE("manifest round-trips") {
  SceneManifest m;
  m.city = "Qingdao";
  m.scene_id = "s-1";
  m.class_map = {{0, "boat"}, {1, "building"}};

  SECTION("empty instances") {
    std::stringstream ss;
    write_manifest(m, ss);
    SceneManifest back = read_manifest(ss);
    CHECK(back.city == "Qingdao");
    CHECK(back.class_map == m.class_map);
    CHECK(back.instances.empty());
  }

  SECTION("random instances, byte-stable") {
    Rng rng(31);
    for (int i = 0; i < 1000; ++i) {
      m.instances.push_back(testsupport::make_instance(
          static_cast<std::uint32_t>(i), "boat", "boat", rng.unit() * 1e3,
          rng.unit() * 1e3, rng.unit() * 10));
    }
    std::stringstream first, second;
    write_manifest(m, first);
    write_manifest(m, second);
    CHECK(first.str() == second.str());
    std::stringstream replay(first.str());
    SceneManifest back = read_manifest(replay);
    REQUIRE(back.instances.size() == m.instances.size());
    for (std::size_t i = 0; i < back.instances.size(); ++i) {
      CHECK(back.instances[i].centroid == m.instances[i].centroid);
      CHECK(back.instances[i].aabb.min == m.instances[i].aabb.min);
      CHECK(back.instances[i].point_count == m.instances[i].point_count);
    }
    std::stringstream rewritten;
    write_manifest(back, rewritten);
    CHECK(rewritten.str() == first.str());
  }
}

TEST_CASE("manifest read errors name the field") {
  std::stringstream ss(R"({"city": "X", "scene_id": "s"})");
  try {
    read_manifest(ss);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("class_map") != std::string::npos);
  }
}

TEST_CASE("xyzci and c3pc round-trip the same records") {
  Rng rng(32);
  std::vector<PointRecord> records = random_records(rng, 500, 9);

  std::stringstream text;
  {
    XyzciWriter writer(text);
    for (const PointRecord& rec : records) writer.write(rec);
  }
  {
    XyzciReader reader(text);
    for (const PointRecord& expected : records) {
      auto rec = reader.next();
      REQUIRE(rec.has_value());
      CHECK(*rec == expected);
    }
    CHECK_FALSE(reader.next().has_value());
  }

  std::stringstream binary(std::ios::in | std::ios::out | std::ios::binary);
  {
    C3pcWriter writer(binary);
    for (const PointRecord& rec : records) writer.write(rec);
  }
  binary.seekg(0);
  CHECK(detect_point_format(binary) == PointFormat::c3pc);
  {
    C3pcReader reader(binary);
    for (const PointRecord& expected : records) {
      auto rec = reader.next();
      REQUIRE(rec.has_value());
      CHECK(*rec == expected);
    }
    CHECK_FALSE(reader.next().has_value());
  }
}

TEST_CASE("c3pc rejects bad magic and truncated records") {
  std::stringstream bad("NOPE....");
  CHECK_THROWS_AS(C3pcReader{bad}, FormatError);

  std::stringstream truncated(std::ios::in | std::ios::out | std::ios::binary);
  {
    C3pcWriter writer(truncated);
    writer.write({{1, 2, 3}, 0, 0});
  }
  std::string bytes = truncated.str();
  bytes.resize(bytes.size() - 5);
  std::stringstream chopped(bytes,
                            std::ios::in | std::ios::out | std::ios::binary);
  C3pcReader reader(chopped);
  CHECK_THROWS_AS(reader.next(), FormatError);
}

#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "city3dqa/detail/exact_sum.hpp"
#include "city3dqa/errors.hpp"
#include "city3dqa/geometry.hpp"
#include "city3dqa/lexicon.hpp"
#include "city3dqa/scene.hpp"

namespace city3dqa::ingest {

struct PointRecord {
  Vec3 position;
  std::uint32_t class_id = 0;
  std::uint32_t instance_id = 0;

  friend bool operator==(const PointRecord&, const PointRecord&) = default;
};

// ---------------------------------------------------------------------------
// XYZCI text format: one record per line, "x y z class_id instance_id",
// '#' comment lines and blank lines skipped.

inline bool is_skippable_line(std::string_view line) {
  std::size_t i = line.find_first_not_of(" \t\r");
  return i == std::string_view::npos || line[i] == '#';
}

inline PointRecord parse_point_record(std::string_view line,
                                      std::size_t line_no = 0) {
  PointRecord rec;
  const char* p = line.data();
  const char* end = p + line.size();
  int field = 0;
  double nums[3];
  std::uint32_t ids[2];
  while (true) {
    while (p != end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    if (field >= 5) {
      throw ParseError(line_no, "expected 5 fields, found more");
    }
    std::from_chars_result res{};
    if (field < 3) {
      res = std::from_chars(p, end, nums[field]);
    } else {
      res = std::from_chars(p, end, ids[field - 3]);
    }
    const bool consumed_token =
        res.ec == std::errc() &&
        (res.ptr == end || *res.ptr == ' ' || *res.ptr == '\t' ||
         *res.ptr == '\r');
    if (!consumed_token) {
      std::string why = res.ec == std::errc::result_out_of_range
                            ? "value out of range"
                            : "unparsable number";
      if (field >= 3 && p != end && *p == '-') why = "negative id";
      throw ParseError(line_no, why + " in field " + std::to_string(field + 1));
    }
    p = res.ptr;
    ++field;
  }
  if (field != 5) {
    throw ParseError(line_no, "expected 5 fields, found " +
                                  std::to_string(field));
  }
  rec.position = {nums[0], nums[1], nums[2]};
  if (!rec.position.is_finite()) {
    throw ParseError(line_no, "non-finite coordinate");
  }
  rec.class_id = ids[0];
  rec.instance_id = ids[1];
  return rec;
}

class XyzciReader {
 public:
  explicit XyzciReader(std::istream& in) : in_(&in) {}

  std::optional<PointRecord> next() {
    while (std::getline(*in_, line_)) {
      ++line_no_;
      if (is_skippable_line(line_)) continue;
      return parse_point_record(line_, line_no_);
    }
    return std::nullopt;
  }

  std::size_t line_number() const { return line_no_; }

 private:
  std::istream* in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

class XyzciWriter {
 public:
  explicit XyzciWriter(std::ostream& out) : out_(&out) {
    buf_.reserve(96);
  }

  void write(const PointRecord& rec) {
    buf_.clear();
    append_number(rec.position.x);
    buf_ += ' ';
    append_number(rec.position.y);
    buf_ += ' ';
    append_number(rec.position.z);
    buf_ += ' ';
    append_number(rec.class_id);
    buf_ += ' ';
    append_number(rec.instance_id);
    buf_ += '\n';
    out_->write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  }

 private:
  template <typename T>
  void append_number(T v) {
    char tmp[32];
    auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v);
    buf_.append(tmp, ptr);
  }

  std::ostream* out_;
  std::string buf_;
};

// ---------------------------------------------------------------------------
// C3PC binary format: 8-byte magic, then little-endian records of
// 3 x float64 + 2 x uint32 (32 bytes each).

inline constexpr char c3pc_magic[8] = {'C', '3', 'P', 'C', 0, 0, 0, 1};
inline constexpr std::size_t c3pc_record_size = 32;

namespace detail {

inline void put_u32_le(unsigned char* dst, std::uint32_t v) {
  dst[0] = static_cast<unsigned char>(v);
  dst[1] = static_cast<unsigned char>(v >> 8);
  dst[2] = static_cast<unsigned char>(v >> 16);
  dst[3] = static_cast<unsigned char>(v >> 24);
}

inline std::uint32_t get_u32_le(const unsigned char* src) {
  return static_cast<std::uint32_t>(src[0]) |
         (static_cast<std::uint32_t>(src[1]) << 8) |
         (static_cast<std::uint32_t>(src[2]) << 16) |
         (static_cast<std::uint32_t>(src[3]) << 24);
}

inline void put_f64_le(unsigned char* dst, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) {
    dst[i] = static_cast<unsigned char>(bits >> (8 * i));
  }
}

inline double get_f64_le(const unsigned char* src) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  }
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

class C3pcWriter {
 public:
  explicit C3pcWriter(std::ostream& out) : out_(&out) {
    out_->write(c3pc_magic, sizeof(c3pc_magic));
  }

  void write(const PointRecord& rec) {
    unsigned char buf[c3pc_record_size];
    detail::put_f64_le(buf + 0, rec.position.x);
    detail::put_f64_le(buf + 8, rec.position.y);
    detail::put_f64_le(buf + 16, rec.position.z);
    detail::put_u32_le(buf + 24, rec.class_id);
    detail::put_u32_le(buf + 28, rec.instance_id);
    out_->write(reinterpret_cast<const char*>(buf), c3pc_record_size);
  }

 private:
  std::ostream* out_;
};

class C3pcReader {
 public:
  explicit C3pcReader(std::istream& in) : in_(&in) {
    char magic[8];
    in_->read(magic, sizeof(magic));
    if (in_->gcount() != sizeof(magic) ||
        std::memcmp(magic, c3pc_magic, sizeof(magic)) != 0) {
      throw FormatError("C3PC: bad or missing magic header");
    }
  }

  std::optional<PointRecord> next() {
    unsigned char buf[c3pc_record_size];
    in_->read(reinterpret_cast<char*>(buf), c3pc_record_size);
    const auto got = in_->gcount();
    if (got == 0) return std::nullopt;
    if (got != static_cast<std::streamsize>(c3pc_record_size)) {
      throw FormatError("C3PC: truncated record at offset " +
                        std::to_string(offset_));
    }
    ++offset_;
    PointRecord rec;
    rec.position = {detail::get_f64_le(buf + 0), detail::get_f64_le(buf + 8),
                    detail::get_f64_le(buf + 16)};
    if (!rec.position.is_finite()) {
      throw FormatError("C3PC: non-finite coordinate in record " +
                        std::to_string(offset_ - 1));
    }
    rec.class_id = detail::get_u32_le(buf + 24);
    rec.instance_id = detail::get_u32_le(buf + 28);
    return rec;
  }

 private:
  std::istream* in_;
  std::uint64_t offset_ = 0;
};

enum class PointFormat { xyzci, c3pc };

// Sniffs the magic; falls back to text.
inline PointFormat detect_point_format(std::istream& in) {
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  const auto got = in.gcount();
  in.clear();
  in.seekg(0);
  if (got == sizeof(magic) &&
      std::memcmp(magic, c3pc_magic, sizeof(magic)) == 0) {
    return PointFormat::c3pc;
  }
  return PointFormat::xyzci;
}

// ---------------------------------------------------------------------------
// Streaming statistics: one pass, memory proportional to the instance count.

struct RunningStats {
  std::uint64_t count = 0;
  city3dqa::detail::ExactSum sum_x, sum_y, sum_z;
  Vec3 min;
  Vec3 max;

  void add(const Vec3& p) {
    if (count == 0) {
      min = max = p;
    } else {
      Aabb box{min, max};
      box.expand(p);
      min = box.min;
      max = box.max;
    }
    sum_x.add(p.x);
    sum_y.add(p.y);
    sum_z.add(p.z);
    ++count;
  }

  void merge(const RunningStats& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    Aabb box{min, max};
    box.expand(Aabb{other.min, other.max});
    min = box.min;
    max = box.max;
    sum_x.merge(other.sum_x);
    sum_y.merge(other.sum_y);
    sum_z.merge(other.sum_z);
    count += other.count;
  }

  Vec3 sum() const { return {sum_x.value(), sum_y.value(), sum_z.value()}; }

  bool same_as(const RunningStats& other) const {
    return count == other.count && min == other.min && max == other.max &&
           sum_x.same_value(other.sum_x) && sum_y.same_value(other.sum_y) &&
           sum_z.same_value(other.sum_z);
  }
};

struct InstanceAccumulator {
  std::uint32_t class_id = 0;
  RunningStats stats;
};

using SceneStats = std::unordered_map<std::uint32_t, InstanceAccumulator>;

// Single pass over a record source (anything with
// `std::optional<PointRecord> next()`). Auxiliary memory is one accumulator
// per distinct instance id, independent of the number of points.
template <typename Source>
SceneStats stream_scene_stats(Source&& source) {
  SceneStats stats;
  while (auto rec = source.next()) {
    auto [it, inserted] = stats.try_emplace(rec->instance_id);
    if (inserted) {
      it->second.class_id = rec->class_id;
    } else if (it->second.class_id != rec->class_id) {
      throw ConsistencyError(
          "instance " + std::to_string(rec->instance_id) +
          " observed with class ids " + std::to_string(it->second.class_id) +
          " and " + std::to_string(rec->class_id));
    }
    it->second.stats.add(rec->position);
  }
  return stats;
}

// Associative, commutative merge over disjoint chunks; equals the sequential
// result exactly (sums are kept exactly, min/max/count trivially commute).
inline SceneStats merge_scene_stats(SceneStats a, const SceneStats& b) {
  for (const auto& [id, acc] : b) {
    auto [it, inserted] = a.try_emplace(id, acc);
    if (!inserted) {
      if (it->second.class_id != acc.class_id) {
        throw ConsistencyError("instance " + std::to_string(id) +
                               " observed with class ids " +
                               std::to_string(it->second.class_id) + " and " +
                               std::to_string(acc.class_id));
      }
      it->second.stats.merge(acc.stats);
    }
  }
  return a;
}

// Adapter for in-memory record lists (tests, subsampling).
class VectorSource {
 public:
  explicit VectorSource(const std::vector<PointRecord>& records)
      : records_(&records) {}

  std::optional<PointRecord> next() {
    if (pos_ >= records_->size()) return std::nullopt;
    return (*records_)[pos_++];
  }

 private:
  const std::vector<PointRecord>* records_;
  std::size_t pos_ = 0;
};

using ClassMap = std::map<std::uint32_t, std::string>;
using CategoryOverrides = std::map<std::uint32_t, std::string>;

// Turns accumulators into Instance records, ordered by instance id.
// Category label comes from the override table, else the lexicon entry for
// the class label, else the class label itself.
inline std::vector<Instance> finalize_instances(
    const SceneStats& stats, const ClassMap& class_map,
    const Lexicon* lexicon = nullptr,
    const CategoryOverrides* overrides = nullptr) {
  std::vector<Instance> out;
  out.reserve(stats.size());
  for (const auto& [id, acc] : stats) {
    auto cls = class_map.find(acc.class_id);
    if (cls == class_map.end()) {
      throw ConfigError("class id " + std::to_string(acc.class_id) +
                        " missing from class map (instance " +
                        std::to_string(id) + ")");
    }
    Instance inst;
    inst.id = id;
    inst.class_label = cls->second;
    inst.category_label = cls->second;
    if (lexicon) {
      if (const LexiconEntry* e = lexicon->find(inst.class_label)) {
        if (!e->category.empty()) inst.category_label = e->category;
      }
    }
    if (overrides) {
      auto ov = overrides->find(id);
      if (ov != overrides->end()) inst.category_label = ov->second;
    }
    inst.aabb = {acc.stats.min, acc.stats.max};
    const double n = static_cast<double>(acc.stats.count);
    Vec3 mean{acc.stats.sum_x.value() / n, acc.stats.sum_y.value() / n,
              acc.stats.sum_z.value() / n};
    // the exact mean lies inside the box; clamp the final rounding back in
    inst.centroid = inst.aabb.clamp(mean);
    inst.point_count = acc.stats.count;
    out.push_back(std::move(inst));
  }
  std::sort(out.begin(), out.end(),
            [](const Instance& a, const Instance& b) { return a.id < b.id; });
  return out;
}

// ---------------------------------------------------------------------------
// Scene manifest

struct SceneManifest {
  std::string city;
  std::string scene_id;
  ClassMap class_map;
  std::vector<Instance> instances;
};

inline nlohmann::ordered_json manifest_to_json(const SceneManifest& m) {
  nlohmann::ordered_json j;
  j["city"] = m.city;
  j["scene_id"] = m.scene_id;
  j["class_map"] = nlohmann::ordered_json::object();
  for (const auto& [id, label] : m.class_map) {
    j["class_map"][std::to_string(id)] = label;
  }
  j["instances"] = nlohmann::ordered_json::array();
  for (const Instance& inst : m.instances) {
    j["instances"].push_back(scene_json::instance_to_json(inst));
  }
  return j;
}

inline SceneManifest manifest_from_json(const nlohmann::json& j) {
  SceneManifest m;
  for (const char* f : {"city", "scene_id"}) {
    if (!j.contains(f) || !j[f].is_string()) {
      throw FormatError(std::string("manifest: missing string field '") + f +
                        "'");
    }
  }
  m.city = j["city"].get<std::string>();
  m.scene_id = j["scene_id"].get<std::string>();
  if (!j.contains("class_map") || !j["class_map"].is_object()) {
    throw FormatError("manifest: missing object field 'class_map'");
  }
  for (auto it = j["class_map"].begin(); it != j["class_map"].end(); ++it) {
    std::uint32_t id;
    auto res = std::from_chars(it.key().data(),
                               it.key().data() + it.key().size(), id);
    if (res.ec != std::errc() || res.ptr != it.key().data() + it.key().size()) {
      throw FormatError("manifest: class_map key '" + it.key() +
                        "' is not a non-negative integer");
    }
    if (!it.value().is_string()) {
      throw FormatError("manifest: class_map['" + it.key() +
                        "'] is not a string");
    }
    m.class_map[id] = it.value().get<std::string>();
  }
  if (!j.contains("instances") || !j["instances"].is_array()) {
    throw FormatError("manifest: missing array field 'instances'");
  }
  for (const auto& ji : j["instances"]) {
    m.instances.push_back(scene_json::instance_from_json(ji));
  }
  return m;
}

inline void write_manifest(const SceneManifest& m, std::ostream& out) {
  out << manifest_to_json(m).dump(2) << '\n';
}

inline SceneManifest read_manifest(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: invalid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

inline SceneManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest file: " + path);
  return read_manifest(in);
}

inline void save_manifest(const SceneManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write manifest file: " + path);
  write_manifest(m, out);
}

}  // namespace city3dqa::ingest

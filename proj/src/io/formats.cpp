// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/io/formats.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "pedrisk/error.hpp"
#include "pedrisk/io/csv.hpp"

namespace pedrisk::io {
namespace {

constexpr char kMagic[4] = {'S', 'E', 'B', '1'};

std::string fmt(double v) { return format_double(v); }

void check_unique(std::set<std::string>& seen, const std::string& id, const CsvTable& t, std::size_t row,
                  const char* what) {
  if (!seen.insert(id).second) {
    throw ValidationError(t.source.string() + ":" + std::to_string(t.lines[row]) + ": duplicate " +
                          what + " '" + id + "'");
  }
}

std::string at_line(const CsvTable& t, std::size_t row) {
  return t.source.string() + ":" + std::to_string(t.lines[row]);
}

template <typename T>
T get(const Json& j, const char* key, const fs::path& path, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(path.string() + ": " + ctx + " is missing '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(path.string() + ": " + ctx + " has a malformed '" + key + "'");
  }
}

std::string id_text(const Json& v, const fs::path& path, const std::string& ctx) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw ValidationError(path.string() + ": " + ctx + " id must be a string or integer");
}

BBox parse_bbox(const Json& j, const fs::path& path, const std::string& ctx) {
  if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4) {
    throw ValidationError(path.string() + ": " + ctx + " needs bbox [x, y, w, h]");
  }
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j["bbox"][i].is_number()) throw ValidationError(path.string() + ": " + ctx + " bbox is not numeric");
    v[i] = j["bbox"][i].get<double>();
  }
  return {v[0], v[1], v[2], v[3]};
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (const double v : m.row(i)) r.push_back(v);
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const fs::path& path, const std::string& name) {
  if (!j.is_array()) throw ValidationError(path.string() + ": parameter '" + name + "' must be an array");
  if (j.empty()) return {};
  const std::size_t cols = j[0].size();
  Matrix m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ValidationError(path.string() + ": parameter '" + name + "' is ragged");
    }
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& buf, double v) { put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

struct Reader {
  const std::string& data;
  std::size_t pos = 0;
  const fs::path& path;

  void need(std::size_t n) const {
    if (pos + n > data.size()) throw ValidationError(path.string() + ": truncated embedding file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data[pos++]);
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<CrossingPoint> read_crossings(const fs::path& path) {
  const auto t = read_csv(path, {"crossing_id", "lat", "lon", "collisions"});
  const auto ci = t.column("crossing_id"), la = t.column("lat"), lo = t.column("lon"), co = t.column("collisions");
  std::vector<CrossingPoint> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CrossingPoint p{t.text(r, ci), {t.real(r, la), t.real(r, lo)}, t.integer(r, co)};
    check_unique(seen, p.crossing_id, t, r, "crossing_id");
    validate_point(p.location, at_line(t, r) + " crossing '" + p.crossing_id + "'");
    if (p.collisions < 0) throw ValidationError(at_line(t, r) + ": negative collisions");
    out.push_back(std::move(p));
  }
  return out;
}

void write_crossings(const fs::path& path, const std::vector<CrossingPoint>& points) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : points) {
    rows.push_back({p.crossing_id, fmt(p.location.lat), fmt(p.location.lon), std::to_string(p.collisions)});
  }
  write_csv(path, {"crossing_id", "lat", "lon", "collisions"}, rows);
}

std::vector<ImageRecord> read_images(const fs::path& path) {
  const auto t = read_csv(path, {"image_id", "lat", "lon", "width", "height"});
  const auto ii = t.column("image_id"), la = t.column("lat"), lo = t.column("lon"), wi = t.column("width"),
             he = t.column("height");
  std::vector<ImageRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ImageRecord img{t.text(r, ii), {t.real(r, la), t.real(r, lo)}, static_cast<int>(t.integer(r, wi)),
                    static_cast<int>(t.integer(r, he))};
    check_unique(seen, img.image_id, t, r, "image_id");
    validate_point(img.location, at_line(t, r) + " image '" + img.image_id + "'");
    if (img.width <= 0 || img.height <= 0) throw ValidationError(at_line(t, r) + ": image size must be positive");
    out.push_back(std::move(img));
  }
  return out;
}

void write_images(const fs::path& path, const std::vector<ImageRecord>& images) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& i : images) {
    rows.push_back({i.image_id, fmt(i.location.lat), fmt(i.location.lon), std::to_string(i.width),
                    std::to_string(i.height)});
  }
  write_csv(path, {"image_id", "lat", "lon", "width", "height"}, rows);
}

void write_matches(const fs::path& path, const std::vector<MatchResult>& matches) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : matches) {
    rows.push_back({m.image_id, m.crossing_id, fmt(m.distance_m), std::to_string(m.collisions)});
  }
  write_csv(path, {"image_id", "crossing_id", "distance_m", "collisions"}, rows);
}

std::vector<MatchResult> read_matches(const fs::path& path) {
  const auto t = read_csv(path, {"image_id", "crossing_id", "distance_m", "collisions"});
  const auto ii = t.column("image_id"), ci = t.column("crossing_id"), di = t.column("distance_m"),
             co = t.column("collisions");
  std::vector<MatchResult> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({t.text(r, ii), t.text(r, ci), t.real(r, di), t.integer(r, co)});
  }
  return out;
}

void write_rejected(const fs::path& path, const std::vector<std::string>& image_ids, const std::string& reason) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& id : image_ids) rows.push_back({id, reason});
  write_csv(path, {"image_id", "reason"}, rows);
}

CollisionLabels read_labels(const fs::path& path) {
  const auto t = read_csv(path, {"image_id", "collisions"});
  const auto ii = t.column("image_id"), co = t.column("collisions");
  CollisionLabels out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto y = t.integer(r, co);
    if (y < 0) throw ValidationError(at_line(t, r) + ": negative collisions");
    if (!out.emplace(t.text(r, ii), y).second) {
      throw ValidationError(at_line(t, r) + ": duplicate image_id '" + t.text(r, ii) + "'");
    }
  }
  return out;
}

void write_labels(const fs::path& path, const CollisionLabels& labels) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, y] : labels) rows.push_back({id, std::to_string(y)});
  write_csv(path, {"image_id", "collisions"}, rows);
}

CollisionLabels labels_from_matches(const std::vector<MatchResult>& matches) {
  CollisionLabels out;
  for (const auto& m : matches) out[m.image_id] = m.collisions;
  return out;
}

SplitAssignment read_split(const fs::path& path) {
  const auto t = read_csv(path, {"image_id", "fold"});
  const auto ii = t.column("image_id"), fo = t.column("fold");
  SplitAssignment out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!out.emplace(t.text(r, ii), t.text(r, fo)).second) {
      throw ValidationError(at_line(t, r) + ": image '" + t.text(r, ii) + "' assigned twice");
    }
  }
  return out;
}

void write_split(const fs::path& path, const SplitAssignment& split) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, fold] : split) rows.push_back({id, fold});
  write_csv(path, {"image_id", "fold"}, rows);
}

std::vector<std::pair<std::string, double>> read_predictions(const fs::path& path) {
  const auto t = read_csv(path, {"image_id", "predicted_collisions"});
  const auto ii = t.column("image_id"), pc = t.column("predicted_collisions");
  std::vector<std::pair<std::string, double>> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_unique(seen, t.text(r, ii), t, r, "image_id");
    const double v = t.real(r, pc);
    if (!std::isfinite(v)) throw ValidationError(at_line(t, r) + ": prediction is not finite");
    out.emplace_back(t.text(r, ii), v);
  }
  return out;
}

void write_predictions(const fs::path& path, const std::vector<std::pair<std::string, double>>& predictions) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, v] : predictions) rows.push_back({id, fmt(v)});
  write_csv(path, {"image_id", "predicted_collisions"}, rows);
}

CountFeatures read_count_features(const fs::path& path) {
  const auto t = read_csv(path, {"image_id"});
  CountFeatures f;
  while (t.has_column("count_" + std::to_string(f.num_classes))) ++f.num_classes;
  if (f.num_classes == 0) throw ValidationError(path.string() + ": no count_<k> columns");
  f.has_coords = t.has_column("lat_norm") || t.has_column("lon_norm");
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < f.num_classes; ++c) cols.push_back(t.column("count_" + std::to_string(c)));
  if (f.has_coords) {
    cols.push_back(t.column("lat_norm"));
    cols.push_back(t.column("lon_norm"));
  }
  if (t.header.size() != cols.size() + 1) {
    throw ValidationError(path.string() + ": unexpected extra columns in count features");
  }
  const auto ii = t.column("image_id");
  f.values.resize(t.rows.size(), cols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    f.image_ids.push_back(t.text(r, ii));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double v = t.real(r, cols[k]);
      if (!std::isfinite(v) || (k < f.num_classes && v < 0.0)) {
        throw ValidationError(at_line(t, r) + ": invalid feature value");
      }
      f.values(r, k) = v;
    }
  }
  return f;
}

void write_count_features(const fs::path& path, const CountFeatures& f) {
  std::vector<std::string> header{"image_id"};
  for (std::size_t c = 0; c < f.num_classes; ++c) header.push_back("count_" + std::to_string(c));
  if (f.has_coords) {
    header.push_back("lat_norm");
    header.push_back("lon_norm");
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < f.image_ids.size(); ++r) {
    std::vector<std::string> row{f.image_ids[r]};
    for (const double v : f.values.row(r)) row.push_back(fmt(v));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

AnnotationSet read_annotations(const fs::path& path) {
  const Json j = read_json(path);
  if (!j.is_object()) throw ValidationError(path.string() + ": expected a JSON object");
  AnnotationSet set;
  std::vector<Category> cats;
  for (const auto& c : get<Json>(j, "categories", path, "annotation file")) {
    cats.push_back({get<int>(c, "id", path, "category"), get<std::string>(c, "name", path, "category")});
  }
  std::sort(cats.begin(), cats.end(), [](const Category& a, const Category& b) { return a.id < b.id; });
  set.categories = CategoryRegistry(std::move(cats));
  for (const auto& im : get<Json>(j, "images", path, "annotation file")) {
    if (!im.contains("id")) throw ValidationError(path.string() + ": image entry without id");
    ImageRecord rec;
    rec.image_id = id_text(im["id"], path, "image");
    rec.width = get<int>(im, "width", path, "image '" + rec.image_id + "'");
    rec.height = get<int>(im, "height", path, "image '" + rec.image_id + "'");
    if (im.contains("lat") && im.contains("lon")) {
      rec.location = {im["lat"].get<double>(), im["lon"].get<double>()};
    }
    set.images.push_back(std::move(rec));
  }
  for (const auto& a : get<Json>(j, "annotations", path, "annotation file")) {
    if (!a.contains("id") || !a.contains("image_id")) {
      throw ValidationError(path.string() + ": annotation entry without id or image_id");
    }
    BoxAnnotation ann;
    ann.annotation_id = id_text(a["id"], path, "annotation");
    ann.image_id = id_text(a["image_id"], path, "annotation '" + ann.annotation_id + "'");
    ann.category_id = get<int>(a, "category_id", path, "annotation '" + ann.annotation_id + "'");
    ann.bbox = parse_bbox(a, path, "annotation '" + ann.annotation_id + "'");
    set.annotations.push_back(std::move(ann));
  }
  try {
    validate_annotations(set);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return set;
}

void write_annotations(const fs::path& path, const AnnotationSet& set) {
  Json j = Json::object();
  Json images = Json::array();
  for (const auto& im : set.images) {
    images.push_back({{"id", im.image_id},
                      {"width", im.width},
                      {"height", im.height},
                      {"lat", im.location.lat},
                      {"lon", im.location.lon}});
  }
  Json anns = Json::array();
  for (const auto& a : set.annotations) {
    anns.push_back({{"id", a.annotation_id},
                    {"image_id", a.image_id},
                    {"category_id", a.category_id},
                    {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}}});
  }
  Json cats = Json::array();
  for (const auto& c : set.categories.categories()) cats.push_back({{"id", c.id}, {"name", c.name}});
  j["images"] = std::move(images);
  j["annotations"] = std::move(anns);
  j["categories"] = std::move(cats);
  write_json(path, j);
}

std::vector<DetectionRecord> read_detections(const fs::path& path) {
  const Json j = read_json(path);
  if (!j.is_array()) throw ValidationError(path.string() + ": expected a JSON array of detections");
  std::vector<DetectionRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = "detection " + std::to_string(i);
    if (!j[i].contains("image_id")) throw ValidationError(path.string() + ": " + ctx + " has no image_id");
    DetectionRecord d;
    d.image_id = id_text(j[i]["image_id"], path, ctx);
    d.category_id = get<int>(j[i], "category_id", path, ctx);
    d.bbox = parse_bbox(j[i], path, ctx);
    d.score = get<double>(j[i], "score", path, ctx);
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError(path.string() + ": " + ctx + " score outside [0, 1]");
    }
    if (!(d.bbox.w > 0.0 && d.bbox.h > 0.0)) {
      throw ValidationError(path.string() + ": " + ctx + " has a non-positive box size");
    }
    out.push_back(std::move(d));
  }
  return out;
}

void write_detections(const fs::path& path, const std::vector<DetectionRecord>& dets) {
  Json j = Json::array();
  for (const auto& d : dets) {
    j.push_back({{"image_id", d.image_id},
                 {"category_id", d.category_id},
                 {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                 {"score", d.score}});
  }
  write_json(path, j);
}

EmbeddingSet read_embedding(const fs::path& path, const std::string& image_id) {
  const std::string data = slurp(path);
  Reader rd{data, 0, path};
  rd.need(4);
  if (std::memcmp(data.data(), kMagic, 4) != 0) throw ValidationError(path.string() + ": bad magic, expected SEB1");
  rd.pos = 4;
  const std::uint32_t n = rd.u32(), d = rd.u32(), hf = rd.u32(), wf = rd.u32(), cb = rd.u32();
  const std::uint64_t expect = 24ull + 4ull * n * d + n + 4ull * hf * wf * cb + 12ull;
  if (data.size() != expect) {
    throw ValidationError(path.string() + ": size " + std::to_string(data.size()) + " does not match header (" +
                          std::to_string(expect) + " bytes expected)");
  }
  EmbeddingSet e;
  e.image_id = image_id.empty() ? path.stem().string() : image_id;
  e.queries.resize(n, d);
  for (double& v : e.queries.values()) v = rd.f32();
  e.noise_mask.resize(n);
  for (auto& m : e.noise_mask) m = rd.u8();
  e.map_h = hf;
  e.map_w = wf;
  e.map_c = cb;
  e.backbone_map.resize(static_cast<std::size_t>(hf) * wf * cb);
  for (double& v : e.backbone_map) v = rd.f32();
  e.coords[0] = rd.f32();
  e.coords[1] = rd.f32();
  e.label = rd.f32();
  try {
    e.validate();
  } catch (const ValidationError& err) {
    throw ValidationError(path.string() + ": " + err.what());
  }
  return e;
}

void write_embedding(const fs::path& path, const EmbeddingSet& e) {
  std::string buf(kMagic, 4);
  put_u32(buf, static_cast<std::uint32_t>(e.queries.rows()));
  put_u32(buf, static_cast<std::uint32_t>(e.queries.cols()));
  put_u32(buf, static_cast<std::uint32_t>(e.map_h));
  put_u32(buf, static_cast<std::uint32_t>(e.map_w));
  put_u32(buf, static_cast<std::uint32_t>(e.map_c));
  for (const double v : e.queries.values()) put_f32(buf, v);
  for (const auto m : e.noise_mask) buf.push_back(static_cast<char>(m));
  for (const double v : e.backbone_map) put_f32(buf, v);
  put_f32(buf, e.coords[0]);
  put_f32(buf, e.coords[1]);
  put_f32(buf, e.label);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(path.string() + ": cannot open for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  const auto t = read_csv(path, {"image_id", "path", "label"});
  const auto ii = t.column("image_id"), pa = t.column("path"), la = t.column("label");
  std::vector<ManifestEntry> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_unique(seen, t.text(r, ii), t, r, "image_id");
    const double y = t.real(r, la);
    if (!(y >= 0.0) || !std::isfinite(y)) throw ValidationError(at_line(t, r) + ": label must be >= 0");
    out.push_back({t.text(r, ii), t.text(r, pa), y});
  }
  return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : entries) rows.push_back({e.image_id, e.path, fmt(e.label)});
  write_csv(path, {"image_id", "path", "label"}, rows);
}

std::vector<EmbeddingSet> load_embeddings(const fs::path& manifest) {
  const auto entries = read_manifest(manifest);
  const fs::path base = manifest.parent_path();
  std::vector<EmbeddingSet> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    fs::path p(e.path);
    if (p.is_relative()) p = base / p;
    EmbeddingSet emb = read_embedding(p, e.image_id);
    emb.label = e.label;
    out.push_back(std::move(emb));
  }
  return out;
}

Json to_json(const PCPMConfig& c) {
  Json hidden = Json::array();
  for (const auto h : c.mlp_hidden) hidden.push_back(h);
  return {{"variant", variant_name(c.variant)},
          {"d_model", c.d_model},
          {"heads", c.heads},
          {"mlp_hidden", hidden},
          {"include_coords", c.include_coords},
          {"visual_channels", c.visual_channels}};
}

PCPMConfig pcpm_config_from_json(const Json& j) {
  PCPMConfig c;
  try {
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.d_model = j.at("d_model").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.mlp_hidden = j.at("mlp_hidden").get<std::vector<std::size_t>>();
    c.include_coords = j.at("include_coords").get<bool>();
    c.visual_channels = j.at("visual_channels").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed PCPM config: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"lr", c.lr},
          {"lr_decay_epoch", c.lr_decay_epoch}, {"lr_decay", c.lr_decay}, {"flip", c.flip},
          {"seed", c.seed}};
}

void write_checkpoint(const fs::path& path, const PCPMConfig& config, const PCPMParams& params, const Json& extra) {
  Json p = Json::object();
  p["wq"] = matrix_json(params.wq);
  p["wk"] = matrix_json(params.wk);
  p["wv"] = matrix_json(params.wv);
  p["wo"] = matrix_json(params.wo);
  p["w_vis"] = matrix_json(params.w_vis);
  Json mlp = Json::array();
  for (std::size_t l = 0; l < params.mlp_w.size(); ++l) {
    mlp.push_back({{"w", matrix_json(params.mlp_w[l])}, {"b", params.mlp_b[l]}});
  }
  p["mlp"] = std::move(mlp);
  Json j = {{"format", "pedrisk-pcpm-checkpoint"}, {"config", to_json(config)}, {"params", std::move(p)}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_json(path, j);
}

std::pair<PCPMConfig, PCPMParams> read_checkpoint(const fs::path& path) {
  const Json j = read_json(path);
  if (!j.is_object() || j.value("format", "") != "pedrisk-pcpm-checkpoint") {
    throw ValidationError(path.string() + ": not a PCPM checkpoint");
  }
  PCPMConfig c;
  try {
    c = pcpm_config_from_json(j.at("config"));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(path.string() + ": checkpoint has no config");
  }
  PCPMParams params;
  try {
    const Json& p = j.at("params");
    params.wq = matrix_from_json(p.at("wq"), path, "wq");
    params.wk = matrix_from_json(p.at("wk"), path, "wk");
    params.wv = matrix_from_json(p.at("wv"), path, "wv");
    params.wo = matrix_from_json(p.at("wo"), path, "wo");
    params.w_vis = matrix_from_json(p.at("w_vis"), path, "w_vis");
    for (const auto& layer : p.at("mlp")) {
      params.mlp_w.push_back(matrix_from_json(layer.at("w"), path, "mlp.w"));
      params.mlp_b.push_back(layer.at("b").get<std::vector<double>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": malformed parameters (" + e.what() + ")");
  }
  try {
    check_params(params, c);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!params.all_finite()) throw ValidationError(path.string() + ": non-finite parameter values");
  return {c, params};
}

Json to_json(const LinearModel& m) {
  Json constant = Json::array();
  for (const bool b : m.constant_feature) constant.push_back(b);
  return {{"format", "pedrisk-ridge"},
          {"lambda", m.lambda},
          {"lambda_fallback", m.lambda_fallback},
          {"intercept", m.intercept},
          {"weights", m.weights},
          {"feature_mean", m.feature_mean},
          {"feature_std", m.feature_std},
          {"constant_feature", constant}};
}

LinearModel linear_model_from_json(const Json& j) {
  LinearModel m;
  try {
    m.lambda = j.at("lambda").get<double>();
    m.lambda_fallback = j.at("lambda_fallback").get<bool>();
    m.intercept = j.at("intercept").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_std = j.at("feature_std").get<std::vector<double>>();
    m.constant_feature = j.at("constant_feature").get<std::vector<bool>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed ridge model: ") + e.what());
  }
  const std::size_t p = m.weights.size();
  if (m.feature_mean.size() != p || m.feature_std.size() != p || m.constant_feature.size() != p) {
    throw ValidationError("malformed ridge model: inconsistent vector lengths");
  }
  for (std::size_t k = 0; k < p; ++k) {
    if (!(m.feature_std[k] > 0.0)) throw ValidationError("malformed ridge model: feature_std must be > 0");
  }
  return m;
}

Json to_json(const ConstantPredictor& p) {
  return {{"format", "pedrisk-constant"}, {"statistic", statistic_name(p.statistic)}, {"value", p.value}};
}

Json to_json(const APReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return {{"AP", opt(r.ap)},         {"AP50", opt(r.ap50)},     {"AP75", opt(r.ap75)},
          {"AP_S", opt(r.ap_small)}, {"AP_M", opt(r.ap_medium)}, {"AP_L", opt(r.ap_large)}};
}

Json to_json(const RegReport& r) { return {{"rmse", r.rmse}, {"wmae", r.wmae}, {"n", r.n}}; }

Json to_json(const Histogram& h) {
  return {{"edges", h.edges}, {"counts", h.counts}, {"log_scale", h.log_scale}};
}

Json to_json(const StatsReport& r) {
  auto summary = [](const SummaryStats& s) {
    return Json{{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
  };
  Json per_class = Json::object();
  for (const auto& [name, n] : r.per_class_counts) per_class[name] = n;
  return {{"num_images", r.num_images},
          {"total_boxes", r.total_boxes},
          {"boxes_per_image", summary(r.boxes_per_image)},
          {"per_class_counts", per_class},
          {"relative_area_mean", r.relative_area_mean},
          {"labelled_images", r.labelled_images},
          {"collisions", summary(r.collisions)}};
}

Json read_json(const fs::path& path) {
  const std::string text = slurp(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw ValidationError(path.string() + ": write failed");
}

void write_histogram_csv(const fs::path& path, const Histogram& h) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    rows.push_back({fmt(h.edges[i]), fmt(h.edges[i + 1]), std::to_string(h.counts[i])});
  }
  write_csv(path, {"bin_lo", "bin_hi", "count"}, rows);
}

}  // namespace pedrisk::io

// SPDX-License-Identifier: Apache-2.0
#pragma once

// Readers and writers for every on-disk format the toolkit exchanges.
// Readers throw ValidationError naming the file and the offending record.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedrisk/baselines.hpp"
#include "pedrisk/dataset.hpp"
#include "pedrisk/geo.hpp"
#include "pedrisk/metrics.hpp"
#include "pedrisk/pcpm.hpp"

namespace pedrisk::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// crossing_id,lat,lon,collisions
std::vector<CrossingPoint> read_crossings(const fs::path& path);
void write_crossings(const fs::path& path, const std::vector<CrossingPoint>& points);

// image_id,lat,lon,width,height
std::vector<ImageRecord> read_images(const fs::path& path);
void write_images(const fs::path& path, const std::vector<ImageRecord>& images);

// image_id,crossing_id,distance_m,collisions and image_id,reason
void write_matches(const fs::path& path, const std::vector<MatchResult>& matches);
std::vector<MatchResult> read_matches(const fs::path& path);
void write_rejected(const fs::path& path, const std::vector<std::string>& image_ids,
                    const std::string& reason);

// image_id,collisions
CollisionLabels read_labels(const fs::path& path);
void write_labels(const fs::path& path, const CollisionLabels& labels);
// Labels from a match file's collisions column.
CollisionLabels labels_from_matches(const std::vector<MatchResult>& matches);

// image_id,fold
SplitAssignment read_split(const fs::path& path);
void write_split(const fs::path& path, const SplitAssignment& split);

// image_id,predicted_collisions
std::vector<std::pair<std::string, double>> read_predictions(const fs::path& path);
void write_predictions(const fs::path& path,
                       const std::vector<std::pair<std::string, double>>& predictions);

// image_id,count_0,...,count_{C-1}[,lat_norm,lon_norm]
CountFeatures read_count_features(const fs::path& path);
void write_count_features(const fs::path& path, const CountFeatures& features);

// COCO-style layout. Images may carry optional lat/lon fields.
AnnotationSet read_annotations(const fs::path& path);
void write_annotations(const fs::path& path, const AnnotationSet& set);

// [{image_id, category_id, bbox:[x,y,w,h], score}]
std::vector<DetectionRecord> read_detections(const fs::path& path);
void write_detections(const fs::path& path, const std::vector<DetectionRecord>& dets);

// Binary embedding file ("SEB1", little-endian, float32 payload).
EmbeddingSet read_embedding(const fs::path& path, const std::string& image_id = {});
void write_embedding(const fs::path& path, const EmbeddingSet& emb);

struct ManifestEntry {
  std::string image_id;
  std::string path;  // relative paths resolve against the manifest directory
  double label = 0.0;
};
// image_id,path,label
std::vector<ManifestEntry> read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries);
// Loads every embedding of a manifest; the manifest label wins.
std::vector<EmbeddingSet> load_embeddings(const fs::path& manifest);

Json to_json(const PCPMConfig& c);
PCPMConfig pcpm_config_from_json(const Json& j);
Json to_json(const TrainConfig& c);

// Checkpoint: config echo plus nested parameter arrays.
void write_checkpoint(const fs::path& path, const PCPMConfig& config, const PCPMParams& params,
                      const Json& extra = Json::object());
std::pair<PCPMConfig, PCPMParams> read_checkpoint(const fs::path& path);

Json to_json(const LinearModel& m);
LinearModel linear_model_from_json(const Json& j);
Json to_json(const ConstantPredictor& p);

Json to_json(const APReport& r);
Json to_json(const RegReport& r);
Json to_json(const StatsReport& r);
Json to_json(const Histogram& h);

Json read_json(const fs::path& path);
// Pretty-printed, trailing newline.
void write_json(const fs::path& path, const Json& j);
void write_text(const fs::path& path, const std::string& text);

// bin_lo,bin_hi,count
void write_histogram_csv(const fs::path& path, const Histogram& h);

}  // namespace pedrisk::io

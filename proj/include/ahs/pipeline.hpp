#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ahs/io.hpp"
#include "ahs/meshing.hpp"
#include "ahs/metrics.hpp"
#include "ahs/shapes.hpp"
#include "ahs/training.hpp"

namespace ahs {

struct RunConfig {
  std::optional<std::filesystem::path> input;
  /// Reference points for CD1 when reading from a file.
  std::optional<std::filesystem::path> gt_input;
  std::optional<ShapeSpec> shape;

  TrainConfig train;
  Hyper hyper;
  GeometryMask geometries;
  double normal_length = 0.15;
  double tilt_deg = 5.0;

  ProjectionConfig projection;
  std::size_t gt_samples = 100000;
  int grid_res = 64;
  double tau = 0.0;  // 0 selects 1.5 voxel sizes
  bool mesh = true;
  bool dump_grid = false;

  std::filesystem::path out;  // empty: nothing is written
  std::uint64_t seed = 0;

  /// Copies `seed` into the training, projection and shape seeds.
  void propagate_seed();
  void validate() const;
};

struct ReconResult {
  ModelState state;
  std::vector<LossReport> trace;
  SurfaceSamples samples;
  std::optional<UdfGrid> grid;
  std::optional<TriMesh> mesh;
  std::optional<MetricReport> metrics;
  Transform transform;
  std::optional<GeneratedShape> shape;
  std::vector<Vec3> gt;
  std::size_t selection_counts[3] = {0, 0, 0};
  double seconds = 0.0;
};

/// Loads or generates the cloud, fits the field, extracts surface samples
/// (and optionally the grid and shell mesh), scores them against the ground
/// truth and writes the artifacts when `out` is set. On failure a
/// failure.json with the error kind is written before rethrowing.
ReconResult reconstruct(const RunConfig& config);

/// Metric report as JSON text; wall-clock fields are omitted when
/// `with_timing` is false so reports of identical runs compare equal.
std::string report_json(const RunConfig& config, const ReconResult& result,
                        bool with_timing = true);

struct SweepRow {
  std::string label;
  MetricReport metrics;
  double final_loss = 0.0;
  std::size_t selection_counts[3] = {0, 0, 0};
};

/// One reconstruct per geometry mask with shared seed and shape. Throws
/// InvalidInput for fewer than two variants.
std::vector<SweepRow> ablation_sweep(const RunConfig& base,
                                     const std::vector<GeometryMask>& variants);

/// One reconstruct per noise level of the base shape.
std::vector<SweepRow> noise_sweep(const RunConfig& base,
                                  const std::vector<double>& sigmas);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace ahs

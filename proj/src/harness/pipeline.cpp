#include "ahs/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace ahs {
namespace {

using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  if (c.input) j["input"] = c.input->string();
  if (c.gt_input) j["gt_input"] = c.gt_input->string();
  if (c.shape) {
    j["shape"] = {{"kind", c.shape->label()},
                  {"points", c.shape->points},
                  {"noise_sigma", c.shape->noise_sigma},
                  {"seed", c.shape->seed}};
  }
  j["geometries"] = c.geometries.to_string();
  j["k1"] = c.hyper.k1;
  j["k2"] = c.hyper.k2;
  j["theta"] = c.hyper.theta;
  j["eps_parallel"] = c.hyper.eps_parallel;
  j["select_margin"] = c.hyper.select_margin;
  j["normal_length"] = c.normal_length;
  j["tilt_deg"] = c.tilt_deg;
  const TrainConfig& t = c.train;
  j["train"] = {{"steps", t.steps},         {"lr0", t.lr0},
                {"query_batch", t.query_batch}, {"jitter", t.jitter},
                {"w_cd", t.w_cd},           {"w_local", t.w_local},
                {"w_udf", t.w_udf},         {"w_aux", t.w_aux},
                {"seed", t.seed},           {"select_period", t.select_period},
                {"alpha_min", t.alpha_min}, {"alpha_max", t.alpha_max},
                {"offset_step", t.offset_step}};
  const ProjectionConfig& p = c.projection;
  j["projection"] = {{"samples", p.samples}, {"jitter", p.jitter}, {"tol", p.tol},
                     {"max_iters", p.max_iters}, {"seed", p.seed}};
  j["gt_samples"] = c.gt_samples;
  j["grid_res"] = c.grid_res;
  j["tau"] = c.tau;
  j["mesh"] = c.mesh;
  j["seed"] = c.seed;
  return j;
}

PointCloud load_cloud(const RunConfig& config, ReconResult& result) {
  if (config.shape) {
    result.shape = generate_shape(*config.shape);
    result.gt = result.shape->surface.sample(config.gt_samples, config.shape->seed + 1);
    return PointCloud::build(result.shape->points);
  }
  LoadedCloud loaded = load_normalized(*config.input);
  result.transform = loaded.transform;
  if (config.gt_input) {
    result.gt = read_points(*config.gt_input);
    for (auto& p : result.gt) p = result.transform.apply(p);
  }
  return PointCloud::build(std::move(loaded.points));
}

void write_artifacts(const RunConfig& config, const ReconResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out);
  write_atomic(config.out / "samples.xyz", [&](std::ostream& o) {
    std::vector<Vec3> pts;
    pts.reserve(result.samples.points.size());
    for (const auto& p : result.samples.points) pts.push_back(result.transform.inverse(p));
    write_xyz(o, pts);
  });
  write_atomic(config.out / "loss.csv",
               [&](std::ostream& o) { write_loss_csv(o, result.trace); });
  if (result.mesh) {
    write_atomic(config.out / "mesh.obj", [&](std::ostream& o) {
      TriMesh m = *result.mesh;
      for (auto& v : m.vertices) v = result.transform.inverse(v);
      write_obj(o, m);
    });
  }
  if (result.grid && config.dump_grid) {
    write_atomic(config.out / "udf_grid.bin",
                 [&](std::ostream& o) { write_grid(o, *result.grid); }, true);
  }
  write_atomic(config.out / "metrics.json",
               [&](std::ostream& o) { o << report_json(config, result) << '\n'; });
}

void write_failure(const RunConfig& config, ErrorKind kind, const std::string& what) {
  if (config.out.empty()) return;
  try {
    ordered_json j;
    j["status"] = "failed";
    j["error_kind"] = to_string(kind);
    j["message"] = what;
    j["config"] = config_json(config);
    write_atomic(config.out / "failure.json",
                 [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  } catch (...) {
    // The original error is more useful than a failed report.
  }
}

ReconResult run(const RunConfig& config) {
  const auto start = Clock::now();
  ReconResult result;
  auto cloud = std::make_shared<const PointCloud>(load_cloud(config, result));

  InitConfig init;
  init.hyper = config.hyper;
  init.geometries = config.geometries;
  init.seed = config.seed;
  init.normal_length = config.normal_length;
  init.tilt_deg = config.tilt_deg;
  FitResult fitted = fit(init_params(cloud, init), config.train);
  result.state = std::move(fitted.state);
  result.trace = std::move(fitted.trace);
  for (const auto& p : result.state.params) ++result.selection_counts[static_cast<std::size_t>(p.selected)];

  result.samples = project_samples(result.state, config.projection);
  if (result.samples.unstable) {
    std::fprintf(stderr, "warning: projection unstable, %.1f%% of samples discarded\n",
                 100.0 * result.samples.discard_fraction());
  }

  if (config.mesh || config.dump_grid) {
    result.grid = evaluate_grid(result.state, config.grid_res);
    if (config.mesh) {
      const double tau = config.tau > 0.0 ? config.tau : 1.5 * result.grid->voxel_size();
      result.mesh = extract_shell_mesh(*result.grid, tau);
    }
  }

  if (!result.gt.empty()) {
    if (result.samples.points.empty()) {
      throw Error(ErrorKind::EmptyMesh, "projection produced no surface samples");
    }
    result.metrics = cd1(result.samples.points, result.gt);
  }
  result.seconds = seconds_since(start);
  if (!config.out.empty()) write_artifacts(config, result);
  return result;
}

}  // namespace

void RunConfig::propagate_seed() {
  train.seed = seed;
  projection.seed = seed;
  if (shape) shape->seed = seed;
}

void RunConfig::validate() const {
  if (input.has_value() == shape.has_value()) {
    throw Error(ErrorKind::InvalidInput, "exactly one of input file or shape is required");
  }
  if (!geometries.any()) throw Error(ErrorKind::InvalidInput, "no geometry enabled");
  if (grid_res < 8) throw Error(ErrorKind::InvalidInput, "grid resolution must be >= 8");
  if (tau < 0.0) throw Error(ErrorKind::InvalidInput, "tau must be >= 0");
  if (!(normal_length > 0.0)) throw Error(ErrorKind::InvalidInput, "normal_length must be > 0");
  if (shape) shape->validate();
  train.validate();
}

ReconResult reconstruct(const RunConfig& config) {
  try {
    config.validate();
    return run(config);
  } catch (const Error& e) {
    write_failure(config, e.kind(), e.what());
    throw;
  } catch (const std::exception& e) {
    write_failure(config, ErrorKind::Io, e.what());
    throw;
  }
}

std::string report_json(const RunConfig& config, const ReconResult& result,
                        bool with_timing) {
  ordered_json j;
  j["status"] = "ok";
  if (result.metrics) {
    const MetricReport& m = *result.metrics;
    j["metrics"] = {{"cd1", m.cd1},
                    {"recon_to_gt", m.recon_to_gt},
                    {"gt_to_recon", m.gt_to_recon},
                    {"recon_count", m.recon_count},
                    {"gt_count", m.gt_count}};
    if (with_timing) j["metrics"]["seconds"] = m.seconds;
  }
  j["samples"] = {{"attempted", result.samples.attempted},
                  {"kept", result.samples.points.size()},
                  {"discarded", result.samples.discarded},
                  {"unstable", result.samples.unstable}};
  j["selection"] = {{"plane", result.selection_counts[0]},
                    {"dihedral", result.selection_counts[1]},
                    {"trihedral", result.selection_counts[2]}};
  if (!result.trace.empty()) {
    const LossReport& last = result.trace.back();
    j["final_loss"] = {{"l_cd", last.l_cd},     {"l_local", last.l_local},
                       {"l_udf", last.l_udf},
                       {"total", last.total}};
  }
  if (result.mesh) {
    j["mesh"] = {{"vertices", result.mesh->vertices.size()},
                 {"triangles", result.mesh->triangles.size()}};
  }
  j["transform"] = {{"center", {result.transform.center.x(), result.transform.center.y(),
                                result.transform.center.z()}},
                    {"scale", result.transform.scale}};
  j["config"] = config_json(config);
  if (with_timing) j["wall_seconds"] = result.seconds;
  return j.dump(2);
}

std::vector<SweepRow> ablation_sweep(const RunConfig& base,
                                     const std::vector<GeometryMask>& variants) {
  if (variants.size() < 2) {
    throw Error(ErrorKind::InvalidInput, "an ablation needs at least two variants");
  }
  std::vector<SweepRow> rows;
  for (const auto& mask : variants) {
    RunConfig c = base;
    c.geometries = mask;
    if (!base.out.empty()) c.out = base.out / mask.to_string();
    const ReconResult r = reconstruct(c);
    SweepRow row;
    row.label = mask.to_string();
    if (r.metrics) row.metrics = *r.metrics;
    row.final_loss = r.trace.empty() ? 0.0 : r.trace.back().total;
    std::copy(std::begin(r.selection_counts), std::end(r.selection_counts),
              std::begin(row.selection_counts));
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> noise_sweep(const RunConfig& base, const std::vector<double>& sigmas) {
  if (!base.shape) throw Error(ErrorKind::InvalidInput, "noise sweep needs a shape");
  std::vector<SweepRow> rows;
  for (double sigma : sigmas) {
    RunConfig c = base;
    c.shape->noise_sigma = sigma;
    std::ostringstream label;
    label << "sigma=" << sigma;
    if (!base.out.empty()) c.out = base.out / label.str();
    const ReconResult r = reconstruct(c);
    SweepRow row;
    row.label = label.str();
    if (r.metrics) row.metrics = *r.metrics;
    row.final_loss = r.trace.empty() ? 0.0 : r.trace.back().total;
    std::copy(std::begin(r.selection_counts), std::end(r.selection_counts),
              std::begin(row.selection_counts));
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "variant,cd1,recon_to_gt,gt_to_recon,final_loss,n_plane,n_dihedral,n_trihedral\n";
  const auto old_precision = out.precision(10);
  for (const auto& r : rows) {
    out << r.label << ',' << r.metrics.cd1 << ',' << r.metrics.recon_to_gt << ','
        << r.metrics.gt_to_recon << ',' << r.final_loss << ',' << r.selection_counts[0]
        << ',' << r.selection_counts[1] << ',' << r.selection_counts[2] << '\n';
  }
  out.precision(old_precision);
}

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  std::size_t width = 7;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  out << std::left << std::setw(static_cast<int>(width)) << "variant" << std::right
      << std::setw(12) << "cd1" << std::setw(14) << "recon->gt" << std::setw(14)
      << "gt->recon" << std::setw(8) << "plane" << std::setw(10) << "dihedral"
      << std::setw(11) << "trihedral" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.label << std::right
        << std::fixed << std::setprecision(6) << std::setw(12) << r.metrics.cd1
        << std::setw(14) << r.metrics.recon_to_gt << std::setw(14) << r.metrics.gt_to_recon
        << std::setw(8) << r.selection_counts[0] << std::setw(10) << r.selection_counts[1]
        << std::setw(11) << r.selection_counts[2] << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace ahs

// Command-line front end: generate, reconstruct, ablate, eval.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ahs/pipeline.hpp"

namespace {

using namespace ahs;
using nlohmann::json;

struct Flags {
  std::string input;
  std::string gt;
  std::string shape;
  std::size_t points = 3000;
  double noise_sigma = 0.0;
  std::size_t steps = 800;
  double lr = 1e-3;
  std::size_t k1 = 36;
  std::size_t k2 = 12;
  double theta = 100.0;
  std::string geometries = "plane,dihedral,trihedral";
  int grid_res = 64;
  double tau = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  std::size_t samples = 100000;
  std::size_t gt_samples = 100000;
  std::size_t batch = 6000;
  double normal_length = 0.15;
  double offset_step = 20.0;
  bool no_mesh = false;
  bool dump_grid = false;
};

struct Options {
  CLI::Option* input = nullptr;
  CLI::Option* gt = nullptr;
  CLI::Option* shape = nullptr;
  CLI::Option* points = nullptr;
  CLI::Option* noise_sigma = nullptr;
  CLI::Option* steps = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* k1 = nullptr;
  CLI::Option* k2 = nullptr;
  CLI::Option* theta = nullptr;
  CLI::Option* geometries = nullptr;
  CLI::Option* grid_res = nullptr;
  CLI::Option* tau = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* samples = nullptr;
  CLI::Option* gt_samples = nullptr;
  CLI::Option* batch = nullptr;
  CLI::Option* normal_length = nullptr;
  CLI::Option* offset_step = nullptr;
};

Options add_run_flags(CLI::App* app, Flags& f) {
  Options o;
  o.input = app->add_option("--input", f.input, "Point file (.xyz, .ply, .obj)");
  o.gt = app->add_option("--gt", f.gt, "Reference points for CD1 when using --input");
  o.shape = app->add_option("--shape", f.shape,
                            "plane-patch, wedge(ANGLE), box, box-corner, open-disk, "
                            "sphere, cylinder");
  o.points = app->add_option("--points", f.points, "Sample count for --shape");
  o.noise_sigma = app->add_option("--noise-sigma", f.noise_sigma, "Gaussian noise sigma");
  o.steps = app->add_option("--steps", f.steps, "Optimizer steps");
  o.lr = app->add_option("--lr", f.lr, "Initial learning rate");
  o.k1 = app->add_option("--k1", f.k1, "Selection / local-loss neighborhood");
  o.k2 = app->add_option("--k2", f.k2, "Merge neighborhood");
  o.theta = app->add_option("--theta", f.theta, "Merge temperature");
  o.geometries = app->add_option("--geometries", f.geometries,
                                 "Comma list of plane,dihedral,trihedral");
  o.grid_res = app->add_option("--grid-res", f.grid_res, "UDF grid resolution");
  o.tau = app->add_option("--tau", f.tau, "Shell offset (default 1.5 voxels)");
  o.seed = app->add_option("--seed", f.seed, "Seed for every random stream");
  o.samples = app->add_option("--samples", f.samples, "Projection queries");
  o.gt_samples = app->add_option("--gt-samples", f.gt_samples, "Ground-truth samples");
  o.batch = app->add_option("--batch", f.batch, "Queries per optimizer step");
  o.normal_length = app->add_option("--normal-length", f.normal_length,
                                    "Initial raw normal length");
  o.offset_step = app->add_option("--offset-step", f.offset_step,
                                  "Step multiplier for the raw apex offsets");
  app->add_option("--out", f.out, "Output directory")->required();
  app->add_option("--config", f.config, "JSON config; flags override it");
  app->add_flag("--no-mesh", f.no_mesh, "Skip the shell mesh");
  app->add_flag("--dump-grid", f.dump_grid, "Write the UDF grid");
  return o;
}

ShapeSpec make_shape(const std::string& text) {
  ShapeSpec s;
  double angle = s.wedge_angle_deg;
  s.kind = parse_shape_kind(text, &angle);
  s.wedge_angle_deg = angle;
  return s;
}

/// Applies a JSON object whose keys mirror the flag names.
void apply_json(const json& j, RunConfig& c) {
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) j.at(key).get_to(dst);
  };
  if (j.contains("input")) c.input = j.at("input").get<std::string>();
  if (j.contains("gt")) c.gt_input = j.at("gt").get<std::string>();
  if (j.contains("shape")) c.shape = make_shape(j.at("shape").get<std::string>());
  if (c.shape) {
    get("points", c.shape->points);
    get("noise-sigma", c.shape->noise_sigma);
  }
  get("steps", c.train.steps);
  get("lr", c.train.lr0);
  get("batch", c.train.query_batch);
  get("jitter", c.train.jitter);
  get("w_cd", c.train.w_cd);
  get("w_local", c.train.w_local);
  get("w_udf", c.train.w_udf);
  get("w_aux", c.train.w_aux);
  get("k1", c.hyper.k1);
  get("k2", c.hyper.k2);
  get("theta", c.hyper.theta);
  if (j.contains("geometries")) {
    c.geometries = GeometryMask::parse(j.at("geometries").get<std::string>());
  }
  get("grid-res", c.grid_res);
  get("tau", c.tau);
  get("seed", c.seed);
  get("samples", c.projection.samples);
  get("gt-samples", c.gt_samples);
  get("normal-length", c.normal_length);
  get("offset-step", c.train.offset_step);
}

RunConfig build_config(const Flags& f, const Options& o) {
  RunConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + f.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    try {
      apply_json(j, c);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::InvalidInput, std::string("config: ") + e.what());
    }
  }
  if (o.input->count()) {
    c.input = f.input;
    c.shape.reset();
  }
  if (o.gt->count()) c.gt_input = f.gt;
  if (o.shape->count()) {
    c.shape = make_shape(f.shape);
    c.input.reset();
  }
  if (c.shape) {
    if (o.points->count()) c.shape->points = f.points;
    if (o.noise_sigma->count()) c.shape->noise_sigma = f.noise_sigma;
  }
  if (o.steps->count()) c.train.steps = f.steps;
  if (o.lr->count()) c.train.lr0 = f.lr;
  if (o.batch->count()) c.train.query_batch = f.batch;
  if (o.k1->count()) c.hyper.k1 = f.k1;
  if (o.k2->count()) c.hyper.k2 = f.k2;
  if (o.theta->count()) c.hyper.theta = f.theta;
  if (o.geometries->count()) c.geometries = GeometryMask::parse(f.geometries);
  if (o.grid_res->count()) c.grid_res = f.grid_res;
  if (o.tau->count()) c.tau = f.tau;
  if (o.seed->count()) c.seed = f.seed;
  if (o.samples->count()) c.projection.samples = f.samples;
  if (o.gt_samples->count()) c.gt_samples = f.gt_samples;
  if (o.normal_length->count()) c.normal_length = f.normal_length;
  if (o.offset_step->count()) c.train.offset_step = f.offset_step;
  if (f.no_mesh) c.mesh = false;
  if (f.dump_grid) c.dump_grid = true;
  c.out = f.out;
  c.propagate_seed();
  return c;
}

std::vector<GeometryMask> parse_variants(const std::string& text) {
  std::vector<GeometryMask> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(GeometryMask::parse(item));
  }
  return out;
}

void print_metrics(const ReconResult& r) {
  if (!r.metrics) return;
  std::printf("cd1 %.6f  recon->gt %.6f  gt->recon %.6f  (%zu samples, %.1f s)\n",
              r.metrics->cd1, r.metrics->recon_to_gt, r.metrics->gt_to_recon,
              r.metrics->recon_count, r.seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud surface reconstruction with plane, dihedral and trihedral priors"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a synthetic shape to a point file");
  std::string gen_shape = "sphere";
  std::size_t gen_points = 3000;
  double gen_sigma = 0.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--shape", gen_shape, "Shape kind")->capture_default_str();
  gen->add_option("--points", gen_points, "Sample count")->capture_default_str();
  gen->add_option("--noise-sigma", gen_sigma, "Gaussian noise sigma");
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--out", gen_out, "Output .xyz file")->required();

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Fit a field and extract the surface");
  Flags rec_flags;
  const Options rec_opts = add_run_flags(rec, rec_flags);

  // ablate
  auto* abl = app.add_subcommand("ablate", "Geometry ablation or noise sweep");
  Flags abl_flags;
  const Options abl_opts = add_run_flags(abl, abl_flags);
  std::string variants =
      "plane;plane,dihedral;plane,trihedral;plane,dihedral,trihedral";
  std::vector<double> sigmas;
  abl->add_option("--variants", variants, "Semicolon-separated geometry sets")
      ->capture_default_str();
  abl->add_option("--sigmas", sigmas, "Noise levels (runs a noise sweep instead)");

  // eval
  auto* ev = app.add_subcommand("eval", "CD1 between two point files");
  std::string ev_recon;
  std::string ev_gt;
  std::string ev_out;
  ev->add_option("--recon", ev_recon, "Reconstructed points")->required();
  ev->add_option("--gt", ev_gt, "Reference points")->required();
  ev->add_option("--out", ev_out, "Optional JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      ShapeSpec spec = make_shape(gen_shape);
      spec.points = gen_points;
      spec.noise_sigma = gen_sigma;
      spec.seed = gen_seed;
      const GeneratedShape g = generate_shape(spec);
      write_atomic(gen_out, [&](std::ostream& o) { write_xyz(o, g.points); });
      std::printf("wrote %zu points to %s\n", g.points.size(), gen_out.c_str());
    } else if (*rec) {
      const RunConfig config = build_config(rec_flags, rec_opts);
      const ReconResult r = reconstruct(config);
      print_metrics(r);
      std::printf("artifacts in %s\n", config.out.string().c_str());
    } else if (*abl) {
      const RunConfig base = build_config(abl_flags, abl_opts);
      const auto rows = sigmas.empty() ? ablation_sweep(base, parse_variants(variants))
                                       : noise_sweep(base, sigmas);
      write_atomic(base.out / "sweep.csv",
                   [&](std::ostream& o) { write_sweep_csv(o, rows); });
      std::ostringstream table;
      write_sweep_table(table, rows);
      write_atomic(base.out / "sweep.txt", [&](std::ostream& o) { o << table.str(); });
      std::cout << table.str();
    } else if (*ev) {
      const auto recon = read_points(ev_recon);
      const auto gt = read_points(ev_gt);
      const MetricReport m = cd1(recon, gt);
      nlohmann::ordered_json j = {{"cd1", m.cd1},
                                  {"recon_to_gt", m.recon_to_gt},
                                  {"gt_to_recon", m.gt_to_recon},
                                  {"recon_count", m.recon_count},
                                  {"gt_count", m.gt_count},
                                  {"seconds", m.seconds}};
      if (!ev_out.empty()) {
        write_atomic(ev_out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
      }
      std::cout << j.dump(2) << '\n';
    }
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error [Divergence]: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::Divergence ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

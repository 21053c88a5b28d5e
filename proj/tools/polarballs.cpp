// Command-line front end: ballstick, porous, bench-crossover and poles-dump.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>

#include "polarballs/polarballs.hpp"

namespace pb = polarballs;

namespace {

struct Options {
  pb::RunConfig cfg;
  std::string accel = "power";
  std::string mode = "ballstick";
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("input", o.cfg.input, "closed triangle mesh (.obj) or polygon text file (x y per line)")->required();
  sub->add_option("--out", o.cfg.out_dir, "output directory")->required();
  sub->add_option("--samples", o.cfg.samples, "number of boundary samples")->capture_default_str();
  sub->add_option("--seed", o.cfg.seed, "sampling seed")->capture_default_str();
  sub->add_option("--delta", o.cfg.selection.delta, "minimum ball radius, fraction of the bbox diagonal")
      ->capture_default_str();
  sub->add_option("--accel", o.accel, "conflict query: power diagram or brute force")
      ->check(CLI::IsMember({"power", "brute"}))
      ->capture_default_str();
}

void add_ballstick(CLI::App* sub, Options& o) {
  sub->add_option("--eps", o.cfg.selection.epsilon, "minimum gap between balls, fraction of the bbox diagonal")
      ->capture_default_str();
  sub->add_option("--mu", o.cfg.mu, "radius-change penalty in the wiring weights")->capture_default_str();
  sub->add_option("--sizes", o.cfg.sizes, "allowed ball diameters (comma separated)")->delimiter(',');
  sub->add_option("--features", o.cfg.features_path, "file of feature points to wire in");
  sub->add_flag("--auto-features", o.cfg.auto_features, "also wire in sharp corners (40 degree threshold)");
  sub->add_option("--wire-radius", o.cfg.wire_radius, "stick radius as a fraction of the smallest ball radius")
      ->capture_default_str();
}

void add_porous(CLI::App* sub, Options& o) {
  sub->add_option("--lambda", o.cfg.selection.lambda, "penetration penalty in (0, 1]")->capture_default_str();
  sub->add_option("--tau", o.cfg.tau, "wall thickness, fraction of the bbox diagonal")->capture_default_str();
  sub->add_option("--mc-points", o.cfg.mc_points, "Monte Carlo points per pore volume")->capture_default_str();
}

bool is_mesh(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".obj";
}

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

template <int Dim>
pb::BoundaryShape<Dim> load(const std::string& path) {
  return pb::load_shape<Dim>(path, Dim == 3 ? pb::ShapeFormat::ObjMesh : pb::ShapeFormat::PolygonText);
}

template <int Dim>
void cmd_ballstick(const pb::RunConfig& cfg) {
  const auto shape = load<Dim>(cfg.input);
  const auto out = pb::run_ballstick_pipeline(shape, cfg);
  pb::write_outputs(out, cfg, shape.bbox_diag);
  print_warnings(out.warnings);
  std::cout << "ballstick: " << out.balls.size() << " balls, " << out.trees.size() << " wire tree(s)\n"
            << out.timing.table();
}

template <int Dim>
void cmd_porous(const pb::RunConfig& cfg) {
  const auto shape = load<Dim>(cfg.input);
  const auto out = pb::run_porous_pipeline(shape, cfg);
  pb::write_outputs(out, cfg, shape.bbox_diag);
  print_warnings(out.warnings);
  std::cout << "porous: " << out.result.pores.size() << " pores, weight saving "
            << 100.0 * out.result.weight_saving_ratio << "%\n"
            << out.timing.table();
}

template <int Dim>
void cmd_crossover(const pb::RunConfig& cfg) {
  cfg.validate();
  const auto shape = load<Dim>(cfg.input);
  pb::TimingReport tm;
  const auto prep = pb::prepare(shape, cfg, tm);
  const auto r = pb::crossover(prep.poles, cfg.selection, cfg.checkpoints);
  const std::filesystem::path dir(cfg.out_dir);
  pb::detail::ensure_dir(dir);
  auto os = pb::detail::open_out(dir / "crossover.csv");
  os << r.csv();
  print_warnings(r.warnings);
  std::cout << "bench-crossover: " << r.accepted << " accepted poles, " << r.rows.size() << " checkpoints, sequences "
            << (r.identical ? "identical" : "DIFFER") << '\n';
  if (!r.identical) throw pb::Error(pb::ErrorCode::ContractViolation, "accelerated selection disagrees with brute force");
}

template <int Dim>
void cmd_poles(const pb::RunConfig& cfg) {
  cfg.validate();
  const auto shape = load<Dim>(cfg.input);
  pb::TimingReport tm;
  const auto prep = pb::prepare(shape, cfg, tm);
  const std::filesystem::path dir(cfg.out_dir);
  pb::detail::ensure_dir(dir);
  pb::detail::write_json(dir / "poles.json", pb::to_json(prep.poles));
  auto os = pb::detail::open_out(dir / "voronoi.txt");
  prep.voronoi->power_diagram().dump(os);
  print_warnings(prep.poles.log);
  std::cout << "poles-dump: " << prep.poles.inside.size() << " inside, " << prep.poles.outside.size() << " outside\n";
}

template <class F2, class F3>
void dispatch(const std::string& input, F2 f2, F3 f3) {
  if (is_mesh(input)) {
    f3();
  } else {
    f2();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate a closed shape with polar balls: ball-stick abstractions and porous infill"};
  app.require_subcommand(1);
  Options o;

  auto* bs = app.add_subcommand("ballstick", "penetration-free balls wired by a Steiner tree");
  add_common(bs, o);
  add_ballstick(bs, o);

  auto* po = app.add_subcommand("porous", "penetrating pores with thickness-controlled separators");
  add_common(po, o);
  add_porous(po, o);

  auto* cx = app.add_subcommand("bench-crossover", "compare brute-force and accelerated selection");
  add_common(cx, o);
  cx->add_option("--mode", o.mode, "selection strategy")
      ->check(CLI::IsMember({"ballstick", "porous"}))
      ->capture_default_str();
  cx->add_option("--eps", o.cfg.selection.epsilon, "ball-stick gap, fraction of the bbox diagonal")->capture_default_str();
  cx->add_option("--lambda", o.cfg.selection.lambda, "porous penetration penalty")->capture_default_str();
  cx->add_option("--checkpoints", o.cfg.checkpoints, "accepted-pole counts to report (comma separated)")->delimiter(',');

  auto* pd = app.add_subcommand("poles-dump", "write inside/outside poles and the Voronoi adjacency");
  add_common(pd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  o.cfg.selection.acceleration = o.accel == "brute" ? pb::Acceleration::BruteForce : pb::Acceleration::PowerDiagram;
  try {
    if (bs->parsed()) {
      o.cfg.selection.mode = pb::Mode::Ballstick;
      dispatch(o.cfg.input, [&] { cmd_ballstick<2>(o.cfg); }, [&] { cmd_ballstick<3>(o.cfg); });
    } else if (po->parsed()) {
      o.cfg.selection.mode = pb::Mode::Porous;
      dispatch(o.cfg.input, [&] { cmd_porous<2>(o.cfg); }, [&] { cmd_porous<3>(o.cfg); });
    } else if (cx->parsed()) {
      o.cfg.selection.mode = o.mode == "porous" ? pb::Mode::Porous : pb::Mode::Ballstick;
      dispatch(o.cfg.input, [&] { cmd_crossover<2>(o.cfg); }, [&] { cmd_crossover<3>(o.cfg); });
    } else {
      dispatch(o.cfg.input, [&] { cmd_poles<2>(o.cfg); }, [&] { cmd_poles<3>(o.cfg); });
    }
  } catch (const pb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

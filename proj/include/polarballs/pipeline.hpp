#pragma once

// End-to-end runs behind the command-line tool: sampling, poles, selection,
// wiring or pores, and the files each run writes.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarballs/connection.hpp"
#include "polarballs/mesh_export.hpp"
#include "polarballs/poles.hpp"
#include "polarballs/porous.hpp"
#include "polarballs/sampling.hpp"
#include "polarballs/selection.hpp"
#include "polarballs/shape.hpp"

namespace polarballs {

struct RunConfig {
  std::string input;
  SelectionParams selection;
  std::size_t samples = 4000;
  std::uint64_t seed = 0;
  double mu = 3.0;
  double tau = 0.02;            // fraction of the bbox diagonal
  std::vector<double> sizes;    // allowed ball diameters, model units
  std::string features_path;
  bool auto_features = false;
  double wire_radius = 0.15;    // fraction of the smallest output radius
  int pore_subdivisions = 4;
  std::size_t mc_points = 20000;
  std::vector<std::size_t> checkpoints;
  std::string out_dir;

  void validate() const {
    selection.validate();
    if (samples < 3) throw Error(ErrorCode::ContractViolation, "--samples must be at least 3");
    if (!(mu >= 0.0)) throw Error(ErrorCode::ContractViolation, "--mu must be non-negative");
    if (!(tau > 0.0)) throw Error(ErrorCode::ContractViolation, "--tau must be positive");
    if (!(wire_radius > 0.0)) throw Error(ErrorCode::ContractViolation, "wire radius must be positive");
    for (double s : sizes)
      if (!(s > 0.0)) throw Error(ErrorCode::ContractViolation, "--sizes entries must be positive");
  }
};

/// Stage timings in seconds. T3/T4 mean graph extraction and connection for
/// ball-stick runs, and selection and pore construction for porous runs.
struct TimingReport {
  Mode mode = Mode::Ballstick;
  double sampling = 0.0;
  double t1 = 0.0;  // Voronoi diagram
  double t2 = 0.0;  // pole labelling
  double selection = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;
  double total = 0.0;
  std::size_t balls = 0;

  nlohmann::json to_json() const {
    const bool bs = mode == Mode::Ballstick;
    return {{"mode", polarballs::to_string(mode)},
            {"sampling", sampling},
            {"T1_voronoi", t1},
            {"T2_poles", t2},
            {"selection", bs ? selection : 0.0},
            {bs ? "T3_interior_graph" : "T3_power_diagram_selection", t3},
            {bs ? "T4_connection" : "T4_pores", t4},
            {"total", total},
            {"balls", balls}};
  }

  std::string table() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << "  sampling " << sampling << " s  T1 " << t1 << " s  T2 " << t2 << " s  selection " << selection
       << " s  T3 " << t3 << " s  T4 " << t4 << " s  total " << total << " s  balls " << balls << '\n';
    return os.str();
  }
};

class Stopwatch {
 public:
  Stopwatch() : t_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - t_).count();
    t_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point t_;
};

/// Snaps each diameter down to the largest allowed size not above it. A
/// diameter below every size is raised to the smallest one, with a warning.
inline std::vector<double> quantize_radii(const std::vector<double>& radii, std::vector<double> sizes,
                                          std::vector<std::string>* warnings) {
  if (sizes.empty()) return radii;
  std::sort(sizes.begin(), sizes.end());
  std::vector<double> out;
  std::size_t raised = 0;
  for (double r : radii) {
    const double d = 2.0 * r;
    auto it = std::upper_bound(sizes.begin(), sizes.end(), d);
    if (it == sizes.begin()) {
      ++raised;
      out.push_back(0.5 * sizes.front());
    } else {
      out.push_back(0.5 * *std::prev(it));
    }
  }
  if (raised && warnings)
    warnings->push_back(std::to_string(raised) + " balls are smaller than every allowed size and were enlarged");
  return out;
}

/// Whitespace-separated coordinates, one point per line; '#' starts a comment.
template <int Dim>
std::vector<Point<Dim>> read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<Point<Dim>> out;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    Point<Dim> p;
    std::string extra;
    for (int k = 0; k < Dim; ++k) {
      if (!(ss >> p[k])) throw Error(ErrorCode::ParseError, path + " line " + std::to_string(ln) + ": bad coordinate");
    }
    if (ss >> extra) throw Error(ErrorCode::ParseError, path + " line " + std::to_string(ln) + ": too many coordinates");
    out.push_back(p);
  }
  return out;
}

template <int Dim>
struct Prepared {
  std::vector<SurfaceSample<Dim>> samples;
  std::optional<VoronoiDiagram<Dim>> voronoi;
  PoleSet<Dim> poles;
};

template <int Dim>
Prepared<Dim> prepare(const BoundaryShape<Dim>& shape, const RunConfig& cfg, TimingReport& tm) {
  Prepared<Dim> p;
  Stopwatch sw;
  p.samples = sample_boundary(shape, cfg.samples, cfg.seed);
  tm.sampling = sw.lap();
  p.voronoi.emplace(build_voronoi(positions(p.samples)));
  tm.t1 = sw.lap();
  p.poles = extract_poles(*p.voronoi, p.samples, shape.bbox_diag);
  tm.t2 = sw.lap();
  return p;
}

template <int Dim>
nlohmann::json params_json(const RunConfig& cfg) {
  return {{"samples", cfg.samples},
          {"seed", cfg.seed},
          {"delta", cfg.selection.delta},
          {"eps", cfg.selection.epsilon},
          {"lambda", cfg.selection.lambda},
          {"mu", cfg.mu},
          {"tau", cfg.tau},
          {"sizes", cfg.sizes},
          {"accel", to_string(cfg.selection.acceleration)},
          {"dimension", Dim}};
}

template <int Dim>
struct BallstickOutput {
  Prepared<Dim> prep;
  SelectionTrace<Dim> trace;
  std::vector<Ball<Dim>> balls;  // after size quantization
  WeightedPoleGraph<Dim> graph;
  std::vector<WireTree> trees;
  std::vector<Point<Dim>> features;
  std::vector<std::string> warnings;
  TimingReport timing;
  double wire_radius = 0.0;

  nlohmann::json abstraction(const RunConfig& cfg, double diag) const {
    nlohmann::json balls_j = nlohmann::json::array();
    for (std::size_t i = 0; i < balls.size(); ++i) {
      balls_j.push_back({{"pole", trace.steps[i].pole},
                         {"center", point_json<Dim>(balls[i].center)},
                         {"radius", balls[i].radius},
                         {"diameter", 2.0 * balls[i].radius},
                         {"selected_radius", trace.steps[i].radius}});
    }
    nlohmann::json wires = nlohmann::json::array();
    for (const auto& t : trees) wires.push_back(to_json(t, graph));
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : features) feats.push_back(point_json<Dim>(f));
    return {{"mode", "ballstick"},
            {"bbox_diag", diag},
            {"parameters", params_json<Dim>(cfg)},
            {"balls", balls_j},
            {"wires", wires},
            {"wire_radius", wire_radius},
            {"features", feats},
            {"selection", to_json(trace)},
            {"warnings", warnings}};
  }
};

template <int Dim>
BallstickOutput<Dim> run_ballstick_pipeline(const BoundaryShape<Dim>& shape, const RunConfig& cfg) {
  cfg.validate();
  Stopwatch total;
  BallstickOutput<Dim> out;
  out.timing.mode = Mode::Ballstick;
  out.warnings = shape.warnings;
  out.prep = prepare(shape, cfg, out.timing);
  const auto& vd = *out.prep.voronoi;
  for (const auto& l : out.prep.poles.log) out.warnings.push_back(l);

  Stopwatch sw;
  SelectionParams sp = cfg.selection;
  sp.mode = Mode::Ballstick;
  out.trace = select_ballstick(out.prep.poles, sp);
  out.timing.selection = sw.lap();

  std::vector<double> radii;
  for (const auto& s : out.trace.steps) radii.push_back(s.radius);
  radii = quantize_radii(radii, cfg.sizes, &out.warnings);
  for (std::size_t i = 0; i < radii.size(); ++i) out.balls.push_back({out.trace.steps[i].center, radii[i]});

  sw.lap();
  const auto ivg = interior_voronoi_graph(vd, shape);
  out.timing.t3 = sw.lap();

  out.graph = build_weighted_graph(ivg, cfg.mu);
  std::vector<int> terminals;
  for (const auto& s : out.trace.steps) {
    const int n = ivg.node_at(s.center);
    if (n < 0) {
      out.warnings.push_back("selected pole " + std::to_string(s.pole) + " lies outside the shape; not wired");
    } else {
      terminals.push_back(n);
    }
  }
  out.graph.set_terminals(terminals);
  if (!cfg.features_path.empty()) out.features = read_points<Dim>(cfg.features_path);
  if (cfg.auto_features) {
    const auto auto_f = detect_sharp_features(shape);
    out.features.insert(out.features.end(), auto_f.begin(), auto_f.end());
  }
  if (!out.features.empty()) {
    out.graph = augment_with_features(out.graph, ivg, out.features, vd, out.prep.samples, shape.bbox_diag);
  }
  for (const auto& w : out.graph.warnings) out.warnings.push_back(w);
  if (shape.genus > 0) {
    out.warnings.push_back("genus " + std::to_string(shape.genus) +
                           " shape: loops are not modelled, the wiring is a tree");
  }
  try {
    out.trees = {steiner_tree(out.graph)};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DisconnectedTerminals) throw;
    out.warnings.push_back(std::string(e.what()) + "; wiring each component separately");
    out.trees = steiner_forest(out.graph.adj, out.graph.terminals);
  }
  out.timing.t4 = sw.lap();

  double r_min = std::numeric_limits<double>::infinity();
  for (const auto& b : out.balls) r_min = std::min(r_min, b.radius);
  out.wire_radius = cfg.wire_radius * r_min;
  out.timing.balls = out.balls.size();
  out.timing.total = total.lap() + out.timing.sampling + out.timing.t1 + out.timing.t2;
  return out;
}

template <int Dim>
struct PorousOutput {
  Prepared<Dim> prep;
  SelectionTrace<Dim> trace;
  ThickenedSet<Dim> thick;
  PorousResult<Dim> result;
  std::vector<std::string> warnings;
  TimingReport timing;

  nlohmann::json report_json(const RunConfig& cfg, double diag) const {
    auto j = to_json(result);
    j["mode"] = "porous";
    j["bbox_diag"] = diag;
    j["parameters"] = params_json<Dim>(cfg);
    j["tau_absolute"] = result.tau;
    j["dropped_thin_balls"] = thick.dropped;
    j["selection"] = to_json(trace);
    j["warnings"] = warnings;
    return j;
  }
};

template <int Dim>
PorousOutput<Dim> run_porous_pipeline(const BoundaryShape<Dim>& shape, const RunConfig& cfg) {
  cfg.validate();
  Stopwatch total;
  PorousOutput<Dim> out;
  out.timing.mode = Mode::Porous;
  out.warnings = shape.warnings;
  out.prep = prepare(shape, cfg, out.timing);
  for (const auto& l : out.prep.poles.log) out.warnings.push_back(l);

  Stopwatch sw;
  SelectionParams sp = cfg.selection;
  sp.mode = Mode::Porous;
  out.trace = select_porous(out.prep.poles, sp);
  out.timing.t3 = sw.lap();

  const double tau = cfg.tau * shape.bbox_diag;
  out.thick = apply_thickness(out.trace, tau);
  if (out.thick.dropped)
    out.warnings.push_back(std::to_string(out.thick.dropped) + " selected balls are thinner than tau and were dropped");
  auto built = build_pores(out.thick);
  for (const auto& w : built.warnings) out.warnings.push_back(w);
  out.result = report(shape, std::move(built.pores), tau, cfg.mc_points, cfg.seed);
  out.timing.t4 = sw.lap();
  out.timing.balls = out.result.pores.size();
  out.timing.total = total.lap() + out.timing.sampling + out.timing.t1 + out.timing.t2;
  return out;
}

struct CrossoverRow {
  std::size_t selected = 0;
  double accel_time = 0.0;
  double brute_time = 0.0;
  std::uint64_t accel_checks = 0;
  std::uint64_t brute_checks = 0;
};

struct CrossoverResult {
  std::vector<CrossoverRow> rows;
  std::size_t accepted = 0;
  bool identical = true;
  std::vector<std::string> warnings;

  std::string csv() const {
    std::ostringstream os;
    os << "selected,accel_time_s,brute_time_s,accel_checks,brute_checks\n";
    os << std::setprecision(9);
    for (const auto& r : rows)
      os << r.selected << ',' << r.accel_time << ',' << r.brute_time << ',' << r.accel_checks << ',' << r.brute_checks
         << '\n';
    return os.str();
  }
};

/// Runs the same selection with both acceleration modes and samples the
/// cumulative check counts and wall time at the requested accepted counts
/// (default: every 5). Checkpoints past the final count are dropped.
template <int Dim>
CrossoverResult crossover(const PoleSet<Dim>& poles, SelectionParams params, std::vector<std::size_t> checkpoints) {
  params.acceleration = Acceleration::BruteForce;
  const auto brute = select(poles, params);
  params.acceleration = Acceleration::PowerDiagram;
  const auto accel = select(poles, params);
  CrossoverResult r;
  r.accepted = accel.steps.size();
  r.identical = brute.accepted_ids() == accel.accepted_ids();
  if (!r.identical) r.warnings.push_back("accelerated and brute-force runs accepted different poles");
  const std::size_t n = std::min(brute.steps.size(), accel.steps.size());
  if (checkpoints.empty()) {
    for (std::size_t k = 5; k <= n; k += 5) checkpoints.push_back(k);
    if (checkpoints.empty() && n > 0) checkpoints.push_back(n);
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  for (std::size_t k : checkpoints) {
    if (k == 0 || k > n) {
      r.warnings.push_back("checkpoint " + std::to_string(k) + " is outside 1.." + std::to_string(n) + "; skipped");
      continue;
    }
    r.rows.push_back({k, accel.steps[k - 1].elapsed, brute.steps[k - 1].elapsed, accel.steps[k - 1].cumulative_checks,
                      brute.steps[k - 1].cumulative_checks});
  }
  return r;
}

namespace detail {

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create directory " + dir.string());
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  return os;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
  if (!os) throw Error(ErrorCode::IoError, "failed writing " + p.string());
}

}  // namespace detail

template <int Dim>
void write_outputs(const BallstickOutput<Dim>& out, const RunConfig& cfg, double diag) {
  const std::filesystem::path dir(cfg.out_dir);
  detail::ensure_dir(dir);
  detail::write_json(dir / "abstraction.json", out.abstraction(cfg, diag));
  detail::write_json(dir / "timings.json", out.timing.to_json());
  std::vector<std::pair<std::string, TriMesh>> balls;
  for (std::size_t i = 0; i < out.balls.size(); ++i)
    balls.emplace_back("ball_" + std::to_string(i), sphere_mesh(embed<Dim>(out.balls[i].center), out.balls[i].radius));
  auto bos = detail::open_out(dir / "balls.obj");
  write_obj_objects(bos, balls);
  auto wos = detail::open_out(dir / "wires.obj");
  write_obj_objects(wos, {{"wires", wire_mesh(out.trees, out.graph, out.wire_radius)}});
}

template <int Dim>
void write_outputs(const PorousOutput<Dim>& out, const RunConfig& cfg, double diag) {
  const std::filesystem::path dir(cfg.out_dir);
  detail::ensure_dir(dir / "pores");
  detail::write_json(dir / "report.json", out.report_json(cfg, diag));
  detail::write_json(dir / "timings.json", out.timing.to_json());
  for (auto& [name, mesh] : export_pore_meshes(out.result.pores, cfg.pore_subdivisions)) {
    auto os = detail::open_out(dir / "pores" / (name + ".obj"));
    write_obj_objects(os, {{name, mesh}});
  }
}

}  // namespace polarballs

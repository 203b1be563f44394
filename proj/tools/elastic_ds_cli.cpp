// elastic-ds: train, adapt, execute and inspect elastic dynamical-system policies.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "elastic_ds/elastic_chain.hpp"
#include "elastic_ds/errors.hpp"
#include "elastic_ds/eval.hpp"
#include "elastic_ds/io.hpp"
#include "elastic_ds/pipeline.hpp"
#include "elastic_ds/sequencer.hpp"
#include "elastic_ds/synthetic.hpp"
#include "elastic_ds/velocity_profile.hpp"

namespace fs = std::filesystem;
using namespace elastic_ds;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

constexpr const char* kConfigEnv = "ELASTIC_DS_CONFIG";

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInsufficientData:
    case ErrorCode::kEmDidNotImprove:
    case ErrorCode::kSingularCovariance:
    case ErrorCode::kRankDeficientSystem:
    case ErrorCode::kOptimizationDiverged:
    case ErrorCode::kInfeasibleAttractor:
    case ErrorCode::kNonFiniteState:
    case ErrorCode::kDegenerateDirection:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  bool quiet = false;
};

// Report lines are single-line JSON objects on stdout.
class Report {
 public:
  explicit Report(std::string command) { out_ << "{\"command\":\"" << command << '"'; }
  Report& add(const char* key, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out_ << ",\"" << key << "\":" << (std::isfinite(v) ? buf : "null");
    return *this;
  }
  Report& add(const char* key, int v) {
    out_ << ",\"" << key << "\":" << v;
    return *this;
  }
  Report& add(const char* key, bool v) {
    out_ << ",\"" << key << "\":" << (v ? "true" : "false");
    return *this;
  }
  Report& add(const char* key, const std::string& v) {
    out_ << ",\"" << key << "\":\"" << v << '"';
    return *this;
  }
  std::string str() const { return out_.str() + "}"; }

 private:
  std::ostringstream out_;
};

io::RunConfig load_config(const Globals& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  io::RunConfig cfg = path.empty() ? io::RunConfig{} : io::parse_run_config(io::read_text(path));
  if (g.seed) {
    cfg.train.fit.seed = *g.seed;
    cfg.train.adapt.estimate.seed = *g.seed;
  }
  return cfg;
}

void emit(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cout << line << '\n';
}

Vec parse_vec(const std::string& text, int dim, const char* what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (static_cast<int>(vals.size()) != dim) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + ": expected " + std::to_string(dim) + " comma-separated values");
  }
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = vals[static_cast<std::size_t>(i)];
  return v;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::write_text(path, text);
  }
}

void refuse_overwrite(const fs::path& input, const fs::path& output) {
  std::error_code ec;
  if (fs::exists(output) && fs::equivalent(input, output, ec)) {
    throw Error(ErrorCode::kInvalidArgument, "output would overwrite the input file " + input.string());
  }
}

Skill skill_from(const io::PolicyFile& file) {
  Trajectory ref = regenerate_profile(file.chain.joints, file.profile);
  return Skill{file.chain, file.profile, file.policy, std::move(ref), 0.0, 0.0};
}

// Descriptor a policy was adapted to, falling back to its own chain ends.
GeometricDescriptor target_descriptor(const io::PolicyFile& file) {
  GeometricDescriptor d = file.chain.endpoint_descriptor();
  if (file.provenance.descriptor) {
    if (file.provenance.descriptor->enter) d.enter = file.provenance.descriptor->enter;
    if (file.provenance.descriptor->exit) d.exit = file.provenance.descriptor->exit;
  }
  return d;
}

double policy_diameter(const io::PolicyFile& file) {
  return workspace_diameter(regenerate_profile(file.chain.joints, file.profile).points());
}

RolloutConfig rollout_config(const io::RunConfig& cfg, double diameter) {
  RolloutConfig rc = RolloutConfig::for_workspace(diameter);
  if (cfg.rollout_dt_set) rc.dt = cfg.rollout.dt;
  if (cfg.rollout_steps_set) rc.max_steps = cfg.rollout.max_steps;
  rc.integrator = cfg.rollout.integrator;
  return rc;
}

// ---- fit ----

struct FitArgs {
  std::string demo;
  std::string out;
  int k_min = 0;
  int k_max = 0;
  int restarts = 0;
  int trajectory = 0;
};

int cmd_fit(const Globals& g, const FitArgs& a) {
  io::RunConfig cfg = load_config(g);
  const std::string bytes = io::read_text(a.demo);
  io::DemoFile demo = io::parse_demo(bytes);
  if (a.trajectory < 0 || a.trajectory >= static_cast<int>(demo.trajectories.size())) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory index out of range");
  }
  const Trajectory& traj = demo.trajectories[static_cast<std::size_t>(a.trajectory)];
  auto& fit = cfg.train.fit;
  if (a.k_max > 0) {
    fit.k_max = a.k_max;
    fit.k_min = std::min(fit.k_min, fit.k_max);
  }
  if (a.k_min > 0) fit.k_min = a.k_min;
  if (a.restarts > 0) fit.restarts = a.restarts;

  Skill skill = train(traj, cfg.train);
  io::Provenance pv{io::fnv1a_hex(bytes), std::nullopt, traj.timestamps().front(), traj.timestamps().back()};
  io::write_policy(a.out, io::PolicyFile{skill.policy, skill.chain, skill.profile, pv});
  emit(g, Report("fit")
              .add("K", static_cast<int>(skill.policy.size()))
              .add("mse", skill.mse)
              .add("fit_seconds", skill.fit_seconds)
              .add("output", a.out)
              .str());
  return kExitOk;
}

// ---- transform ----

struct TransformArgs {
  std::string policy;
  std::string descriptor;
  std::string out;
  std::string scaling;
};

int cmd_transform(const Globals& g, const TransformArgs& a) {
  io::RunConfig cfg = load_config(g);
  if (a.scaling == "linear") cfg.train.adapt.scaling = EigenvalueScaling::kLinear;
  if (a.scaling == "squared") cfg.train.adapt.scaling = EigenvalueScaling::kSquared;
  refuse_overwrite(a.policy, a.out);
  const io::PolicyFile in = io::read_policy(a.policy);
  const GeometricDescriptor desc = io::read_descriptor(a.descriptor);
  if ((desc.enter ? desc.enter->dim() : desc.exit->dim()) != in.policy.dim()) {
    throw Error(ErrorCode::kInvalidArgument, "descriptor and policy dimensions differ");
  }

  const Adaptation adapted = [&] {
    try {
      return adapt(skill_from(in), desc, cfg.train.adapt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankDeficientSystem) throw;
      throw Error(e.code(), std::string("constrained edit for descriptor ") + a.descriptor + ": " + e.what());
    }
  }();
  const Skill& s = adapted.skill;

  io::Provenance pv = in.provenance;
  pv.descriptor = desc;
  io::PolicyFile out{s.policy, s.chain, s.profile, pv};
  io::write_policy(a.out, out);

  const GeometricDescriptor target = target_descriptor(out);
  const AdaptationReport rep =
      evaluate_adaptation(s.policy, target, rollout_config(cfg, workspace_diameter(s.reference.points())));
  emit(g, Report("transform")
              .add("K", static_cast<int>(s.policy.size()))
              .add("mse", s.mse)
              .add("start_cos", rep.start_cos)
              .add("goal_cos", rep.goal_cos)
              .add("endpoints_distance", rep.endpoints_distance)
              .add("converged", rep.converged)
              .add("transform_seconds", adapted.transform_seconds)
              .add("profile_seconds", adapted.profile_seconds)
              .add("estimate_seconds", adapted.estimate_seconds)
              .add("total_seconds", adapted.total_seconds())
              .add("output", a.out)
              .str());
  return kExitOk;
}

// ---- rollout ----

struct RolloutArgs {
  std::vector<std::string> policies;
  std::string out;
  std::string start;
  double switch_radius = 0.0;
  double dt = 0.0;
  int max_steps = 0;
};

int cmd_rollout(const Globals& g, const RolloutArgs& a) {
  io::RunConfig cfg = load_config(g);
  std::vector<io::PolicyFile> files;
  for (const auto& p : a.policies) files.push_back(io::read_policy(p));
  const int dim = files.front().policy.dim();
  double diameter = 0.0;
  Points all;
  for (const auto& f : files) {
    if (f.policy.dim() != dim) throw Error(ErrorCode::kInvalidArgument, "policies have different dimensions");
    const auto ref = regenerate_profile(f.chain.joints, f.profile);
    all.insert(all.end(), ref.points().begin(), ref.points().end());
  }
  diameter = workspace_diameter(all);
  RolloutConfig rc = rollout_config(cfg, diameter);
  if (a.dt > 0.0) rc.dt = a.dt;
  if (a.max_steps > 0) rc.max_steps = a.max_steps;
  const Vec x0 = a.start.empty() ? files.front().chain.joints.front() : parse_vec(a.start, dim, "--start");

  std::string csv;
  bool converged = false;
  std::size_t samples = 0;
  if (files.size() == 1) {
    const Rollout r = rollout(files.front().policy, x0, rc);
    csv = io::format_rollout_csv(r, files.front().policy);
    converged = r.converged;
    samples = r.trajectory.size();
  } else {
    std::vector<PlanSegment> segs;
    for (const auto& f : files) segs.push_back(PlanSegment{f.chain, target_descriptor(f), f.policy, std::nullopt});
    const double radius = a.switch_radius > 0.0 ? a.switch_radius : 1e-2 * diameter;
    auto plan = std::make_shared<const TaskPlan>(std::move(segs), StitchMode::kSequential, radius);
    PlanExecutor exec(plan);
    const Rollout r = rollout(exec, x0, rc);
    csv = io::format_rollout_csv(r, *plan);
    converged = r.converged;
    samples = r.trajectory.size();
  }
  write_or_print(a.out, csv);
  if (!a.out.empty() && a.out != "-") {
    emit(g, Report("rollout")
                .add("samples", static_cast<int>(samples))
                .add("converged", converged)
                .add("output", a.out)
                .str());
  }
  return kExitOk;
}

// ---- field ----

struct FieldArgs {
  std::string policy;
  std::string csv;
  std::string svg;
  std::string lower;
  std::string upper;
  int nx = 25;
  int ny = 25;
  double slice = std::nan("");
  bool overlay = true;
};

int cmd_field(const Globals& g, const FieldArgs& a) {
  io::RunConfig cfg = load_config(g);
  const io::PolicyFile f = io::read_policy(a.policy);
  const int dim = f.policy.dim();
  const Trajectory ref = regenerate_profile(f.chain.joints, f.profile);
  const double diameter = workspace_diameter(ref.points());

  FieldGrid grid;
  Vec lo = ref.points().front();
  Vec hi = lo;
  for (const auto& p : ref.points()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  lo.array() -= 0.1 * diameter;
  hi.array() += 0.1 * diameter;
  grid.lower = a.lower.empty() ? lo : parse_vec(a.lower, dim, "--lower");
  grid.upper = a.upper.empty() ? hi : parse_vec(a.upper, dim, "--upper");
  grid.nx = a.nx;
  grid.ny = a.ny;
  grid.slice = std::isnan(a.slice) ? (dim == 3 ? f.policy.attractor()(2) : 0.0) : a.slice;

  const auto samples = sample_field(f.policy, grid);
  if (!a.csv.empty()) write_or_print(a.csv, io::format_field_csv(samples));
  if (!a.svg.empty()) {
    std::vector<Trajectory> overlays;
    if (a.overlay) overlays.push_back(rollout(f.policy, f.chain.joints.front(), rollout_config(cfg, diameter)).trajectory);
    io::write_text(a.svg, io::format_field_svg(samples, grid, overlays, f.policy.attractor()));
  }
  emit(g, Report("field").add("samples", static_cast<int>(samples.size())).str());
  return kExitOk;
}

// ---- metrics ----

struct MetricsArgs {
  std::string policy;
  std::string descriptor;
};

int cmd_metrics(const Globals& g, const MetricsArgs& a) {
  io::RunConfig cfg = load_config(g);
  const io::PolicyFile f = io::read_policy(a.policy);
  GeometricDescriptor target = target_descriptor(f);
  if (!a.descriptor.empty()) {
    const GeometricDescriptor d = io::read_descriptor(a.descriptor);
    if (d.enter) target.enter = d.enter;
    if (d.exit) target.exit = d.exit;
  }
  const AdaptationReport rep = evaluate_adaptation(f.policy, target, rollout_config(cfg, policy_diameter(f)));
  // Always printed: this is the command's output, not a progress note.
  std::cout << Report("metrics")
                   .add("start_cos", rep.start_cos)
                   .add("goal_cos", rep.goal_cos)
                   .add("endpoints_distance", rep.endpoints_distance)
                   .add("converged", rep.converged)
                   .str()
            << '\n';
  return kExitOk;
}

// ---- bench ----

struct BenchArgs {
  std::string shape = "s-curve";
  std::vector<int> points{100, 200, 400, 600, 800, 1000};
  int repeats = 3;
  std::string out;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
  io::RunConfig cfg = load_config(g);
  std::ostringstream table;
  table << "T_n,K,train_s,transform_ms,profile_ms,estimate_ms,total_ms,start_cos,goal_cos,endpoints_distance\n";
  for (int n : a.points) {
    const Trajectory demo = synthetic::by_name(a.shape, n);
    const GeometricDescriptor desc = synthetic::both_ends_shifted(demo);
    const AdaptationReport rep = bench_adaptation(demo, desc, a.repeats, cfg.train);
    char row[512];
    std::snprintf(row, sizeof(row), "%d,%d,%.4f,%.3f,%.3f,%.3f,%.3f,%.6f,%.6f,%.6g\n", n, rep.num_components,
                  rep.train_seconds, 1e3 * rep.transform_seconds, 1e3 * rep.profile_seconds,
                  1e3 * rep.estimate_seconds, 1e3 * rep.total_seconds, rep.start_cos, rep.goal_cos,
                  rep.endpoints_distance);
    table << row;
    if (!g.quiet && !a.out.empty()) std::cerr << row;
  }
  write_or_print(a.out, table.str());
  return kExitOk;
}

// ---- stitch ----

struct StitchArgs {
  std::vector<std::string> policies;
  std::string out;
};

int cmd_stitch(const Globals& g, const StitchArgs& a) {
  io::RunConfig cfg = load_config(g);
  if (a.policies.size() < 2) throw Error(ErrorCode::kInvalidArgument, "stitch needs at least two policies");
  std::vector<io::PolicyFile> files;
  std::vector<ElasticChain> chains;
  int points = 0;
  for (std::size_t i = 0; i < a.policies.size(); ++i) {
    refuse_overwrite(a.policies[i], a.out);
    files.push_back(io::read_policy(a.policies[i]));
    chains.push_back(files.back().chain);
    points += files.back().profile.points - (i > 0 ? 1 : 0);
  }
  const ElasticChain stitched = stitch_chains(chains);
  ProfileConfig profile = files.front().profile;
  profile.points = points;
  const Skill s = learn_on_chain(stitched, profile, cfg.train.adapt);

  io::Provenance pv = files.front().provenance;
  GeometricDescriptor d;
  d.enter = target_descriptor(files.front()).enter;
  d.exit = target_descriptor(files.back()).exit;
  pv.descriptor = d;
  pv.demo_t_end = files.back().provenance.demo_t_end;
  io::write_policy(a.out, io::PolicyFile{s.policy, s.chain, s.profile, pv});
  emit(g, Report("stitch")
              .add("K", static_cast<int>(s.policy.size()))
              .add("mse", s.mse)
              .add("output", a.out)
              .str());
  return kExitOk;
}

// ---- split ----

struct SplitArgs {
  std::string demo;
  std::string prefix;
  double radius = 0.0;
};

int cmd_split(const Globals& g, const SplitArgs& a) {
  const io::DemoFile demo = io::read_demo(a.demo);
  if (demo.via_points.empty()) throw Error(ErrorCode::kInvalidArgument, "demo file has no via_points");
  const Trajectory& traj = demo.trajectories.front();
  const double radius = a.radius > 0.0 ? a.radius : 1e-2 * workspace_diameter(traj.points());
  const auto parts = split_demo(traj, demo.via_points, radius);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    io::DemoFile piece;
    piece.dim = demo.dim;
    piece.trajectories.push_back(parts[i]);
    const std::string path = a.prefix + "_" + std::to_string(i) + ".json";
    io::write_demo(path, piece);
    emit(g, Report("split")
                .add("segment", static_cast<int>(i))
                .add("samples", static_cast<int>(parts[i].size()))
                .add("output", path)
                .str());
  }
  return kExitOk;
}

// ---- synth ----

struct SynthArgs {
  std::string shape = "s-curve";
  int points = 200;
  std::string out;
  std::string descriptor_out;
  std::string variant = "both";
  std::vector<double> via_fractions;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  const Trajectory traj = synthetic::by_name(a.shape, a.points);
  io::DemoFile demo;
  demo.dim = traj.dim();
  demo.trajectories.push_back(traj);
  for (double f : a.via_fractions) {
    if (!(f > 0.0 && f < 1.0)) throw Error(ErrorCode::kInvalidArgument, "via fractions must lie in (0, 1)");
    const auto idx = static_cast<std::size_t>(std::lround(f * static_cast<double>(traj.size() - 1)));
    demo.via_points.push_back(traj.points()[idx]);
  }
  io::write_demo(a.out, demo);
  if (!a.descriptor_out.empty()) {
    GeometricDescriptor d;
    const double s = workspace_diameter(traj.points());
    const Vec zero = Vec::Zero(traj.dim());
    if (a.variant == "both") {
      d = synthetic::both_ends_shifted(traj);
    } else if (a.variant == "demo") {
      d = synthetic::shifted_descriptor(traj, zero, 0.0, zero, 0.0);
    } else if (a.variant == "end") {
      Vec shift = zero;
      shift(0) = 0.1 * s;
      shift(1) = -0.15 * s;
      d = synthetic::shifted_descriptor(traj, zero, 0.0, shift, -0.4);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "variant must be both, demo or end");
    }
    io::write_descriptor(a.descriptor_out, d);
  }
  emit(g, Report("synth").add("samples", static_cast<int>(traj.size())).add("output", a.out).str());
  return kExitOk;
}

// ---- frames ----

struct FramesArgs {
  std::string policy;
  std::string out;
};

// Writes the enter/exit frames of the policy's chain; transforming with this
// descriptor leaves the policy unchanged.
int cmd_frames(const Globals& g, const FramesArgs& a) {
  const io::PolicyFile f = io::read_policy(a.policy);
  write_or_print(a.out, io::format_descriptor(f.chain.endpoint_descriptor()));
  if (!a.out.empty() && a.out != "-") emit(g, Report("frames").add("output", a.out).str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic dynamical-system motion policies"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for model fitting");
  app.add_option("--config", g.config_path, std::string("JSON run configuration (default: $") + kConfigEnv + ")");
  app.add_flag("-q,--quiet", g.quiet, "Suppress report lines");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a chain and policy to a demonstration");
  c_fit->add_option("demo", fit.demo, "Demo file")->required();
  c_fit->add_option("-o,--out", fit.out, "Output policy file")->required();
  c_fit->add_option("--k-min", fit.k_min, "Smallest component count");
  c_fit->add_option("--k-max", fit.k_max, "Largest component count");
  c_fit->add_option("--restarts", fit.restarts, "EM restarts per component count");
  c_fit->add_option("--trajectory", fit.trajectory, "Trajectory index in the demo file");

  TransformArgs tr;
  auto* c_tr = app.add_subcommand("transform", "Adapt a policy to new start/end frames");
  c_tr->add_option("policy", tr.policy, "Input policy file")->required()->check(CLI::ExistingFile);
  c_tr->add_option("descriptor", tr.descriptor, "Descriptor file")->required()->check(CLI::ExistingFile);
  c_tr->add_option("-o,--out", tr.out, "Output policy file")->required();
  c_tr->add_option("--scaling", tr.scaling, "Along-link eigenvalue scaling")
      ->check(CLI::IsMember({"squared", "linear"}));

  RolloutArgs ro;
  auto* c_ro = app.add_subcommand("rollout", "Integrate a policy, or a sequence of policies");
  c_ro->add_option("policies", ro.policies, "Policy files, executed in order")->required();
  c_ro->add_option("-o,--out", ro.out, "Output CSV (default stdout)");
  c_ro->add_option("--start", ro.start, "Start state, comma separated (default: chain start)");
  c_ro->add_option("--switch-radius", ro.switch_radius, "Segment hand-over radius");
  c_ro->add_option("--dt", ro.dt, "Integration step");
  c_ro->add_option("--max-steps", ro.max_steps, "Step limit");

  FieldArgs fa;
  auto* c_fa = app.add_subcommand("field", "Sample the velocity field on a grid");
  c_fa->add_option("policy", fa.policy, "Policy file")->required();
  c_fa->add_option("--csv", fa.csv, "Output CSV");
  c_fa->add_option("--svg", fa.svg, "Output SVG");
  c_fa->add_option("--nx", fa.nx, "Grid columns")->check(CLI::Range(2, 1000));
  c_fa->add_option("--ny", fa.ny, "Grid rows")->check(CLI::Range(2, 1000));
  c_fa->add_option("--lower", fa.lower, "Lower grid corner, comma separated");
  c_fa->add_option("--upper", fa.upper, "Upper grid corner, comma separated");
  c_fa->add_option("--slice", fa.slice, "Third coordinate for 3D policies");
  c_fa->add_flag("!--no-overlay", fa.overlay, "Skip the rollout polyline");

  MetricsArgs me;
  auto* c_me = app.add_subcommand("metrics", "Start/goal cosines and endpoint distance of a rollout");
  c_me->add_option("policy", me.policy, "Policy file")->required();
  c_me->add_option("--descriptor", me.descriptor, "Target descriptor (default: the one stored in the policy)");

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "Time training and adaptation over demo lengths");
  c_be->add_option("--shape", be.shape, "Synthetic shape")->check(CLI::IsMember(synthetic::shape_names()));
  c_be->add_option("--points", be.points, "Demo lengths")->delimiter(',');
  c_be->add_option("--repeats", be.repeats, "Adaptations per length")->check(CLI::PositiveNumber);
  c_be->add_option("-o,--out", be.out, "Output CSV (default stdout)");

  StitchArgs st;
  auto* c_st = app.add_subcommand("stitch", "Join consecutive policies into one combined policy");
  c_st->add_option("policies", st.policies, "Policy files in execution order")->required();
  c_st->add_option("-o,--out", st.out, "Output policy file")->required();

  SplitArgs sp;
  auto* c_sp = app.add_subcommand("split", "Split a demo at its via-points");
  c_sp->add_option("demo", sp.demo, "Demo file with via_points")->required();
  c_sp->add_option("--prefix", sp.prefix, "Output prefix; writes <prefix>_<i>.json")->required();
  c_sp->add_option("--radius", sp.radius, "Largest allowed via-point miss distance");

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Write a scripted demonstration and descriptor");
  c_sy->add_option("--shape", sy.shape, "Shape")->check(CLI::IsMember(synthetic::shape_names()));
  c_sy->add_option("--points", sy.points, "Samples")->check(CLI::Range(10, 100000));
  c_sy->add_option("-o,--out", sy.out, "Output demo file")->required();
  c_sy->add_option("--descriptor", sy.descriptor_out, "Also write a descriptor file");
  c_sy->add_option("--variant", sy.variant, "Descriptor variant")->check(CLI::IsMember({"both", "demo", "end"}));
  c_sy->add_option("--via", sy.via_fractions, "Via-points as fractions of the sample index")->delimiter(',');

  FramesArgs fr;
  auto* c_fr = app.add_subcommand("frames", "Write the enter/exit frames of a policy's chain as a descriptor");
  c_fr->add_option("policy", fr.policy, "Policy file")->required();
  c_fr->add_option("-o,--out", fr.out, "Output descriptor (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*c_fit) return cmd_fit(g, fit);
    if (*c_tr) return cmd_transform(g, tr);
    if (*c_ro) return cmd_rollout(g, ro);
    if (*c_fa) return cmd_field(g, fa);
    if (*c_me) return cmd_metrics(g, me);
    if (*c_be) return cmd_bench(g, be);
    if (*c_st) return cmd_stitch(g, st);
    if (*c_sp) return cmd_split(g, sp);
    if (*c_sy) return cmd_synth(g, sy);
    if (*c_fr) return cmd_frames(g, fr);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

#include "elastic_ds/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "elastic_ds/config.hpp"
#include "elastic_ds/errors.hpp"

namespace elastic_ds::io {

using nlohmann::json;

namespace {

constexpr const char* kDemoFormat = "elastic-ds/demo";
constexpr const char* kDescriptorFormat = "elastic-ds/descriptor";
constexpr const char* kPolicyFormat = "elastic-ds/policy";

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::kParseError, what); }

json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vec vec_from(const json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    fail(std::string(what) + ": expected an array of " + std::to_string(dim) + " numbers");
  }
  Vec v(dim);
  for (int i = 0; i < dim; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) fail(std::string(what) + ": non-numeric entry");
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  if (!v.allFinite()) fail(std::string(what) + ": non-finite entry");
  return v;
}

Mat mat_from(const json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    fail(std::string(what) + ": expected " + std::to_string(dim) + " rows");
  }
  Mat m(dim, dim);
  for (int r = 0; r < dim; ++r) m.row(r) = vec_from(j[static_cast<std::size_t>(r)], dim, what).transpose();
  return m;
}

int dim_from(const json& j) {
  if (!j.contains("dim") || !j["dim"].is_number_integer()) fail("missing integer field 'dim'");
  const int d = j["dim"].get<int>();
  if (d != 2 && d != 3) fail("dim must be 2 or 3");
  return d;
}

void check_header(const json& j, const char* format) {
  if (!j.is_object()) fail("top level must be an object");
  if (j.value("format", std::string()) != format) fail(std::string("expected format '") + format + "'");
  if (j.value("version", 0) != kFormatVersion) fail("unsupported format version");
}

json header(const char* format, int dim) {
  return json{{"format", format}, {"version", kFormatVersion}, {"dim", dim}};
}

json pose_to_json(const Pose& p) { return json{{"position", to_json(p.position)}, {"rotation", to_json(p.rotation)}}; }

Pose pose_from(const json& j, int dim, const char* what) {
  if (!j.is_object()) fail(std::string(what) + ": pose must be an object");
  Pose p{vec_from(j.at("position"), dim, what), mat_from(j.at("rotation"), dim, what)};
  try {
    p.validate(tolerances().descriptor_rotation);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": " + e.what());
  }
  // Re-orthonormalize so downstream checks at 1e-9 hold for 1e-6-accurate
  // input. Exact rotations are left alone to keep round-trips bit-exact.
  const double err = (p.rotation.transpose() * p.rotation - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (err > 1e-12) {
    Eigen::JacobiSVD<Mat> svd(p.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    p.rotation = svd.matrixU() * svd.matrixV().transpose();
  }
  return p;
}

json descriptor_to_json(const GeometricDescriptor& d) {
  json j = json::object();
  j["enter"] = d.enter ? pose_to_json(*d.enter) : json(nullptr);
  j["exit"] = d.exit ? pose_to_json(*d.exit) : json(nullptr);
  return j;
}

GeometricDescriptor descriptor_from(const json& j, int dim) {
  GeometricDescriptor d;
  if (j.contains("enter") && !j["enter"].is_null()) d.enter = pose_from(j["enter"], dim, "enter");
  if (j.contains("exit") && !j["exit"].is_null()) d.exit = pose_from(j["exit"], dim, "exit");
  if (!d.enter && !d.exit) throw Error(ErrorCode::kInvalidArgument, "descriptor needs an enter or an exit pose");
  return d;
}

json parse_json(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) fail("empty input");
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(std::string("schema error: ") + e.what());
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::kInvalidArgument, "write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

DemoFile parse_demo(const std::string& text) {
  const json j = parse_json(text);
  return guarded([&] {
    check_header(j, kDemoFormat);
    DemoFile demo;
    demo.dim = dim_from(j);
    const auto& trajs = j.at("trajectories");
    if (!trajs.is_array() || trajs.empty()) fail("demo needs at least one trajectory");
    for (const auto& t : trajs) {
      const auto& ts = t.at("t");
      const auto& xs = t.at("x");
      if (!ts.is_array() || !xs.is_array() || ts.size() != xs.size()) fail("trajectory 't' and 'x' must match");
      Points pts;
      std::vector<double> times;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        pts.push_back(vec_from(xs[i], demo.dim, "trajectory point"));
        times.push_back(ts[i].get<double>());
      }
      demo.trajectories.emplace_back(std::move(pts), std::move(times));
    }
    if (j.contains("via_points")) {
      for (const auto& v : j["via_points"]) demo.via_points.push_back(vec_from(v, demo.dim, "via point"));
    }
    if (j.contains("descriptor") && !j["descriptor"].is_null()) {
      demo.descriptor = descriptor_from(j["descriptor"], demo.dim);
    }
    return demo;
  });
}

std::string format_demo(const DemoFile& demo) {
  json j = header(kDemoFormat, demo.dim);
  json trajs = json::array();
  for (const auto& t : demo.trajectories) {
    if (t.dim() != demo.dim) throw Error(ErrorCode::kInvalidArgument, "trajectory dimension mismatch");
    json xs = json::array();
    for (const auto& p : t.points()) xs.push_back(to_json(p));
    trajs.push_back(json{{"t", t.timestamps()}, {"x", std::move(xs)}});
  }
  j["trajectories"] = std::move(trajs);
  json via = json::array();
  for (const auto& v : demo.via_points) via.push_back(to_json(v));
  j["via_points"] = std::move(via);
  j["descriptor"] = demo.descriptor ? descriptor_to_json(*demo.descriptor) : json(nullptr);
  return j.dump(1) + "\n";
}

DemoFile read_demo(const std::filesystem::path& path) { return parse_demo(read_text(path)); }
void write_demo(const std::filesystem::path& path, const DemoFile& demo) { write_text(path, format_demo(demo)); }

GeometricDescriptor parse_descriptor(const std::string& text) {
  const json j = parse_json(text);
  return guarded([&] {
    check_header(j, kDescriptorFormat);
    return descriptor_from(j, dim_from(j));
  });
}

std::string format_descriptor(const GeometricDescriptor& descriptor) {
  const int d = descriptor.enter ? descriptor.enter->dim() : descriptor.exit->dim();
  json j = header(kDescriptorFormat, d);
  j.update(descriptor_to_json(descriptor));
  return j.dump(1) + "\n";
}

GeometricDescriptor read_descriptor(const std::filesystem::path& path) { return parse_descriptor(read_text(path)); }
void write_descriptor(const std::filesystem::path& path, const GeometricDescriptor& descriptor) {
  write_text(path, format_descriptor(descriptor));
}

std::string format_policy(const PolicyFile& file) {
  const auto& pol = file.policy;
  json j = header(kPolicyFormat, pol.dim());
  j["attractor"] = to_json(pol.attractor());
  j["margin"] = pol.margin();
  j["P"] = to_json(pol.p());
  json comps = json::array();
  for (std::size_t k = 0; k < pol.size(); ++k) {
    const auto& g = pol.components()[k];
    comps.push_back(json{{"prior", g.prior},
                         {"mean", to_json(g.mean)},
                         {"covariance", to_json(g.covariance)},
                         {"A", to_json(pol.a()[k])},
                         {"b", to_json(pol.b()[k])}});
  }
  j["components"] = std::move(comps);

  const auto& ch = file.chain;
  json joints = json::array();
  for (const auto& b : ch.joints) joints.push_back(to_json(b));
  json links = json::array();
  for (const auto& l : ch.links) {
    links.push_back(json{{"mean_local", to_json(l.mean_local)},
                         {"eigenvectors_local", to_json(l.eigenvectors_local)},
                         {"eigenvalues", to_json(l.eigenvalues)},
                         {"along_axis", l.along_axis}});
  }
  j["chain"] = json{{"joints", std::move(joints)},
                    {"link_lengths", ch.link_lengths},
                    {"order_scores", ch.gmm.order_scores},
                    {"links", std::move(links)}};
  j["profile"] = json{{"points", file.profile.points},
                      {"dt", file.profile.dt},
                      {"interpolate_between_joints", file.profile.interpolate_between_joints}};
  const auto& pv = file.provenance;
  j["provenance"] = json{{"source_hash", pv.source_hash},
                         {"descriptor", pv.descriptor ? descriptor_to_json(*pv.descriptor) : json(nullptr)},
                         {"demo_t_begin", pv.demo_t_begin},
                         {"demo_t_end", pv.demo_t_end}};
  return j.dump(1) + "\n";
}

PolicyFile parse_policy(const std::string& text) {
  const json j = parse_json(text);
  return guarded([&] {
    check_header(j, kPolicyFormat);
    const int d = dim_from(j);
    const Vec attractor = vec_from(j.at("attractor"), d, "attractor");
    const double margin = j.at("margin").get<double>();
    const Mat p = mat_from(j.at("P"), d, "P");
    Components comps;
    std::vector<Mat> a;
    std::vector<Vec> b;
    for (const auto& c : j.at("components")) {
      GaussianComponent g;
      g.prior = c.at("prior").get<double>();
      g.mean = vec_from(c.at("mean"), d, "mean");
      g.covariance = mat_from(c.at("covariance"), d, "covariance");
      comps.push_back(std::move(g));
      a.push_back(mat_from(c.at("A"), d, "A"));
      b.push_back(vec_from(c.at("b"), d, "b"));
    }
    if (comps.empty()) fail("policy has no components");
    LpvDsPolicy policy(comps, a, p, attractor, margin);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const double scale = std::max(1.0, policy.b()[k].cwiseAbs().maxCoeff());
      if ((policy.b()[k] - b[k]).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorCode::kInvalidArgument, "stored b does not equal -A x* for component " + std::to_string(k));
      }
    }

    const auto& jc = j.at("chain");
    ElasticChain chain;
    for (const auto& q : jc.at("joints")) chain.joints.push_back(vec_from(q, d, "joint"));
    chain.link_lengths = jc.at("link_lengths").get<std::vector<double>>();
    chain.gmm.components = comps;
    chain.gmm.order_scores = jc.at("order_scores").get<std::vector<double>>();
    for (const auto& l : jc.at("links")) {
      LinkFrame link;
      link.mean_local = vec_from(l.at("mean_local"), d, "mean_local");
      link.eigenvectors_local = mat_from(l.at("eigenvectors_local"), d, "eigenvectors_local");
      link.eigenvalues = vec_from(l.at("eigenvalues"), d, "eigenvalues");
      link.along_axis = l.at("along_axis").get<int>();
      if (link.along_axis < 0 || link.along_axis >= d) fail("along_axis out of range");
      chain.links.push_back(std::move(link));
    }
    const std::size_t k = comps.size();
    if (chain.joints.size() != k + 1 || chain.links.size() != k || chain.link_lengths.size() != k ||
        chain.gmm.order_scores.size() != k) {
      throw Error(ErrorCode::kInvalidArgument, "chain sizes do not match the component count");
    }
    const Components recovered = recover_gmm(chain, chain.joints);
    for (std::size_t i = 0; i < k; ++i) {
      const double dm = (recovered[i].mean - comps[i].mean).cwiseAbs().maxCoeff();
      const double dc = (recovered[i].covariance - comps[i].covariance).cwiseAbs().maxCoeff();
      if (dm > 1e-9 || dc > 1e-9) {
        throw Error(ErrorCode::kInvalidArgument, "chain link frames do not reproduce component " + std::to_string(i));
      }
    }

    const auto& jp = j.at("profile");
    ProfileConfig profile{jp.at("points").get<int>(), jp.at("dt").get<double>(),
                          jp.value("interpolate_between_joints", true)};
    Provenance pv;
    if (j.contains("provenance")) {
      const auto& jv = j["provenance"];
      pv.source_hash = jv.value("source_hash", std::string());
      if (jv.contains("descriptor") && !jv["descriptor"].is_null()) pv.descriptor = descriptor_from(jv["descriptor"], d);
      pv.demo_t_begin = jv.value("demo_t_begin", 0.0);
      pv.demo_t_end = jv.value("demo_t_end", 0.0);
    }
    return PolicyFile{std::move(policy), std::move(chain), profile, std::move(pv)};
  });
}

PolicyFile read_policy(const std::filesystem::path& path) { return parse_policy(read_text(path)); }
void write_policy(const std::filesystem::path& path, const PolicyFile& policy) {
  write_text(path, format_policy(policy));
}

namespace {

template <typename PolicyAt>
std::string rollout_csv(const Rollout& rollout, PolicyAt&& policy_at) {
  const auto& traj = rollout.trajectory;
  const int d = traj.dim();
  std::ostringstream out;
  out << "t";
  for (int i = 0; i < d; ++i) out << ",x" << i;
  for (int i = 0; i < d; ++i) out << ",v" << i;
  out << ",V,segment\n";
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const Vec& x = traj.points()[n];
    const Vec& v = (*traj.velocities())[n];
    out << fmt17(traj.timestamps()[n]);
    for (int i = 0; i < d; ++i) out << ',' << fmt17(x(i));
    for (int i = 0; i < d; ++i) out << ',' << fmt17(v(i));
    const int seg = rollout.active_segments[n];
    out << ',' << fmt17(policy_at(seg).lyapunov_value(x)) << ',' << seg << '\n';
  }
  return out.str();
}

}  // namespace

std::string format_rollout_csv(const Rollout& rollout, const LpvDsPolicy& policy) {
  return rollout_csv(rollout, [&](int) -> const LpvDsPolicy& { return policy; });
}

std::string format_rollout_csv(const Rollout& rollout, const TaskPlan& plan) {
  return rollout_csv(rollout, [&](int seg) -> const LpvDsPolicy& {
    return plan.segments()[static_cast<std::size_t>(seg)].policy;
  });
}

std::string format_field_csv(const std::vector<FieldSample>& samples) {
  std::ostringstream out;
  if (samples.empty()) return "";
  const int d = static_cast<int>(samples.front().point.size());
  for (int i = 0; i < d; ++i) out << (i ? "," : "") << 'x' << i;
  for (int i = 0; i < d; ++i) out << ",v" << i;
  out << ",speed\n";
  for (const auto& s : samples) {
    for (int i = 0; i < d; ++i) out << (i ? "," : "") << fmt17(s.point(i));
    for (int i = 0; i < d; ++i) out << ',' << fmt17(s.velocity(i));
    out << ',' << fmt17(s.velocity.norm()) << '\n';
  }
  return out.str();
}

std::string format_field_svg(const std::vector<FieldSample>& samples, const FieldGrid& grid,
                             const std::vector<Trajectory>& overlays, const Vec& attractor,
                             const SvgOptions& options) {
  const double w = options.width;
  const double h = options.height;
  const double pad = 20.0;
  const double sx = (w - 2 * pad) / (grid.upper(0) - grid.lower(0));
  const double sy = (h - 2 * pad) / (grid.upper(1) - grid.lower(1));
  auto px = [&](double x) { return pad + (x - grid.lower(0)) * sx; };
  auto py = [&](double y) { return h - pad - (y - grid.lower(1)) * sy; };  // SVG y points down.

  double max_speed = 0.0;
  for (const auto& s : samples) max_speed = std::max(max_speed, s.velocity.head(2).norm());
  const double cell = std::min((w - 2 * pad) / std::max(1, grid.nx - 1), (h - 2 * pad) / std::max(1, grid.ny - 1));
  const double glyph = options.glyph_fraction * cell;

  std::ostringstream out;
  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
      << w << ' ' << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<g class=\"field\" stroke-width=\"1.2\">\n";
  for (const auto& s : samples) {
    const Vec v = s.velocity.head(2);
    const double speed = v.norm();
    if (!(speed > 0.0)) {
      out << "<circle class=\"rest\" cx=\"" << px(s.point(0)) << "\" cy=\"" << py(s.point(1)) << "\" r=\"1.5\"/>\n";
      continue;
    }
    // Screen-space direction, y flipped.
    const double ux = v(0) / speed;
    const double uy = -v(1) / speed;
    const double x0 = px(s.point(0));
    const double y0 = py(s.point(1));
    const double x1 = x0 + glyph * ux;
    const double y1 = y0 + glyph * uy;
    const double t = max_speed > 0.0 ? speed / max_speed : 0.0;
    const int red = static_cast<int>(std::lround(40 + 215 * t));
    const int blue = static_cast<int>(std::lround(255 - 215 * t));
    const double hx = 0.3 * glyph;
    out << "<path class=\"arrow\" data-dx=\"" << ux << "\" data-dy=\"" << -uy << "\" stroke=\"rgb(" << red << ",60,"
        << blue << ")\" fill=\"none\" d=\"M" << x0 << ',' << y0 << " L" << x1 << ',' << y1 << " M"
        << x1 - hx * (ux * 0.866 - uy * 0.5) << ',' << y1 - hx * (uy * 0.866 + ux * 0.5) << " L" << x1 << ','
        << y1 << " L" << x1 - hx * (ux * 0.866 + uy * 0.5) << ',' << y1 - hx * (uy * 0.866 - ux * 0.5)
        << "\"/>\n";
  }
  out << "</g>\n";
  for (const auto& traj : overlays) {
    out << "<polyline class=\"rollout\" fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    for (const auto& p : traj.points()) out << px(p(0)) << ',' << py(p(1)) << ' ';
    out << "\"/>\n";
  }
  out << "<circle class=\"attractor\" cx=\"" << px(attractor(0)) << "\" cy=\"" << py(attractor(1))
      << "\" r=\"5\" fill=\"red\"/>\n";
  out << "</svg>\n";
  return out.str();
}

RunConfig parse_run_config(const std::string& text) {
  const json j = parse_json(text);
  return guarded([&] {
    RunConfig cfg;
    if (!j.is_object()) fail("config must be an object");
    if (j.contains("fit")) {
      const auto& f = j["fit"];
      auto& fit = cfg.train.fit;
      fit.k_min = f.value("k_min", fit.k_min);
      fit.k_max = f.value("k_max", fit.k_max);
      fit.restarts = f.value("restarts", fit.restarts);
      fit.max_em_iters = f.value("max_em_iters", fit.max_em_iters);
      fit.loglik_tol = f.value("loglik_tol", fit.loglik_tol);
      if (f.contains("covariance_floor")) fit.covariance_floor = f["covariance_floor"].get<double>();
      if (f.contains("seed")) fit.seed = f["seed"].get<std::uint64_t>();
    }
    if (j.contains("estimate")) {
      const auto& e = j["estimate"];
      auto& est = cfg.train.adapt.estimate;
      est.margin = e.value("margin", est.margin);
      est.regularization = e.value("regularization", est.regularization);
      est.max_iterations = e.value("max_iterations", est.max_iterations);
      est.gradient_tolerance = e.value("gradient_tolerance", est.gradient_tolerance);
    }
    if (j.contains("scaling")) {
      const auto s = j["scaling"].get<std::string>();
      if (s == "squared") {
        cfg.train.adapt.scaling = EigenvalueScaling::kSquared;
      } else if (s == "linear") {
        cfg.train.adapt.scaling = EigenvalueScaling::kLinear;
      } else {
        fail("scaling must be 'squared' or 'linear'");
      }
    }
    if (j.contains("profile")) {
      cfg.train.profile_points = j["profile"].value("points", 0);
      cfg.train.profile_dt = j["profile"].value("dt", 0.0);
    }
    if (j.contains("rollout")) {
      const auto& r = j["rollout"];
      if (r.contains("dt")) {
        cfg.rollout.dt = r["dt"].get<double>();
        cfg.rollout_dt_set = true;
      }
      if (r.contains("max_steps")) {
        cfg.rollout.max_steps = r["max_steps"].get<int>();
        cfg.rollout_steps_set = true;
      }
      if (r.contains("integrator")) {
        const auto s = r["integrator"].get<std::string>();
        if (s != "euler" && s != "rk4") fail("integrator must be 'euler' or 'rk4'");
        cfg.rollout.integrator = s == "euler" ? Integrator::kEuler : Integrator::kRk4;
      }
    }
    return cfg;
  });
}

}  // namespace elastic_ds::io

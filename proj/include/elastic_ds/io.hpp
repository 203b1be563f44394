#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "elastic_ds/core.hpp"
#include "elastic_ds/elastic_chain.hpp"
#include "elastic_ds/eval.hpp"
#include "elastic_ds/lpvds.hpp"
#include "elastic_ds/pipeline.hpp"
#include "elastic_ds/velocity_profile.hpp"

// nlohmann/json is an implementation detail of the readers/writers; callers
// only see the domain types.
namespace elastic_ds::io {

inline constexpr int kFormatVersion = 1;

struct DemoFile {
  int dim = 2;
  std::vector<Trajectory> trajectories;
  Points via_points;
  std::optional<GeometricDescriptor> descriptor;
};

struct Provenance {
  std::string source_hash;  // "fnv1a64:<hex>" of the demo file bytes.
  std::optional<GeometricDescriptor> descriptor;
  double demo_t_begin = 0.0;
  double demo_t_end = 0.0;
};

struct PolicyFile {
  LpvDsPolicy policy;
  ElasticChain chain;
  ProfileConfig profile;
  Provenance provenance;
};

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string fnv1a_hex(const std::string& bytes);

DemoFile parse_demo(const std::string& text);
std::string format_demo(const DemoFile& demo);
DemoFile read_demo(const std::filesystem::path& path);
void write_demo(const std::filesystem::path& path, const DemoFile& demo);

// Rotations are d x d row-major nested arrays, orthonormality checked to 1e-6.
GeometricDescriptor parse_descriptor(const std::string& text);
std::string format_descriptor(const GeometricDescriptor& descriptor);
GeometricDescriptor read_descriptor(const std::filesystem::path& path);
void write_descriptor(const std::filesystem::path& path, const GeometricDescriptor& descriptor);

PolicyFile parse_policy(const std::string& text);
std::string format_policy(const PolicyFile& policy);
PolicyFile read_policy(const std::filesystem::path& path);
void write_policy(const std::filesystem::path& path, const PolicyFile& policy);

// Columns: t, x0..x{d-1}, v0..v{d-1}, V, segment.
std::string format_rollout_csv(const Rollout& rollout, const LpvDsPolicy& policy);
// Same columns; V is taken from the segment active at each sample.
std::string format_rollout_csv(const Rollout& rollout, const TaskPlan& plan);
// Columns: x0, x1, [x2], v0, v1, [v2], speed.
std::string format_field_csv(const std::vector<FieldSample>& samples);

struct SvgOptions {
  int width = 800;
  int height = 800;
  double glyph_fraction = 0.6;  // Glyph length as a fraction of the grid spacing.
};

// Fixed-length direction glyphs colored by speed, with optional rollout
// polylines and the attractor marked.
std::string format_field_svg(const std::vector<FieldSample>& samples, const FieldGrid& grid,
                             const std::vector<Trajectory>& overlays, const Vec& attractor,
                             const SvgOptions& options = {});

// Optional overrides for the pipeline knobs.
struct RunConfig {
  TrainConfig train;
  RolloutConfig rollout;
  bool rollout_dt_set = false;
  bool rollout_steps_set = false;
};

RunConfig parse_run_config(const std::string& text);

}  // namespace elastic_ds::io

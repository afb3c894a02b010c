#pragma once

#include <string>
#include <vector>

#include "msh/flow.hpp"
#include "msh/geom.hpp"
#include "msh/markers.hpp"
#include "msh/optim.hpp"
#include "msh/types.hpp"

namespace msh::io {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ASCII OFF. Strict: triangles only, counts must match, no trailing garbage;
// errors carry 1-based line numbers. Lines starting with # are comments.
geom::TriMesh read_off(const std::string& path);
void write_off(const std::string& path, const geom::TriMesh& mesh);

// Legacy ASCII VTK POLYDATA with optional SCALARS blocks (point fields under
// POINT_DATA, face fields under CELL_DATA). Values print in shortest
// round-trip form, so a reparse reproduces them exactly.
void write_vtk_polydata(const std::string& path, const geom::TriMesh& mesh,
                        const std::vector<markers::ScalarField>& fields = {});

struct VtkPolyData {
  geom::TriMesh mesh;
  std::vector<markers::ScalarField> fields;
};
VtkPolyData read_vtk_polydata(const std::string& path);

struct RunConfig {
  std::string mode;  // single | multi-identity | multi-sliding | multi-none
  std::vector<std::string> templates;
  std::vector<std::string> targets;
  std::string output_dir;
  int time_steps = 10;
  std::vector<double> sigma_shapes;  // empty or one per shape; 0 = derive from geometry
  double sigma_background = 0.0;
  double sigma_data = 0.0;
  std::string data_term = "current";  // or "landmark"
  double data_weight = 1.0;
  double background_data_weight = 1.0;
  optim::NlcgConfig nlcg;
  optim::AlConfig al;
};

// JSON with defaults filled in; unknown keys and type mismatches are
// ConfigErrors naming the offending JSON path.
RunConfig read_config(const std::string& path);
RunConfig parse_config(const std::string& json_text, const std::string& origin = "<config>");

// One deforming surface: template mesh, its kernel, trajectory and momenta.
struct FlowRecord {
  std::string name;  // shape0, shape1, ..., background
  geom::TriMesh mesh;
  double sigma = 1.0;
  flow::StateTrajectory trajectory;  // t = 0..T
  flow::ControlTrajectory controls;  // t = 0..T-1
};

// Layout: config copy, manifest.json, controls.bin (float64, records in
// order, each t-major), trace.csv, template_{name}_t{t}.vtk per timestep,
// final_{name}.vtk. Deterministic byte-for-byte.
void write_run_artifacts(const std::string& outdir, const RunConfig& cfg,
                         const std::string& config_src_path,
                         const std::vector<FlowRecord>& flows,
                         const std::vector<optim::IterRow>& trace);

struct RunArtifacts {
  std::string mode;
  int time_steps = 0;
  std::vector<FlowRecord> flows;  // trajectories rebuilt by re-flowing the controls
};
RunArtifacts read_run_artifacts(const std::string& outdir);

}  // namespace msh::io

// Drives the installed mshape binary through the shell the way a user would:
// every subcommand, the artifact layout it leaves behind, and the error exits.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "msh/geom.hpp"
#include "msh/io.hpp"
#include "msh/synth.hpp"

namespace fs = std::filesystem;
using namespace msh;

namespace {

// Fresh per-case directory under the build tree.
fs::path scratch(const std::string& name) {
  fs::path dir = fs::path(CLI_TEST_DIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the binary with `args`, cwd set to `dir`; stdout and stderr collect in
// log.txt there. Returns the exit code.
int mshape(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(MSHAPE_BIN) + "' " +
                          args + " > log.txt 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE_MESSAGE(f.good(), path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// A four-landmark pull: tetrahedron template, the same tetrahedron shifted as
// target. Small enough that a register run takes milliseconds.
void write_tetra_instance(const fs::path& dir) {
  auto tmpl = synth::tetrahedron(0.5, Eigen::RowVector3d(0, 0, 0));
  auto targ = tmpl;
  targ.vertices.rowwise() += Eigen::RowVector3d(0.3, 0.1, 0.0);
  io::write_off((dir / "tmpl.off").string(), tmpl);
  io::write_off((dir / "targ.off").string(), targ);
  write_text(dir / "config.json", R"({
  "mode": "single",
  "templates": ["tmpl.off"],
  "targets": ["targ.off"],
  "output_dir": "run",
  "time_steps": 5,
  "kernels": {"shapes": 1.0, "background": 1.0, "data": 0.5},
  "data_term": {"type": "landmark", "weight": 4.0},
  "optimizer": {"max_iters": 400, "grad_tol": 1e-7}
}
)");
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("bare invocation fails, --help succeeds") {
  auto dir = scratch("usage");
  CHECK(mshape(dir, "") != 0);
  CHECK(mshape(dir, "--help") == 0);
  const auto log = slurp(dir / "log.txt");
  CHECK(log.find("register") != std::string::npos);
  CHECK(log.find("markers") != std::string::npos);
  CHECK(log.find("synth") != std::string::npos);
}

TEST_CASE("synth two-balls writes a loadable dataset") {
  auto dir = scratch("synth");
  REQUIRE(mshape(dir, "synth two-balls --out . --level 0") == 0);
  CHECK(slurp(dir / "log.txt").find("two-balls dataset written") != std::string::npos);

  for (const char* name : {"template_a.off", "template_b.off", "target_a.off", "target_b.off"}) {
    auto mesh = io::read_off((dir / name).string());
    CHECK_MESSAGE(geom::validate(mesh).empty(), name);
  }
  auto a = io::read_off((dir / "template_a.off").string());
  CHECK(a.vertex_count() == 12);
  CHECK(a.face_count() == 20);

  auto cfg = io::read_config((dir / "config.json").string());
  CHECK(cfg.mode == "multi-identity");
  CHECK(cfg.templates.size() == 2);
  CHECK(cfg.targets.size() == 2);
  CHECK(cfg.time_steps == 10);
  REQUIRE(cfg.sigma_shapes.size() == 2);
  CHECK(cfg.sigma_shapes[0] == 0.7);
  CHECK(cfg.sigma_background == 0.7);
  CHECK(cfg.sigma_data == 0.45);
  CHECK(cfg.data_term == "current");
}

TEST_CASE("register converges on a landmark pull and writes the artifact set") {
  auto dir = scratch("register");
  write_tetra_instance(dir);
  REQUIRE(mshape(dir, "register config.json") == 0);
  const auto log = slurp(dir / "log.txt");
  CHECK(log.find("converged: objective") != std::string::npos);
  CHECK(log.find("artifacts written to run") != std::string::npos);

  const fs::path run = dir / "run";
  for (const char* name : {"config.json", "manifest.json", "controls.bin", "trace.csv",
                           "template_shape0_t0.vtk", "template_shape0_t5.vtk",
                           "final_shape0.vtk"})
    CHECK_MESSAGE(fs::exists(run / name), name);

  // 4 vertices x 3 components x 5 timesteps of float64.
  CHECK(fs::file_size(run / "controls.bin") == 8 * 4 * 3 * 5);

  // The flow ends much closer to the target than the template started.
  auto final_mesh = io::read_vtk_polydata((run / "final_shape0.vtk").string()).mesh;
  auto targ = io::read_off((dir / "targ.off").string());
  auto tmpl = io::read_off((dir / "tmpl.off").string());
  const double before = (tmpl.vertices - targ.vertices).norm();
  const double after = (final_mesh.vertices - targ.vertices).norm();
  CHECK(after < 0.5 * before);

  // An unconstrained run leaves the constraint and mu columns empty.
  std::istringstream trace(slurp(run / "trace.csv"));
  std::string line;
  REQUIRE(std::getline(trace, line));
  CHECK(line == "outer,inner,objective,grad_norm,constraint_inf_norm,mu,step_len");
  int rows = 0;
  while (std::getline(trace, line)) {
    auto fields = split_fields(line);
    REQUIRE(fields.size() == 7);
    CHECK(fields[4].empty());
    CHECK(fields[5].empty());
    ++rows;
  }
  CHECK(rows >= 1);
}

TEST_CASE("a rerun of the same config is byte-identical") {
  auto dir = scratch("determinism");
  write_tetra_instance(dir);
  REQUIRE(mshape(dir, "register config.json") == 0);
  const fs::path run = dir / "run";
  const char* files[] = {"manifest.json", "controls.bin", "trace.csv", "final_shape0.vtk"};
  std::vector<std::string> first;
  for (const char* name : files) first.push_back(slurp(run / name));
  REQUIRE(mshape(dir, "register config.json") == 0);
  for (size_t i = 0; i < std::size(files); ++i)
    CHECK_MESSAGE(slurp(run / files[i]) == first[i], files[i]);
}

TEST_CASE("markers on an identity run report unit deformation") {
  auto dir = scratch("markers");
  REQUIRE(mshape(dir, "synth two-balls --out . --level 0") == 0);
  // Zero data weights leave the zero control optimal, so every shape holds
  // still and all three markers must come out at exactly one.
  write_text(dir / "config.json", R"({
  "mode": "multi-identity",
  "templates": ["template_a.off", "template_b.off"],
  "targets": ["target_a.off", "target_b.off"],
  "output_dir": "run",
  "time_steps": 4,
  "kernels": {"shapes": 0.7, "background": 0.7, "data": 0.45},
  "data_term": {"type": "current", "weight": 0.0, "background_weight": 0.0}
}
)");
  REQUIRE(mshape(dir, "register config.json") == 0);
  REQUIRE(mshape(dir, "markers run") == 0);
  const auto log = slurp(dir / "log.txt");
  CHECK(log.find("markers attached to final_shape0.vtk") != std::string::npos);
  CHECK(log.find("markers attached to final_shape1.vtk") != std::string::npos);
  CHECK(log.find("markers attached to final_background.vtk") != std::string::npos);

  for (const char* name : {"final_shape0.vtk", "final_shape1.vtk", "final_background.vtk"}) {
    auto data = io::read_vtk_polydata((dir / "run" / name).string());
    REQUIRE_MESSAGE(data.fields.size() == 4, name);
    int tangent = 0, volume = 0, normal = 0;
    for (const auto& field : data.fields) {
      if (field.name == "tangent_jacobian") ++tangent;
      if (field.name == "volume_jacobian") ++volume;
      if (field.name == "normal_jacobian") ++normal;
      for (double v : field.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(tangent == 2);  // per-face and per-vertex
    CHECK(volume == 1);
    CHECK(normal == 1);
  }

  // The zero flow holds every vertex bit-exactly in place.
  auto final_a = io::read_vtk_polydata((dir / "run" / "final_shape0.vtk").string()).mesh;
  auto tmpl_a = io::read_off((dir / "template_a.off").string());
  CHECK((final_a.vertices - tmpl_a.vertices).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("register reports bad inputs as errors") {
  auto dir = scratch("errors");
  auto tmpl = synth::tetrahedron(0.5, Eigen::RowVector3d(0, 0, 0));
  io::write_off((dir / "tmpl.off").string(), tmpl);

  write_text(dir / "config.json", R"({
  "mode": "single",
  "templates": ["tmpl.off"],
  "targets": ["no_such_file.off"],
  "output_dir": "run"
}
)");
  CHECK(mshape(dir, "register config.json") == 1);
  auto log = slurp(dir / "log.txt");
  CHECK(log.find("error:") != std::string::npos);
  CHECK(log.find("cannot open") != std::string::npos);

  write_text(dir / "bad.json", R"({
  "mode": "single",
  "templates": ["tmpl.off"],
  "targets": ["tmpl.off"],
  "output_dir": "run",
  "sigma": 1.5
}
)");
  CHECK(mshape(dir, "register bad.json") == 1);
  CHECK(slurp(dir / "log.txt").find("error:") != std::string::npos);

  CHECK(mshape(dir, "markers no_such_run_dir") == 1);
  CHECK(slurp(dir / "log.txt").find("error:") != std::string::npos);
}

}  // TEST_SUITE

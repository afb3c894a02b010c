#include "msh/io.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "num_text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace msh::io {

namespace {

// Token stream over an ASCII file: skips blanks and # comments, tracks the
// 1-based line of the last token handed out.
class Tokens {
 public:
  Tokens(const std::string& path, std::istream& in) : path_(path), in_(in) {}

  bool next(std::string& tok) {
    while (true) {
      if (pos_ >= line_.size()) {
        if (!std::getline(in_, line_)) return false;
        ++lineno_;
        pos_ = 0;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(line_[pos_]))) {
        ++pos_;
        continue;
      }
      if (line_[pos_] == '#') {
        pos_ = line_.size();
        continue;
      }
      size_t start = pos_;
      while (pos_ < line_.size() &&
             !std::isspace(static_cast<unsigned char>(line_[pos_])))
        ++pos_;
      tok = line_.substr(start, pos_ - start);
      return true;
    }
  }

  std::string require(const char* what) {
    std::string tok;
    if (!next(tok)) fail(std::string("unexpected end of file, expected ") + what);
    return tok;
  }

  long require_int(const char* what) {
    std::string tok = require(what);
    size_t used = 0;
    long v = 0;
    try {
      v = std::stol(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      fail(std::string("expected ") + what + ", got '" + tok + "'");
    return v;
  }

  double require_double(const char* what) {
    std::string tok = require(what);
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      fail(std::string("expected ") + what + ", got '" + tok + "'");
    return v;
  }

  void require_end() {
    std::string tok;
    if (next(tok)) fail("trailing content '" + tok + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_ + ":" + std::to_string(lineno_) + ": " + msg);
  }

 private:
  std::string path_;
  std::istream& in_;
  std::string line_;
  size_t pos_ = 0;
  long lineno_ = 0;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  return out;
}

void read_faces(Tokens& toks, long nf, long nv, std::vector<Face>& faces) {
  faces.reserve(static_cast<size_t>(nf));
  for (long f = 0; f < nf; ++f) {
    long arity = toks.require_int("face vertex count");
    if (arity != 3)
      toks.fail("only triangle faces are supported, got a face with " +
                std::to_string(arity) + " vertices");
    Face face{};
    for (int c = 0; c < 3; ++c) {
      long idx = toks.require_int("vertex index");
      if (idx < 0 || idx >= nv)
        toks.fail("vertex index " + std::to_string(idx) + " out of range [0, " +
                  std::to_string(nv) + ")");
      face[c] = static_cast<int>(idx);
    }
    faces.push_back(face);
  }
}

void write_points(std::ostream& out, const Points& pts) {
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    out << detail::shortest(pts(i, 0)) << ' ' << detail::shortest(pts(i, 1))
        << ' ' << detail::shortest(pts(i, 2)) << '\n';
}

void write_scalar_block(std::ostream& out,
                        const std::vector<markers::ScalarField>& fields,
                        bool per_vertex, Eigen::Index expect,
                        const char* header) {
  bool opened = false;
  for (const auto& f : fields) {
    if (f.per_vertex != per_vertex) continue;
    if (f.values.size() != expect)
      throw ParseError("field '" + f.name + "' has " +
                       std::to_string(f.values.size()) + " values, expected " +
                       std::to_string(expect));
    if (!opened) {
      out << header << ' ' << expect << '\n';
      opened = true;
    }
    out << "SCALARS " << f.name << " float 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < f.values.size(); ++i)
      out << detail::shortest(f.values[i]) << '\n';
  }
}

}  // namespace

geom::TriMesh read_off(const std::string& path) {
  auto in = open_in(path);
  Tokens toks(path, in);
  std::string magic = toks.require("OFF header");
  if (magic != "OFF") toks.fail("expected OFF header, got '" + magic + "'");
  long nv = toks.require_int("vertex count");
  long nf = toks.require_int("face count");
  toks.require_int("edge count");
  if (nv < 0 || nf < 0) toks.fail("negative element count");

  geom::TriMesh mesh;
  mesh.vertices.resize(nv, 3);
  for (long i = 0; i < nv; ++i)
    for (int c = 0; c < 3; ++c)
      mesh.vertices(i, c) = toks.require_double("vertex coordinate");
  read_faces(toks, nf, nv, mesh.faces);
  toks.require_end();
  return mesh;
}

void write_off(const std::string& path, const geom::TriMesh& mesh) {
  auto out = open_out(path);
  out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
  write_points(out, mesh.vertices);
  for (const auto& f : mesh.faces)
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  if (!out) throw ParseError("write failed for " + path);
}

void write_vtk_polydata(const std::string& path, const geom::TriMesh& mesh,
                        const std::vector<markers::ScalarField>& fields) {
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\n"
      << "multishape surface\n"
      << "ASCII\n"
      << "DATASET POLYDATA\n"
      << "POINTS " << mesh.vertex_count() << " float\n";
  write_points(out, mesh.vertices);
  if (!mesh.faces.empty()) {
    out << "POLYGONS " << mesh.face_count() << ' ' << 4 * mesh.face_count()
        << '\n';
    for (const auto& f : mesh.faces)
      out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  write_scalar_block(out, fields, true, mesh.vertex_count(), "POINT_DATA");
  write_scalar_block(out, fields, false, static_cast<Eigen::Index>(mesh.face_count()),
                     "CELL_DATA");
  if (!out) throw ParseError("write failed for " + path);
}

VtkPolyData read_vtk_polydata(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# vtk DataFile", 0) != 0)
    throw ParseError(path + ":1: not a VTK data file");
  std::getline(in, line);  // title, ignored

  Tokens toks(path, in);
  std::string tok = toks.require("ASCII");
  if (tok != "ASCII") toks.fail("expected ASCII, got '" + tok + "'");
  tok = toks.require("DATASET");
  if (tok != "DATASET") toks.fail("expected DATASET, got '" + tok + "'");
  tok = toks.require("dataset type");
  if (tok != "POLYDATA") toks.fail("only POLYDATA is supported, got '" + tok + "'");

  VtkPolyData out;
  Eigen::Index expect = 0;  // rows for the SCALARS block being read
  bool expect_per_vertex = true;
  while (toks.next(tok)) {
    if (tok == "POINTS") {
      long n = toks.require_int("point count");
      toks.require("point type");
      out.mesh.vertices.resize(n, 3);
      for (long i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c)
          out.mesh.vertices(i, c) = toks.require_double("coordinate");
    } else if (tok == "POLYGONS") {
      long nf = toks.require_int("polygon count");
      long total = toks.require_int("polygon size total");
      if (total != 4 * nf)
        toks.fail("triangle POLYGONS must list 4 ints per face");
      read_faces(toks, nf, out.mesh.vertex_count(), out.mesh.faces);
    } else if (tok == "POINT_DATA" || tok == "CELL_DATA") {
      expect_per_vertex = tok == "POINT_DATA";
      long n = toks.require_int("data count");
      Eigen::Index want = expect_per_vertex
                              ? out.mesh.vertices.rows()
                              : static_cast<Eigen::Index>(out.mesh.faces.size());
      if (n != want)
        toks.fail(tok + " count " + std::to_string(n) + " does not match mesh");
      expect = n;
    } else if (tok == "SCALARS") {
      markers::ScalarField f;
      f.name = toks.require("field name");
      toks.require("field type");
      std::string table = toks.require("LOOKUP_TABLE");
      if (table == "1") table = toks.require("LOOKUP_TABLE");  // optional count
      if (table != "LOOKUP_TABLE") toks.fail("expected LOOKUP_TABLE");
      toks.require("table name");
      f.per_vertex = expect_per_vertex;
      f.values.resize(expect);
      for (Eigen::Index i = 0; i < expect; ++i)
        f.values[i] = toks.require_double("field value");
      out.fields.push_back(std::move(f));
    } else {
      toks.fail("unsupported section '" + tok + "'");
    }
  }
  return out;
}

namespace {

[[noreturn]] void config_fail(const std::string& origin, const std::string& path,
                              const std::string& msg) {
  throw ConfigError(origin + ": at " + (path.empty() ? "/" : path) + ": " + msg);
}

void check_keys(const std::string& origin, const std::string& path,
                const json& obj, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items())
    if (!ok.count(item.key()))
      config_fail(origin, path, "unknown key '" + item.key() + "'");
}

double get_number(const std::string& origin, const std::string& path,
                  const json& v) {
  if (!v.is_number()) config_fail(origin, path, "expected a number");
  return v.get<double>();
}

double get_positive(const std::string& origin, const std::string& path,
                    const json& v) {
  double x = get_number(origin, path, v);
  if (!(x > 0)) config_fail(origin, path, "expected a positive number");
  return x;
}

int get_positive_int(const std::string& origin, const std::string& path,
                     const json& v) {
  if (!v.is_number_integer()) config_fail(origin, path, "expected an integer");
  long x = v.get<long>();
  if (x <= 0) config_fail(origin, path, "expected a positive integer");
  return static_cast<int>(x);
}

std::string get_string(const std::string& origin, const std::string& path,
                       const json& v) {
  if (!v.is_string()) config_fail(origin, path, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> get_string_list(const std::string& origin,
                                         const std::string& path, const json& v) {
  if (!v.is_array()) config_fail(origin, path, "expected an array of strings");
  std::vector<std::string> out;
  for (size_t i = 0; i < v.size(); ++i)
    out.push_back(get_string(origin, path + "/" + std::to_string(i), v[i]));
  return out;
}

void parse_kernels(const std::string& origin, const json& k, RunConfig& cfg) {
  check_keys(origin, "/kernels", k, {"shapes", "background", "data"});
  if (k.contains("shapes")) {
    const json& s = k["shapes"];
    if (s.is_array()) {
      for (size_t i = 0; i < s.size(); ++i)
        cfg.sigma_shapes.push_back(
            get_positive(origin, "/kernels/shapes/" + std::to_string(i), s[i]));
    } else {
      cfg.sigma_shapes.assign(cfg.templates.size(),
                              get_positive(origin, "/kernels/shapes", s));
    }
  }
  if (k.contains("background"))
    cfg.sigma_background = get_positive(origin, "/kernels/background", k["background"]);
  if (k.contains("data"))
    cfg.sigma_data = get_positive(origin, "/kernels/data", k["data"]);
}

void parse_data_term(const std::string& origin, const json& d, RunConfig& cfg) {
  check_keys(origin, "/data_term", d, {"type", "weight", "background_weight"});
  if (d.contains("type")) {
    cfg.data_term = get_string(origin, "/data_term/type", d["type"]);
    if (cfg.data_term != "current" && cfg.data_term != "landmark")
      config_fail(origin, "/data_term/type",
                  "expected 'current' or 'landmark', got '" + cfg.data_term + "'");
  }
  if (d.contains("weight")) {
    cfg.data_weight = get_number(origin, "/data_term/weight", d["weight"]);
    if (cfg.data_weight < 0)
      config_fail(origin, "/data_term/weight", "expected a nonnegative number");
  }
  if (d.contains("background_weight")) {
    cfg.background_data_weight =
        get_number(origin, "/data_term/background_weight", d["background_weight"]);
    if (cfg.background_data_weight < 0)
      config_fail(origin, "/data_term/background_weight",
                  "expected a nonnegative number");
  }
}

void parse_optimizer(const std::string& origin, const json& o, RunConfig& cfg) {
  check_keys(origin, "/optimizer", o,
             {"max_iters", "grad_tol", "restart_every", "initial_step",
              "sufficient_decrease", "backtrack", "max_backtracks"});
  auto& n = cfg.nlcg;
  if (o.contains("max_iters"))
    n.max_iters = get_positive_int(origin, "/optimizer/max_iters", o["max_iters"]);
  if (o.contains("grad_tol"))
    n.grad_tol = get_positive(origin, "/optimizer/grad_tol", o["grad_tol"]);
  if (o.contains("restart_every"))
    n.restart_every =
        get_positive_int(origin, "/optimizer/restart_every", o["restart_every"]);
  if (o.contains("initial_step"))
    n.initial_step =
        get_positive(origin, "/optimizer/initial_step", o["initial_step"]);
  if (o.contains("sufficient_decrease")) {
    n.sufficient_decrease = get_positive(origin, "/optimizer/sufficient_decrease",
                                         o["sufficient_decrease"]);
    if (n.sufficient_decrease > 0.5)
      config_fail(origin, "/optimizer/sufficient_decrease", "expected a value in (0, 0.5]");
  }
  if (o.contains("backtrack"))
    n.backtrack = get_positive(origin, "/optimizer/backtrack", o["backtrack"]);
  if (o.contains("max_backtracks"))
    n.max_backtracks =
        get_positive_int(origin, "/optimizer/max_backtracks", o["max_backtracks"]);
}

void parse_al(const std::string& origin, const json& a, RunConfig& cfg) {
  check_keys(origin, "/al", a,
             {"max_outer", "inner_tol_initial", "inner_tol_final",
              "inner_tol_decay", "constraint_tol", "mu0", "rho_mu",
              "decrease_required", "mu_max_factor"});
  auto& al = cfg.al;
  if (a.contains("max_outer"))
    al.max_outer = get_positive_int(origin, "/al/max_outer", a["max_outer"]);
  if (a.contains("inner_tol_initial"))
    al.inner_tol_initial =
        get_positive(origin, "/al/inner_tol_initial", a["inner_tol_initial"]);
  if (a.contains("inner_tol_final"))
    al.inner_tol_final =
        get_positive(origin, "/al/inner_tol_final", a["inner_tol_final"]);
  if (a.contains("inner_tol_decay"))
    al.inner_tol_decay =
        get_positive(origin, "/al/inner_tol_decay", a["inner_tol_decay"]);
  if (a.contains("constraint_tol"))
    al.constraint_tol =
        get_positive(origin, "/al/constraint_tol", a["constraint_tol"]);
  if (a.contains("mu0")) al.mu0 = get_positive(origin, "/al/mu0", a["mu0"]);
  if (a.contains("rho_mu"))
    al.rho_mu = get_positive(origin, "/al/rho_mu", a["rho_mu"]);
  if (a.contains("decrease_required"))
    al.decrease_required =
        get_positive(origin, "/al/decrease_required", a["decrease_required"]);
  if (a.contains("mu_max_factor"))
    al.mu_max_factor =
        get_positive(origin, "/al/mu_max_factor", a["mu_max_factor"]);
}

RunConfig parse_config_json(const json& root, const std::string& origin) {
  if (!root.is_object()) config_fail(origin, "", "expected a JSON object");
  check_keys(origin, "", root,
             {"mode", "templates", "targets", "output_dir", "time_steps",
              "kernels", "data_term", "optimizer", "al"});
  for (const char* key : {"mode", "templates", "targets", "output_dir"})
    if (!root.contains(key))
      config_fail(origin, "", std::string("missing required key '") + key + "'");

  RunConfig cfg;
  cfg.mode = get_string(origin, "/mode", root["mode"]);
  if (cfg.mode != "single" && cfg.mode != "multi-identity" &&
      cfg.mode != "multi-sliding" && cfg.mode != "multi-none")
    config_fail(origin, "/mode",
                "expected one of single, multi-identity, multi-sliding, "
                "multi-none; got '" + cfg.mode + "'");
  cfg.templates = get_string_list(origin, "/templates", root["templates"]);
  cfg.targets = get_string_list(origin, "/targets", root["targets"]);
  if (cfg.templates.empty()) config_fail(origin, "/templates", "expected at least one mesh");
  if (cfg.templates.size() != cfg.targets.size())
    config_fail(origin, "/targets",
                "expected " + std::to_string(cfg.templates.size()) +
                    " targets to match templates, got " +
                    std::to_string(cfg.targets.size()));
  cfg.output_dir = get_string(origin, "/output_dir", root["output_dir"]);
  if (root.contains("time_steps"))
    cfg.time_steps = get_positive_int(origin, "/time_steps", root["time_steps"]);
  if (root.contains("kernels")) {
    if (!root["kernels"].is_object()) config_fail(origin, "/kernels", "expected an object");
    parse_kernels(origin, root["kernels"], cfg);
  }
  if (!cfg.sigma_shapes.empty() && cfg.sigma_shapes.size() != cfg.templates.size())
    config_fail(origin, "/kernels/shapes",
                "expected 1 or " + std::to_string(cfg.templates.size()) +
                    " widths, got " + std::to_string(cfg.sigma_shapes.size()));
  if (root.contains("data_term")) {
    if (!root["data_term"].is_object())
      config_fail(origin, "/data_term", "expected an object");
    parse_data_term(origin, root["data_term"], cfg);
  }
  if (root.contains("optimizer")) {
    if (!root["optimizer"].is_object())
      config_fail(origin, "/optimizer", "expected an object");
    parse_optimizer(origin, root["optimizer"], cfg);
  }
  if (root.contains("al")) {
    if (!root["al"].is_object()) config_fail(origin, "/al", "expected an object");
    parse_al(origin, root["al"], cfg);
  }
  return cfg;
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return parse_config_json(root, origin);
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

namespace {

json flow_manifest_entry(const FlowRecord& rec) {
  return json{{"name", rec.name},
              {"vertices", rec.mesh.vertex_count()},
              {"faces", rec.mesh.face_count()},
              {"sigma", rec.sigma}};
}

void write_controls_bin(const std::string& path,
                        const std::vector<FlowRecord>& flows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  for (const auto& rec : flows)
    for (const auto& a : rec.controls) {
      static_assert(sizeof(double) == 8);
      out.write(reinterpret_cast<const char*>(a.data()),
                static_cast<std::streamsize>(sizeof(double) * a.size()));
    }
  if (!out) throw ParseError("write failed for " + path);
}

std::vector<flow::ControlTrajectory> read_controls_bin(
    const std::string& path, const std::vector<FlowRecord>& flows, int steps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<flow::ControlTrajectory> out;
  for (const auto& rec : flows) {
    flow::ControlTrajectory traj(steps);
    for (int t = 0; t < steps; ++t) {
      Points a(rec.mesh.vertex_count(), 3);
      in.read(reinterpret_cast<char*>(a.data()),
              static_cast<std::streamsize>(sizeof(double) * a.size()));
      if (!in) throw ParseError(path + ": truncated momentum record for " + rec.name);
      traj[t] = std::move(a);
    }
    out.push_back(std::move(traj));
  }
  char extra;
  if (in.read(&extra, 1)) throw ParseError(path + ": trailing bytes");
  return out;
}

}  // namespace

void write_run_artifacts(const std::string& outdir, const RunConfig& cfg,
                         const std::string& config_src_path,
                         const std::vector<FlowRecord>& flows,
                         const std::vector<optim::IterRow>& trace) {
  fs::create_directories(outdir);
  const fs::path dir(outdir);

  if (!config_src_path.empty()) {
    fs::copy_file(config_src_path, dir / "config.json",
                  fs::copy_options::overwrite_existing);
  } else {
    auto out = open_out((dir / "config.json").string());
    out << "{\"mode\": \"" << cfg.mode << "\"}\n";
  }

  json manifest;
  manifest["mode"] = cfg.mode;
  manifest["time_steps"] = cfg.time_steps;
  manifest["data_term"] = cfg.data_term;
  manifest["data_sigma"] = cfg.sigma_data;
  manifest["flows"] = json::array();
  for (const auto& rec : flows) manifest["flows"].push_back(flow_manifest_entry(rec));
  manifest["controls"] = {{"file", "controls.bin"},
                          {"dtype", "float64"},
                          {"order", "record, then timestep, then vertex, then xyz"}};
  {
    auto out = open_out((dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }

  write_controls_bin((dir / "controls.bin").string(), flows);
  optim::write_trace_csv((dir / "trace.csv").string(), trace);

  for (const auto& rec : flows) {
    geom::TriMesh snap;
    snap.faces = rec.mesh.faces;
    for (size_t t = 0; t < rec.trajectory.size(); ++t) {
      snap.vertices = rec.trajectory[t];
      write_vtk_polydata(
          (dir / ("template_" + rec.name + "_t" + std::to_string(t) + ".vtk")).string(),
          snap);
    }
    snap.vertices = rec.trajectory.back();
    write_vtk_polydata((dir / ("final_" + rec.name + ".vtk")).string(), snap);
  }
}

RunArtifacts read_run_artifacts(const std::string& outdir) {
  const fs::path dir(outdir);
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ParseError("cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError((dir / "manifest.json").string() + ": " + e.what());
  }

  RunArtifacts art;
  art.mode = manifest.at("mode").get<std::string>();
  art.time_steps = manifest.at("time_steps").get<int>();
  if (art.time_steps <= 0)
    throw ParseError(outdir + ": manifest time_steps must be positive");
  for (const auto& entry : manifest.at("flows")) {
    FlowRecord rec;
    rec.name = entry.at("name").get<std::string>();
    rec.sigma = entry.at("sigma").get<double>();
    if (!(rec.sigma > 0))
      throw ParseError(outdir + ": manifest sigma must be positive for " + rec.name);
    auto poly = read_vtk_polydata((dir / ("template_" + rec.name + "_t0.vtk")).string());
    rec.mesh = std::move(poly.mesh);
    art.flows.push_back(std::move(rec));
  }

  auto controls = read_controls_bin((dir / "controls.bin").string(), art.flows,
                                    art.time_steps);
  for (size_t i = 0; i < art.flows.size(); ++i) {
    auto& rec = art.flows[i];
    rec.controls = std::move(controls[i]);
    rec.trajectory =
        flow::shoot(kernel::KernelSpec{rec.sigma}, rec.mesh.vertices, rec.controls);
  }
  return art;
}

}  // namespace msh::io

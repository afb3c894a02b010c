#pragma once

#include <string>
#include <vector>

#include "msh/types.hpp"

namespace msh::geom {

// Triangle mesh. Faces are counterclockwise when seen from outside; an empty
// face list makes this a plain point set (landmark shapes reuse the type).
struct TriMesh {
  Points vertices;          // m x 3
  std::vector<Face> faces;  // each entry three distinct vertex indices

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
  int face_count() const { return static_cast<int>(faces.size()); }
};

struct LandmarkSet {
  Points points;
};

// Several shapes plus the background that carries one copy of every shape
// vertex. Background index of vertex j of shape k is offsets[k] + j.
struct MultiShapeComplex {
  std::vector<TriMesh> shapes;
  std::vector<int> offsets;
  int total = 0;  // sum of shape vertex counts

  int shape_count() const { return static_cast<int>(shapes.size()); }
  int background_index(int shape, int vertex) const { return offsets[shape] + vertex; }
};

MultiShapeComplex make_complex(std::vector<TriMesh> shapes);

// Background copy of the complex: stacked vertices, faces reindexed per block.
TriMesh background_mesh(const MultiShapeComplex& complex);

struct NormalCenter {
  Vec3 n_weighted;  // cross product of the two edges from the first vertex; |n| = 2 * area
  Vec3 center;      // centroid of the three vertices
};

NormalCenter face_normal_center(const Points& vertices, const Face& face);
NormalCenter face_normal_center(const TriMesh& mesh, int face);

// Edges of face f in cyclic order starting at vertex j (which must lie on f):
// e1 = q(j') - q(j), e2 = q(j'') - q(j), e_opp = q(j'') - q(j').
struct FacetFrame {
  Vec3 e1;
  Vec3 e2;
  Vec3 e_opp;
  Vec3 n_weighted;  // e1 x e2
};

FacetFrame facet_frame(const TriMesh& mesh, int face, int vertex);

enum class DiagnosticKind {
  degenerate_face,       // zero area, including a vertex index repeated within the face
  non_manifold_edge,     // edge shared by more than two faces
  orientation_mismatch,  // directed edge traversed twice in the same direction
  duplicate_points,
  bad_index,             // face references a vertex index out of range
};

struct Diagnostic {
  DiagnosticKind kind;
  int index;  // face index, or vertex index for duplicate_points
  std::string message;
};

std::vector<Diagnostic> validate(const TriMesh& mesh);
std::vector<Diagnostic> validate(const MultiShapeComplex& complex);

double face_area(const Points& vertices, const Face& face);
// Signed volume enclosed by a closed, outward-oriented surface.
double enclosed_volume(const Points& vertices, const std::vector<Face>& faces);

std::vector<std::vector<int>> vertex_face_incidence(const TriMesh& mesh);

}  // namespace msh::geom

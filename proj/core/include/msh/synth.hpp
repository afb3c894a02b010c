#pragma once

#include "msh/geom.hpp"
#include "msh/types.hpp"

namespace msh::synth {

// Subdivided icosahedron projected to the sphere, outward-oriented.
// Level 0 has 12 vertices / 20 faces; each level quadruples the face count.
geom::TriMesh icosphere(int level, double radius = 1.0, const Vec3& center = Vec3::Zero());

struct TwoBallsParams {
  double radius = 1.0;
  double separation = 2.25;  // center distance; default leaves a small gap
  double overlap = 0.1;      // how far ball A's target surface reaches into ball B's
  int level = 1;
};

// Template: two equal spheres. Target: ball A grown into a larger sphere that
// slightly overlaps ball B; ball B squashed toward A, stretched along z, and
// dented on the side facing A.
struct TwoBalls {
  geom::TriMesh template_a, template_b;
  geom::TriMesh target_a, target_b;
};
TwoBalls two_balls(const TwoBallsParams& params);

// Minimum vertex-to-face distance between two surface meshes (both directions).
double surface_distance(const geom::TriMesh& a, const geom::TriMesh& b);

geom::TriMesh tetrahedron(double scale = 1.0, const Vec3& center = Vec3::Zero());

}  // namespace msh::synth

#pragma once

#include <array>
#include <istream>
#include <string>
#include <vector>

#include "tetstress/dofs.hpp"

namespace tetstress {

// Conforming tetrahedral mesh. Every tet lists its vertices in increasing global
// order, so local edge and face orientations agree with the global ones and the
// barycentric weights of shared DOFs line up without permutation.
struct MeshTopology {
  std::vector<Vec3Q> xq;                        // exact coordinates
  std::vector<std::array<double, 3>> x;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::array<int, 2>> edges;        // increasing vertex ids
  std::vector<std::array<int, 3>> faces;        // increasing vertex ids
  std::vector<std::array<int, 6>> tet_edges;    // local edge -> global edge
  std::vector<std::array<int, 4>> tet_faces;    // local face -> global face
  std::vector<std::array<int, 2>> face_tets;    // owner (lower id) first; -1 on the boundary
  std::vector<std::array<Vec3Q, 2>> edge_frame; // q1, q2 normal to the edge
  std::vector<Vec3Q> face_normal;               // outward from the owner, raw
  std::vector<std::array<int, 4>> face_sign;    // +1 when the local outward normal is the global one

  int num_vertices() const { return static_cast<int>(xq.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
  bool boundary_face(int f) const { return face_tets[f][1] < 0; }

  SimplexGeom geom(int t) const;
  // Global edge frames and face normals expressed for tet t.
  FrameOverride frames(int t) const;
  double max_edge_length() const;
};

// n^3 cubes over [0,a] x [0,b] x [0,c], each split into the 6 Kuhn tets along
// its main diagonal.
MeshTopology build_box_mesh(int n, const std::array<Rational, 3>& extents = {Rational(1), Rational(1), Rational(1)});

// Builds adjacency and frames from raw vertices and tets (any vertex order).
MeshTopology mesh_from_tets(std::vector<Vec3Q> vertices, std::vector<std::array<int, 4>> tets);

// ASCII: lines "v x y z" and "t i j k l" (0-based), '#' comments, blank lines.
MeshTopology read_mesh_ascii(std::istream& in);
MeshTopology read_mesh_file(const std::string& path);

// 3 r_in / R_circ, 1 for the regular tet.
double shape_quality(const SimplexGeom& g);
double min_shape_quality(const MeshTopology& m);

// ---- global numbering of the stress and displacement DOFs ---------------------

struct StressElementSpec {
  int k = 1;
  bool tilde = false;  // Sigma-tilde with rigid-motion displacements (k = 1)
  ElementTag tag() const { return tilde ? ElementTag::SigmaTildeK : ElementTag::SigmaK; }
};

struct GlobalDofMap {
  StressElementSpec spec;
  int per_vertex = 6;
  int per_edge = 0;
  int per_face = 0;
  int per_interior = 0;
  int per_tet_disp = 0;
  int local_stress = 0;  // dim Sigma_K
  int n_stress = 0;
  int n_disp = 0;
  // Tet t, local stress DOF i (DofSet order) -> global stress index.
  std::vector<std::vector<int>> stress_l2g;
  // First global displacement index of tet t (displacements numbered after the stresses).
  std::vector<int> disp_offset;
  int size() const { return n_stress + n_disp; }
};

GlobalDofMap build_dof_map(const MeshTopology& m, const StressElementSpec& spec);

}  // namespace tetstress

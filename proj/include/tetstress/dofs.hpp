#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tetstress/spaces.hpp"

namespace tetstress {

enum class ElementTag { SigmaK, SigmaTildeK, VK, ThetaK, WK };
const char* element_name(ElementTag t);

enum class DofKind {
  vertex_value,
  vertex_derivative,
  edge_moment,
  edge_operator_moment,
  face_moment,
  interior_moment
};
const char* dof_kind_name(DofKind k);

// A block of functionals sharing one operator image and one subsimplex:
//   dof_j(S) = mean over the subsimplex of sum_c image(S)_c * weight_j_c,
// where the mean over a vertex is the value there.
struct DofGroup {
  int set = 0;           // position in the element's list of DOF sets (1-based)
  DofKind kind = DofKind::interior_moment;
  int sub_dim = 3;       // 0 vertex, 1 edge, 2 face, 3 interior
  int sub_index = 0;     // local vertex / edge / face index
  std::string label;
  std::vector<Vec3Q> verts;
  FieldImage image;
  std::vector<std::vector<ScalarPoly>> weights;  // in x coordinates
  int count() const { return static_cast<int>(weights.size()); }
};

// Description of one functional, for reports.
struct DofFunctional {
  int set;
  DofKind kind;
  int sub_dim;
  int sub_index;
  std::string label;
  int index_in_group;
};

// Frames replacing the element-local ones: a normal pair per edge (in place of
// the adjacent face normals) and a normal per face (in place of the outward one).
struct FrameOverride {
  std::array<std::optional<std::array<Vec3Q, 2>>, 6> edge_normals;
  std::array<std::optional<Vec3Q>, 4> face_normals;
};

class DofSet {
 public:
  DofSet(ElementTag tag, int k, const SimplexGeom& g, int space_degree, std::vector<DofGroup> groups);

  ElementTag tag() const { return tag_; }
  int k() const { return k_; }
  const SimplexGeom& geom() const { return geom_; }
  int size() const { return size_; }
  const std::vector<DofGroup>& groups() const { return groups_; }
  // Offset of group g in the flat functional list.
  int offset(int g) const { return offsets_[g]; }
  std::vector<DofFunctional> functionals() const;

  std::vector<Rational> evaluate(const ExactPoly& p) const;
  // Row i = functional i, column j = basis[j].
  QMatrix matrix(const std::vector<ExactPoly>& basis) const;

 private:
  void prepare();
  ElementTag tag_;
  int k_;
  SimplexGeom geom_;
  int space_degree_;
  std::vector<DofGroup> groups_;
  std::vector<int> offsets_;
  int size_ = 0;
  // per group: (component, monomial of the restricted image) -> moments against each weight
  std::vector<std::map<std::pair<int, MonoKey>, std::vector<Rational>>> moments_;
};

// Supported: SigmaK k = 1..3, SigmaTildeK k = 1, VK k >= 0, ThetaK and WK (k ignored).
DofSet build_dofset(ElementTag tag, int k, const SimplexGeom& g, const FrameOverride* frames = nullptr);
// The space the DOF set is meant for.
SpaceBasis target_space(ElementTag tag, int k, const SimplexGeom& g);

// E(f): b_f P_4(f) functions with vanishing edge means of the in-face normal derivative.
std::vector<ExactPoly> face_space_E(const SimplexGeom& g, int f);

struct UnisolvenceCertificate {
  bool nonsingular = false;
  int size = 0;
  int rank = 0;
  std::uint32_t prime = 0;
  std::vector<Rational> nullvector;
  std::optional<ExactPoly> counterexample;  // nonzero field with all DOFs zero
  double seconds = 0;
};
UnisolvenceCertificate unisolvence_certificate(const DofSet& dofs, const SpaceBasis& basis);

struct DualBasis {
  std::vector<ExactPoly> elements;  // dof_i(elements[j]) = delta_ij
  QMatrix coeffs;                   // elements[j] = sum_l basis[l] coeffs(l, j)
};
DualBasis dual_basis(const DofSet& dofs, const SpaceBasis& basis);

// Interpolant of T with the vertex and edge DOFs replaced by zero.
ExactPoly interpolate_pi0(const ExactPoly& T, const DofSet& dofs, const DualBasis& dual);
// Same for many fields at once, by an exact solve against the DOF matrix.
std::vector<ExactPoly> interpolate_pi0(const std::vector<ExactPoly>& Ts, const DofSet& dofs,
                                       const SpaceBasis& basis);

// Exact L2 projection onto P_k(K;R^3).
ExactPoly l2_project_V(const ExactPoly& v, int k, const SimplexGeom& g);

}  // namespace tetstress

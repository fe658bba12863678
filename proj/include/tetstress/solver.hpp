#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tetstress/mesh.hpp"

namespace tetstress {

using Vec3d = std::array<double, 3>;
using Mat3d = std::array<std::array<double, 3>, 3>;

// ---- quadrature ------------------------------------------------------------------

// Grundmann-Moeller rule on the dim-simplex, exact for polynomials of the given
// degree. Points in barycentric coordinates (dim + 1 entries); weights sum to 1,
// so the rule returns mean values.
struct QuadratureRule {
  int dim = 3;
  int degree = 0;
  std::vector<std::array<double, 4>> bary;
  std::vector<double> weight;
  int size() const { return static_cast<int>(weight.size()); }
};
const QuadratureRule& simplex_rule(int dim, int degree);

// ---- material --------------------------------------------------------------------

// Isotropic compliance A T = (T - lambda/(2 mu + 3 lambda) tr(T) I) / (2 mu).
struct Material {
  double lambda = 1.0;
  double mu = 1.0;
  void validate() const;  // throws unless lambda >= 0 and mu > 0
  Mat3d compliance(const Mat3d& T) const;
  Mat3d elasticity(const Mat3d& E) const;  // inverse of compliance
};

// ---- reference element -----------------------------------------------------------

// Exact dual basis of the stress DOFs on the reference tet, rounded once into the
// tables the element kernels need.
struct ReferenceElement {
  StressElementSpec spec;
  int nloc = 0;     // dim Sigma_K
  int nshared = 0;  // vertex + edge + face DOFs
  int space_degree = 0;
  int disp_degree = 0;  // degree of the reference displacement monomials
  int nmono_disp = 0;   // scalar monomials of degree <= disp_degree
  SimplexGeom geom = reference_tet();
  std::vector<ExactPoly> dual;        // exact
  std::vector<int> group_of;          // local DOF -> DofSet group
  std::vector<int> group_offset;      // start of each group
  std::vector<int> group_size;
  std::vector<int> group_subdim;
  std::vector<int> group_subindex;
  int nweights_edge = 0;
  int nweights_face = 0;
  // Gram tables over the reference tet (mean values): for sym component pairs a <= b
  // (kSymPairs order), gram[a][b](i, j) = mean(phi_i^a phi_j^b) + [a != b] mean(phi_i^b phi_j^a).
  std::array<std::array<Eigen::MatrixXd, 6>, 6> gram;
  // divmom[c](p, j) = mean((div phi_j)_c * m_p), m_p the scalar monomials of degree <= disp_degree.
  std::array<Eigen::MatrixXd, 3> divmom;
  Eigen::MatrixXd mono_mass;  // mean(m_p m_q)
  // Dense double coefficients over monomials for pointwise evaluation.
  std::vector<MonoKey> stress_monos;
  std::array<Eigen::MatrixXd, 6> coef;      // [sym comp](mono, j)
  std::vector<MonoKey> div_monos;
  std::array<Eigen::MatrixXd, 3> div_coef;  // [comp](mono, j)
  std::vector<MonoKey> disp_monos;
};
const ReferenceElement& reference_element(const StressElementSpec& spec);

// Monomial values at a reference point.
Eigen::VectorXd monomial_values(const std::vector<MonoKey>& monos, const Vec3d& xhat);

// ---- per-element kernels ---------------------------------------------------------

struct ElementGeometry {
  Mat3d B{};  // x = B xhat + b
  Vec3d b{};
  double absdet = 0;
  double volume = 0;
  double h = 0;  // longest edge
  std::array<std::array<Vec3d, 2>, 6> edge_frame{};
  std::array<Vec3d, 4> face_normal{};
  Vec3d centroid{};
};
ElementGeometry element_geometry(const MeshTopology& m, int t);

// Columns: physical stress basis (dual to the tet's DOFs in the global frames) in
// terms of Piola images of the reference dual basis. Interior functions are
// passed through unchanged. cond receives the largest block condition number.
Eigen::MatrixXd dof_transform(const ReferenceElement& ref, const ElementGeometry& g, double* cond = nullptr);

// Physical displacement basis as coefficients over e_d * monomial(xhat),
// component major. Identity for P_k; rigid motions for the tilde element.
Eigen::MatrixXd displacement_basis(const ReferenceElement& ref, const ElementGeometry& g);

struct ElementMatrices {
  Eigen::MatrixXd A;  // nloc x nloc, int A phi_i : phi_j
  Eigen::MatrixXd B;  // ndisp x nloc, int div phi_j . psi_a
};
// Contraction of the exact reference tables (the production kernel).
ElementMatrices element_matrices(const ReferenceElement& ref, const ElementGeometry& g, const Material& mat,
                                 const Eigen::MatrixXd& T, const Eigen::MatrixXd& Psi);
// Pointwise quadrature of the Piola-mapped fields (serial reference).
ElementMatrices element_matrices_quadrature(const ReferenceElement& ref, const ElementGeometry& g, const Material& mat,
                                            const Eigen::MatrixXd& T, const Eigen::MatrixXd& Psi, int degree);

// Pointwise values of the discrete fields on tet t at reference point xhat.
Mat3d stress_value(const ReferenceElement& ref, const ElementGeometry& g, const Eigen::VectorXd& piola_coeffs,
                   const Vec3d& xhat);
Vec3d stress_divergence(const ReferenceElement& ref, const ElementGeometry& g, const Eigen::VectorXd& piola_coeffs,
                        const Vec3d& xhat);

// ---- problem data and manufactured solutions -------------------------------------

// div S = f, A S - eps(u) = G, u = g on the boundary.
struct ProblemData {
  std::function<Vec3d(const Vec3d&)> f;
  std::function<Mat3d(const Vec3d&)> G;  // optional prestrain
  std::function<Vec3d(const Vec3d&)> g;  // optional boundary displacement
  int f_degree = -1;  // polynomial degree, -1 when not polynomial
  int G_degree = -1;
  int g_degree = -1;
};

struct ExactSolution {
  std::string id;
  std::string description;
  std::function<Mat3d(const Vec3d&)> S;
  std::function<Vec3d(const Vec3d&)> divS;
  std::function<Vec3d(const Vec3d&)> u;
  ProblemData data;
};
// "zero", "patch" (quadratic stress, linear displacement, prestrain),
// "trig" (u = grad of sin(pi x) sin(pi y) sin(pi z), S = A^-1 eps(u)).
ExactSolution manufactured_solution(const std::string& id, const Material& mat);
std::vector<std::string> manufactured_ids();

// ---- global system ---------------------------------------------------------------

struct AssemblyOptions {
  int quad_degree = -1;  // default 2k + 8
  bool parallel = true;  // OpenMP over elements
  bool quadrature_kernel = false;  // use the serial reference kernel for A and B
  int chunk = 256;
};

struct SaddleSystem {
  GlobalDofMap map;
  StressElementSpec spec;
  Material material;
  int quad_degree = 0;
  Eigen::SparseMatrix<double> K;  // [A B'; B 0]
  Eigen::VectorXd rhs;
  std::vector<ElementGeometry> geoms;
  std::vector<Eigen::MatrixXd> transforms;  // per tet
  std::vector<Eigen::MatrixXd> disp_bases;  // per tet
  double max_block_condition = 0;
  double seconds = 0;
};

SaddleSystem assemble(const MeshTopology& m, const StressElementSpec& spec, const Material& mat,
                      const ProblemData& data, const AssemblyOptions& opt = {});

// Right-hand side contributions of each tet, in its local stress and displacement
// bases. assemble() computes the same vectors internally.
struct ElementLoad {
  Eigen::VectorXd stress;  // in the tet's dual basis
  Eigen::VectorXd disp;
};
std::vector<ElementLoad> element_loads(const MeshTopology& m, const SaddleSystem& sys, const ProblemData& data,
                                       bool parallel = true);

// CSC pattern of [A B'; B 0] with explicit zeros, rows sorted in each column.
Eigen::SparseMatrix<double> saddle_pattern(const MeshTopology& m, const GlobalDofMap& map);

// Sparse LU cost predicted by the symbolic analysis alone.
struct FactorEstimate {
  double peak_bytes = 0;    // factorization workspace upper bound
  double factor_bytes = 0;  // L and U
  double flops = 0;
  double matrix_bytes = 0;  // the assembled matrix itself
};
FactorEstimate estimate_factorization(const Eigen::SparseMatrix<double>& pattern);

struct Solution {
  Eigen::VectorXd x;
  double residual = 0;  // relative algebraic residual
  double seconds = 0;
  int n = 0;
  long nnz = 0;
};
// Sparse LU (UMFPACK). Throws std::runtime_error on factorization failure.
Solution solve(const SaddleSystem& sys);

struct ErrorNorms {
  double e_S = 0;
  double e_u = 0;
  double e_div = 0;
};
ErrorNorms error_norms(const MeshTopology& m, const SaddleSystem& sys, const Solution& sol, const ExactSolution& ex,
                       int quad_degree = -1, bool parallel = true);

// Piola coefficients (reference dual basis) of the discrete stress on tet t.
Eigen::VectorXd local_piola_coeffs(const SaddleSystem& sys, const Eigen::VectorXd& x, int t);
// Displacement coefficients over e_d * monomial(xhat) on tet t.
Eigen::VectorXd local_disp_coeffs(const SaddleSystem& sys, const Eigen::VectorXd& x, int t);

}  // namespace tetstress

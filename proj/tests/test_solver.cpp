#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "thingap/solver.hpp"
#include "thingap/verify.hpp"

using namespace thingap;

namespace {

using MeshPtr = std::shared_ptr<const Mesh>;

MeshPtr mesh_for(const GapGeometry<2>& g, MeshParams p = {}) { return std::make_shared<const Mesh>(generate(g, p)); }

BoundaryData<2> scalar_jump(double a, double b) {
  return BoundaryData<2>::constant_jump(Eigen::VectorXd::Constant(1, a), Eigen::VectorXd::Constant(1, b));
}

BoundaryData<2> lame_jump() { return BoundaryData<2>::constant_jump(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0)); }

}  // namespace

TEST(Assemble, UnitRightTriangleElementMatrix) {
  Mesh m;
  m.vertices = {Point2(0, 0), Point2(1, 0), Point2(0, 1)};
  m.tags.assign(3, VertexTag::interior);
  m.triangles = {{0, 1, 2}};
  Eigen::MatrixXd Ke;
  Eigen::VectorXd Fe;
  element_system(m, 0, identity_system(1, 2), {}, TriangleRule::with_points(3), nullptr, Ke, Fe);
  // Hand integration: gradients (-1,-1), (1,0), (0,1) on an area-1/2 triangle.
  Eigen::Matrix3d expected;
  expected << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  EXPECT_LT((Ke - expected).norm(), 1e-15);
  EXPECT_EQ(Fe.norm(), 0.0);
}

TEST(Assemble, LameMatrixIsSymmetric) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.01, 0.5));
  const LinearSystem sys = assemble(*mesh, lame_as_general({1.0, 1.0}, 2));
  const Eigen::SparseMatrix<double> d = sys.matrix - Eigen::SparseMatrix<double>(sys.matrix.transpose());
  EXPECT_LE(d.norm(), 1e-12 * sys.matrix.norm());
}

TEST(Assemble, ThreadedAssemblyIsBitIdentical) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.01, 0.5));
  const auto cs = holder_demo(2, 2, 0.5);
  const LinearSystem a = assemble(*mesh, cs, {}, AssemblyOptions{3, 1});
  const LinearSystem b = assemble(*mesh, cs, {}, AssemblyOptions{3, 4});
  const Eigen::SparseMatrix<double> d = a.matrix - b.matrix;
  EXPECT_EQ(d.norm(), 0.0);
}

TEST(Assemble, RejectsHigherDimensions) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.1, 0.5), MeshParams{4, 2.0, 0.1, 1.0});
  EXPECT_THROW(assemble(*mesh, identity_system(1, 3)), UnsupportedError);
}

TEST(Solve, ZeroDataGivesZero) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.05, 0.5));
  const auto u = GapProblem(mesh, lame_as_general({1.0, 1.0}, 2), BoundaryData<2>::constant_jump(
                                                                       Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()))
                     .solve_full();
  EXPECT_EQ(u.nodal.norm(), 0.0);
}

TEST(Solve, AffineExactnessOnFlatRectangle) {
  const double eps = 0.1;
  const auto g = GapGeometry<2>::flat(eps);
  const auto mesh = mesh_for(g, MeshParams{8, 2.0, 0.05, 0.5});
  const auto u = GapProblem(mesh, identity_system(1, 2), scalar_jump(1, 0)).solve_full();
  for (std::size_t v = 0; v < mesh->vertices.size(); ++v)
    EXPECT_NEAR(u.nodal(Eigen::Index(v), 0), (mesh->vertices[v].y() + eps / 2) / eps, 1e-10);
  for (const Point2& p : {Point2(0, 0), Point2(0.3, 0.02), Point2(-0.49, -0.049)}) {
    const Eigen::MatrixXd G = gradient_at(u, p);
    EXPECT_NEAR(G(0, 0), 0.0, 1e-9);
    EXPECT_NEAR(G(0, 1), 1.0 / eps, 1e-9);
  }
}

TEST(Solve, DirichletNodesCarryPrescribedValues) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g);
  const auto data = lame_jump();
  const auto u = GapProblem(mesh, lame_as_general({1.0, 1.0}, 2), data).solve_full();
  for (std::size_t v = 0; v < mesh->vertices.size(); ++v) {
    const auto tag = mesh->tags[v];
    if (tag == VertexTag::top) EXPECT_EQ(u.nodal.row(Eigen::Index(v)), Eigen::RowVector2d(1, 0));
    if (tag == VertexTag::bottom) EXPECT_EQ(u.nodal.row(Eigen::Index(v)), Eigen::RowVector2d(0, 0));
  }
  EXPECT_LE(u.residual, solver_tolerance);
}

TEST(Solve, GradientsMatchNodalInterpolant) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.01, 0.5));
  const auto u = GapProblem(mesh, lame_as_general({1.0, 1.0}, 2), lame_jump()).solve_full();
  for (std::size_t t = 0; t < mesh->triangles.size(); t += 13) {
    const auto& tri = mesh->triangles[t];
    const Point2 a = mesh->vertices[tri[0]], b = mesh->vertices[tri[1]], c = mesh->vertices[tri[2]];
    Eigen::Matrix2d E;
    E << (b - a).transpose(), (c - a).transpose();
    for (int i = 0; i < 2; ++i) {
      const Eigen::Vector2d rhs(u.nodal(tri[1], i) - u.nodal(tri[0], i), u.nodal(tri[2], i) - u.nodal(tri[0], i));
      const Eigen::Vector2d grad = E.colPivHouseholderQr().solve(rhs);
      EXPECT_LE((grad - u.gradient(t).row(i).transpose()).norm(), 1e-12 * std::max(1.0, grad.norm()));
    }
  }
}

TEST(Solve, MaximumPrincipleScalar) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.003, 0.5));
  const auto u = GapProblem(mesh, identity_system(1, 2), scalar_jump(1, 0)).solve_full();
  EXPECT_GE(u.nodal.minCoeff(), -1e-10);
  EXPECT_LE(u.nodal.maxCoeff(), 1 + 1e-10);
}

TEST(Solve, LameFirstComponentFollowsBarUOnCenterline) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto u = GapProblem(mesh_for(g), lame_as_general({1.0, 1.0}, 2), lame_jump()).solve_full();
  for (const Point2& p : centerline_probes(g, 9)) {
    const auto t = std::size_t(u.mesh->locate(p));
    const double v = u.value_in(t, u.mesh->barycentric(t, p))[0];
    EXPECT_NEAR(v, bar_u(g, p), 0.05);
  }
}

TEST(Manufactured, ScalarIdentityRates) {
  const auto st = manufactured_convergence(identity_system(1, 2), 3);
  EXPECT_NEAR(st.l2_fit.slope, 2.0, 0.2);
  EXPECT_NEAR(st.h1_fit.slope, 1.0, 0.2);
  for (std::size_t k = 1; k < st.l2.size(); ++k) EXPECT_LT(st.l2[k], st.l2[k - 1]);
}

TEST(Manufactured, LameRates) {
  const auto st = manufactured_convergence(lame_as_general({1.0, 1.0}, 2), 3);
  EXPECT_NEAR(st.l2_fit.slope, 2.0, 0.2);
  EXPECT_NEAR(st.h1_fit.slope, 1.0, 0.2);
}

TEST(Manufactured, VariableCoefficientRates) {
  const auto st = manufactured_convergence(holder_demo(2, 2, 0.5), 3);
  EXPECT_NEAR(st.l2_fit.slope, 2.0, 0.2);
  EXPECT_NEAR(st.h1_fit.slope, 1.0, 0.2);
}

TEST(Components, SuperpositionHolds) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const GapProblem p(mesh_for(g), lame_as_general({1.0, 1.0}, 2),
                     BoundaryData<2>::constant_jump(Eigen::Vector2d(1, 0.4), Eigen::Vector2d(-0.3, 0.2)));
  const auto u = p.solve_full();
  const Eigen::MatrixXd s = p.solve_component(0).nodal + p.solve_component(1).nodal;
  EXPECT_LE((u.nodal - s).cwiseAbs().maxCoeff(), 10 * solver_tolerance);
  EXPECT_THROW(p.solve_component(2), DomainError);
}

TEST(Components, ZeroDataDecoupledComponentVanishes) {
  const GapProblem p(mesh_for(GapGeometry<2>::power(0.01, 0.5)), identity_system(2, 2), lame_jump());
  EXPECT_EQ(p.solve_component(1).nodal.norm(), 0.0);
}

TEST(Components, ScalarComponentEqualsFullSolve) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.01, 0.5));
  const auto data = scalar_jump(2, -1);
  const auto full = GapProblem(mesh, identity_system(1, 2), data).solve_full();
  const auto v = solve_component(mesh, identity_system(1, 2), data, 0);
  EXPECT_EQ((full.nodal - v.nodal).norm(), 0.0);
}

TEST(Difference, VanishesOnTopAndBottom) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g);
  const GapProblem p(mesh, lame_as_general({1.0, 1.0}, 2), lame_jump());
  const AuxiliaryField<2> field(*mesh->geometry, lame_jump(), 0);
  const auto w = difference_w(p.solve_component(0), field);
  for (std::size_t v = 0; v < mesh->vertices.size(); ++v)
    if (mesh->tags[v] != VertexTag::interior) EXPECT_LE(w.nodal.row(Eigen::Index(v)).norm(), 1e-15);
}

TEST(Difference, InterpolatedAuxiliaryGivesZero) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g);
  const AuxiliaryField<2> field(*mesh->geometry, lame_jump(), 0);
  const auto v = make_solution(mesh, interpolate(*mesh, 2, [&](const Point2& x) { return field.value(x); }),
                               SolutionKind::component, 0);
  EXPECT_EQ(difference_w(v, field).nodal.norm(), 0.0);
  const AuxiliaryField<2> other(*mesh->geometry, lame_jump(), 1);
  EXPECT_THROW(difference_w(v, other), MeshError);
  const auto g2 = GapGeometry<2>::power(0.02, 0.5);
  const AuxiliaryField<2> elsewhere(g2, lame_jump(), 0);
  EXPECT_THROW(difference_w(v, elsewhere), MeshError);
}

TEST(Difference, GradientIsSolutionMinusInterpolatedAuxiliary) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g);
  const AuxiliaryField<2> field(*mesh->geometry, lame_jump(), 0);
  const GapProblem p(mesh, lame_as_general({1.0, 1.0}, 2), lame_jump());
  const auto v = p.solve_component(0);
  const auto w = difference_w(v, field);
  // Per triangle: grad w = grad v - grad I_h utilde, and grad I_h utilde is close to
  // grad utilde at the centroid relative to the local scale 1/delta.
  for (std::size_t t = 0; t < mesh->triangles.size(); t += 11) {
    const Point2 c = mesh->centroid(t);
    const Eigen::MatrixXd gi = v.gradient(t) - w.gradient(t);
    const double scale = 1.0 / g.delta(c.head<1>());
    EXPECT_LE((gi - field.gradient(c)).norm(), 0.6 * scale) << c.transpose();
  }
}

TEST(GradientAt, AffineFieldExact) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.05, 0.5), MeshParams{6, 2.0, 0.05, 1.0});
  const Eigen::Vector2d b(0.7, -3.0);
  const auto u = make_solution(mesh, interpolate(*mesh, 1, [&](const Point2& x) {
                                 return Eigen::VectorXd::Constant(1, 2.0 + b.dot(x));
                               }),
                               SolutionKind::full);
  for (const Point2& p : {Point2(0, 0), Point2(0.5, 0.1), Point2(-0.9, 0.5)}) {
    const Eigen::MatrixXd G = gradient_at(u, p);
    EXPECT_NEAR(G(0, 0), b.x(), 1e-9);
    EXPECT_NEAR(G(0, 1), b.y(), 1e-9);
  }
  EXPECT_THROW(gradient_at(u, Point2(0, 0.5)), DomainError);
}

TEST(GradientAt, SharedEdgeUsesLowestTriangle) {
  const auto mesh = mesh_for(GapGeometry<2>::power(0.05, 0.5), MeshParams{4, 2.0, 0.05, 1.0});
  Eigen::MatrixXd nodal(Eigen::Index(mesh->vertices.size()), 1);
  for (Eigen::Index v = 0; v < nodal.rows(); ++v) nodal(v, 0) = std::sin(double(v));
  const auto u = make_solution(mesh, nodal, SolutionKind::full);
  // Midpoint of the diagonal shared by triangles 2q and 2q+1.
  const auto& tri = mesh->triangles[10];
  const Point2 mid = 0.5 * (mesh->vertices[tri[0]] + mesh->vertices[tri[2]]);
  EXPECT_EQ(gradient_at(u, mid), u.gradient(10));
}

TEST(Energy, ZeroField) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g);
  const auto z = make_solution(mesh, Eigen::MatrixXd::Zero(Eigen::Index(mesh->vertices.size()), 2), SolutionKind::full);
  EXPECT_EQ(energy_on(z, LocalRegion<2>(g, Point2(0, 0), 0.1)), 0.0);
}

TEST(Energy, AffineFieldGivesAreaTimesSquaredSlope) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g, MeshParams{16, 1.0, 0.005, 1.0});
  const Eigen::Vector2d b(1.5, -2.0);
  const auto u = make_solution(
      mesh, interpolate(*mesh, 1, [&](const Point2& x) { return Eigen::VectorXd::Constant(1, b.dot(x)); }),
      SolutionKind::full);
  const double s = 0.2;
  // Exact area of the cell |x'| < s: 2 (eps s + 2 s^{5/2} / 2.5).
  const double area = 2 * (0.01 * s + 2 * std::pow(s, 2.5) / 2.5);
  EXPECT_NEAR(energy_on(u, LocalRegion<2>(g, Point2(0, 0), s)), b.squaredNorm() * area, 0.02 * b.squaredNorm() * area);
}

TEST(Energy, BarUDominatesInverseGapIntegral) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g);
  const auto u = make_solution(
      mesh, interpolate(*mesh, 1, [&](const Point2& x) { return Eigen::VectorXd::Constant(1, bar_u(g, x)); }),
      SolutionKind::full);
  const double e = energy_where(u, [](const Point2&) { return true; });
  // Trapezoid oracle for the integral of 1/delta over [-1, 1].
  double integral = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double a = -1.0 + 2.0 * k / n, c = a + 2.0 / n;
    integral += 0.5 * (2.0 / n) * (1 / (0.01 + 2 * std::pow(std::abs(a), 1.5)) + 1 / (0.01 + 2 * std::pow(std::abs(c), 1.5)));
  }
  EXPECT_GE(e, 0.99 * integral);
}

TEST(MeanFlux, ConstantFluxForAffineAuxiliary) {
  const double eps = 0.1;
  const auto g = GapGeometry<2>::flat(eps);
  const auto mesh = mesh_for(g, MeshParams{8, 2.0, 0.05, 1.0});
  const AuxiliaryField<2> field(g, scalar_jump(1, 0), 0);
  const Eigen::MatrixXd M = mean_flux(*mesh, field, identity_system(1, 2), LocalRegion<2>(g, Point2(0, 0), 0.3));
  EXPECT_NEAR(M(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(M(0, 1), 1.0 / eps, 1e-9);
}

TEST(MeanFlux, EqualDataGivesZero) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g);
  const AuxiliaryField<2> field(g, BoundaryData<2>::constant_jump(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)), 0);
  const Eigen::MatrixXd M = mean_flux(*mesh, field, lame_as_general({1.0, 1.0}, 2), LocalRegion<2>(g, Point2(0, 0), 0.1));
  EXPECT_EQ(M.norm(), 0.0);
  EXPECT_THROW(mean_flux(*mesh, field, lame_as_general({1.0, 1.0}, 2), LocalRegion<2>(g, Point2(0, 0.9), 1e-6)),
               DomainError);
}

TEST(MeanFlux, StableUnderRefinement) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const auto mesh = mesh_for(g);
  const Mesh fine = refine(*mesh, 2);
  const AuxiliaryField<2> field(g, lame_jump(), 0);
  const auto cs = lame_as_general({1.0, 1.0}, 2);
  const LocalRegion<2> reg(g, Point2(0.1, 0.0), 0.05);
  const Eigen::MatrixXd a = mean_flux(*mesh, field, cs, reg), b = mean_flux(fine, field, cs, reg);
  EXPECT_LE((a - b).norm(), 0.01 * b.norm());
}

TEST(Output, SolutionAndProbeFormats) {
  const auto g = GapGeometry<2>::power(0.1, 0.5);
  const auto mesh = mesh_for(g, MeshParams{4, 2.0, 0.1, 1.0});
  const auto u = GapProblem(mesh, lame_as_general({1.0, 1.0}, 2), lame_jump()).solve_full();
  std::stringstream s, p;
  write_solution(s, u);
  std::string header;
  std::getline(s, header);
  EXPECT_EQ(header, fmt::format("vertices {} m 2", mesh->vertices.size()));
  write_gradient_probes(p, u, {Point2(0, 0)});
  std::getline(p, header);
  EXPECT_EQ(header, "x,y,comp,dudx,dudy");
}

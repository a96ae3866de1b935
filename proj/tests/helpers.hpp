#pragma once

#include "msgfem/studies.hpp"

#include <doctest.h>

namespace testing {

inline msgfem::ProblemDef diffusion(const msgfem::Mesh2D& mesh, msgfem::CoefficientSpec spec = msgfem::coeff::Constant{1.0})
{
  msgfem::ProblemDef p;
  p.a = msgfem::make_coefficient(spec, mesh, 1);
  p.f.assign(static_cast<std::size_t>(mesh.num_nodes()), 1.0);
  msgfem::validate(p, mesh);
  return p;
}

inline msgfem::ProblemDef helmholtz(const msgfem::Mesh2D& mesh, double k, double g = 0.0)
{
  msgfem::ProblemDef p;
  p.kind = msgfem::ProblemKind::Helmholtz;
  p.k = k;
  p.a.assign(static_cast<std::size_t>(mesh.num_elems()), 1.0);
  p.f.assign(static_cast<std::size_t>(mesh.num_nodes()), 1.0);
  p.g.assign(mesh.boundary_edges.size(), g);
  msgfem::validate(p, mesh);
  return p;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// numpy/scipy reference values, tests/oracles/p1_oracle.py
namespace oracle {
inline constexpr double diffusion_center = 0.01323320521390374;
inline constexpr double diffusion_energy = 0.008728614847927807;
inline constexpr double diffusion_sum = 0.55863135026737964;
inline constexpr double convection_center = 0.072081865576917703;
inline constexpr double convection_q1 = 0.040843290776195931;
inline const std::complex<double> helmholtz_center{-0.2193747004934801, 0.28374391779307928};
inline const std::complex<double> helmholtz_corner{-0.087838475634433519, 0.066702553374156745};
inline constexpr double robin_center = 0.33220221961251195;
inline constexpr double robin_corner = 0.21679021482124639;
inline constexpr double spectrum_n16_00[6] = {0.043285185036524232, 0.0058605217377487098, 2.389359717230217e-07,
                                              1.3760802885898222e-07, 1.3745769079366663e-09, 7.6770083042057184e-10};
inline constexpr double spectrum_n16_11[6] = {1.0347358905628321, 0.09844928880310716, 0.00076443096433771729,
                                              0.00028873838794654753, 2.3780641661269511e-08, 1.3430368704363338e-08};
inline constexpr double spectrum_n20_22[6] = {0.49844668847319806, 0.0065362771452531195, 0.0025847772769111476,
                                              0.00020926040611779124, 0.00012496576223222587, 5.8832302737570068e-06};
}  // namespace oracle

}  // namespace testing

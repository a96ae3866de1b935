#include "msgfem/cover.hpp"

#include <algorithm>

namespace msgfem {

CellRect CellRect::grown(int lx, int ly, int n) const
{
  return {std::max(0, x0 - lx), std::min(n, x1 + lx), std::max(0, y0 - ly), std::min(n, y1 + ly)};
}

namespace {

IndexList rect_nodes(const Mesh2D& mesh, const CellRect& r)
{
  IndexList out;
  for (int j = r.y0; j <= r.y1; ++j)
    for (int i = r.x0; i <= r.x1; ++i) out.push_back(mesh.node_id(i, j));
  return out;
}

IndexList rect_elems(const Mesh2D& mesh, const CellRect& r)
{
  IndexList out;
  for (int j = r.y0; j < r.y1; ++j)
    for (int i = r.x0; i < r.x1; ++i) {
      const Index cell = static_cast<Index>(j) * mesh.n + i;
      out.push_back(2 * cell);
      out.push_back(2 * cell + 1);
    }
  return out;
}

// ramp that is 1 on [c0, c1] and reaches 0 at distance layers
double ramp(int i, int c0, int c1, int layers)
{
  const int d = std::max({0, c0 - i, i - c1});
  return std::max(0.0, 1.0 - static_cast<double>(d) / layers);
}

}  // namespace

Subdomain make_subdomain(const Mesh2D& mesh, int id, const CellRect& core, const CellRect& omega,
                         const CellRect& omega_star)
{
  const int n = mesh.n;
  auto valid = [n](const CellRect& r) { return r.x0 >= 0 && r.y0 >= 0 && r.x1 <= n && r.y1 <= n && r.x0 < r.x1 && r.y0 < r.y1; };
  if (!valid(core) || !valid(omega) || !valid(omega_star))
    throw Error(ErrorCode::EmptyRegion, "subdomain rectangle is empty or outside the mesh", id);
  auto inside = [](const CellRect& a, const CellRect& b) {
    return a.x0 >= b.x0 && a.x1 <= b.x1 && a.y0 >= b.y0 && a.y1 <= b.y1;
  };
  if (!inside(core, omega) || !inside(omega, omega_star))
    throw Error(ErrorCode::IncompatibleCover, "subdomain rectangles are not nested", id);

  Subdomain s;
  s.id = id;
  s.core = core;
  s.omega = omega;
  s.omega_star = omega_star;
  s.omega_nodes = rect_nodes(mesh, omega);
  s.omega_elems = rect_elems(mesh, omega);
  s.omega_star_nodes = rect_nodes(mesh, omega_star);
  s.omega_star_elems = rect_elems(mesh, omega_star);
  s.chi.assign(static_cast<std::size_t>(mesh.num_nodes()), 0.0);

  const CellRect& r = omega_star;
  if (r.x0 > 0) s.artificial_sides |= 1;
  if (r.x1 < n) s.artificial_sides |= 2;
  if (r.y0 > 0) s.artificial_sides |= 4;
  if (r.y1 < n) s.artificial_sides |= 8;
  s.touches_boundary = r.x0 == 0 || r.y0 == 0 || r.x1 == n || r.y1 == n;

  for (int j = r.y0; j <= r.y1; ++j)
    for (int i = r.x0; i <= r.x1; ++i) {
      const bool artificial = ((s.artificial_sides & 1) && i == r.x0) || ((s.artificial_sides & 2) && i == r.x1) ||
                              ((s.artificial_sides & 4) && j == r.y0) || ((s.artificial_sides & 8) && j == r.y1);
      (artificial ? s.omega_star_boundary_nodes : s.omega_star_interior_nodes).push_back(mesh.node_id(i, j));
    }
  return s;
}

Cover build_cover(const Mesh2D& mesh, int mx, int my, int overlap, int oversampling)
{
  const int n = mesh.n;
  if (mx < 1 || my < 1 || n % mx != 0 || n % my != 0)
    throw Error(ErrorCode::IncompatibleCover,
                "mesh resolution " + std::to_string(n) + " is not divisible by the coarse grid " +
                    std::to_string(mx) + "x" + std::to_string(my));
  if (overlap < 1 || oversampling < 1)
    throw Error(ErrorCode::IncompatibleCover, "overlap and oversampling layers must be at least 1");

  Cover cover;
  cover.mx = mx;
  cover.my = my;
  cover.overlap = overlap;
  cover.oversampling = oversampling;
  const int hx = n / mx, hy = n / my;

  std::vector<double> total(static_cast<std::size_t>(mesh.num_nodes()), 0.0);
  for (int cy = 0; cy < my; ++cy)
    for (int cx = 0; cx < mx; ++cx) {
      const CellRect core{cx * hx, (cx + 1) * hx, cy * hy, (cy + 1) * hy};
      const CellRect omega = core.grown(overlap, overlap, n);
      const CellRect star = omega.grown(oversampling * hx, oversampling * hy, n);
      const int id = cover.id_of(cx, cy);
      Subdomain s = make_subdomain(mesh, id, core, omega, star);
      s.cx = cx;
      s.cy = cy;
      if (star == omega && s.artificial_sides != 0)
        throw Error(ErrorCode::DegenerateOversampling, "oversampling domain equals the subdomain", id);

      for (int j = omega.y0; j <= omega.y1; ++j)
        for (int i = omega.x0; i <= omega.x1; ++i) {
          const double v = ramp(i, core.x0, core.x1, overlap) * ramp(j, core.y0, core.y1, overlap);
          s.chi[static_cast<std::size_t>(mesh.node_id(i, j))] = v;
          total[static_cast<std::size_t>(mesh.node_id(i, j))] += v;
        }
      cover.subdomains.push_back(std::move(s));
    }

  for (auto& s : cover.subdomains)
    for (std::size_t v = 0; v < total.size(); ++v)
      if (s.chi[v] != 0.0) s.chi[v] /= total[v];

  std::tie(cover.zeta, cover.zeta_star) = cover_constants(cover, mesh);
  return cover;
}

std::vector<RVec> pou_apply(const Cover& cover, const RVec& u)
{
  std::vector<RVec> out;
  out.reserve(cover.subdomains.size());
  for (const auto& s : cover.subdomains)
    out.push_back(u.cwiseProduct(Eigen::Map<const RVec>(s.chi.data(), static_cast<Eigen::Index>(s.chi.size()))));
  return out;
}

std::vector<CVec> pou_apply(const Cover& cover, const CVec& u)
{
  std::vector<CVec> out;
  out.reserve(cover.subdomains.size());
  for (const auto& s : cover.subdomains) {
    const RVec chi = Eigen::Map<const RVec>(s.chi.data(), static_cast<Eigen::Index>(s.chi.size()));
    out.push_back(u.cwiseProduct(chi.cast<Complex>()));
  }
  return out;
}

std::pair<int, int> cover_constants(const Cover& cover, const Mesh2D& mesh)
{
  std::vector<int> m(static_cast<std::size_t>(mesh.num_nodes()), 0), ms(m);
  for (const auto& s : cover.subdomains) {
    for (Index v : s.omega_nodes) ++m[static_cast<std::size_t>(v)];
    for (Index v : s.omega_star_nodes) ++ms[static_cast<std::size_t>(v)];
  }
  return {*std::max_element(m.begin(), m.end()), *std::max_element(ms.begin(), ms.end())};
}

}  // namespace msgfem

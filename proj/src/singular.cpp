#include "streamline/singular.hpp"

#include <cmath>
#include <map>

namespace streamline {

SingularReport classify(const DensityModel& model, const DriveField& d, const BranchPolicy& policy,
                        const GridSpec& grid, const SynthOptions& opts) {
  return classify(model, synthesize(model, d, policy, grid, opts), opts);
}

SingularReport classify(const DensityModel& model, const FieldSolution& solution,
                        const SynthOptions& opts) {
  SingularReport r;
  r.grid = solution.grid;
  r.tol = opts.tol;
  r.solution = solution;
  const std::size_t count = solution.points.size();
  for (auto* m : {&r.omega_f_complement, &r.gamma_0, &r.gamma_s, &r.gamma_inf, &r.gamma_G})
    m->assign(count, 0);
  r.sonic_indicator.assign(count, std::numeric_limits<double>::quiet_NaN());
  r.sonic_factor = r.sonic_indicator;
  r.rho_value = r.sonic_indicator;

  for (std::size_t p = 0; p < count; ++p) {
    const PointRecord& rec = solution.points[p];
    r.omega_f_complement[p] = rec.has(OutsideOmegaF);
    r.gamma_0[p] = rec.has(Gamma0);
    r.gamma_s[p] = rec.has(GammaS);
    r.gamma_inf[p] = rec.has(GammaInf);
    r.gamma_G[p] = rec.has(GammaG);
    if (std::isfinite(rec.Q))
    {
      if (auto s = model.phi_prime(rec.Q)) r.sonic_indicator[p] = *s;
      if (auto j = model.rho_jet(rec.Q)) {
        r.rho_value[p] = j->value;
        r.sonic_factor[p] = j->value + 2.0 * rec.Q * j->d1;
      }
    }
    if (std::isfinite(rec.xi)) {
      int hits = 0;
      for (const auto& b : model.branches())
        if ((opts.allow_nonphysical || !b.nonphysical) && b.image.contains(rec.xi)) ++hits;
      if (hits > 1) ++r.multi_branch_points;
    }
  }
  if (r.grid.dim == 2) {
    r.sonic_contour = sonic_contour(r);
    r.gamma0_contour = gamma0_contour(r);
  }
  return r;
}

std::vector<Polyline> sonic_contour(const SingularReport& report) {
  return zero_contour(report.grid, report.sonic_factor);
}

std::vector<Polyline> gamma0_contour(const SingularReport& report) {
  return zero_contour(report.grid, report.rho_value);
}

std::vector<Polyline> zero_contour(const GridSpec& grid, const std::vector<double>& values) {
  if (grid.dim != 2) throw std::invalid_argument("contour extraction needs a two-dimensional grid");
  const int nx = grid.nodes(0), ny = grid.nodes(1);
  auto value = [&](int i, int j) { return values[grid.linear_index({i, j})]; };
  // Edge ids: 2*(i*ny + j) for the x-edge leaving node (i,j), +1 for the y-edge.
  auto x_edge = [&](int i, int j) { return 2L * (static_cast<long>(i) * ny + j); };
  auto y_edge = [&](int i, int j) { return 2L * (static_cast<long>(i) * ny + j) + 1; };

  std::map<long, std::array<double, 2>> points;
  std::map<long, std::vector<long>> links;
  auto crossing = [&](long id, double x0, double y0, double v0, double x1, double y1, double v1) {
    if (!points.count(id)) {
      const double t = v0 / (v0 - v1);
      points[id] = {x0 + t * (x1 - x0), y0 + t * (y1 - y0)};
    }
  };

  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      const double v[4] = {value(i, j), value(i + 1, j), value(i + 1, j + 1), value(i, j + 1)};
      bool ok = true;
      for (double s : v) ok = ok && std::isfinite(s);
      if (!ok) continue;
      bool pos[4];
      int npos = 0;
      for (int k = 0; k < 4; ++k) npos += pos[k] = v[k] > 0.0;
      if (npos == 0 || npos == 4) continue;

      const double x0 = grid.point(grid.linear_index({i, j}))[0];
      const double y0 = grid.point(grid.linear_index({i, j}))[1];
      const double x1 = grid.point(grid.linear_index({i + 1, j}))[0];
      const double y1 = grid.point(grid.linear_index({i, j + 1}))[1];
      // Edges: 0 bottom, 1 right, 2 top, 3 left.
      const long edge[4] = {x_edge(i, j), y_edge(i + 1, j), x_edge(i, j + 1), y_edge(i, j)};
      if (pos[0] != pos[1]) crossing(edge[0], x0, y0, v[0], x1, y0, v[1]);
      if (pos[1] != pos[2]) crossing(edge[1], x1, y0, v[1], x1, y1, v[2]);
      if (pos[3] != pos[2]) crossing(edge[2], x0, y1, v[3], x1, y1, v[2]);
      if (pos[0] != pos[3]) crossing(edge[3], x0, y0, v[0], x0, y1, v[3]);

      auto link = [&](long e0, long e1) {
        links[e0].push_back(e1);
        links[e1].push_back(e0);
      };
      if (npos == 2 && pos[0] != pos[2]) {
        std::vector<long> crossed;
        for (int k = 0; k < 4; ++k)
          if (pos[k] != pos[(k + 1) % 4]) crossed.push_back(edge[k]);
        link(crossed[0], crossed[1]);
        continue;
      }
      // Cut off each minority corner; in the saddle case the cell-centre
      // average decides which pair is the minority.
      bool cut_positive = npos == 1;
      if (npos == 2) cut_positive = (v[0] + v[1] + v[2] + v[3]) <= 0.0;
      for (int k = 0; k < 4; ++k)
        if (pos[k] == cut_positive) link(edge[(k + 3) % 4], edge[k]);
    }
  }

  std::vector<Polyline> lines;
  std::map<long, bool> used;
  auto walk = [&](long start) {
    Polyline line;
    long prev = -1, cur = start;
    for (;;) {
      used[cur] = true;
      line.push_back(points[cur]);
      long next = -1;
      for (long nb : links[cur])
        if (nb != prev && !used[nb]) {
          next = nb;
          break;
        }
      if (next < 0) {
        // Close the loop if we came back next to the start.
        for (long nb : links[cur])
          if (nb == start && line.size() > 2 && prev != start) {
            line.push_back(points[start]);
            break;
          }
        break;
      }
      prev = cur;
      cur = next;
    }
    lines.push_back(std::move(line));
  };
  for (const auto& [id, nb] : links)
    if (nb.size() == 1 && !used[id]) walk(id);
  for (const auto& [id, nb] : links)
    if (!used[id]) walk(id);
  return lines;
}

}  // namespace streamline

#include "lab/errors.hpp"
#include "lab/numeric.hpp"
#include "lab/raydyn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;

std::pair<int, int> grid_shape(int n) {
  int a = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  while (a > 1 && n % a != 0) --a;
  return {a, n / a};
}

// Unit tangent vector at x making angle alpha with the first chart axis.
Vec2 unit_direction(const ManifoldModel& m, const Vec2& x, double alpha) {
  switch (m.kind()) {
    case ManifoldKind::Torus2: return {std::cos(alpha), std::sin(alpha)};
    case ManifoldKind::Sphere2: return {std::cos(alpha) / std::sin(x[1]), std::sin(alpha)};
    case ManifoldKind::Revolution: return {std::cos(alpha), std::sin(alpha) / m.profile().R(x[0])};
  }
  return {0, 0};
}

}  // namespace

std::vector<RaySeed> tgcc_seeds(const ManifoldModel& m, const Hypersurface& sigma, const TgccSampling& sampling) {
  if (sampling.nx < 8 || sampling.ndir < 8) fail(ErrorCode::ConfigError, "tgcc sampling counts must be at least 8");
  m.require(sigma);
  const auto [na, nb] = grid_shape(sampling.nx);
  std::vector<Vec2> bases;
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      const double u = (i + 0.5) / na, w = (j + 0.5) / nb;
      switch (m.kind()) {
        case ManifoldKind::Torus2: bases.emplace_back(-kPi + 2 * kPi * u, -kPi + 2 * kPi * w); break;
        case ManifoldKind::Sphere2: bases.emplace_back(2 * kPi * w, kPi * u); break;
        case ManifoldKind::Revolution: bases.emplace_back(-kPi + 2 * kPi * u, 2 * kPi * w); break;
      }
    }
  }
  std::vector<RaySeed> seeds;
  for (const Vec2& x : bases) {
    for (int k = 0; k < sampling.ndir; ++k) {
      const Vec2 v = unit_direction(m, x, 2 * kPi * k / sampling.ndir);
      seeds.push_back({x, v, -1});
      seeds.push_back({x, v, 1});
    }
  }
  for (const FermiChart& chart : fermi_charts(m, sigma)) {
    for (int i = 0; i < sampling.sigma_probes; ++i) {
      const Vec2 x = chart.point(2 * kPi * (i + 0.5) / sampling.sigma_probes);
      const Vec2 t = chart.tangent(x);
      for (int dir : {1, -1}) {
        seeds.push_back({x, dir * t, -1});
        seeds.push_back({x, dir * t, 1});
      }
    }
  }
  return seeds;
}

TgccReport check_tgcc_rays(const ManifoldModel& m, const Hypersurface& sigma, double horizon,
                           const std::vector<RaySeed>& seeds, const TgccSampling& sampling) {
  if (!(horizon > 0)) fail(ErrorCode::ConfigError, "horizon must be positive");
  if (seeds.empty()) fail(ErrorCode::EmptyInput, "no rays to check");
  TgccReport report;
  report.horizon = horizon;
  report.sampling = sampling;
  report.rays.resize(seeds.size());
  FlowOptions opts;
  opts.step = sampling.step;
  opts.eps_report = sampling.eps_min;
  opts.sample_stride = 0;
  parallel_for(seeds.size(), [&](std::size_t i) {
    RayRecord rec;
    rec.seed = seeds[i];
    const PhasePoint p = char_lift(m, seeds[i].x, seeds[i].v, seeds[i].sign);
    const RayTrajectory traj = flow(m, sigma, p, -p.tau * horizon, opts);
    rec.inconclusive = traj.aborted;
    for (const RayEvent& ev : traj.events) {
      if (ev.kind != RayEventKind::SigmaCrossing && ev.kind != RayEventKind::SigmaTangency) continue;
      const double t = ev.point.t - p.t;
      if (!(t > 0 && t < horizon)) continue;
      if (ev.kind == RayEventKind::SigmaCrossing) ++rec.crossings;
      const double cand = std::min({ev.crossing.margin, t, horizon - t});
      rec.eps_ray = std::max(rec.eps_ray, cand);
      if (ev.crossing.margin > sampling.eps_min && t > sampling.eps_min && t < horizon - sampling.eps_min &&
          !(t >= rec.first_transversal_time))
        rec.first_transversal_time = t;
    }
    report.rays[i] = rec;
  });
  bool any = false;
  report.eps_star = INFINITY;
  for (std::size_t i = 0; i < report.rays.size(); ++i) {
    const RayRecord& r = report.rays[i];
    if (r.inconclusive) {
      ++report.inconclusive_count;
      continue;
    }
    if (!any || r.eps_ray < report.eps_star) {
      report.eps_star = r.eps_ray;
      report.worst = i;
      any = true;
    }
  }
  if (!any) report.eps_star = 0;
  report.pass = any && report.eps_star > sampling.eps_min;
  const RaySeed& w = report.rays[report.worst].seed;
  report.witness = char_lift(m, w.x, w.v, w.sign);
  return report;
}

TgccReport check_tgcc(const ManifoldModel& m, const Hypersurface& sigma, double horizon, const TgccSampling& sampling) {
  return check_tgcc_rays(m, sigma, horizon, tgcc_seeds(m, sigma, sampling), sampling);
}

}  // namespace lab

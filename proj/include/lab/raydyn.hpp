#pragma once

#include "lab/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace lab {

using Vec3 = Eigen::Vector3d;

// Point of the characteristic set |xi|_g^2 = tau^2.
// Torus and revolution store chart coordinates in x.head<2>() and xi.head<2>().
// The sphere stores the embedded unit vector in x and the ambient tangent covector in xi.
struct PhasePoint {
  double t = 0;
  Vec3 x = Vec3::Zero();
  double tau = -1;
  Vec3 xi = Vec3::Zero();
};

PhasePoint make_phase_point(const ManifoldModel& m, const Vec2& x, double tau, const Vec2& xi, double t = 0);
Vec2 base_chart(const ManifoldModel& m, const PhasePoint& p);
Vec2 covector_chart(const ManifoldModel& m, const PhasePoint& p);
double shell_defect(const ManifoldModel& m, const PhasePoint& p);

struct CrossingClass {
  double margin = 0;
  double eps = 0;
  bool transverse = false;
};

enum class RayEventKind { SigmaCrossing, SigmaTangency, BoundaryReflection, GlancingBoundaryAbort };

struct RayEvent {
  RayEventKind kind = RayEventKind::SigmaCrossing;
  double s = 0;
  int component = -1;
  PhasePoint point;
  CrossingClass crossing;
};

struct RayTrajectory {
  std::vector<double> s;
  std::vector<PhasePoint> samples;
  std::vector<RayEvent> events;
  bool aborted = false;
  double max_shell_defect = 0;
};

struct FlowOptions {
  double step = 1e-3;
  double eps_report = 0;
  // Store every n-th sample; 0 keeps only the endpoints.
  int sample_stride = 1;
  double root_tol = 1e-10;
  double tangency_tol = 1e-8;
  double glancing_tol = 1e-6;
};

PhasePoint char_lift(const ManifoldModel& m, const Vec2& x, const Vec2& v, int sign);

// Integrates the Hamilton field of (-tau^2 + |xi|_g^2)/2 for parameter s_max (either sign).
// dt/ds = -tau, so a tau = -1 ray has t = t0 + s.
RayTrajectory flow(const ManifoldModel& m, const Hypersurface& sigma, const PhasePoint& p, double s_max,
                   const FlowOptions& opts = {});

PhasePoint reflect(const ManifoldModel& m, const PhasePoint& p, double glancing_tol = 1e-6);

CrossingClass classify_crossing(const ManifoldModel& m, const FermiChart& chart, const PhasePoint& p, double eps,
                                double root_tol = 1e-10);

struct RaySeed {
  Vec2 x;
  Vec2 v;
  int sign = -1;
};

struct TgccSampling {
  int nx = 64;
  int ndir = 128;
  double step = 1e-3;
  double eps_min = 1e-6;
  // Extra rays started on each circle of the hypersurface along its two tangent directions.
  int sigma_probes = 16;
};

struct RayRecord {
  RaySeed seed;
  double eps_ray = 0;
  double first_transversal_time = NAN;
  int crossings = 0;
  bool inconclusive = false;
};

struct TgccReport {
  bool pass = false;
  double eps_star = 0;
  double horizon = 0;
  TgccSampling sampling;
  int inconclusive_count = 0;
  std::size_t worst = 0;
  PhasePoint witness;
  std::vector<RayRecord> rays;
};

std::vector<RaySeed> tgcc_seeds(const ManifoldModel& m, const Hypersurface& sigma, const TgccSampling& sampling);
TgccReport check_tgcc_rays(const ManifoldModel& m, const Hypersurface& sigma, double horizon,
                           const std::vector<RaySeed>& seeds, const TgccSampling& sampling);
TgccReport check_tgcc(const ManifoldModel& m, const Hypersurface& sigma, double horizon,
                      const TgccSampling& sampling = {});

}  // namespace lab

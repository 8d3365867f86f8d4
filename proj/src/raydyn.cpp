#include "lab/raydyn.hpp"

#include "lab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;

using State = std::array<double, 6>;

struct Field {
  ManifoldKind kind;
  const RevolutionProfile* profile = nullptr;

  State deriv(const State& y) const {
    State d{};
    switch (kind) {
      case ManifoldKind::Torus2:
        d[0] = y[3];
        d[1] = y[4];
        break;
      case ManifoldKind::Sphere2: {
        const double w2 = y[3] * y[3] + y[4] * y[4] + y[5] * y[5];
        for (int i = 0; i < 3; ++i) {
          d[i] = y[3 + i];
          d[3 + i] = -w2 * y[i];
        }
        break;
      }
      case ManifoldKind::Revolution: {
        ProfileValues pv = profile->eval(y[0]);
        const double r2 = pv.R * pv.R;
        d[0] = y[3];
        d[1] = y[4] / r2;
        d[3] = y[4] * y[4] * pv.dR / (r2 * pv.R);
        break;
      }
    }
    return d;
  }

  State rk4(const State& y, double h) const {
    State k1 = deriv(y), k2, k3, k4, tmp;
    for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    k2 = deriv(tmp);
    for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    k3 = deriv(tmp);
    for (int i = 0; i < 6; ++i) tmp[i] = y[i] + h * k3[i];
    k4 = deriv(tmp);
    State out;
    for (int i = 0; i < 6; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
  }

  double norm2(const State& y) const {
    switch (kind) {
      case ManifoldKind::Torus2: return y[3] * y[3] + y[4] * y[4];
      case ManifoldKind::Sphere2: return y[3] * y[3] + y[4] * y[4] + y[5] * y[5];
      case ManifoldKind::Revolution: {
        const double r = profile->R(y[0]);
        return y[3] * y[3] + y[4] * y[4] / (r * r);
      }
    }
    return 0;
  }

  void project(State& y, double tau) const {
    switch (kind) {
      case ManifoldKind::Torus2:
        y[0] = std::remainder(y[0], 2 * kPi);
        y[1] = std::remainder(y[1], 2 * kPi);
        if (y[0] == kPi) y[0] = -kPi;
        if (y[1] == kPi) y[1] = -kPi;
        break;
      case ManifoldKind::Sphere2: {
        const double pn = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        for (int i = 0; i < 3; ++i) y[i] /= pn;
        const double dot = y[0] * y[3] + y[1] * y[4] + y[2] * y[5];
        for (int i = 0; i < 3; ++i) y[3 + i] -= dot * y[i];
        const double scale = std::abs(tau) / std::sqrt(norm2(y));
        for (int i = 3; i < 6; ++i) y[i] *= scale;
        break;
      }
      case ManifoldKind::Revolution: {
        y[1] = std::remainder(y[1], 2 * kPi);
        const double scale = std::abs(tau) / std::sqrt(norm2(y));
        y[3] *= scale;
        y[4] *= scale;
        break;
      }
    }
  }
};

// Signed distance and normal covector component for one circle, on the raw state.
struct Detector {
  SigmaComponent c;

  double x1(const State& y) const {
    switch (c.kind) {
      case SigmaKind::TorusCircleX0: return c.coorientation * std::remainder(y[0], 2 * kPi);
      case SigmaKind::TorusCircleY0: return c.coorientation * std::remainder(y[1], 2 * kPi);
      case SigmaKind::SphereEquator: return c.coorientation * std::asin(std::clamp(y[2], -1.0, 1.0));
      case SigmaKind::RevolutionWaist: return c.coorientation * y[0];
    }
    return 0;
  }

  double xi1(const State& y) const {
    switch (c.kind) {
      case SigmaKind::TorusCircleX0: return c.coorientation * y[3];
      case SigmaKind::TorusCircleY0: return c.coorientation * y[4];
      case SigmaKind::SphereEquator: return c.coorientation * y[5] / std::sqrt(std::max(1 - y[2] * y[2], 1e-300));
      case SigmaKind::RevolutionWaist: return c.coorientation * y[3];
    }
    return 0;
  }
};

State to_state(const PhasePoint& p) { return {p.x[0], p.x[1], p.x[2], p.xi[0], p.xi[1], p.xi[2]}; }

PhasePoint to_point(const State& y, double t, double tau) {
  PhasePoint p;
  p.t = t;
  p.tau = tau;
  p.x = Vec3(y[0], y[1], y[2]);
  p.xi = Vec3(y[3], y[4], y[5]);
  return p;
}

bool sign_change(double a, double b) {
  if (std::abs(a - b) > kPi) return false;
  return (a < 0 && b > 0) || (a > 0 && b < 0) || (b == 0 && a != 0);
}

class Integrator {
 public:
  Integrator(const ManifoldModel& m, const Hypersurface& sigma, const PhasePoint& p0, const FlowOptions& opts)
      : field_{m.kind(), m.kind() == ManifoldKind::Revolution ? &m.profile() : nullptr},
        opts_(opts),
        tau_(p0.tau),
        t0_(p0.t) {
    for (const auto& c : sigma.components) {
      if (!m.supports(c.kind)) fail(ErrorCode::UnsupportedPair, std::string(sigma_name(c.kind)) + " on " + kind_name(m.kind()));
      det_.push_back({c});
    }
  }

  RayTrajectory run(const PhasePoint& p0, double s_max) {
    RayTrajectory traj;
    if (!(s_max != 0) || !std::isfinite(s_max)) fail(ErrorCode::ConfigError, "flow duration must be nonzero");
    const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(s_max) / opts_.step - 1e-9)));
    const double h = s_max / static_cast<double>(n);
    State y = to_state(p0);
    double s = 0;
    traj.s.push_back(0);
    traj.samples.push_back(p0);
    const std::size_t nc = det_.size();
    std::vector<double> x1_prev(nc), x1_prev2(nc, NAN);
    std::vector<char> crossed_prev(nc, 0), crossed(nc, 0);
    for (std::size_t c = 0; c < nc; ++c) x1_prev[c] = det_[c].x1(y);
    for (long i = 1; i <= n; ++i) {
      std::fill(crossed.begin(), crossed.end(), 0);
      if (!advance(y, s, h, traj, crossed)) {
        traj.aborted = true;
        break;
      }
      s = h * static_cast<double>(i);
      for (std::size_t c = 0; c < nc; ++c) {
        const double x1 = det_[c].x1(y);
        const double a = std::abs(x1_prev2[c]), b = std::abs(x1_prev[c]), d = std::abs(x1);
        if (!crossed[c] && !crossed_prev[c] && b < opts_.tangency_tol && b <= a && b < d && !std::isnan(a))
          push_tangency(traj, c, s - h);
        x1_prev2[c] = x1_prev[c];
        x1_prev[c] = x1;
      }
      crossed_prev.swap(crossed);
      if (i == n || (opts_.sample_stride > 0 && i % opts_.sample_stride == 0)) {
        traj.s.push_back(s);
        traj.samples.push_back(to_point(y, time_at(s), tau_));
      }
    }
    traj.max_shell_defect = max_defect_;
    return traj;
  }

 private:
  double time_at(double s) const { return t0_ - tau_ * s; }

  State finish(State out) {
    const double defect = std::abs(field_.norm2(out) - tau_ * tau_) / (tau_ * tau_);
    if (defect > 1e-6) fail(ErrorCode::IntegratorDivergence, "shell defect " + std::to_string(defect));
    field_.project(out, tau_);
    max_defect_ = std::max(max_defect_, std::abs(field_.norm2(out) - tau_ * tau_) / (tau_ * tau_));
    return out;
  }

  void push_tangency(RayTrajectory& traj, std::size_t c, double s) {
    RayEvent ev;
    ev.kind = RayEventKind::SigmaTangency;
    ev.s = s;
    ev.component = static_cast<int>(c);
    ev.point = to_point(prev_sample_, time_at(s), tau_);
    const double xi1 = det_[c].xi1(prev_sample_);
    ev.crossing.margin = xi1 * xi1 / (tau_ * tau_);
    ev.crossing.eps = opts_.eps_report;
    ev.crossing.transverse = false;
    traj.events.push_back(ev);
  }

  // Records crossings of every circle on the segment a -> a + h.
  void detect(const State& a, const State& b, double s_a, double h, RayTrajectory& traj,
              std::vector<char>& crossed) {
    for (std::size_t c = 0; c < det_.size(); ++c) {
      const double xa = det_[c].x1(a), xb = det_[c].x1(b);
      if (!sign_change(xa, xb)) continue;
      double lo = 0, hi = 1, flo = xa, at = 1;
      State root = b;
      double froot = xb;
      for (int it = 0; it < 200 && std::abs(froot) >= opts_.root_tol && hi - lo > 1e-17; ++it) {
        const double mid = 0.5 * (lo + hi);
        State trial = field_.rk4(a, mid * h);
        const double ft = det_[c].x1(trial);
        if ((flo < 0) == (ft < 0) && ft != 0) {
          lo = mid;
          flo = ft;
        } else {
          hi = mid;
        }
        if (std::abs(ft) < std::abs(froot)) {
          root = trial;
          froot = ft;
          at = mid;
        }
      }
      RayEvent ev;
      ev.kind = RayEventKind::SigmaCrossing;
      ev.component = static_cast<int>(c);
      const double sr = s_a + at * h;
      ev.s = sr;
      ev.point = to_point(root, time_at(sr), tau_);
      const double xi1 = det_[c].xi1(root);
      ev.crossing.margin = xi1 * xi1 / (tau_ * tau_);
      ev.crossing.eps = opts_.eps_report;
      ev.crossing.transverse = ev.crossing.margin > opts_.eps_report;
      traj.events.push_back(ev);
      crossed[c] = 1;
    }
  }

  // Advances y by h, handling boundary hits; false when the ray must be abandoned.
  bool advance(State& y, double s, double h, RayTrajectory& traj, std::vector<char>& crossed) {
    prev_sample_ = y;
    double remaining = h;
    for (int guard = 0; guard < 8; ++guard) {
      State b = field_.rk4(y, remaining);
      if (field_.kind != ManifoldKind::Revolution || std::abs(b[0]) <= kPi) {
        detect(y, b, s + (h - remaining), remaining, traj, crossed);
        y = finish(b);
        return true;
      }
      double lo = 0, hi = 1;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        State m = field_.rk4(y, mid * remaining);
        if (std::abs(m[0]) > kPi) hi = mid; else lo = mid;
        if ((hi - lo) * std::abs(remaining) < 1e-14) break;
      }
      const double part = lo * remaining;
      State hit = field_.rk4(y, part);
      detect(y, hit, s + (h - remaining), part, traj, crossed);
      if (part != 0) hit = finish(hit);
      hit[0] = std::copysign(kPi, b[0]);
      field_.project(hit, tau_);
      const double s_hit = s + (h - remaining) + part;
      PhasePoint hp = to_point(hit, time_at(s_hit), tau_);
      if (std::abs(hit[3]) < opts_.glancing_tol * std::abs(tau_)) {
        RayEvent ev;
        ev.kind = RayEventKind::GlancingBoundaryAbort;
        ev.s = s_hit;
        ev.point = hp;
        traj.events.push_back(ev);
        traj.s.push_back(s_hit);
        traj.samples.push_back(hp);
        return false;
      }
      hit[3] = -hit[3];
      RayEvent ev;
      ev.kind = RayEventKind::BoundaryReflection;
      ev.s = s_hit;
      ev.point = to_point(hit, time_at(s_hit), tau_);
      traj.events.push_back(ev);
      y = hit;
      remaining -= part;
      if (remaining == 0) return true;
    }
    fail(ErrorCode::IntegratorDivergence, "repeated boundary hits within one step");
  }

  Field field_;
  FlowOptions opts_;
  double tau_;
  double t0_;
  std::vector<Detector> det_;
  State prev_sample_{};
  double max_defect_ = 0;
};

}  // namespace

PhasePoint make_phase_point(const ManifoldModel& m, const Vec2& x, double tau, const Vec2& xi, double t) {
  PhasePoint p;
  p.t = t;
  p.tau = tau;
  if (m.kind() != ManifoldKind::Sphere2) {
    p.x = Vec3(x[0], x[1], 0);
    p.xi = Vec3(xi[0], xi[1], 0);
    return p;
  }
  const double th = x[0], lat = kPi / 2 - x[1];
  const double st = std::sin(th), ct = std::cos(th), sp = std::cos(lat), cp = std::sin(lat);
  if (!(x[1] > 0 && x[1] < kPi)) fail(ErrorCode::OutOfChart, "sphere chart excludes the poles");
  const Vec3 e_th(-st * sp, ct * sp, 0);
  const Vec3 e_ph(ct * cp, st * cp, -sp);
  p.x = Vec3(ct * sp, st * sp, cp);
  p.xi = xi[0] / (sp * sp) * e_th + xi[1] * e_ph;
  return p;
}

Vec2 base_chart(const ManifoldModel& m, const PhasePoint& p) {
  if (m.kind() != ManifoldKind::Sphere2) return p.x.head<2>();
  double th = std::atan2(p.x[1], p.x[0]);
  if (th < 0) th += 2 * kPi;
  return {th, kPi / 2 - std::asin(std::clamp(p.x[2], -1.0, 1.0))};
}

Vec2 covector_chart(const ManifoldModel& m, const PhasePoint& p) {
  if (m.kind() != ManifoldKind::Sphere2) return p.xi.head<2>();
  const Vec2 c = base_chart(m, p);
  const double lat = kPi / 2 - c[1];
  const double st = std::sin(c[0]), ct = std::cos(c[0]), sp = std::cos(lat), cp = std::sin(lat);
  const Vec3 e_th(-st * sp, ct * sp, 0);
  const Vec3 e_ph(ct * cp, st * cp, -sp);
  return {p.xi.dot(e_th), p.xi.dot(e_ph)};
}

double shell_defect(const ManifoldModel& m, const PhasePoint& p) {
  double n2 = 0;
  if (m.kind() == ManifoldKind::Sphere2) {
    n2 = p.xi.squaredNorm();
  } else if (m.kind() == ManifoldKind::Torus2) {
    n2 = p.xi.head<2>().squaredNorm();
  } else {
    const double r = m.profile().R(p.x[0]);
    n2 = p.xi[0] * p.xi[0] + p.xi[1] * p.xi[1] / (r * r);
  }
  return std::abs(n2 - p.tau * p.tau);
}

PhasePoint char_lift(const ManifoldModel& m, const Vec2& x, const Vec2& v, int sign) {
  const Vec2 xi = flat(m, x, v);
  const double norm = metric_norm(m, x, xi);
  if (std::abs(norm - 1) > 1e-10) fail(ErrorCode::NotUnitDirection, "|v|_g = " + std::to_string(norm));
  return make_phase_point(m, x, sign >= 0 ? 1.0 : -1.0, xi, 0.0);
}

RayTrajectory flow(const ManifoldModel& m, const Hypersurface& sigma, const PhasePoint& p, double s_max,
                   const FlowOptions& opts) {
  if (p.tau == 0) fail(ErrorCode::ConfigError, "tau must be nonzero");
  if (shell_defect(m, p) > 1e-9 * p.tau * p.tau) fail(ErrorCode::IntegratorDivergence, "start point is off the shell");
  Integrator integ(m, sigma, p, opts);
  return integ.run(p, s_max);
}

PhasePoint reflect(const ManifoldModel& m, const PhasePoint& p, double glancing_tol) {
  if (m.kind() != ManifoldKind::Revolution) fail(ErrorCode::UnsupportedKind, "only the revolution surface has a boundary");
  if (std::abs(std::abs(p.x[0]) - kPi) > 1e-9) fail(ErrorCode::OutOfChart, "base point is not on the boundary");
  if (std::abs(p.xi[0]) <= glancing_tol * std::abs(p.tau)) fail(ErrorCode::GlancingContact, "tangential boundary contact");
  PhasePoint q = p;
  q.xi[0] = -p.xi[0];
  return q;
}

CrossingClass classify_crossing(const ManifoldModel& m, const FermiChart& chart, const PhasePoint& p, double eps,
                                double root_tol) {
  const Vec2 x = base_chart(m, p);
  if (std::abs(chart.x1(x)) >= root_tol) fail(ErrorCode::NotOnSigma, "x1 = " + std::to_string(chart.x1(x)));
  const double xi1 = chart.xi1(x, covector_chart(m, p));
  CrossingClass cc;
  cc.margin = xi1 * xi1 / (p.tau * p.tau);
  cc.eps = eps;
  cc.transverse = cc.margin > eps;
  return cc;
}

}  // namespace lab

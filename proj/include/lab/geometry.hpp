#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace lab {

using Vec2 = Eigen::Vector2d;

// Chart conventions:
//   Torus2     (x, y) in [-pi, pi)^2, flat metric
//   Sphere2    (theta, phi) in [0, 2pi) x (0, pi), metric sin^2(phi) dtheta^2 + dphi^2
//   Revolution (z, theta) in [-pi, pi] x [0, 2pi), metric dz^2 + R(z)^2 dtheta^2
enum class ManifoldKind { Torus2, Sphere2, Revolution };

const char* kind_name(ManifoldKind kind);

struct ProfileValues {
  double R = 0;
  double dR = 0;
  double d2R = 0;
  double V = 0;
  // -R'^2/(4R^2) + R''/(2R^2), the displayed form.
  double V1 = 0;
  // -R'^2/(4R^2) + R''/(2R), the potential of R^{1/2} Delta_g R^{-1/2}.
  double V1_conj = 0;
};

// Even profile R(z) = sum_n a_n cos(n z).
class RevolutionProfile {
 public:
  explicit RevolutionProfile(std::vector<double> cos_coeffs);

  // Fits R(0), R(pi/2), R(pi) with the first `terms` cosines.
  static RevolutionProfile from_point_constraints(double r0, double r_half, double r_pi, int terms = 3);
  static RevolutionProfile paper_default();

  ProfileValues eval(double z) const;
  double R(double z) const;
  const std::vector<double>& cos_coeffs() const { return a_; }

  // Minimum of V = 1/R^2 over [0, pi].
  double min_V() const;

 private:
  std::vector<double> a_;
};

ProfileValues profile_eval(const RevolutionProfile& p, double z);

enum class SigmaKind { TorusCircleX0, TorusCircleY0, SphereEquator, RevolutionWaist };

const char* sigma_name(SigmaKind kind);

struct SigmaComponent {
  SigmaKind kind = SigmaKind::TorusCircleX0;
  int coorientation = 1;
};

// A single circle or a union of circles.
struct Hypersurface {
  std::vector<SigmaComponent> components;

  static Hypersurface single(SigmaKind kind, int coorientation = 1);
  static Hypersurface union_of(std::vector<SigmaKind> kinds);
  std::string name() const;
};

class ManifoldModel {
 public:
  static ManifoldModel torus();
  static ManifoldModel sphere();
  static ManifoldModel revolution(RevolutionProfile profile);

  ManifoldKind kind() const { return kind_; }
  const RevolutionProfile& profile() const;
  bool has_boundary() const { return kind_ == ManifoldKind::Revolution; }
  bool supports(SigmaKind sigma) const;
  void require(const Hypersurface& sigma) const;

 private:
  ManifoldKind kind_ = ManifoldKind::Torus2;
  std::optional<RevolutionProfile> profile_;
};

struct ManifoldSetup {
  ManifoldModel manifold;
  Hypersurface sigma;
};

// {"kind": ..., "profile": ..., "sigma": ...}; sigma defaults to the canonical circle of the kind.
ManifoldSetup build_manifold(const nlohmann::json& descriptor);
Hypersurface parse_sigma(const ManifoldModel& m, const nlohmann::json& sigma);
nlohmann::json describe(const ManifoldSetup& setup);

double metric_norm(const ManifoldModel& m, const Vec2& x, const Vec2& xi);
// Lowers a tangent vector to a covector.
Vec2 flat(const ManifoldModel& m, const Vec2& x, const Vec2& v);
Vec2 sharp(const ManifoldModel& m, const Vec2& x, const Vec2& xi);

class FermiChart {
 public:
  FermiChart(const ManifoldModel& m, SigmaComponent c);

  const SigmaComponent& component() const { return c_; }
  // Signed distance to the circle, positive on the side the normal points into.
  double x1(const Vec2& p) const;
  // Point of the circle at arc parameter s in [0, 2pi).
  Vec2 point(double s) const;
  // Unit normal as a tangent vector in chart components.
  Vec2 normal(const Vec2& p) const;
  // Unit tangent d/ds along the circle, rescaled to unit length.
  Vec2 tangent(const Vec2& p) const;
  // xi_1 = xi(normal).
  double xi1(const Vec2& p, const Vec2& xi) const;
  // Induced cometric on the circle for a covector component along d/ds.
  double r0(double s, double xi_s) const;
  // Sampled min and max of r0(s, 1) over the circle.
  std::pair<double, double> cometric_bounds(int samples = 64) const;
  double arc_length() const;

 private:
  ManifoldModel m_;
  SigmaComponent c_;
};

// Chart for a single-component hypersurface; unions go through fermi_charts.
FermiChart fermi_chart(const ManifoldModel& m, const Hypersurface& sigma);
std::vector<FermiChart> fermi_charts(const ManifoldModel& m, const Hypersurface& sigma);

struct SigmaNode {
  int component = 0;
  double s = 0;
  Vec2 point;
};

struct SigmaQuadrature {
  std::vector<SigmaNode> nodes;
  std::vector<double> weights;
  double total_length() const;
};

// n equispaced trapezoid nodes per component.
SigmaQuadrature sigma_quadrature(const ManifoldModel& m, const Hypersurface& sigma, int n);

}  // namespace lab

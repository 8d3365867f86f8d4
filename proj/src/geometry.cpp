#include "lab/geometry.hpp"

#include "lab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) { return std::remainder(a, 2 * kPi); }

}  // namespace

const char* kind_name(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Torus2: return "torus2";
    case ManifoldKind::Sphere2: return "sphere2";
    case ManifoldKind::Revolution: return "revolution";
  }
  return "?";
}

const char* sigma_name(SigmaKind kind) {
  switch (kind) {
    case SigmaKind::TorusCircleX0: return "x0";
    case SigmaKind::TorusCircleY0: return "y0";
    case SigmaKind::SphereEquator: return "equator";
    case SigmaKind::RevolutionWaist: return "waist";
  }
  return "?";
}

RevolutionProfile::RevolutionProfile(std::vector<double> cos_coeffs) : a_(std::move(cos_coeffs)) {
  if (a_.empty()) fail(ErrorCode::ProfileConstraintViolation, "empty cosine series");
  for (int i = 0; i <= 4096; ++i) {
    double z = kPi * i / 4096.0;
    if (!(R(z) > 0)) fail(ErrorCode::NonPositiveProfile, "R(" + std::to_string(z) + ") = " + std::to_string(R(z)));
  }
}

RevolutionProfile RevolutionProfile::from_point_constraints(double r0, double r_half, double r_pi, int terms) {
  if (terms < 1) fail(ErrorCode::ProfileConstraintViolation, "series needs at least one term");
  const double zs[3] = {0.0, kPi / 2, kPi};
  Eigen::MatrixXd a(3, terms);
  for (int i = 0; i < 3; ++i)
    for (int n = 0; n < terms; ++n) a(i, n) = n == 0 ? 1.0 : std::cos(n * zs[i]);
  // cos(n pi/2) is exactly 0 or +-1; remove rounding so the fit is reproducible bit for bit.
  for (int n = 0; n < terms; ++n) a(1, n) = std::round(a(1, n));
  Eigen::Vector3d b(r0, r_half, r_pi);
  Eigen::VectorXd c = a.completeOrthogonalDecomposition().solve(b);
  if ((a * c - b).cwiseAbs().maxCoeff() > 1e-12)
    fail(ErrorCode::ProfileConstraintViolation,
         "point constraints cannot be met with " + std::to_string(terms) + " cosine terms");
  return RevolutionProfile(std::vector<double>(c.data(), c.data() + c.size()));
}

RevolutionProfile RevolutionProfile::paper_default() {
  return from_point_constraints(1.0, std::sqrt(5.0), 1.0 / std::sqrt(2.0), 3);
}

double RevolutionProfile::R(double z) const {
  double r = 0;
  for (std::size_t n = 0; n < a_.size(); ++n) r += a_[n] * std::cos(static_cast<double>(n) * z);
  return r;
}

ProfileValues RevolutionProfile::eval(double z) const {
  ProfileValues v;
  for (std::size_t i = 0; i < a_.size(); ++i) {
    const double n = static_cast<double>(i);
    const double c = std::cos(n * z), s = std::sin(n * z);
    v.R += a_[i] * c;
    v.dR -= n * a_[i] * s;
    v.d2R -= n * n * a_[i] * c;
  }
  const double r2 = v.R * v.R;
  v.V = 1.0 / r2;
  v.V1 = -0.25 * v.dR * v.dR / r2 + 0.5 * v.d2R / r2;
  v.V1_conj = -0.25 * v.dR * v.dR / r2 + 0.5 * v.d2R / v.R;
  return v;
}

double RevolutionProfile::min_V() const {
  const int n = 20000;
  int best = 0;
  double rmax = -1;
  for (int i = 0; i <= n; ++i) {
    double r = R(kPi * i / n);
    if (r > rmax) rmax = r, best = i;
  }
  double lo = kPi * std::max(best - 1, 0) / n, hi = kPi * std::min(best + 1, n) / n;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 80; ++it) {
    double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (R(m1) > R(m2)) hi = m2; else lo = m1;
  }
  rmax = std::max(rmax, R(0.5 * (lo + hi)));
  return 1.0 / (rmax * rmax);
}

ProfileValues profile_eval(const RevolutionProfile& p, double z) { return p.eval(z); }

Hypersurface Hypersurface::single(SigmaKind kind, int coorientation) {
  Hypersurface h;
  h.components.push_back({kind, coorientation >= 0 ? 1 : -1});
  return h;
}

Hypersurface Hypersurface::union_of(std::vector<SigmaKind> kinds) {
  Hypersurface h;
  for (auto k : kinds) h.components.push_back({k, 1});
  return h;
}

std::string Hypersurface::name() const {
  std::string out;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) out += "+";
    out += sigma_name(components[i].kind);
  }
  return out;
}

ManifoldModel ManifoldModel::torus() { return ManifoldModel{}; }

ManifoldModel ManifoldModel::sphere() {
  ManifoldModel m;
  m.kind_ = ManifoldKind::Sphere2;
  return m;
}

ManifoldModel ManifoldModel::revolution(RevolutionProfile profile) {
  ManifoldModel m;
  m.kind_ = ManifoldKind::Revolution;
  m.profile_ = std::move(profile);
  return m;
}

const RevolutionProfile& ManifoldModel::profile() const {
  if (!profile_) fail(ErrorCode::UnsupportedKind, std::string(kind_name(kind_)) + " has no profile");
  return *profile_;
}

bool ManifoldModel::supports(SigmaKind sigma) const {
  switch (kind_) {
    case ManifoldKind::Torus2: return sigma == SigmaKind::TorusCircleX0 || sigma == SigmaKind::TorusCircleY0;
    case ManifoldKind::Sphere2: return sigma == SigmaKind::SphereEquator;
    case ManifoldKind::Revolution: return sigma == SigmaKind::RevolutionWaist;
  }
  return false;
}

void ManifoldModel::require(const Hypersurface& sigma) const {
  if (sigma.components.empty()) fail(ErrorCode::UnsupportedPair, "empty hypersurface");
  for (const auto& c : sigma.components)
    if (!supports(c.kind))
      fail(ErrorCode::UnsupportedPair, std::string(sigma_name(c.kind)) + " on " + kind_name(kind_));
}

namespace {

SigmaKind parse_sigma_kind(const std::string& s) {
  if (s == "x0") return SigmaKind::TorusCircleX0;
  if (s == "y0") return SigmaKind::TorusCircleY0;
  if (s == "equator") return SigmaKind::SphereEquator;
  if (s == "waist") return SigmaKind::RevolutionWaist;
  fail(ErrorCode::UnsupportedKind, "unknown sigma '" + s + "'");
}

Hypersurface default_sigma(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Torus2: return Hypersurface::single(SigmaKind::TorusCircleX0);
    case ManifoldKind::Sphere2: return Hypersurface::single(SigmaKind::SphereEquator);
    case ManifoldKind::Revolution: return Hypersurface::single(SigmaKind::RevolutionWaist);
  }
  return {};
}

RevolutionProfile parse_profile(const nlohmann::json& p) {
  if (p.is_null()) return RevolutionProfile::paper_default();
  if (!p.is_object()) fail(ErrorCode::ConfigError, "profile must be an object");
  for (auto it = p.begin(); it != p.end(); ++it)
    if (it.key() != "constraints" && it.key() != "cos_coeffs" && it.key() != "terms")
      fail(ErrorCode::ConfigError, "unknown profile key '" + it.key() + "'");
  if (p.contains("cos_coeffs")) return RevolutionProfile(p.at("cos_coeffs").get<std::vector<double>>());
  if (!p.contains("constraints")) fail(ErrorCode::ConfigError, "profile needs constraints or cos_coeffs");
  const auto& c = p.at("constraints");
  const int terms = p.value("terms", 3);
  if (c.is_string()) {
    if (c.get<std::string>() != "paper-default") fail(ErrorCode::ConfigError, "unknown constraint set");
    return RevolutionProfile::from_point_constraints(1.0, std::sqrt(5.0), 1.0 / std::sqrt(2.0), terms);
  }
  return RevolutionProfile::from_point_constraints(c.value("R0", 1.0), c.value("R_half", std::sqrt(5.0)),
                                                   c.value("R_pi", 1.0 / std::sqrt(2.0)), terms);
}

}  // namespace

Hypersurface parse_sigma(const ManifoldModel& m, const nlohmann::json& sigma) {
  Hypersurface h;
  if (sigma.is_null()) {
    h = default_sigma(m.kind());
  } else if (sigma.is_string()) {
    h = Hypersurface::single(parse_sigma_kind(sigma.get<std::string>()));
  } else if (sigma.is_array()) {
    for (const auto& s : sigma) h.components.push_back({parse_sigma_kind(s.get<std::string>()), 1});
  } else {
    fail(ErrorCode::ConfigError, "sigma must be a string or a list");
  }
  m.require(h);
  return h;
}

ManifoldSetup build_manifold(const nlohmann::json& d) {
  if (!d.is_object() || !d.contains("kind")) fail(ErrorCode::ConfigError, "manifold descriptor needs 'kind'");
  for (auto it = d.begin(); it != d.end(); ++it)
    if (it.key() != "kind" && it.key() != "profile" && it.key() != "sigma")
      fail(ErrorCode::ConfigError, "unknown manifold key '" + it.key() + "'");
  const std::string kind = d.at("kind").get<std::string>();
  ManifoldModel m;
  if (kind == "torus2") {
    m = ManifoldModel::torus();
  } else if (kind == "sphere2") {
    m = ManifoldModel::sphere();
  } else if (kind == "revolution") {
    m = ManifoldModel::revolution(parse_profile(d.contains("profile") ? d.at("profile") : nlohmann::json()));
  } else {
    fail(ErrorCode::UnsupportedKind, "unknown manifold kind '" + kind + "'");
  }
  Hypersurface h = parse_sigma(m, d.contains("sigma") ? d.at("sigma") : nlohmann::json());
  return {m, h};
}

nlohmann::json describe(const ManifoldSetup& setup) {
  nlohmann::json j;
  j["kind"] = kind_name(setup.manifold.kind());
  if (setup.manifold.kind() == ManifoldKind::Revolution)
    j["profile"] = {{"cos_coeffs", setup.manifold.profile().cos_coeffs()}};
  nlohmann::json s = nlohmann::json::array();
  for (const auto& c : setup.sigma.components) s.push_back(sigma_name(c.kind));
  j["sigma"] = s.size() == 1 ? s[0] : s;
  return j;
}

namespace {

void check_chart(const ManifoldModel& m, const Vec2& x) {
  if (!x.allFinite()) fail(ErrorCode::OutOfChart, "non-finite point");
  if (m.kind() == ManifoldKind::Sphere2 && !(x[1] > 0 && x[1] < kPi))
    fail(ErrorCode::OutOfChart, "colatitude outside (0, pi)");
  if (m.kind() == ManifoldKind::Revolution && std::abs(x[0]) > kPi * (1 + 1e-14))
    fail(ErrorCode::OutOfChart, "z outside [-pi, pi]");
}

// Diagonal metric coefficients (g11, g22).
Vec2 metric_diag(const ManifoldModel& m, const Vec2& x) {
  switch (m.kind()) {
    case ManifoldKind::Torus2: return {1.0, 1.0};
    case ManifoldKind::Sphere2: {
      double s = std::sin(x[1]);
      return {s * s, 1.0};
    }
    case ManifoldKind::Revolution: {
      double r = m.profile().R(x[0]);
      return {1.0, r * r};
    }
  }
  return {1.0, 1.0};
}

}  // namespace

double metric_norm(const ManifoldModel& m, const Vec2& x, const Vec2& xi) {
  check_chart(m, x);
  Vec2 g = metric_diag(m, x);
  return std::sqrt(xi[0] * xi[0] / g[0] + xi[1] * xi[1] / g[1]);
}

Vec2 flat(const ManifoldModel& m, const Vec2& x, const Vec2& v) {
  check_chart(m, x);
  return metric_diag(m, x).cwiseProduct(v);
}

Vec2 sharp(const ManifoldModel& m, const Vec2& x, const Vec2& xi) {
  check_chart(m, x);
  return xi.cwiseQuotient(metric_diag(m, x));
}

FermiChart::FermiChart(const ManifoldModel& m, SigmaComponent c) : m_(m), c_(c) {
  if (!m.supports(c.kind)) fail(ErrorCode::UnsupportedPair, std::string(sigma_name(c.kind)) + " on " + kind_name(m.kind()));
}

double FermiChart::x1(const Vec2& p) const {
  const double c = c_.coorientation;
  switch (c_.kind) {
    case SigmaKind::TorusCircleX0: return c * wrap_pi(p[0]);
    case SigmaKind::TorusCircleY0: return c * wrap_pi(p[1]);
    case SigmaKind::SphereEquator: return c * (kPi / 2 - p[1]);
    case SigmaKind::RevolutionWaist: return c * p[0];
  }
  return 0;
}

Vec2 FermiChart::point(double s) const {
  switch (c_.kind) {
    case SigmaKind::TorusCircleX0: return {0.0, wrap_pi(s)};
    case SigmaKind::TorusCircleY0: return {wrap_pi(s), 0.0};
    case SigmaKind::SphereEquator: return {s, kPi / 2};
    case SigmaKind::RevolutionWaist: return {0.0, s};
  }
  return {0, 0};
}

Vec2 FermiChart::normal(const Vec2& p) const {
  (void)p;
  const double c = c_.coorientation;
  switch (c_.kind) {
    case SigmaKind::TorusCircleX0: return {c, 0.0};
    case SigmaKind::TorusCircleY0: return {0.0, c};
    case SigmaKind::SphereEquator: return {0.0, -c};
    case SigmaKind::RevolutionWaist: return {c, 0.0};
  }
  return {0, 0};
}

Vec2 FermiChart::tangent(const Vec2& p) const {
  switch (c_.kind) {
    case SigmaKind::TorusCircleX0: return {0.0, 1.0};
    case SigmaKind::TorusCircleY0: return {1.0, 0.0};
    case SigmaKind::SphereEquator: return {1.0 / std::sin(p[1]), 0.0};
    case SigmaKind::RevolutionWaist: return {0.0, 1.0 / m_.profile().R(p[0])};
  }
  return {0, 0};
}

double FermiChart::xi1(const Vec2& p, const Vec2& xi) const { return xi.dot(normal(p)); }

double FermiChart::r0(double s, double xi_s) const {
  (void)s;
  if (c_.kind == SigmaKind::RevolutionWaist) {
    double r = m_.profile().R(0.0);
    return xi_s * xi_s / (r * r);
  }
  return xi_s * xi_s;
}

std::pair<double, double> FermiChart::cometric_bounds(int samples) const {
  double lo = INFINITY, hi = 0;
  for (int i = 0; i < samples; ++i) {
    double v = r0(2 * kPi * i / samples, 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

double FermiChart::arc_length() const {
  if (c_.kind == SigmaKind::RevolutionWaist) return 2 * kPi * m_.profile().R(0.0);
  return 2 * kPi;
}

FermiChart fermi_chart(const ManifoldModel& m, const Hypersurface& sigma) {
  if (sigma.components.size() != 1)
    fail(ErrorCode::UnsupportedPair, "fermi_chart takes a single circle; use fermi_charts for unions");
  return FermiChart(m, sigma.components[0]);
}

std::vector<FermiChart> fermi_charts(const ManifoldModel& m, const Hypersurface& sigma) {
  m.require(sigma);
  std::vector<FermiChart> out;
  for (const auto& c : sigma.components) out.emplace_back(m, c);
  return out;
}

double SigmaQuadrature::total_length() const {
  double s = 0;
  for (double w : weights) s += w;
  return s;
}

SigmaQuadrature sigma_quadrature(const ManifoldModel& m, const Hypersurface& sigma, int n) {
  if (n < 4) fail(ErrorCode::TooFewNodes, "need at least 4 nodes, got " + std::to_string(n));
  auto charts = fermi_charts(m, sigma);
  SigmaQuadrature q;
  for (std::size_t c = 0; c < charts.size(); ++c) {
    const double w = charts[c].arc_length() / n;
    for (int i = 0; i < n; ++i) {
      double s = 2 * kPi * i / n;
      q.nodes.push_back({static_cast<int>(c), s, charts[c].point(s)});
      q.weights.push_back(w);
    }
  }
  return q;
}

}  // namespace lab

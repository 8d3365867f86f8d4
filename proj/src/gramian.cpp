#include "control_internal.hpp"
#include "lab/errors.hpp"
#include "lab/lrcontrol.hpp"
#include "lab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

namespace lab {

namespace detail {

namespace {

class DoubleStage final : public StageSolver {
 public:
  DoubleStage(const SpectralModel& sm, Eigen::Index dim, double d, ErrorCode code, const std::string& where)
      : sm_(sm), dim_(dim), d_(d) {
    for (const std::vector<int>& members : sm.blocks) {
      Block b;
      for (int i : members)
        if (i < dim) b.idx.push_back(i);
      if (!b.idx.empty()) blocks_.push_back(std::move(b));
    }
    double vmax = 0, vmin = INFINITY;
    parallel_for(blocks_.size(), [&](std::size_t k) {
      Block& b = blocks_[k];
      const Eigen::Index n = static_cast<Eigen::Index>(b.idx.size());
      b.G.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
          const int p = b.idx[i], q = b.idx[j];
          b.G(i, j) = b.G(j, i) = gramian_weight(d, sm.lambda2[p] + sm.lambda2[q]) * sm.cauchy_gram(p, q);
        }
      const SymEig e = sym_eig(b.G);
      b.vectors = e.vectors;
      b.values = e.values;
    });
    for (const Block& b : blocks_) {
      vmax = std::max(vmax, b.values.maxCoeff());
      vmin = std::min(vmin, b.values.minCoeff());
    }
    min_eig_ = vmin;
    max_eig_ = vmax;
    if (!(vmin > 1e-13 * vmax))
      fail(code, where + ": Gramian eigenvalues " + fmt17(vmin) + " / " + fmt17(vmax) + " below 1e-13");
    for (Block& b : blocks_) {
      b.inverse.resize(b.values.size());
      for (Eigen::Index i = 0; i < b.values.size(); ++i)
        b.inverse[i] = b.values[i] > 1e-12 * vmax ? 1 / b.values[i] : 0.0;
    }
  }

  StageOutput solve(const Eigen::VectorXd& v, double) const override {
    StageOutput out;
    out.coeffs = Eigen::VectorXd::Zero(dim_);
    for (const Block& b : blocks_) {
      const Eigen::Index n = static_cast<Eigen::Index>(b.idx.size());
      Eigen::VectorXd rhs(n);
      for (Eigen::Index i = 0; i < n; ++i) rhs[i] = std::exp(-d_ * sm_.lambda2[b.idx[i]]) * v[b.idx[i]];
      const Eigen::VectorXd c = -(b.vectors * (b.inverse.asDiagonal() * (b.vectors.transpose() * rhs)));
      out.cost2 += c.dot(b.G * c);
      for (Eigen::Index i = 0; i < n; ++i) out.coeffs[b.idx[i]] = c[i];
    }
    out.effect = Eigen::VectorXd::Zero(sm_.size());
    for (const std::vector<int>& members : sm_.blocks)
      for (int j : members) {
        double acc = 0;
        for (int i : members) {
          if (i >= dim_) continue;
          acc += gramian_weight(d_, sm_.lambda2[i] + sm_.lambda2[j]) * sm_.cauchy_gram(j, i) * out.coeffs[i];
        }
        out.effect[j] = acc;
      }
    out.end_state = heat_evolve(sm_, v, d_) + out.effect;
    return out;
  }

  int digits() const override { return 0; }
  double min_eig() const { return min_eig_; }
  double max_eig() const { return max_eig_; }

 private:
  struct Block {
    std::vector<int> idx;
    Eigen::MatrixXd G, vectors;
    Eigen::VectorXd values, inverse;
  };
  const SpectralModel& sm_;
  Eigen::Index dim_;
  double d_;
  std::vector<Block> blocks_;
  double min_eig_ = 0, max_eig_ = 0;
};

}  // namespace

std::unique_ptr<StageSolver> make_double_stage(const SpectralModel& sm, Eigen::Index dim, double d, ErrorCode code,
                                               const std::string& where) {
  return std::make_unique<DoubleStage>(sm, dim, d, code, where);
}

}  // namespace detail

namespace {

// Extended solves leave at most this fraction of |v0| on E_lambda.
constexpr double kAnnihilationTarget = 1e-12;

void check_model(const SpectralModel& sm, const ControlResult& ctrl) {
  if (ctrl.model_id != sm.id) fail(ErrorCode::ModelMismatch, "control was built on a different spectral model");
}

void check_state(const SpectralModel& sm, const Eigen::VectorXd& v) {
  if (v.size() != sm.size())
    fail(ErrorCode::ModelMismatch,
         "state of size " + std::to_string(v.size()) + " for a model of size " + std::to_string(sm.size()));
}

Eigen::Index checked_truncation(const SpectralModel& sm, double lambda) {
  if (lambda > sm.cutoff * (1 + 1e-12))
    fail(ErrorCode::ConfigError, "lambda = " + fmt17(lambda) + " above the model cutoff " + fmt17(sm.cutoff));
  const Eigen::Index dim = sm.truncation(lambda);
  if (dim == 0) fail(ErrorCode::EmptyTruncation, "no modes with lambda <= " + fmt17(lambda));
  return dim;
}

std::unique_ptr<detail::StageSolver> make_stage(const SpectralModel& sm, Eigen::Index dim, double d, Precision p,
                                                ErrorCode code, const std::string& where, int level = 0) {
  if (p == Precision::Extended) return detail::make_extended_stage(sm, dim, d, code, where, level);
  return detail::make_double_stage(sm, dim, d, code, where);
}

double projection_norm(const SpectralModel& sm, const Eigen::VectorXd& v, Eigen::Index dim) {
  double acc = 0;
  for (Eigen::Index j = 0; j < dim; ++j) acc += v[j] * v[j] / (1 + sm.lambda2[j]);
  return std::sqrt(acc);
}

Eigen::VectorXd partial_effect(const SpectralModel& sm, const ControlSegment& seg, double t) {
  if (seg.extended) return detail::extended_partial_effect(sm, seg, t);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sm.size());
  const double elapsed = t - seg.start;
  for (const std::vector<int>& members : sm.blocks)
    for (int j : members) {
      double acc = 0;
      for (int i : members) {
        if (i >= seg.dim) continue;
        acc += seg.coeffs[i] * sm.cauchy_gram(j, i) * std::exp(-(seg.end - t) * sm.lambda2[i]) *
               gramian_weight(elapsed, sm.lambda2[i] + sm.lambda2[j]);
      }
      out[j] = acc;
    }
  return out;
}

}  // namespace

const char* precision_name(Precision p) { return p == Precision::Double ? "double" : "extended"; }

double gramian_weight(double T, double s) {
  if (s == 0) return T;
  return -std::expm1(-T * s) / s;
}

ObservabilityGramian observability_gramian(const SpectralModel& sm, double lambda, double T) {
  if (!(T > 0)) fail(ErrorCode::ConfigError, "T must be positive");
  const Eigen::Index dim = checked_truncation(sm, lambda);
  ObservabilityGramian g;
  g.lambda = lambda;
  g.T = T;
  g.dim = dim;
  g.G.resize(dim, dim);
  parallel_for(static_cast<std::size_t>(dim), [&](std::size_t i) {
    for (Eigen::Index j = 0; j < dim; ++j)
      g.G(i, j) = gramian_weight(T, sm.lambda2[i] + sm.lambda2[j]) * sm.cauchy_gram(i, j);
  });
  g.min_eig = INFINITY;
  g.max_eig = -INFINITY;
  for (const std::vector<int>& members : sm.blocks) {
    std::vector<int> idx;
    for (int i : members)
      if (i < dim) idx.push_back(i);
    if (idx.empty()) continue;
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) b(i, j) = g.G(idx[i], idx[j]);
    const SymEig e = sym_eig(b, false);
    g.min_eig = std::min(g.min_eig, e.values[0]);
    g.max_eig = std::max(g.max_eig, e.values[n - 1]);
  }
  return g;
}

ControlResult min_norm_control(const SpectralModel& sm, double lambda, const Eigen::VectorXd& v0, double T,
                               Precision p) {
  check_state(sm, v0);
  if (!(T > 0)) fail(ErrorCode::ConfigError, "T must be positive");
  const Eigen::Index dim = checked_truncation(sm, lambda);
  for (Eigen::Index j = dim; j < v0.size(); ++j)
    if (v0[j] != 0) fail(ErrorCode::ConfigError, "v0 has components above lambda");
  const auto stage = make_stage(sm, dim, T, p, ErrorCode::GramianSingular, "lambda = " + fmt17(lambda));
  const double n0 = sm.hm1_norm(v0);
  const detail::StageOutput o = stage->solve(v0, kAnnihilationTarget * n0);
  ControlResult r;
  r.model_id = sm.id;
  r.T = T;
  r.precision = p;
  r.segments.push_back({0, T, lambda, dim, o.coeffs, std::sqrt(std::max(0.0, o.cost2)), o.effect, o.extended});
  r.cost = std::sqrt(std::max(0.0, o.cost2));
  r.terminal = o.end_state;
  r.terminal_norm = sm.hm1_norm(o.end_state);
  r.tolerance = 1e-10;
  r.annihilation.push_back(n0 > 0 ? projection_norm(sm, o.end_state, dim) / n0 : 0.0);
  return r;
}

Eigen::VectorXd control_state(const SpectralModel& sm, const Eigen::VectorXd& v0, const ControlResult& ctrl,
                              double t) {
  check_model(sm, ctrl);
  check_state(sm, v0);
  if (t < 0) fail(ErrorCode::NegativeTime, "t = " + fmt17(t));
  Eigen::VectorXd v = v0;
  double now = 0;
  for (const ControlSegment& seg : ctrl.segments) {
    if (t <= seg.start) break;
    v = heat_evolve(sm, v, seg.start - now);
    if (t >= seg.end) {
      v = heat_evolve(sm, v, seg.end - seg.start) + seg.effect;
      now = seg.end;
    } else {
      return heat_evolve(sm, v, t - seg.start) + partial_effect(sm, seg, t);
    }
  }
  return heat_evolve(sm, v, t - now);
}

Trajectory apply_control(const SpectralModel& sm, const Eigen::VectorXd& v0, const ControlResult& ctrl,
                         const std::vector<double>& t_grid) {
  check_model(sm, ctrl);
  Trajectory tr;
  for (double t : t_grid) {
    const Eigen::VectorXd v = control_state(sm, v0, ctrl, t);
    tr.t.push_back(t);
    tr.hm1.push_back(sm.hm1_norm(v));
    tr.final_state = v;
  }
  return tr;
}

ControlTraces control_traces(const SpectralModel& sm, const ControlResult& ctrl, double t) {
  check_model(sm, ctrl);
  ControlTraces f;
  f.f0 = Eigen::VectorXd::Zero(sm.trace.rows());
  f.f1 = Eigen::VectorXd::Zero(sm.trace.rows());
  for (const ControlSegment& seg : ctrl.segments) {
    if (t < seg.start || t > seg.end) continue;
    Eigen::VectorXd w(seg.dim);
    for (Eigen::Index i = 0; i < seg.dim; ++i) w[i] = seg.coeffs[i] * std::exp(-(seg.end - t) * sm.lambda2[i]);
    f.f0 += sm.trace.leftCols(seg.dim) * w;
    f.f1 -= sm.normal.leftCols(seg.dim) * w;
    break;
  }
  return f;
}

struct LrSolver::Impl {
  const SpectralModel* sm = nullptr;
  double T = 0;
  double lambda0 = 0;
  Precision precision = Precision::Double;
  mutable std::mutex mu;
  mutable std::vector<std::unique_ptr<detail::StageSolver>> stages;
  std::vector<int> hint;

  double stage_lambda(int k) const { return std::min(std::ldexp(lambda0, k), sm->cutoff); }

  const detail::StageSolver& stage(int k) const {
    std::lock_guard<std::mutex> lock(mu);
    while (static_cast<int>(stages.size()) <= k) stages.emplace_back();
    if (!stages[k]) {
      const double lam = stage_lambda(k);
      const double d = std::ldexp(T, -k - 2);
      // Later stages are harder; start where the previous one ended.
      int level = k > 0 && stages[k - 1] ? stages[k - 1]->level() : 0;
      if (k < static_cast<int>(hint.size())) level = std::max(level, hint[k]);
      stages[k] = make_stage(*sm, sm->truncation(lam), d, precision, ErrorCode::StageGramianSingular,
                             "stage " + std::to_string(k) + " (lambda = " + fmt17(lam) + ")", level);
    }
    return *stages[k];
  }
};

LrSolver::LrSolver(const SpectralModel& sm, double T, double lambda0, Precision p) : impl_(std::make_unique<Impl>()) {
  if (!(T > 0)) fail(ErrorCode::ConfigError, "T must be positive");
  if (!(lambda0 > 0)) fail(ErrorCode::ConfigError, "lambda0 must be positive");
  if (sm.cutoff < 16 * lambda0 * (1 - 1e-12))
    fail(ErrorCode::ConfigError, "working cutoff " + fmt17(sm.cutoff) + " below 2^4 lambda0");
  impl_->sm = &sm;
  impl_->T = T;
  impl_->lambda0 = lambda0;
  impl_->precision = p;
}

LrSolver::~LrSolver() = default;

int LrSolver::digits() const {
  int d = 0;
  std::lock_guard<std::mutex> lock(impl_->mu);
  for (const auto& s : impl_->stages)
    if (s) d = std::max(d, s->digits());
  return d;
}

std::vector<int> LrSolver::levels() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  std::vector<int> out;
  for (const auto& s : impl_->stages) out.push_back(s ? s->level() : 0);
  return out;
}

void LrSolver::set_level_hint(std::vector<int> levels) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->hint = std::move(levels);
}

LrResult LrSolver::run(const Eigen::VectorXd& v0, double rho) const {
  const SpectralModel& sm = *impl_->sm;
  check_state(sm, v0);
  const double T = impl_->T;
  LrResult out;
  ControlResult& r = out.control;
  r.model_id = sm.id;
  r.T = T;
  r.precision = impl_->precision;
  r.tolerance = rho;
  const double n0 = sm.hm1_norm(v0);
  Eigen::VectorXd v = v0;
  double cost2 = 0;
  for (int k = 0;; ++k) {
    const double a = T - std::ldexp(T, -k);
    const double d = std::ldexp(T, -k - 2);
    const double lam = impl_->stage_lambda(k);
    const Eigen::Index dim = sm.truncation(lam);
    const detail::StageOutput o = impl_->stage(k).solve(v, kAnnihilationTarget * n0);
    r.segments.push_back({a, a + d, lam, dim, o.coeffs, std::sqrt(std::max(0.0, o.cost2)), o.effect, o.extended});
    cost2 += std::max(0.0, o.cost2);
    r.annihilation.push_back(n0 > 0 ? projection_norm(sm, o.end_state, dim) / n0 : 0.0);
    out.schedule.stages.push_back({a, a + d, lam, StageMode::Control});
    v = o.end_state;
    const bool last = lam >= sm.cutoff * (1 - 1e-12);
    if (last || sm.hm1_norm(heat_evolve(sm, v, d)) <= rho) {
      out.schedule.stages.push_back({a + d, T, lam, StageMode::Dissipate});
      v = heat_evolve(sm, v, T - (a + d));
      break;
    }
    out.schedule.stages.push_back({a + d, a + 2 * d, lam, StageMode::Dissipate});
    v = heat_evolve(sm, v, d);
  }
  r.cost = std::sqrt(cost2);
  r.terminal = v;
  r.terminal_norm = sm.hm1_norm(v);
  return out;
}

LrResult lr_control(const SpectralModel& sm, const Eigen::VectorXd& v0, double T, double lambda0, double rho,
                    Precision p) {
  return LrSolver(sm, T, lambda0, p).run(v0, rho);
}

DualityReport duality_check(const SpectralModel& sm, int trials, std::uint64_t seed) {
  DualityReport rep;
  rep.trials = trials;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0, 1);
  std::normal_distribution<double> gauss;
  const GaussRule gl = gauss_legendre(20);
  const Eigen::Index q = sm.trace.rows();
  Eigen::VectorXd w(q);
  for (Eigen::Index i = 0; i < q; ++i) w[i] = sm.quad.weights[i];
  for (int trial = 0; trial < trials; ++trial) {
    const double T = 0.2 + uni(rng);
    ControlResult ctrl;
    ctrl.model_id = sm.id;
    ctrl.T = T;
    // Two random segments in the adjoint-trace basis.
    const double cut = T * (0.3 + 0.4 * uni(rng));
    for (auto [a, b] : {std::pair{0.0, cut}, std::pair{cut, T}}) {
      ControlSegment seg;
      seg.start = a;
      seg.end = b;
      seg.dim = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(uni(rng) * sm.size()));
      seg.lambda = std::sqrt(sm.lambda2[seg.dim - 1]);
      seg.coeffs.resize(seg.dim);
      for (Eigen::Index i = 0; i < seg.dim; ++i) seg.coeffs[i] = gauss(rng);
      seg.effect = partial_effect(sm, seg, b);
      ctrl.segments.push_back(seg);
    }
    Eigen::VectorXd v0(sm.size()), ut(sm.size());
    for (Eigen::Index j = 0; j < sm.size(); ++j) {
      v0[j] = gauss(rng);
      ut[j] = gauss(rng) / (1 + sm.lambda2[j]);
    }
    const double t = T * (0.5 + 0.5 * uni(rng));
    const double lhs = control_state(sm, v0, ctrl, t).dot(ut);
    double rhs = 0, scale = 0;
    for (Eigen::Index j = 0; j < sm.size(); ++j) {
      const double term = v0[j] * std::exp(-t * sm.lambda2[j]) * ut[j];
      rhs += term;
      scale += std::abs(term);
    }
    // int_0^t <f0, u|Sigma> - <f1, d_nu u|Sigma> on composite Gauss-Legendre panels inside each segment.
    for (const ControlSegment& seg : ctrl.segments) {
      const double a = seg.start, b = std::min(seg.end, t);
      if (b <= a) continue;
      const int panels = 16;
      for (int p = 0; p < panels; ++p) {
        const double pa = a + (b - a) * p / panels, pb = a + (b - a) * (p + 1) / panels;
        for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
          const double s = 0.5 * (pa + pb) + 0.5 * (pb - pa) * gl.nodes[g];
          const double wt = 0.5 * (pb - pa) * gl.weights[g];
          const ControlTraces f = control_traces(sm, ctrl, s);
          Eigen::VectorXd us(sm.size());
          for (Eigen::Index j = 0; j < sm.size(); ++j) us[j] = ut[j] * std::exp(-(t - s) * sm.lambda2[j]);
          const Eigen::VectorXd tr = sm.trace * us, nr = sm.normal * us;
          const double val = (w.array() * f.f0.array() * tr.array()).sum() -
                             (w.array() * f.f1.array() * nr.array()).sum();
          rhs += wt * val;
          scale += wt * std::abs(val);
        }
      }
    }
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(lhs - rhs) / std::max(scale, 1e-300));
  }
  return rep;
}

double miller_f(const LfFit& fit, double r, double eps, double T) {
  return std::exp(-(2 / T) * (fit.a / r + fit.b / eps)) / (2 * fit.a0 * fit.a0);
}

MillerReport miller_check(const SpectralModel& sm, const LfFit& fit, double q, double T_star, int trials,
                          std::uint64_t seed) {
  if (!(q > 0 && q < 1)) fail(ErrorCode::ConfigError, "q must lie in (0, 1)");
  if (!(T_star > 0) || !(fit.a0 > 0) || fit.a < 0 || fit.b < 0)
    fail(ErrorCode::ConfigError, "Miller check needs T_star > 0, a0 > 0 and a, b >= 0");
  MillerReport rep;
  rep.q = q;
  rep.eps = 0.5;
  rep.fit = fit;
  rep.trials = trials;
  const double be = fit.b / rep.eps;
  const double c = q * (1 - rep.eps);
  rep.r = be > 0 ? (-fit.a + std::sqrt(fit.a * fit.a + 4 * be * c)) / (2 * be) : c / std::max(fit.a, 1e-300);
  const int n_grid = 10;
  std::vector<Eigen::MatrixXd> grams(n_grid);
  std::vector<double> ts(n_grid);
  for (int g = 0; g < n_grid; ++g) {
    ts[g] = T_star * (g + 1) / n_grid * (1 - 1e-9);
    Eigen::MatrixXd G(sm.size(), sm.size());
    for (Eigen::Index i = 0; i < sm.size(); ++i)
      for (Eigen::Index j = 0; j < sm.size(); ++j)
        G(i, j) = gramian_weight(ts[g], sm.lambda2[i] + sm.lambda2[j]) * sm.cauchy_gram(i, j);
    grams[g] = std::move(G);
  }
  rep.worst_conclusion_margin = INFINITY;
  for (int k = 0; k < trials; ++k) {
    const int g = k % n_grid;
    const double T = ts[g];
    const Eigen::VectorXd y = random_state(sm, seed + static_cast<std::uint64_t>(k), 1);
    const double obs = y.dot(grams[g] * y);
    const double ny = sm.norm(y, 1);
    const double nT = sm.norm(heat_evolve(sm, y, T), 1);
    const double hyp_lhs = miller_f(fit, rep.r, rep.eps, T) * nT * nT - miller_f(fit, rep.r, rep.eps, q * T) * ny * ny;
    const double concl_lhs = miller_f(fit, rep.r, rep.eps, (1 - q) * T) * nT * nT;
    const bool hyp = hyp_lhs <= obs;
    const bool concl = concl_lhs <= obs;
    if (hyp) ++rep.hypothesis_holds;
    if (!concl) ++rep.conclusion_violations;
    if (hyp && !concl) ++rep.implication_violations;
    const double margin = concl_lhs > 0 ? std::log(obs) - std::log(concl_lhs) : INFINITY;
    rep.worst_conclusion_margin = std::min(rep.worst_conclusion_margin, margin);
  }
  return rep;
}

}  // namespace lab

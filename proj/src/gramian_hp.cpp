#include "control_internal.hpp"
#include "hp.hpp"
#include "lab/errors.hpp"
#include "lab/lrcontrol.hpp"
#include "lab/numeric.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <tuple>

namespace lab {

namespace {

constexpr unsigned kStoreDigits = 240;
using Store = hp::Real<kStoreDigits>;

}  // namespace

struct ExtendedCoefficients {
  std::vector<Store> c;
  double d = 0;
};

namespace detail {

namespace {


template <unsigned D>
hp::Real<D> from_store(const Store& x) {
  hp::Real<D> y;
  mpfr_set(y.backend().data(), x.backend().data(), MPFR_RNDN);
  return y;
}

Store store_expm1_ratio(const Store& d, long s) {
  if (s == 0) return d;
  Store x = -d * s, y;
  mpfr_expm1(y.backend().data(), x.backend().data(), MPFR_RNDN);
  return -y / s;
}

struct TorusMode {
  int m = 0, n = 0;
  bool cos_x = true, cos_y = true;
  long l2 = 0;
};

// Exact Cauchy Gram of the real torus basis on coordinate circles, stored row-wise.
struct ExactTrace {
  std::vector<TorusMode> modes;
  std::vector<std::vector<std::pair<int, Store>>> rows;
  bool swap_symmetric = false;
  std::vector<int> swap;  // mode index of (n, m) with the factor types exchanged
};

ExactTrace exact_trace(const SpectralModel& sm) {
  if (sm.manifold.kind() != ManifoldKind::Torus2)
    fail(ErrorCode::UnsupportedPair, "extended precision is available on the torus only");
  int nx = 0, ny = 0;
  for (const SigmaComponent& c : sm.sigma.components) {
    if (c.kind == SigmaKind::TorusCircleX0) ++nx;
    else if (c.kind == SigmaKind::TorusCircleY0) ++ny;
    else fail(ErrorCode::UnsupportedPair, "extended precision needs coordinate circles");
  }
  ExactTrace ex;
  const int n = static_cast<int>(sm.size());
  ex.modes.resize(n);
  std::map<std::tuple<int, int, bool, bool>, int> lookup;
  for (int i = 0; i < n; ++i) {
    const ModeLabel& l = sm.modes[i].label;
    TorusMode& t = ex.modes[i];
    t.m = l.a;
    t.n = l.b;
    t.cos_x = l.tag.at(0) == 'c';
    t.cos_y = l.tag.at(1) == 'c';
    t.l2 = long(t.m) * t.m + long(t.n) * t.n;
    lookup[{t.m, t.n, t.cos_x, t.cos_y}] = i;
  }
  const Store pi = boost::math::constants::pi<Store>();
  auto norm = [&](bool is_cos, int k) { return is_cos && k == 0 ? 1 / sqrt(2 * pi) : 1 / sqrt(pi); };
  // On x = 0: trace Nx fx(0) g(y), normal Nx fx'(0) g(y); the y-integral of the normalized g factors is delta.
  std::map<std::pair<int, int>, Store> entries;
  std::map<std::tuple<bool, int>, std::vector<int>> by_y, by_x;
  for (int i = 0; i < n; ++i) {
    by_y[{ex.modes[i].cos_y, ex.modes[i].n}].push_back(i);
    by_x[{ex.modes[i].cos_x, ex.modes[i].m}].push_back(i);
  }
  auto add = [&](int i, int j, const Store& v) {
    auto [it, fresh] = entries.try_emplace({i, j}, v);
    if (!fresh) it->second += v;
  };
  for (int rep = 0; rep < nx; ++rep)
    for (const auto& [key, group] : by_y)
      for (int i : group)
        for (int j : group) {
          const TorusMode &a = ex.modes[i], &b = ex.modes[j];
          if (a.cos_x != b.cos_x) continue;
          Store v = norm(a.cos_x, a.m) * norm(b.cos_x, b.m);
          if (!a.cos_x) v *= Store(a.m) * b.m;
          add(i, j, v);
        }
  for (int rep = 0; rep < ny; ++rep)
    for (const auto& [key, group] : by_x)
      for (int i : group)
        for (int j : group) {
          const TorusMode &a = ex.modes[i], &b = ex.modes[j];
          if (a.cos_y != b.cos_y) continue;
          Store v = norm(a.cos_y, a.n) * norm(b.cos_y, b.n);
          if (!a.cos_y) v *= Store(a.n) * b.n;
          add(i, j, v);
        }
  ex.rows.resize(n);
  for (auto& [ij, v] : entries) ex.rows[ij.first].emplace_back(ij.second, v);
  ex.swap_symmetric = nx == ny;
  if (ex.swap_symmetric) {
    ex.swap.resize(n);
    for (int i = 0; i < n; ++i) {
      const TorusMode& t = ex.modes[i];
      ex.swap[i] = lookup.at({t.n, t.m, t.cos_y, t.cos_x});
    }
  }
  return ex;
}

const Store* find_entry(const std::vector<std::pair<int, Store>>& row, int j) {
  auto it = std::lower_bound(row.begin(), row.end(), j, [](const auto& e, int k) { return e.first < k; });
  return it != row.end() && it->first == j ? &it->second : nullptr;
}

// Basis vector: one mode, or (e_i +- e_j)/sqrt(2).
struct BasisVec {
  int i = 0;
  int j = -1;
  int sign = 1;
};

// Orthonormal pieces of E_lambda invariant under the Gramian. `mirrors` reuse the same matrix on the image block.
struct Part {
  std::vector<BasisVec> basis;
  std::vector<std::vector<int>> mirrors;
};

std::vector<Part> split_parts(const SpectralModel& sm, const ExactTrace& ex, int dim) {
  std::vector<std::vector<int>> blocks;
  std::vector<int> block_of(sm.size(), -1);
  for (const std::vector<int>& members : sm.blocks) {
    std::vector<int> b;
    for (int i : members)
      if (i < dim) b.push_back(i);
    if (b.empty()) continue;
    for (int i : b) block_of[i] = static_cast<int>(blocks.size());
    blocks.push_back(std::move(b));
  }
  std::vector<Part> parts;
  std::vector<bool> done(blocks.size(), false);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (done[k]) continue;
    done[k] = true;
    const std::vector<int>& b = blocks[k];
    if (!ex.swap_symmetric) {
      Part p;
      for (int i : b) p.basis.push_back({i});
      parts.push_back(std::move(p));
      continue;
    }
    const int image = block_of[ex.swap[b.front()]];
    if (image != static_cast<int>(k)) {
      Part p;
      std::vector<int> mirror;
      for (int i : b) {
        p.basis.push_back({i});
        mirror.push_back(ex.swap[i]);
      }
      p.mirrors.push_back(std::move(mirror));
      done[image] = true;
      parts.push_back(std::move(p));
      continue;
    }
    Part plus, minus;
    for (int i : b) {
      const int j = ex.swap[i];
      if (j == i) plus.basis.push_back({i});
      if (i < j) {
        plus.basis.push_back({i, j, 1});
        minus.basis.push_back({i, j, -1});
      }
    }
    if (!plus.basis.empty()) parts.push_back(std::move(plus));
    if (!minus.basis.empty()) parts.push_back(std::move(minus));
  }
  return parts;
}

struct Context {
  const SpectralModel* sm = nullptr;
  int dim = 0;
  Store d;
  ExactTrace ex;
  std::vector<Part> parts;
  std::vector<Store> weight;  // weight[s] = (1 - e^{-d s})/s for integer s
  std::vector<Store> decay;   // decay[l2] = e^{-d l2}
};

std::unique_ptr<Context> make_context(const SpectralModel& sm, Eigen::Index dim, double d) {
  auto ctx = std::make_unique<Context>();
  ctx->sm = &sm;
  ctx->dim = static_cast<int>(dim);
  ctx->d = Store(d);
  ctx->ex = exact_trace(sm);
  ctx->parts = split_parts(sm, ctx->ex, ctx->dim);
  long lmax = 0;
  for (const TorusMode& t : ctx->ex.modes) lmax = std::max(lmax, t.l2);
  ctx->weight.resize(2 * lmax + 1);
  for (long s = 0; s <= 2 * lmax; ++s) ctx->weight[s] = store_expm1_ratio(ctx->d, s);
  ctx->decay.resize(lmax + 1);
  for (long s = 0; s <= lmax; ++s) ctx->decay[s] = exp(-ctx->d * s);
  return ctx;
}

class TierBase {
 public:
  virtual ~TierBase() = default;
  virtual bool factor() = 0;
  // Empty when the residual shows the precision is insufficient.
  virtual std::optional<StageOutput> solve(const Eigen::VectorXd& v, double abs_tol) const = 0;
  // Smallest and largest eigenvalue over all parts; empty if the precision is insufficient.
  virtual std::optional<std::pair<double, double>> extreme_eigs() const = 0;
  virtual int digits() const = 0;
};

// Largest eigenvalue of a symmetric operator by Lanczos with full reorthogonalization.
double lanczos_max(int n, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op, std::uint64_t seed) {
  if (n == 1) return op(Eigen::VectorXd::Ones(1))[0];
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = g(rng);
  q.normalize();
  const int kmax = std::min(n, 150);
  Eigen::MatrixXd Q(n, kmax);
  std::vector<double> alpha, beta;
  double prev = 0;
  for (int k = 0; k < kmax; ++k) {
    Q.col(k) = q;
    Eigen::VectorXd w = op(q);
    const double a = q.dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).transpose() * w);
    const double b = w.norm();
    const int m = k + 1;
    Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      Tm(i, i) = alpha[i];
      if (i + 1 < m) Tm(i, i + 1) = Tm(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
    const double top = es.eigenvalues()[m - 1];
    const double resid = std::abs(b * es.eigenvectors()(m - 1, m - 1));
    if (resid <= 1e-13 * std::abs(top) || b <= 1e-300 * std::abs(a) || m == n) return top;
    if (k > 4 && std::abs(top - prev) <= 1e-15 * std::abs(top) && resid <= 1e-9 * std::abs(top)) return top;
    prev = top;
    beta.push_back(b);
    q = w / b;
  }
  return prev;
}

template <unsigned D>
class Tier final : public TierBase {
  using R = hp::Real<D>;

 public:
  explicit Tier(const Context& ctx) : ctx_(ctx) {}

  bool factor() override {
    const std::size_t np = ctx_.parts.size();
    factors_.assign(np, {});
    std::vector<char> ok(np, 1);
    parallel_for(np, [&](std::size_t p) { ok[p] = factor_part(ctx_.parts[p], factors_[p]) ? 1 : 0; });
    return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
  }

  std::optional<StageOutput> solve(const Eigen::VectorXd& v, double abs_tol) const override {
    const SpectralModel& sm = *ctx_.sm;
    const int n = static_cast<int>(sm.size());
    const int dim = ctx_.dim;
    std::vector<R> b(dim), c(dim, R(0));
    R bnorm2 = 0;
    for (int i = 0; i < dim; ++i) {
      b[i] = from_store<D>(ctx_.decay[ctx_.ex.modes[i].l2]) * R(v[i]);
      bnorm2 += b[i] * b[i];
    }
    for (std::size_t p = 0; p < ctx_.parts.size(); ++p) {
      const Part& part = ctx_.parts[p];
      solve_into(part, factors_[p], b, c, nullptr);
      for (const std::vector<int>& mirror : part.mirrors) solve_into(part, factors_[p], b, c, &mirror);
    }
    // State at the segment end: e^{-d Lambda} v + sum_i w(d, l_i + l_j) S_ji c_i.
    std::vector<R> end(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      R acc = from_store<D>(ctx_.decay[ctx_.ex.modes[j].l2]) * R(v[j]);
      for (const auto& [i, s] : ctx_.ex.rows[j]) {
        if (i >= dim) continue;
        const R w = from_store<D>(ctx_.weight[ctx_.ex.modes[i].l2 + ctx_.ex.modes[j].l2]) * from_store<D>(s);
        hp::fma_into(acc, w, c[i]);
      }
      end[j] = acc;
    });
    R resid2 = 0, cost2 = 0;
    for (int i = 0; i < dim; ++i) {
      resid2 += end[i] * end[i] / (1 + ctx_.ex.modes[i].l2);
      cost2 -= c[i] * b[i];
    }
    if (bnorm2 > 0 && resid2 > R(abs_tol) * R(abs_tol)) return std::nullopt;
    StageOutput out;
    out.coeffs.resize(dim);
    auto ext = std::make_shared<ExtendedCoefficients>();
    ext->c.resize(dim);
    ext->d = static_cast<double>(ctx_.d);
    for (int i = 0; i < dim; ++i) {
      out.coeffs[i] = static_cast<double>(c[i]);
      mpfr_set(ext->c[i].backend().data(), c[i].backend().data(), MPFR_RNDN);
    }
    out.extended = std::move(ext);
    out.end_state.resize(n);
    out.effect.resize(n);
    for (int j = 0; j < n; ++j) {
      out.end_state[j] = static_cast<double>(end[j]);
      out.effect[j] = static_cast<double>(end[j] - from_store<D>(ctx_.decay[ctx_.ex.modes[j].l2]) * R(v[j]));
    }
    out.cost2 = static_cast<double>(cost2);
    return out;
  }

  std::optional<std::pair<double, double>> extreme_eigs() const override {
    double lo = INFINITY, hi = 0;
    std::vector<std::pair<double, double>> per(ctx_.parts.size());
    parallel_for(ctx_.parts.size(), [&](std::size_t p) {
      const Factor& f = factors_[p];
      const int n = f.n;
      Eigen::MatrixXd g(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = static_cast<double>(f.g[i * n + j]);
      const double top = lanczos_max(n, [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(g * x); }, 7 + p);
      const double inv_top = lanczos_max(
          n,
          [&](const Eigen::VectorXd& x) {
            std::vector<R> r(n);
            for (int i = 0; i < n; ++i) r[i] = R(x[i]);
            solve_factored(f, r);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) y[i] = static_cast<double>(r[i]);
            return y;
          },
          11 + p);
      per[p] = {1 / inv_top, top};
    });
    for (const auto& [a, b] : per) {
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    }
    // Backward error of the factorization is about n 10^{-D} |G|.
    const double floor = std::pow(10.0, -static_cast<double>(D) + 20);
    if (!(lo > floor * hi)) return std::nullopt;
    return std::make_pair(lo, hi);
  }

  int digits() const override { return static_cast<int>(D); }

 private:
  struct Factor {
    int n = 0;
    std::vector<R> l;  // row-major lower triangle
    std::vector<R> g;  // assembled matrix, kept for the eigenvalue estimates
  };

  // Entry (e_a, G e_b) for basis vectors a and b.
  R gram_entry(const BasisVec& a, const BasisVec& b) const {
    const R half = R(1) / R(2);
    auto g = [&](int i, int j) -> R {
      const Store* s = find_entry(ctx_.ex.rows[i], j);
      if (!s) return R(0);
      return from_store<D>(ctx_.weight[ctx_.ex.modes[i].l2 + ctx_.ex.modes[j].l2]) * from_store<D>(*s);
    };
    if (a.j < 0 && b.j < 0) return g(a.i, b.i);
    if (a.j < 0) return (g(a.i, b.i) + R(b.sign) * g(a.i, b.j)) * sqrt(half);
    if (b.j < 0) return (g(a.i, b.i) + R(a.sign) * g(a.j, b.i)) * sqrt(half);
    return (g(a.i, b.i) + R(b.sign) * g(a.i, b.j) + R(a.sign) * g(a.j, b.i) + R(a.sign * b.sign) * g(a.j, b.j)) *
           half;
  }

  bool factor_part(const Part& part, Factor& f) const {
    const int n = static_cast<int>(part.basis.size());
    f.n = n;
    f.g.assign(static_cast<std::size_t>(n) * n, R(0));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b <= a; ++b) f.g[a * n + b] = f.g[b * n + a] = gram_entry(part.basis[a], part.basis[b]);
    f.l = f.g;
    std::vector<R>& l = f.l;
    for (int j = 0; j < n; ++j) {
      R acc = 0;
      for (int k = 0; k < j; ++k) hp::fma_into(acc, l[j * n + k], l[j * n + k]);
      const R dj = l[j * n + j] - acc;
      if (!(dj > 0)) return false;
      l[j * n + j] = sqrt(dj);
      const R inv = 1 / l[j * n + j];
      for (int i = j + 1; i < n; ++i) {
        R s = 0;
        const R* li = &l[i * n];
        const R* lj = &l[j * n];
        for (int k = 0; k < j; ++k) hp::fma_into(s, li[k], lj[k]);
        l[i * n + j] = (l[i * n + j] - s) * inv;
      }
    }
    return true;
  }

  // r <- G^{-1} r
  void solve_factored(const Factor& f, std::vector<R>& r) const {
    const int n = f.n;
    const std::vector<R>& l = f.l;
    for (int i = 0; i < n; ++i) {
      R s = 0;
      for (int k = 0; k < i; ++k) hp::fma_into(s, l[i * n + k], r[k]);
      r[i] = (r[i] - s) / l[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
      r[i] /= l[i * n + i];
      const R xi = -r[i];
      for (int k = 0; k < i; ++k) hp::fma_into(r[k], l[i * n + k], xi);
    }
  }

  // c += E G_part^{-1} E^T (-b) on the part, or on its mirror image.
  void solve_into(const Part& part, const Factor& f, const std::vector<R>& b, std::vector<R>& c,
                  const std::vector<int>* mirror) const {
    const int n = f.n;
    const R h = sqrt(R(1) / R(2));
    std::vector<R> r(n);
    for (int a = 0; a < n; ++a) {
      const BasisVec& e = part.basis[a];
      if (mirror) r[a] = -b[(*mirror)[a]];
      else if (e.j < 0) r[a] = -b[e.i];
      else r[a] = -(b[e.i] + R(e.sign) * b[e.j]) * h;
    }
    solve_factored(f, r);
    for (int a = 0; a < n; ++a) {
      const BasisVec& e = part.basis[a];
      if (mirror) {
        c[(*mirror)[a]] += r[a];
      } else if (e.j < 0) {
        c[e.i] += r[a];
      } else {
        c[e.i] += r[a] * h;
        c[e.j] += R(e.sign) * r[a] * h;
      }
    }
  }

  const Context& ctx_;
  std::vector<Factor> factors_;
};

constexpr int kTiers = 4;

std::unique_ptr<TierBase> make_tier(int level, const Context& ctx) {
  switch (level) {
    case 0: return std::make_unique<Tier<60>>(ctx);
    case 1: return std::make_unique<Tier<120>>(ctx);
    case 2: return std::make_unique<Tier<180>>(ctx);
    default: return std::make_unique<Tier<kStoreDigits>>(ctx);
  }
}

class ExtendedStage final : public StageSolver {
 public:
  ExtendedStage(const SpectralModel& sm, Eigen::Index dim, double d, ErrorCode code, std::string where, int level)
      : ctx_(make_context(sm, dim, d)), code_(code), where_(std::move(where)) {
    raise_until_factored(std::clamp(level, 0, kTiers - 1));
  }

  StageOutput solve(const Eigen::VectorXd& v, double abs_tol) const override {
    std::lock_guard<std::mutex> lock(mu_);
    for (;;) {
      if (auto out = tier_->solve(v, abs_tol)) return *out;
      if (level_ + 1 >= kTiers)
        fail(code_, where_ + ": residual above " + fmt17(abs_tol) + " at " + std::to_string(tier_->digits()) +
                        " digits");
      raise_until_factored(level_ + 1);
    }
  }

  std::pair<double, double> extreme_eigs() {
    std::lock_guard<std::mutex> lock(mu_);
    for (;;) {
      if (auto e = tier_->extreme_eigs()) return *e;
      if (level_ + 1 >= kTiers)
        fail(code_, where_ + ": smallest eigenvalue below the resolution of " + std::to_string(tier_->digits()) +
                        " digits");
      raise_until_factored(level_ + 1);
    }
  }

  int digits() const override { return tier_->digits(); }
  int level() const override { return level_; }

 private:
  void raise_until_factored(int level) const {
    for (; level < kTiers; ++level) {
      auto t = make_tier(level, *ctx_);
      if (t->factor()) {
        tier_ = std::move(t);
        level_ = level;
        return;
      }
    }
    fail(code_, where_ + ": Cholesky breaks down at " + std::to_string(kStoreDigits) + " digits");
  }

  std::unique_ptr<Context> ctx_;
  ErrorCode code_;
  std::string where_;
  mutable std::mutex mu_;
  mutable std::unique_ptr<TierBase> tier_;
  mutable int level_ = 0;
};

}  // namespace

std::unique_ptr<StageSolver> make_extended_stage(const SpectralModel& sm, Eigen::Index dim, double d, ErrorCode code,
                                                 const std::string& where, int level) {
  return std::make_unique<ExtendedStage>(sm, dim, d, code, where, level);
}

Eigen::VectorXd extended_partial_effect(const SpectralModel& sm, const ControlSegment& seg, double t) {
  const ExactTrace ex = exact_trace(sm);
  const int n = static_cast<int>(sm.size());
  const Store elapsed(t - seg.start), remain(seg.end - t);
  std::map<long, Store> wcache, dcache;
  auto weight = [&](long s) -> const Store& {
    auto it = wcache.find(s);
    if (it == wcache.end()) it = wcache.emplace(s, store_expm1_ratio(elapsed, s)).first;
    return it->second;
  };
  auto decay = [&](long s) -> const Store& {
    auto it = dcache.find(s);
    if (it == dcache.end()) it = dcache.emplace(s, Store(exp(-remain * s))).first;
    return it->second;
  };
  Eigen::VectorXd out(n);
  for (int j = 0; j < n; ++j) {
    Store acc = 0;
    for (const auto& [i, s] : ex.rows[j]) {
      if (i >= seg.dim) continue;
      acc += seg.extended->c[i] * s * decay(ex.modes[i].l2) * weight(ex.modes[i].l2 + ex.modes[j].l2);
    }
    out[j] = static_cast<double>(acc);
  }
  return out;
}

}  // namespace detail

ExtendedMinEig gramian_min_eig_extended(const SpectralModel& sm, double lambda, double T) {
  if (!(T > 0)) fail(ErrorCode::ConfigError, "T must be positive");
  if (lambda > sm.cutoff * (1 + 1e-12))
    fail(ErrorCode::ConfigError, "lambda = " + fmt17(lambda) + " above the model cutoff " + fmt17(sm.cutoff));
  const Eigen::Index dim = sm.truncation(lambda);
  if (dim == 0) fail(ErrorCode::EmptyTruncation, "no modes with lambda <= " + fmt17(lambda));
  detail::ExtendedStage stage(sm, dim, T, ErrorCode::GramianSingular, "lambda = " + fmt17(lambda), 0);
  const auto [lo, hi] = stage.extreme_eigs();
  ExtendedMinEig out;
  out.min_eig = lo;
  out.max_eig = hi;
  out.digits = stage.digits();
  out.dim = dim;
  return out;
}

}  // namespace lab

#include "lab/errors.hpp"
#include "lab/lrcontrol.hpp"
#include "lab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace lab {

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

void check_size(const SpectralModel& sm, const Eigen::VectorXd& v) {
  if (v.size() != sm.size())
    fail(ErrorCode::ModelMismatch,
         "vector of size " + std::to_string(v.size()) + " for a model of size " + std::to_string(sm.size()));
}

}  // namespace

Eigen::Index SpectralModel::truncation(double lambda) const {
  if (lambda < 0) return 0;
  const double l2 = lambda * lambda * (1 + 1e-12) + 1e-12;
  return static_cast<Eigen::Index>(std::upper_bound(lambda2.data(), lambda2.data() + lambda2.size(), l2) -
                                   lambda2.data());
}

double SpectralModel::norm(const Eigen::VectorXd& v, double s) const {
  check_size(*this, v);
  double acc = 0;
  for (Eigen::Index j = 0; j < v.size(); ++j) acc += std::pow(1 + lambda2[j], s) * v[j] * v[j];
  return std::sqrt(acc);
}

SpectralModel make_spectral_model(const ManifoldModel& m, const Hypersurface& sigma, double cutoff, int nodes) {
  m.require(sigma);
  if (!(cutoff >= 0)) fail(ErrorCode::ConfigError, "cutoff must be non-negative");
  SpectralModel sm;
  sm.manifold = m;
  sm.sigma = sigma;
  sm.cutoff = cutoff;
  switch (m.kind()) {
    case ManifoldKind::Torus2: sm.modes = torus_real_modes(cutoff); break;
    case ManifoldKind::Sphere2: {
      int lmax = 0;
      while (std::sqrt(double(lmax + 1) * (lmax + 2)) <= cutoff * (1 + 1e-12)) ++lmax;
      sm.modes = sphere_real_modes(lmax);
      break;
    }
    case ManifoldKind::Revolution:
      fail(ErrorCode::UnsupportedKind, "spectral models are built on the torus and the sphere");
  }
  const Eigen::Index n = sm.size();
  sm.lambda2.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const ModeLabel& l = sm.modes[j].label;
    sm.lambda2[j] = m.kind() == ManifoldKind::Torus2 ? double(l.a) * l.a + double(l.b) * l.b : double(l.a) * (l.a + 1);
  }
  // Products of two traces are trigonometric of degree <= 2 cutoff, integrated exactly by the trapezoid.
  if (nodes <= 0) nodes = 2 * static_cast<int>(std::ceil(cutoff)) + 8;
  sm.quad = sigma_quadrature(m, sigma, nodes);
  const Eigen::Index q = static_cast<Eigen::Index>(sm.quad.nodes.size());
  sm.trace.resize(q, n);
  sm.normal.resize(q, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    const TraceSamples t = sample_traces(sm.modes[j], m, sigma, sm.quad);
    sm.trace.col(j) = t.trace.real();
    sm.normal.col(j) = t.normal.real();
  });
  Eigen::VectorXd w(q);
  for (Eigen::Index i = 0; i < q; ++i) w[i] = sm.quad.weights[i];
  const Eigen::MatrixXd wt = w.asDiagonal() * sm.trace;
  const Eigen::MatrixXd wn = w.asDiagonal() * sm.normal;
  sm.cauchy_gram.noalias() = sm.trace.transpose() * wt;
  sm.cauchy_gram.noalias() += sm.normal.transpose() * wn;
  sm.cauchy_gram = 0.5 * (sm.cauchy_gram + sm.cauchy_gram.transpose()).eval();

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const Eigen::VectorXd d = sm.cauchy_gram.diagonal();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(sm.cauchy_gram(i, j)) > 1e-10 * std::sqrt(d[i] * d[j])) {
        const int a = find_root(parent, static_cast<int>(i));
        const int b = find_root(parent, static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  sm.block_of.assign(n, -1);
  std::vector<int> root_block(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = find_root(parent, static_cast<int>(i));
    if (root_block[r] < 0) {
      root_block[r] = static_cast<int>(sm.blocks.size());
      sm.blocks.emplace_back();
    }
    sm.block_of[i] = root_block[r];
    sm.blocks[root_block[r]].push_back(static_cast<int>(i));
  }

  std::uint64_t h = mix(0, static_cast<std::uint64_t>(m.kind()));
  h = mix(h, std::hash<std::string>{}(sigma.name()));
  for (const SigmaComponent& c : sigma.components) h = mix(h, static_cast<std::uint64_t>(c.coorientation + 2));
  h = mix(h, std::hash<double>{}(cutoff));
  h = mix(h, static_cast<std::uint64_t>(nodes));
  sm.id = h;
  return sm;
}

Eigen::VectorXd random_state(const SpectralModel& sm, std::uint64_t seed, double s) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(sm.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = g(rng);
  const double nv = sm.norm(v, s);
  return nv > 0 ? (v / nv).eval() : v;
}

Eigen::VectorXd heat_evolve(const SpectralModel& sm, const Eigen::VectorXd& v, double t) {
  if (t < 0) fail(ErrorCode::NegativeTime, "t = " + fmt17(t));
  check_size(sm, v);
  Eigen::VectorXd out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) out[j] = std::exp(-sm.lambda2[j] * t) * v[j];
  return out;
}

Eigen::VectorXd elliptic_evolve(const SpectralModel& sm, const Eigen::VectorXd& v0, const Eigen::VectorXd& v1,
                                double s) {
  check_size(sm, v0);
  check_size(sm, v1);
  Eigen::VectorXd out(v0.size());
  for (Eigen::Index j = 0; j < v0.size(); ++j) {
    const double l = std::sqrt(sm.lambda2[j]);
    if (l == 0) {
      out[j] = v0[j] + s * v1[j];
    } else {
      out[j] = std::cosh(s * l) * v0[j] + std::sinh(s * l) / l * v1[j];
    }
  }
  return out;
}

AdmissibilityTable admissibility_check(const SpectralModel& sm, double T) {
  if (!(T > 0)) fail(ErrorCode::NegativeTime, "T = " + fmt17(T));
  AdmissibilityTable table;
  table.T = T;
  for (Eigen::Index j = 0; j < sm.size(); ++j) {
    AdmissibilityRow row;
    row.lambda = std::sqrt(sm.lambda2[j]);
    row.cauchy2 = sm.cauchy_gram(j, j);
    row.ratio = row.cauchy2 * gramian_weight(T, 2 * sm.lambda2[j]) / (1 + sm.lambda2[j]);
    table.max_ratio = std::max(table.max_ratio, row.ratio);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace lab

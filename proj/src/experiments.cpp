#include "exp_internal.hpp"
#include "lab/errors.hpp"
#include "lab/expcli.hpp"
#include "lab/lrcontrol.hpp"
#include "lab/numeric.hpp"
#include "lab/raydyn.hpp"
#include "lab/spectral.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace lab {

namespace {

using Json = nlohmann::json;

constexpr double kPi = std::numbers::pi;

const Json kUnion = Json::array({"x0", "y0"});

Json torus_default() { return {{"kind", "torus2"}}; }

Json defaults_for(const std::string& e) {
  if (e == "tgcc")
    return {{"manifold", torus_default()}, {"sigma", kUnion},   {"horizon", 2 * kPi * std::sqrt(2.0) + 0.1},
            {"nx", 64},                    {"ndir", 128},        {"step", 1e-3},
            {"eps_min", 1e-6},             {"sigma_probes", 16}, {"expect", "any"}};
  if (e == "spectra")
    return {{"manifold", torus_default()}, {"sigma", kUnion}, {"cutoff", 20.0}, {"bound", "genLow"}, {"nodes", 0}};
  if (e == "counterexample-sphere") return {{"lmin", 20}, {"lmax", 200}};
  if (e == "counterexample-revolution")
    return {{"profile", nullptr}, {"kmin", 20}, {"kmax", 160}, {"kstep", 10}, {"grid", 4000}, {"eps", 0.05}};
  if (e == "kernel")
    return {{"T", 1.0},  {"S", 1.0},     {"delta", 0.5},   {"alpha", 0.0},
            {"grid", 64}, {"step", 1e-3}, {"n_max", 200},  {"tol", 1e-12}};
  if (e == "gramian")
    return {{"manifold", torus_default()},
            {"sigma", kUnion},
            {"lambda_grid", Json::array({4.0, 8.0, 16.0, 32.0})},
            {"T_grid", Json::array({1.0})},
            {"precision", "extended"}};
  if (e == "control")
    return {{"manifold", torus_default()}, {"sigma", kUnion}, {"T", 0.5},           {"lambda0", 2.0},
            {"work_cutoff", 32.0},         {"seed", 7},       {"rho", 0.0},         {"precision", "extended"},
            {"target", 1e-6}};
  if (e == "accept-all") return {{"criteria", Json::array({1, 2, 3, 4, 5, 6, 7, 8, 9})}};
  fail(ErrorCode::ConfigError, "unknown experiment '" + e + "'");
}

bool same_kind(const Json& def, const Json& v) {
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array() || (v.is_string() && !def.empty() && def[0].is_string());
  if (def.is_boolean()) return v.is_boolean();
  return true;  // null or object: validated when used
}

Precision parse_precision(const std::string& s) {
  if (s == "double") return Precision::Double;
  if (s == "extended") return Precision::Extended;
  fail(ErrorCode::ConfigError, "precision must be 'double' or 'extended'");
}

ManifoldSetup setup_of(const Json& p) {
  Json d = p.at("manifold");
  if (!d.is_object()) fail(ErrorCode::ConfigError, "manifold must be an object");
  if (d.contains("sigma")) fail(ErrorCode::ConfigError, "give sigma as a separate parameter");
  d["sigma"] = p.at("sigma");
  return build_manifold(d);
}

void materialize_setup(Json& p) {
  const Json desc = describe(setup_of(p));
  Json m = desc;
  m.erase("sigma");
  p["manifold"] = m;
  p["sigma"] = desc.at("sigma");
}

Json point(const Vec2& v) { return Json::array({v[0], v[1]}); }

std::string verdict_of(const TgccReport& r) {
  if (r.pass) return "PassAtResolution";
  if (!r.rays.empty() && r.inconclusive_count == static_cast<int>(r.rays.size())) return "Inconclusive";
  return "FailWitness";
}

std::string sidecar(const std::string& out, const std::string& suffix) {
  if (out.empty()) return "";
  const auto dot = out.find_last_of('.');
  const auto slash = out.find_last_of('/');
  const std::string stem = dot != std::string::npos && (slash == std::string::npos || dot > slash) ? out.substr(0, dot) : out;
  return stem + suffix;
}

// ---- experiments ----

void run_tgcc(const ExperimentConfig& c, RunReport& rep) {
  const Json& p = c.params;
  const ManifoldSetup s = setup_of(p);
  TgccSampling sampling;
  sampling.nx = p.at("nx");
  sampling.ndir = p.at("ndir");
  sampling.step = p.at("step");
  sampling.eps_min = p.at("eps_min");
  sampling.sigma_probes = p.at("sigma_probes");
  const TgccReport r = check_tgcc(s.manifold, s.sigma, p.at("horizon"), sampling);
  Json out;
  out["verdict"] = verdict_of(r);
  out["eps_star"] = std::isfinite(r.eps_star) ? Json(r.eps_star) : Json(nullptr);
  out["inconclusive_count"] = r.inconclusive_count;
  out["resolution"] = {{"nx", sampling.nx},
                       {"ndir", sampling.ndir},
                       {"step", sampling.step},
                       {"eps_min", sampling.eps_min},
                       {"sigma_probes", sampling.sigma_probes},
                       {"rays", r.rays.size()},
                       {"horizon", r.horizon}};
  if (!r.rays.empty()) {
    const RaySeed& w = r.rays[r.worst].seed;
    out["worst_ray"] = {{"x", point(w.x)}, {"v", point(w.v)}, {"sign", w.sign}};
  }
  Table rays{"tgcc_rays.v1",
             {"x1", "x2", "v1", "v2", "sign", "eps_ray", "first_transversal_time", "crossings", "inconclusive"},
             {}};
  for (const RayRecord& ray : r.rays)
    rays.rows.push_back({ray.seed.x[0], ray.seed.x[1], ray.seed.v[0], ray.seed.v[1], ray.seed.sign, ray.eps_ray,
                         ray.first_transversal_time, ray.crossings, ray.inconclusive ? 1 : 0});
  const std::string expect = p.at("expect");
  if (expect == "pass") rep.checks.push_back(check_true("verdict", r.pass, r.eps_star, "PassAtResolution"));
  else if (expect == "fail")
    rep.checks.push_back(check_true("verdict", out["verdict"] == "FailWitness", r.eps_star, "FailWitness"));
  if (!c.out.empty()) {
    out["per_ray_csv"] = sidecar(c.out, ".rays.csv");
    rep.tables.push_back({sidecar(c.out, ".rays.csv"), rays});
    rep.documents.push_back({c.out, out});
  }
  rep.results = out;
}

void run_spectra(const ExperimentConfig& c, RunReport& rep) {
  const Json& p = c.params;
  const ManifoldSetup s = setup_of(p);
  const double cutoff = p.at("cutoff");
  std::vector<EigenMode> modes;
  switch (s.manifold.kind()) {
    case ManifoldKind::Torus2: modes = torus_modes(cutoff); break;
    case ManifoldKind::Sphere2: {
      int lmax = 0;
      while (std::sqrt((lmax + 1.0) * (lmax + 2.0)) <= cutoff * (1 + 1e-12)) ++lmax;
      modes = sphere_real_modes(lmax);
      break;
    }
    case ManifoldKind::Revolution:
      fail(ErrorCode::ConfigError, "spectra needs closed-form modes (torus2 or sphere2); use counterexample revolution");
  }
  const int nodes = p.at("nodes");
  const BoundKind which = parse_bound(p.at("bound"));
  const BoundSweepTable t = lower_bound_sweep(modes, s.manifold, s.sigma, sigma_quadrature(s.manifold, s.sigma, nodes),
                                              which);
  Table tab{"spectra.v1", {"lambda", "dim", "min_q", "bound"}, {}};
  double lo = INFINITY;
  for (const auto& r : t.rows) {
    tab.rows.push_back({r.lambda, r.dim, r.min_q, bound_name(r.which)});
    lo = std::min(lo, r.min_q);
  }
  rep.checks.push_back(check_true("every eigenspace minimum positive", lo > 0, lo, "> 0"));
  rep.results = {{"eigenspaces", t.rows.size()}, {"modes", modes.size()}, {"min_q", lo}};
  if (!c.out.empty()) rep.tables.push_back({c.out, tab});
}

void run_sphere(const ExperimentConfig& c, RunReport& rep) {
  const int lmin = c.params.at("lmin"), lmax = c.params.at("lmax");
  if (lmin < 1 || lmax < lmin + 3) fail(ErrorCode::ConfigError, "need 1 <= lmin and lmax >= lmin + 3");
  Table tab{"sphere.v1", {"l", "lambda", "amplitude", "scaled_ratio"}, {}};
  std::vector<double> ll, la, lr;
  int l0 = -1;
  for (int l = lmin; l <= lmax; ++l) {
    const SphereEquatorCauchy e = sphere_equator_cauchy(l);
    const double lambda = std::sqrt(l * (l + 1.0));
    tab.rows.push_back({l, lambda, e.amplitude, e.scaled_ratio});
    ll.push_back(std::log(l));
    la.push_back(std::log(e.amplitude));
    lr.push_back(std::log(e.scaled_ratio));
    if (e.scaled_ratio > std::pow(lambda, -0.25)) l0 = -1;
    else if (l0 < 0) l0 = l;
  }
  const LinearFit fa = linear_fit(ll, la), fr = linear_fit(ll, lr);
  rep.checks.push_back(check_near("amplitude log-log slope", fa.slope, 0.75, 0.02));
  rep.checks.push_back(check_near("scaled ratio log-log slope", fr.slope, -0.25, 0.02));
  rep.checks.push_back(check_true("scaled ratio <= lambda^-1/4 for all l >= l0", l0 >= 0, l0, "l0 exists"));
  rep.results = {{"amplitude_slope", fa.slope}, {"amplitude_r2", fa.r2}, {"ratio_slope", fr.slope},
                 {"ratio_r2", fr.r2},           {"l0", l0}};
  if (!c.out.empty()) rep.tables.push_back({c.out, tab});
}

void run_revolution(const ExperimentConfig& c, RunReport& rep) {
  const Json& p = c.params;
  Json d = {{"kind", "revolution"}, {"sigma", "waist"}};
  if (!p.at("profile").is_null()) d["profile"] = p.at("profile");
  const ManifoldSetup s = build_manifold(d);
  const int kmin = p.at("kmin"), kmax = p.at("kmax"), kstep = p.at("kstep"), grid = p.at("grid");
  if (kmin < 2 || kstep < 1 || kmax < kmin) fail(ErrorCode::ConfigError, "need 2 <= kmin <= kmax and kstep >= 1");
  std::vector<int> ks;
  for (int k = kmin; k <= kmax; k += kstep) ks.push_back(k);
  const auto rows = detail::revolution_rows(s.manifold.profile(), ks, grid);
  Table tab{"revolution.v1", {"k", "parity", "E", "lambda", "trace_norm", "normal_norm", "combined"}, {}};
  double even_normal = 0, odd_trace = 0;
  std::vector<double> ke, le, ko, lo;
  for (const auto& r : rows) {
    tab.rows.push_back({r.k, r.parity, r.E, r.lambda, r.cauchy.trace_norm, r.cauchy.normal_norm, r.cauchy.combined});
    if (std::isnan(r.E)) continue;
    if (r.parity == "e") {
      even_normal = std::max(even_normal, r.cauchy.normal_norm);
      ke.push_back(r.k);
      le.push_back(std::log(r.cauchy.trace_norm));
    } else {
      odd_trace = std::max(odd_trace, r.cauchy.trace_norm);
      ko.push_back(r.k);
      lo.push_back(std::log(r.cauchy.normal_norm));
    }
  }
  rep.checks.push_back(check_true("even family normal trace exactly 0", even_normal == 0, even_normal, "== 0"));
  rep.checks.push_back(check_true("odd family trace exactly 0", odd_trace == 0, odd_trace, "== 0"));
  Json res = {{"rows", rows.size()}};
  if (ke.size() >= 2 && ko.size() >= 2) {
    const LinearFit fe = linear_fit(ke, le), fo = linear_fit(ko, lo);
    rep.checks.push_back(check_true("even family log trace slope in k < 0", fe.slope < 0, fe.slope, "< 0"));
    rep.checks.push_back(check_true("odd family log normal trace slope in k < 0", fo.slope < 0, fo.slope, "< 0"));
    res["even_slope"] = fe.slope;
    res["odd_slope"] = fo.slope;
  }
  if (ks.size() >= 4) {
    const AgmonFit af = agmon_rate_fit(s.manifold.profile(), ks, p.at("eps"), 0.2, 0.5, grid);
    rep.checks.push_back(
        check_le("Agmon rate relative error", std::abs(af.c_fit - af.prediction) / af.prediction, 0.15));
    res["agmon_fit"] = af.c_fit;
    res["agmon_prediction"] = af.prediction;
  }
  rep.results = res;
  if (!c.out.empty()) rep.tables.push_back({c.out, tab});
}

void run_kernel(const ExperimentConfig& c, RunReport& rep) {
  const Json& p = c.params;
  TransmutationKernel k = TransmutationKernel::make(p.at("T"), p.at("S"), p.at("delta"), p.at("alpha"));
  k.n_max = p.at("n_max");
  k.tol = p.at("tol");
  k.validate();
  const KernelReport r = kernel_verify(k, p.at("grid"), p.at("step"));
  Json out = {{"T", k.T},
              {"S", k.S},
              {"delta", k.delta},
              {"alpha", k.alpha},
              {"grid", r.grid},
              {"step", r.step},
              {"max_abs", r.max_abs},
              {"residual", r.residual},
              {"residual_half", r.residual_half},
              {"order", r.order},
              {"symmetry", r.symmetry},
              {"odd", r.odd},
              {"s0_max", r.s0_max},
              {"ds0_error", r.ds0_error},
              {"near_zero", r.near_zero},
              {"near_T", r.near_T},
              {"bound_worst", r.bound_worst},
              {"deriv_bound_worst", r.deriv_bound_worst},
              {"deriv_k_max", r.deriv_k_max}};
  rep.checks.push_back(check_le("relative heat residual", r.residual, 1e-5));
  rep.checks.push_back(check_near("stencil convergence order", r.order, 4, 0.5));
  rep.checks.push_back(check_true("k(t, 0) == 0", r.s0_max == 0, r.s0_max, "== 0"));
  rep.checks.push_back(check_le("d_s k(t, 0) - g1", r.ds0_error, 1e-8));
  rep.checks.push_back(check_le("pointwise kernel bound (log margin)", r.bound_worst, 0));
  rep.checks.push_back(check_le("derivative bound (log margin)", r.deriv_bound_worst, 0));
  rep.results = out;
  if (!c.out.empty()) rep.documents.push_back({c.out, out});
}

void run_gramian(const ExperimentConfig& c, RunReport& rep) {
  const Json& p = c.params;
  const ManifoldSetup s = setup_of(p);
  const auto lams = p.at("lambda_grid").get<std::vector<double>>();
  const auto Ts = p.at("T_grid").get<std::vector<double>>();
  if (lams.empty() || Ts.empty()) fail(ErrorCode::ConfigError, "lambda_grid and T_grid must be non-empty");
  const Precision prec = parse_precision(p.at("precision"));
  double top = 0;
  for (double l : lams) top = std::max(top, l);
  const SpectralModel sm = make_spectral_model(s.manifold, s.sigma, top);
  Table tab{"gramian.v1",
            {"lambda", "T", "dim", "min_eig", "max_eig", "log_inv_sqrt_min_eig", "precision", "digits"},
            {}};
  struct Job {
    double lambda, T;
  };
  std::vector<Job> jobs;
  for (double T : Ts)
    for (double l : lams) jobs.push_back({l, T});
  std::vector<std::vector<Json>> rows(jobs.size());
  std::vector<double> mins(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    double lo, hi;
    Eigen::Index dim;
    int digits = 0;
    if (prec == Precision::Extended) {
      const ExtendedMinEig e = gramian_min_eig_extended(sm, jobs[i].lambda, jobs[i].T);
      lo = e.min_eig, hi = e.max_eig, dim = e.dim, digits = e.digits;
    } else {
      const ObservabilityGramian g = observability_gramian(sm, jobs[i].lambda, jobs[i].T);
      lo = g.min_eig, hi = g.max_eig, dim = g.dim;
    }
    mins[i] = lo;
    rows[i] = {jobs[i].lambda, jobs[i].T, static_cast<long>(dim), lo, hi, -0.5 * std::log(lo),
               precision_name(prec), digits};
  });
  tab.rows = rows;
  double lo = INFINITY;
  for (double m : mins) lo = std::min(lo, m);
  rep.checks.push_back(check_true("every Gramian positive definite", lo > 0, lo, "> 0"));
  Json res = {{"points", jobs.size()}, {"model_modes", sm.size()}};
  if (lams.size() >= 3) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < lams.size(); ++i) {
      x.push_back(lams[i]);
      y.push_back(-0.5 * std::log(mins[i]));
    }
    const LinearFit f = linear_fit(x, y);
    res["lambda_fit"] = {{"T", Ts[0]}, {"slope", f.slope}, {"r2", f.r2}};
  }
  if (Ts.size() >= 3) {
    std::vector<double> x, y;
    for (std::size_t t = 0; t < Ts.size(); ++t) {
      x.push_back(1 / Ts[t]);
      y.push_back(-0.5 * std::log(mins[t * lams.size()]));
    }
    const LinearFit f = linear_fit(x, y);
    res["inv_T_fit"] = {{"lambda", lams[0]}, {"slope", f.slope}, {"r2", f.r2}};
  }
  rep.results = res;
  if (!c.out.empty()) rep.tables.push_back({c.out, tab});
}

const char* mode_name(StageMode m) { return m == StageMode::Control ? "control" : "dissipate"; }

void run_control(const ExperimentConfig& c, RunReport& rep) {
  const Json& p = c.params;
  const ManifoldSetup s = setup_of(p);
  const SpectralModel sm = make_spectral_model(s.manifold, s.sigma, p.at("work_cutoff"));
  const std::uint64_t seed = p.at("seed");
  const Eigen::VectorXd v0 = random_state(sm, seed);
  LrSolver solver(sm, p.at("T"), p.at("lambda0"), parse_precision(p.at("precision")));
  const LrResult r = solver.run(v0, p.at("rho"));
  const ControlResult& ctrl = r.control;
  Json sched = Json::array(), segs = Json::array();
  for (const LrStage& st : r.schedule.stages)
    sched.push_back({{"start", st.start}, {"end", st.end}, {"lambda", st.lambda}, {"mode", mode_name(st.mode)}});
  for (std::size_t i = 0; i < ctrl.segments.size(); ++i) {
    const ControlSegment& sg = ctrl.segments[i];
    segs.push_back({{"start", sg.start},
                    {"end", sg.end},
                    {"lambda", sg.lambda},
                    {"dim", sg.dim},
                    {"cost", sg.cost},
                    {"annihilation", ctrl.annihilation[i]},
                    {"coeffs", std::vector<double>(sg.coeffs.data(), sg.coeffs.data() + sg.coeffs.size())}});
  }
  double worst = 0;
  for (double a : ctrl.annihilation) worst = std::max(worst, a);
  const double target = p.at("target");
  Json out = {{"seed", seed},
              {"T", ctrl.T},
              {"lambda0", p.at("lambda0")},
              {"work_cutoff", sm.cutoff},
              {"modes", sm.size()},
              {"precision", precision_name(ctrl.precision)},
              {"digits", solver.digits()},
              {"v0_hm1", sm.hm1_norm(v0)},
              {"cost", ctrl.cost},
              {"terminal_hm1", ctrl.terminal_norm},
              {"rho", ctrl.tolerance},
              {"schedule", sched},
              {"segments", segs}};
  rep.checks.push_back(check_le("terminal H^-1 norm", ctrl.terminal_norm, target));
  rep.checks.push_back(check_le("worst stage E_lambda projection / |v0|", worst, 1e-10));
  rep.results = out;
  if (!c.out.empty()) rep.documents.push_back({c.out, out});
}

void run_accept_all(const ExperimentConfig& c, RunReport& rep) {
  const auto ids = c.params.at("criteria").get<std::vector<int>>();
  for (int id : ids)
    if (id < 1 || id > criterion_count()) fail(ErrorCode::ConfigError, "no acceptance criterion " + std::to_string(id));
  Json crit = Json::array(), timing = Json::array();
  for (const CriterionResult& r : run_acceptance(ids)) {
    for (const Check& ch : r.checks) {
      Check named = ch;
      named.name = "criterion " + std::to_string(r.id) + ": " + ch.name;
      rep.checks.push_back(named);
    }
    if (!r.error.empty())
      rep.checks.push_back(check_true("criterion " + std::to_string(r.id) + ": completed", false, 0, "no error"));
    crit.push_back({{"id", r.id}, {"title", r.title}, {"checks_pass", r.checks_pass()}, {"error", r.error},
                    {"details", r.details}});
    timing.push_back({{"id", r.id}, {"seconds", r.seconds}, {"budget_seconds", r.budget_seconds},
                      {"within_budget", r.within_budget()}});
  }
  rep.results = {{"criteria", crit}};
  rep.timing = {{"criteria", timing}};
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"tgcc",   "spectra", "counterexample-sphere", "counterexample-revolution",
                                                 "kernel", "gramian", "control",               "accept-all"};
  return kinds;
}

Json default_params(const std::string& experiment) { return defaults_for(experiment); }

ExperimentConfig parse_config(const Json& j) {
  try {
    if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
    if (!j.contains("experiment") || !j.at("experiment").is_string())
      fail(ErrorCode::ConfigError, "config needs a string 'experiment'");
    ExperimentConfig c;
    c.experiment = j.at("experiment").get<std::string>();
    c.params = defaults_for(c.experiment);
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key == "experiment") continue;
      if (key == "out" || key == "report") {
        if (!it->is_string()) fail(ErrorCode::ConfigError, "'" + key + "' must be a string");
        (key == "out" ? c.out : c.report) = it->get<std::string>();
        continue;
      }
      if (!c.params.contains(key)) fail(ErrorCode::ConfigError, "unknown key '" + key + "' for " + c.experiment);
      if (!same_kind(c.params.at(key), *it)) fail(ErrorCode::ConfigError, "wrong type for '" + key + "'");
      c.params[key] = *it;
    }
    Json& p = c.params;
    if (p.contains("sigma") && p.at("sigma").is_string()) {
      // "x0,y0" shorthand
      const std::string s = p.at("sigma");
      if (s.find(',') != std::string::npos) {
        Json arr = Json::array();
        std::size_t a = 0;
        while (a <= s.size()) {
          const std::size_t b = std::min(s.find(',', a), s.size());
          arr.push_back(s.substr(a, b - a));
          a = b + 1;
        }
        p["sigma"] = arr;
      }
    }
    if (p.contains("manifold")) {
      if (p.at("manifold").is_string()) p["manifold"] = Json{{"kind", p.at("manifold")}};
      materialize_setup(p);
    }
    if (c.experiment == "kernel") {
      const TransmutationKernel k = TransmutationKernel::make(p.at("T"), p.at("S"), p.at("delta"), p.at("alpha"));
      p["alpha"] = k.alpha;
    }
    if (c.experiment == "spectra" && p.at("nodes").get<int>() <= 0)
      p["nodes"] = 2 * static_cast<int>(std::ceil(p.at("cutoff").get<double>())) + 16;
    if (c.experiment == "counterexample-revolution" && p.at("profile").is_null())
      p["profile"] = {{"cos_coeffs", RevolutionProfile::paper_default().cos_coeffs()}};
    if (c.experiment == "spectra") parse_bound(p.at("bound"));
    if (p.contains("precision")) parse_precision(p.at("precision"));
    if (c.experiment == "tgcc") {
      const std::string e = p.at("expect");
      if (e != "any" && e != "pass" && e != "fail") fail(ErrorCode::ConfigError, "expect must be any, pass or fail");
    }
    return c;
  } catch (const LabError& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, e.what());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

Json echo_config(const ExperimentConfig& c) {
  Json j = c.params;
  j["experiment"] = c.experiment;
  j["out"] = c.out;
  j["report"] = report_path(c);
  return j;
}

std::string report_path(const ExperimentConfig& c) {
  if (!c.report.empty()) return c.report;
  if (c.out.empty()) return "";
  if (c.experiment == "accept-all") return c.out;
  return sidecar(c.out, ".run.json");
}

RunReport run(const ExperimentConfig& c) {
  RunReport rep;
  rep.config = echo_config(c);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (c.experiment == "tgcc") run_tgcc(c, rep);
    else if (c.experiment == "spectra") run_spectra(c, rep);
    else if (c.experiment == "counterexample-sphere") run_sphere(c, rep);
    else if (c.experiment == "counterexample-revolution") run_revolution(c, rep);
    else if (c.experiment == "kernel") run_kernel(c, rep);
    else if (c.experiment == "gramian") run_gramian(c, rep);
    else if (c.experiment == "control") run_control(c, rep);
    else if (c.experiment == "accept-all") run_accept_all(c, rep);
    else fail(ErrorCode::ConfigError, "unknown experiment '" + c.experiment + "'");
  } catch (const LabError& e) {
    if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::IoError) throw;
    rep.results["error"] = {{"code", error_name(e.code())}, {"message", e.what()}};
    rep.checks.push_back(check_true("completed without " + std::string(error_name(e.code())), false, 0, "no error"));
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit_tables(rep, report_path(c));
  return rep;
}

}  // namespace lab

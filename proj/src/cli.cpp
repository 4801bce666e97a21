#include "rlab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "rlab/airy.hpp"
#include "rlab/asymptotics.hpp"
#include "rlab/errors.hpp"
#include "rlab/modes.hpp"
#include "rlab/numerics.hpp"
#include "rlab/potential.hpp"
#include "rlab/radial_ode.hpp"
#include "rlab/spectral.hpp"
#include "rlab/wave.hpp"

namespace rlab::cli {

namespace {

using json = nlohmann::json;
using Entries = std::map<std::string, std::string>;
constexpr double kPi = std::numbers::pi;

Error config_error(const std::string& key, const std::string& what) {
  return Error(ErrorKind::ConfigInvalid, key + ": " + what);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Defaults

Entries potential_defaults(const std::string& A, const std::string& E0) {
  return {{"potential.family", "bump_quartic"}, {"potential.A", A},
          {"potential.support", "1"},           {"potential.alpha", "1"},
          {"potential.center", "0"},            {"potential.offset", "0"},
          {"potential.E0", E0}};
}

Entries cutoff_defaults(const std::string& anchor, const std::string& factor) {
  return {{"cutoffs.anchor", anchor},
          {"cutoffs.factor", factor},
          {"cutoffs.half_width", "0.05"},
          {"cutoffs.inner", "0"},
          {"cutoffs.outer", "0"}};
}

Entries merge(std::initializer_list<Entries> parts) {
  Entries out{{"experiment.name", ""}, {"experiment.seed", "1"}, {"output.dir", "."}};
  for (const auto& p : parts) out.insert(p.begin(), p.end());
  return out;
}

const std::map<std::string, Entries>& defaults() {
  static const std::map<std::string, Entries> table = [] {
    std::map<std::string, Entries> t;
    t["thresholds"] = merge({potential_defaults("1", "0.01"),
                             {{"numerics.tolerance", "1e-8"},
                              {"numerics.grid_points", "100000"},
                              {"scaling.E0_list", "0.01 0.001 0.0001"},
                              {"scaling.tolerance", "0.02"},
                              {"scaling.oracle_points", "1000000"}}});
    t["airy-table"] = merge({{{"airy.x_min", "-50"},
                              {"airy.x_max", "50"},
                              {"airy.points", "100"},
                              {"airy.expansion_x", "10 20 40 80"},
                              {"airy.slope_bound", "-1.4"},
                              {"numerics.tolerance", "1e-10"}}});
    t["kernel-compare"] = merge({potential_defaults("1", "0.01"),
                                 {{"numerics.h_list", "0.2 0.1 0.05 0.025"},
                                  {"kernel.m_fraction", "0.5"},
                                  {"kernel.pairs", "50"},
                                  {"kernel.span", "2"},
                                  {"kernel.slack", "5"}}});
    t["error-control"] = merge({{{"error.m_list", "1 100 10000"},
                                 {"error.E", "1"},
                                 {"error.delta", "0.25"},
                                 {"error.max_ratio", "3"},
                                 {"numerics.h", "0.1"},
                                 {"numerics.tolerance", "1e-8"}}});
    t["eigen"] = merge({potential_defaults("1000", "100"),
                        {{"numerics.h_list", "0.1 0.05 0.025 0.0125"},
                         {"eigen.slope_min", "0.9"},
                         {"eigen.agmon_tolerance", "0.05"},
                         {"eigen.pair", "0.3 0.6"},
                         {"sequence.A", "1"},
                         {"sequence.E0", "0.01"},
                         {"sequence.n", "3"},
                         {"sequence.j_first", "10"},
                         {"sequence.j_last", "19"},
                         {"sequence.max_variation", "2"}}});
    t["norm-sweep"] = merge({potential_defaults("1000", "100"), cutoff_defaults("r2", "1.2"),
                             {{"numerics.n", "3"},
                              {"numerics.h_list", "0.2 0.1 0.05 0.025"},
                              {"numerics.method", "nystrom"},
                              {"numerics.nodes", "256"},
                              {"sweep.energies", "1"},
                              {"sweep.energy_halfwidth", "0.05"},
                              {"sweep.max_variation", "3"}}});
    t["lower-bound"] = merge({potential_defaults("1000", "100"), cutoff_defaults("mid", "1"),
                              {{"numerics.n", "3"},
                               {"numerics.h_list", "0.1 0.05 0.025 0.0125"},
                               {"lower.tolerance", "0.05"}}});
    t["dichotomy"] = merge({potential_defaults("1000", "100"),
                            {{"numerics.n", "3"},
                             {"numerics.h", "0.05"},
                             {"cutoffs.outer_factor", "1.2"},
                             {"cutoffs.half_width", "0.05"},
                             {"dichotomy.ratio_max", "1e-3"},
                             {"dichotomy.agmon_tolerance", "0.15"}}});
    const Entries profile{{"wave.flat", "0.75"}, {"wave.edge", "0.99"}};
    t["wave-thresholds"] = merge({profile,
                                  {{"wave.s_list", "0.3 0.6 0.9"},
                                   {"wave.tolerance", "1e-8"},
                                   {"correspondence.s", "0.6"},
                                   {"correspondence.lambda", "20"},
                                   {"correspondence.l_list", "0 3"},
                                   {"correspondence.inner", "0.5"},
                                   {"correspondence.outer", "0.7"},
                                   {"correspondence.rp_samples", "0.3 0.9 1.4 2.5"},
                                   {"correspondence.tolerance", "1e-6"}}});
    t["wave-norms"] = merge({profile,
                             {{"wave.s", "0.6"},
                              {"wave.n", "3"},
                              {"outside.lambda_list", "10 20 40 80"},
                              {"outside.inner_factor", "1.2"},
                              {"outside.outer_factor", "1.3"},
                              {"outside.max_variation", "2"},
                              {"straddle.j_first", "8"},
                              {"straddle.j_last", "16"},
                              {"straddle.r_squared_min", "0.9"}}});
    t["wave-evolve"] = merge({profile,
                              {{"wave.profile", "dipped"},
                               {"wave.s", "0.6"},
                               {"wave.n", "3"},
                               {"wave.l", "-1"},
                               {"wave.frequency", "10"},
                               {"wave.T", "30"},
                               {"wave.center", "0"},
                               {"wave.width", "0.1"},
                               {"annulus.inner", "0"},
                               {"annulus.outer", "0"},
                               {"evolve.conservation_tolerance", "1e-4"},
                               {"evolve.reversal_tolerance", "1e-6"},
                               {"evolve.reversal_T", "2"}}});
    for (auto& [name, e] : t) e["experiment.name"] = name;
    return t;
  }();
  return table;
}

// ---------------------------------------------------------------------------
// Validation

bool is_tolerance_key(const std::string& key) {
  const auto dot = key.find('.');
  const std::string leaf = key.substr(dot + 1);
  return leaf == "tolerance" || leaf.ends_with("_tolerance") || leaf == "max_ratio" ||
         leaf == "max_variation" || leaf == "slack" || leaf == "ratio_max";
}

void validate(const ExperimentConfig& c) {
  for (const auto& [key, value] : c.entries()) {
    if (is_tolerance_key(key) && !(c.number(key) > 0)) throw config_error(key, "tolerance must be positive");
    if (key.ends_with("h_list")) {
      const auto h = c.numbers(key);
      if (h.empty()) throw config_error(key, "must not be empty");
      for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0)) throw config_error(key, "entries must be positive");
        if (i > 0 && !(h[i] < h[i - 1])) throw config_error(key, "must be strictly decreasing");
      }
    }
  }
  if (c.has("cutoffs.anchor")) {
    const auto& a = c.text("cutoffs.anchor");
    if (a != "r2" && a != "mid" && a != "absolute")
      throw config_error("cutoffs.anchor", "expected r2, mid or absolute");
    if (a == "absolute" && !(c.number("cutoffs.inner") > 0 && c.number("cutoffs.inner") < c.number("cutoffs.outer")))
      throw config_error("cutoffs.inner", "need 0 < inner < outer");
    if (a != "absolute" && !(c.number("cutoffs.half_width") > 0))
      throw config_error("cutoffs.half_width", "must be positive");
  }
  for (const char* k : {"annulus.inner", "annulus.outer"})
    if (c.has(k) && c.number(k) < 0) throw config_error(k, "must be non-negative");
  if (c.has("annulus.inner") && c.number("annulus.outer") > 0 &&
      !(c.number("annulus.inner") > 0 && c.number("annulus.inner") < c.number("annulus.outer")))
    throw config_error("annulus.inner", "need 0 < inner < outer");
  if (c.has("correspondence.inner") && !(c.number("correspondence.inner") > 0 &&
                                         c.number("correspondence.inner") < c.number("correspondence.outer")))
    throw config_error("correspondence.inner", "need 0 < inner < outer");
  if (c.has("potential.family")) {
    const auto& f = c.text("potential.family");
    if (f != "bump_quartic" && f != "parabola" && f != "zero")
      throw config_error("potential.family", "expected bump_quartic, parabola or zero");
  }
  if (c.has("numerics.method")) {
    const auto& m = c.text("numerics.method");
    if (m != "nystrom" && m != "hs") throw config_error("numerics.method", "expected nystrom or hs");
  }
  if (c.has("wave.profile")) {
    const auto& p = c.text("wave.profile");
    if (p != "dipped" && p != "constant") throw config_error("wave.profile", "expected dipped or constant");
  }
}

// ---------------------------------------------------------------------------
// Report assembly

struct Checks {
  json list = json::array();
  bool all = true;
  void add(const std::string& name, bool passed, double value, double bound) {
    list.push_back({{"name", name}, {"passed", passed}, {"value", number_or_null(value)},
                    {"bound", number_or_null(bound)}});
    all = all && passed;
  }
};

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(const std::vector<double>& values) { rows_.push_back(values); }
  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
    s += "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + format_number(r[i]);
      s += "\n";
    }
    return s;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

struct Context {
  const ExperimentConfig& c;
  unsigned threads;
  std::ostream* log;
  json results = json::object();
  Checks checks;
  std::vector<OutputFile> csv;

  void note(const std::string& msg) const {
    if (log) *log << msg << '\n';
  }
  void add_csv(const std::string& part, const Csv& t) {
    csv.push_back({c.text("experiment.name") + "_" + part + ".csv", t.str()});
  }
};

RadialPotential make_potential(const ExperimentConfig& c) {
  const auto& f = c.text("potential.family");
  if (f == "bump_quartic") return bump_quartic(c.number("potential.A"), c.number("potential.support"));
  if (f == "parabola")
    return parabola(c.number("potential.alpha"), c.number("potential.center"), c.number("potential.offset"));
  return zero_potential();
}

CutoffAnnulus make_cutoff(const ExperimentConfig& c, const ThresholdData& t) {
  const auto& a = c.text("cutoffs.anchor");
  if (a == "absolute") return {c.number("cutoffs.inner"), c.number("cutoffs.outer"), {}};
  const double center = a == "mid" ? 0.5 * (t.r1 + t.r2) : c.number("cutoffs.factor") * t.r2;
  const double half = c.number("cutoffs.half_width") * (t.r2 - t.r1);
  return {center - half, center + half, {}};
}

json annulus_json(const CutoffAnnulus& a) { return {{"inner", a.inner}, {"outer", a.outer}}; }

TruncationPolicy policy_for(const Context& ctx) {
  TruncationPolicy p;
  p.threads = ctx.threads;
  return p;
}

double variation(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

WaveSpeedProfile make_profile(const ExperimentConfig& c, double s) {
  return dipped_wavespeed(s, c.number("wave.flat"), c.number("wave.edge"));
}

// ---------------------------------------------------------------------------
// Experiments

void thresholds(Context& ctx) {
  const auto& c = ctx.c;
  const auto V = make_potential(c);
  ThresholdOptions o;
  o.grid_points = static_cast<std::size_t>(c.integer("numerics.grid_points"));
  const auto t = compute_thresholds(V, c.number("potential.E0"), o);
  ctx.results["M0"] = t.M0;
  ctx.results["r1"] = t.r1;
  ctx.results["r2"] = t.r2;
  ctx.results["r2_bisection"] = t.r2_bisection;
  ctx.results["r2_closed_form"] = number_or_null(t.r2_closed_form);
  ctx.results["closed_form_used"] = t.closed_form_used;
  ctx.results["assumptions"] = {{"M0_finite", t.assumption_flags.M0_finite},
                                {"monotone_tail", t.assumption_flags.monotone_tail}};
  if (t.closed_form_used) {
    const double rel = std::abs(t.r2_bisection - std::sqrt(t.M0 / t.E0)) / t.r2_bisection;
    ctx.checks.add("r2 equals sqrt(M0/E0)", rel < c.number("numerics.tolerance"), rel,
                   c.number("numerics.tolerance"));
  }
  const auto q = check_phi_quartet(V, t);
  ctx.results["phi_quartet"] = {{"tail_increasing", q.tail_increasing},
                                {"endpoints_match", q.endpoints_match},
                                {"interior_below", q.interior_below},
                                {"below_up_to_r2", q.below_up_to_r2},
                                {"endpoint_error", q.endpoint_error}};
  ctx.checks.add("Phi quartet", q.all(), q.endpoint_error, std::nan(""));
  Csv phi({"r", "phi"});
  for (const auto& [r, p] : t.phi_profile) phi.row({r, p});
  ctx.add_csv("phi", phi);

  // small-energy scaling E0 r2^2 -> -min r^2 V0, oracle from a plain grid maximum
  const auto E0s = c.numbers("scaling.E0_list");
  if (E0s.empty()) return;
  const auto support = V.support_radius();
  if (!support) throw Error(ErrorKind::AssumptionViolated, "small-energy scaling needs compact support");
  const int N = c.integer("scaling.oracle_points");
  double limit = 0.0;
  for (int i = 1; i <= N; ++i) {
    const double r = *support * i / N;
    limit = std::max(limit, -r * r * V(r));
  }
  Csv sc({"E0", "E0_r2_squared"});
  std::vector<double> vals;
  for (double E0 : E0s) {
    const auto ts = compute_thresholds(V, E0, o);
    vals.push_back(E0 * ts.r2 * ts.r2);
    sc.row({E0, vals.back()});
  }
  ctx.add_csv("scaling", sc);
  bool monotone = true;
  for (std::size_t i = 1; i < vals.size(); ++i)
    monotone = monotone && (vals[i] - vals[i - 1]) * (vals[1] - vals[0]) > 0;
  const double rel = std::abs(vals.back() / limit - 1.0);
  ctx.results["scaling_limit"] = limit;
  ctx.checks.add("E0 r2^2 monotone in E0", monotone || vals.size() < 2, std::nan(""), std::nan(""));
  ctx.checks.add("E0 r2^2 near -min r^2 V0 at the smallest E0", rel < c.number("scaling.tolerance"), rel,
                 c.number("scaling.tolerance"));
}

void airy_table(Context& ctx) {
  const auto& c = ctx.c;
  const double a = c.number("airy.x_min"), b = c.number("airy.x_max");
  const int n = c.integer("airy.points");
  if (!(a < b) || n < 2) throw config_error("airy.points", "need x_min < x_max and at least 2 points");
  const double tol = c.number("numerics.tolerance");
  Csv table({"x", "log_abs_ai", "sign_ai", "log_abs_ai_prime", "sign_ai_prime", "log_abs_bi", "sign_bi",
             "log_abs_bi_prime", "sign_bi_prime", "wronskian_rel_error"});
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = a + (b - a) * i / (n - 1);
    const auto v = airy_eval(x);
    const double err = std::abs(airy_wronskian(v) * kPi - 1.0);
    worst = std::max(worst, err);
    table.row({x, v.ai.log_mag, v.ai.sign, v.ai_prime.log_mag, v.ai_prime.sign, v.bi.log_mag, v.bi.sign,
               v.bi_prime.log_mag, v.bi_prime.sign, err});
  }
  ctx.add_csv("values", table);
  const auto z = airy_eval(0.0);
  const double origin = std::abs(z.bi.value() / (std::sqrt(3.0) * z.ai.value()) - 1.0);
  ctx.checks.add("Bi(0) = sqrt(3) Ai(0)", origin < tol, origin, tol);
  ctx.checks.add("Wronskian 1/pi on the grid", worst < tol, worst, tol);

  const auto xs = c.numbers("airy.expansion_x");
  Csv dev({"x", "exp_ai", "exp_bi", "osc_ai", "osc_bi"});
  std::vector<double> lx;
  std::array<std::vector<double>, 4> ly;
  for (double x : xs) {
    const auto d = airy_asymptotic_deviation(x);
    dev.row({x, d.exp_ai, d.exp_bi, d.osc_ai, d.osc_bi});
    lx.push_back(std::log(x));
    const std::array<double, 4> e{d.exp_ai, d.exp_bi, d.osc_ai, d.osc_bi};
    for (int k = 0; k < 4; ++k) ly[k].push_back(std::log(e[k]));
  }
  ctx.add_csv("asymptotic_deviation", dev);
  const double bound = c.number("airy.slope_bound");
  const char* names[] = {"exp_ai", "exp_bi", "osc_ai", "osc_bi"};
  for (int k = 0; k < 4; ++k) {
    const double slope = numerics::linear_fit(lx, ly[k]).slope;
    ctx.results["slope_" + std::string(names[k])] = slope;
    ctx.checks.add(std::string("log-log slope of ") + names[k], slope <= bound, slope, bound);
  }
  ctx.results["wronskian_max_rel_error"] = worst;
}

void kernel_compare(Context& ctx) {
  const auto& c = ctx.c;
  const auto V = make_potential(c);
  const auto t = compute_thresholds(V, c.number("potential.E0"));
  const double slack = c.number("kernel.slack");
  const int pairs = c.integer("kernel.pairs");
  Csv out({"h", "r", "rp", "log_abs_exact", "log_bound", "ratio"});
  json per_h = json::array();
  std::mt19937_64 rng(static_cast<std::uint64_t>(c.integer("experiment.seed")));
  for (double h : c.numbers("numerics.h_list")) {
    const LGFrame fr(V, c.number("kernel.m_fraction") * t.M0, h, t.E0, FrameConvention::PlainMomentum);
    const auto lim = default_regime_limits(fr, t);
    std::uniform_real_distribution<double> U(lim.r2_plus, lim.r2_plus + c.number("kernel.span"));
    std::vector<std::pair<double, double>> pr;
    std::vector<double> nodes;
    for (int i = 0; i < pairs; ++i) {
      pr.emplace_back(U(rng), U(rng));
      nodes.push_back(pr.back().first);
      nodes.push_back(pr.back().second);
    }
    std::sort(nodes.begin(), nodes.end());
    const ResolventKernel K(V, fr.m(), h, t.E0, nodes);
    double worst = 0.0;
    for (const auto& [r, rp] : pr) {
      const auto p = predict_kernel(fr, lim, KernelSetting::NoTurning, r, rp);
      const double lk = K.outgoing(r, rp).value.log_mag;
      const double ratio = std::exp(lk - p.log_mag);
      worst = std::max(worst, ratio);
      out.row({h, r, rp, lk, p.log_mag, ratio});
    }
    per_h.push_back({{"h", h}, {"max_ratio", worst}, {"r2_plus", lim.r2_plus},
                     {"wronskian_spread", K.wronskian().max_relative_deviation}});
    ctx.checks.add("allowed/allowed ratio at h = " + format_number(h), worst <= 1.0 + slack * h, worst,
                   1.0 + slack * h);
    ctx.note("kernel-compare h = " + format_number(h) + " max ratio " + format_number(worst));
  }
  ctx.results["per_h"] = per_h;
  ctx.add_csv("pairs", out);
}

void error_control(Context& ctx) {
  const auto& c = ctx.c;
  Csv out({"m", "inner", "mid", "outer", "total"});
  std::vector<double> totals;
  for (double m : c.numbers("error.m_list")) {
    const LGFrame fr(zero_potential(), m, c.number("numerics.h"), c.number("error.E"));
    const auto r = error_control_integral(fr, c.number("error.delta"), c.number("numerics.tolerance"));
    out.row({m, r.inner, r.mid, r.outer, r.total()});
    totals.push_back(r.total());
  }
  if (totals.empty()) throw config_error("error.m_list", "must not be empty");
  ctx.add_csv("integrals", out);
  const double v = variation(totals);
  ctx.results["variation"] = v;
  ctx.checks.add("error-control integral uniformly bounded", v < c.number("error.max_ratio"), v,
                 c.number("error.max_ratio"));
}

void eigen(Context& ctx) {
  const auto& c = ctx.c;
  const auto V = make_potential(c);
  const auto t = compute_thresholds(V, c.number("potential.E0"));
  const auto q = default_quasimode(V, t);
  const auto pair = c.numbers("eigen.pair");
  if (pair.size() != 2) throw config_error("eigen.pair", "expected two fractions of the barrier");
  Csv out({"h", "E", "E_minus_E0", "residual", "rayleigh_bound", "h_log_abs_K", "agmon_sum", "phase_error"});
  std::vector<double> lh, le, rel, ph;
  for (double h : c.numbers("numerics.h_list")) {
    const double rq = rayleigh_quotient_bound(V, t.M0, h, q, t.r2);
    const auto e = dirichlet_ground_energy(V, t.M0, h, t.E0, t.E0 + 1.5 * (rq - t.E0), t.r2);
    const LGFrame fr(V, t.M0, h, e.E, FrameConvention::PlainMomentum);
    const auto lim = default_regime_limits(fr, t);
    const double a = lim.r1_plus + pair[0] * (lim.r2_minus - lim.r1_plus);
    const double b = lim.r1_plus + pair[1] * (lim.r2_minus - lim.r1_plus);
    const double R = fr.R_m();
    const double w_from = 1.1 * std::max(R, t.r2);
    std::vector<double> nodes{a, b};
    for (int i = 0; i < 16; ++i) nodes.push_back(w_from + 0.2 * w_from * i / 15.0);
    std::sort(nodes.begin(), nodes.end());
    auto u0 = integrate_dirichlet(V, t.M0, h, e.E, t.r2, 0.99 * std::min(a, b), nodes.back(), nodes);
    const ResolventKernel K(std::move(u0), V, nodes, {}, w_from);
    const auto k = K.outgoing(a, b).value;
    const double S = agmon_distance(fr.vm(), e.E, a, R) + agmon_distance(fr.vm(), e.E, b, R);
    const double perr = std::abs(std::remainder(k.phase - 5.0 * kPi / 6.0, 2.0 * kPi));
    out.row({h, e.E, e.E - t.E0, e.residual, rq, h * k.log_mag, S, perr});
    lh.push_back(std::log(h));
    le.push_back(std::log(e.E - t.E0));
    rel.push_back(std::abs(h * k.log_mag / S - 1.0));
    ph.push_back(perr);
    ctx.note("eigen h = " + format_number(h) + " E - E0 = " + format_number(e.E - t.E0));
  }
  ctx.add_csv("energies", out);
  const double slope = le.size() > 1 ? numerics::linear_fit(lh, le).slope : std::nan("");
  ctx.results["slope_E_minus_E0"] = number_or_null(slope);
  ctx.checks.add("E(h) - E0 = O(h): log-log slope", slope >= c.number("eigen.slope_min"), slope,
                 c.number("eigen.slope_min"));
  ctx.checks.add("h log|K| matches S(r) + S(r') at the smallest h",
                 rel.back() < c.number("eigen.agmon_tolerance"), rel.back(), c.number("eigen.agmon_tolerance"));
  bool shrinking = true;
  for (std::size_t i = 1; i < ph.size(); ++i) shrinking = shrinking && ph[i] < ph[i - 1];
  ctx.checks.add("phase of K approaches arg(-exp(-i pi/6))", shrinking, ph.back(), std::nan(""));

  const auto Vs = bump_quartic(c.number("sequence.A"), c.number("potential.support"));
  const auto ts = compute_thresholds(Vs, c.number("sequence.E0"));
  const auto seq = resonant_sequence_hj(Vs, ts, c.integer("sequence.n"), c.integer("sequence.j_first"),
                                        c.integer("sequence.j_last"));
  Csv sq({"j", "h", "m", "M0_minus_m", "gap_over_h", "residual"});
  bool below = true;
  std::vector<double> gaps;
  for (const auto& s : seq) {
    if (std::isnan(s.h)) continue;
    sq.row({static_cast<double>(s.j), s.h, s.m, s.M0_gap, s.M0_gap / s.h, s.residual});
    below = below && s.m <= ts.M0 * (1.0 + 1e-12);
    gaps.push_back(s.M0_gap / s.h);
  }
  ctx.add_csv("sequence", sq);
  ctx.checks.add("m_j <= M0", below, std::nan(""), ts.M0);
  const double gv = gaps.empty() || *std::min_element(gaps.begin(), gaps.end()) <= 0 ? std::numeric_limits<double>::infinity() : variation(gaps);
  ctx.checks.add("(M0 - m_j) / h_j variation", gv < c.number("sequence.max_variation"), gv,
                 c.number("sequence.max_variation"));
}

void norm_sweep(Context& ctx) {
  const auto& c = ctx.c;
  const auto V = make_potential(c);
  const auto t = compute_thresholds(V, c.number("potential.E0"));
  const auto chi = make_cutoff(c, t);
  chi.validate();
  ModeNormOptions mo;
  mo.method = c.text("numerics.method") == "hs" ? NormMethod::HilbertSchmidt : NormMethod::Nystrom;
  mo.nystrom_nodes = static_cast<std::size_t>(c.integer("numerics.nodes"));
  const int count = c.integer("sweep.energies");
  const double hw = c.number("sweep.energy_halfwidth") * t.E0;
  const auto energies = count <= 1 ? std::vector<double>{t.E0}
                                   : chebyshev_energies(t.E0 - hw, t.E0 + hw, static_cast<std::size_t>(count));
  Csv out({"h", "E_argmax", "l_best", "log_norm", "h_norm", "l_stop", "log_bound_at_stop"});
  std::vector<double> scaled;
  for (double h : c.numbers("numerics.h_list")) {
    const auto sw = energy_sweep(V, c.integer("numerics.n"), h, energies, chi, chi, policy_for(ctx), mo);
    const auto& f = sw.at_max;
    scaled.push_back(h * std::exp(f.best.log_norm()));
    out.row({h, sw.E_argmax, static_cast<double>(f.best.mode.l), f.best.log_norm(), scaled.back(),
             static_cast<double>(f.l_stop), f.log_bound_at_stop});
    ctx.note("norm-sweep h = " + format_number(h) + " h*norm = " + format_number(scaled.back()));
  }
  ctx.add_csv("norms", out);
  ctx.results["cutoff"] = annulus_json(chi);
  const double v = variation(scaled);
  ctx.results["h_norm_variation"] = v;
  ctx.checks.add("h times the norm bounded", v < c.number("sweep.max_variation"), v,
                 c.number("sweep.max_variation"));
}

void lower_bound(Context& ctx) {
  const auto& c = ctx.c;
  const auto V = make_potential(c);
  const auto t = compute_thresholds(V, c.number("potential.E0"));
  const auto chi = make_cutoff(c, t);
  const auto rows = lower_bound_experiment(V, c.integer("numerics.n"), t, chi, chi, c.numbers("numerics.h_list"));
  Csv out({"h", "l", "m", "E", "log_norm", "measured", "predicted", "ratio", "log_norm_incoming"});
  bool approaching = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out.row({r.h, static_cast<double>(r.mode.l), r.m, r.E, r.log_norm, r.measured, r.predicted, r.ratio,
             r.log_norm_incoming});
    if (i > 0) approaching = approaching && std::abs(r.ratio - 1.0) < std::abs(rows[i - 1].ratio - 1.0);
  }
  ctx.add_csv("rows", out);
  ctx.results["cutoff"] = annulus_json(chi);
  ctx.checks.add("ratio approaches 1 along the sweep", approaching, rows.back().ratio, std::nan(""));
  const double dev = std::abs(rows.back().ratio - 1.0);
  ctx.checks.add("measured/predicted at the smallest h", dev < c.number("lower.tolerance"), dev,
                 c.number("lower.tolerance"));
}

void dichotomy(Context& ctx) {
  const auto& c = ctx.c;
  const auto V = make_potential(c);
  const auto t = compute_thresholds(V, c.number("potential.E0"));
  const double h = c.number("numerics.h");
  const int n = c.integer("numerics.n");
  const double half = c.number("cutoffs.half_width") * (t.r2 - t.r1);
  const double mid = 0.5 * (t.r1 + t.r2), far = c.number("cutoffs.outer_factor") * t.r2;
  const CutoffAnnulus inner{mid - half, mid + half, {}}, outer{far - half, far + half, {}};
  const auto row = lower_bound_experiment(V, n, t, inner, inner, {h}).front();
  const auto out = full_resolvent_norm(V, n, h, row.E, outer, outer, policy_for(ctx));
  const double log_ratio = out.best.log_norm() - row.log_norm;
  ctx.results["E"] = row.E;
  ctx.results["l_resonant"] = row.mode.l;
  ctx.results["inner"] = {{"cutoff", annulus_json(inner)}, {"log_norm", row.log_norm},
                          {"h_log_norm", row.measured}, {"agmon_prediction", row.predicted}};
  ctx.results["outer"] = {{"cutoff", annulus_json(outer)}, {"log_norm", out.best.log_norm()},
                          {"h_norm", h * std::exp(out.best.log_norm())}, {"l_best", out.best.mode.l},
                          {"l_stop", out.l_stop}};
  const double bound = c.number("dichotomy.ratio_max");
  const double value = h * std::exp(log_ratio);
  ctx.checks.add("h norm(outer) < ratio_max norm(inner)", value < bound, value, bound);
  ctx.checks.add("h log norm(inner) positive", row.measured > 0, row.measured, 0.0);
  const double dev = std::abs(row.ratio - 1.0);
  ctx.checks.add("inner exponent matches the Agmon prediction", dev < c.number("dichotomy.agmon_tolerance"), dev,
                 c.number("dichotomy.agmon_tolerance"));
  Csv csv({"annulus_inner", "annulus_outer", "log_norm"});
  csv.row({inner.inner, inner.outer, row.log_norm});
  csv.row({outer.inner, outer.outer, out.best.log_norm()});
  ctx.add_csv("norms", csv);
}

void wave_thresholds(Context& ctx) {
  const auto& c = ctx.c;
  const double tol = c.number("wave.tolerance");
  Csv out({"s", "R_c", "r2_equiv", "relative_gap", "r1_equiv", "M0", "min_slope"});
  double last = 0.0, worst = 0.0;
  bool increasing = true, slope_negative = true;
  for (double s : c.numbers("wave.s_list")) {
    const auto w = rc_threshold(make_profile(c, s));
    const double gap = std::abs(w.R_c - w.r2_equiv) / w.R_c;
    out.row({s, w.R_c, w.r2_equiv, gap, w.r1_equiv, w.M0, w.min_slope});
    increasing = increasing && w.R_c > last;
    slope_negative = slope_negative && w.min_slope < 0;
    last = w.R_c;
    worst = std::max(worst, gap);
  }
  ctx.add_csv("thresholds", out);
  ctx.checks.add("R_c strictly increasing in s", increasing, std::nan(""), std::nan(""));
  ctx.checks.add("R_c equals r2 of the equivalent problem", worst < tol, worst, tol);
  ctx.checks.add("trapping implies min (r/c0)' < 0", slope_negative, std::nan(""), std::nan(""));

  const auto prof = make_profile(c, c.number("correspondence.s"));
  const CutoffAnnulus chi{c.number("correspondence.inner"), c.number("correspondence.outer"), {}};
  const double lambda = c.number("correspondence.lambda");
  Csv corr({"l", "max_relative_discrepancy", "discrepancy_without_factor", "pairs"});
  double disc = 0.0;
  for (double l : c.numbers("correspondence.l_list")) {
    const auto rep = helmholtz_correspondence_check(prof, lambda, chi, c.numbers("correspondence.rp_samples"), 3,
                                                    static_cast<int>(l));
    corr.row({l, rep.max_relative_discrepancy, rep.discrepancy_without_factor, static_cast<double>(rep.pairs)});
    disc = std::max(disc, rep.max_relative_discrepancy);
  }
  ctx.add_csv("correspondence", corr);
  ctx.checks.add("Helmholtz correspondence", disc < c.number("correspondence.tolerance"), disc,
                 c.number("correspondence.tolerance"));
}

void wave_norms(Context& ctx) {
  const auto& c = ctx.c;
  const auto prof = make_profile(c, c.number("wave.s"));
  const auto w = rc_threshold(prof);
  const int n = c.integer("wave.n");
  const CutoffAnnulus outside{c.number("outside.inner_factor") * w.R_c, c.number("outside.outer_factor") * w.R_c, {}};
  Csv out({"lambda", "log_norm", "log_helmholtz", "l_best"});
  std::vector<double> norms;
  BlockNormOptions base;
  base.n = n;
  base.policy = policy_for(ctx);
  for (double lambda : c.numbers("outside.lambda_list")) {
    const auto b = block_resolvent_norm(prof, lambda, outside, base);
    out.row({lambda, b.log_norm, b.log_helmholtz, static_cast<double>(b.l_best)});
    norms.push_back(std::exp(b.log_norm));
    ctx.note("wave-norms outside lambda = " + format_number(lambda) + " log norm " + format_number(b.log_norm));
  }
  ctx.add_csv("outside", out);
  const double v = norms.empty() ? std::nan("") : variation(norms);
  ctx.checks.add("block norm outside R_c bounded", v < c.number("outside.max_variation"), v,
                 c.number("outside.max_variation"));

  const auto V = equivalent_potential(prof);
  const auto t = compute_thresholds(V, w.E0);
  const CutoffAnnulus straddle{t.r1, w.R_c, {}};
  Csv st({"j", "lambda", "log_norm", "log_helmholtz", "log_helmholtz_outgoing"});
  std::vector<double> lambdas, logs;
  bool triangle = true;
  for (const auto& m : resonant_sequence_hj(V, t, n, c.integer("straddle.j_first"), c.integer("straddle.j_last"))) {
    if (std::isnan(m.h)) continue;
    BlockNormOptions o = base;
    o.anchored_l = m.j;
    o.direction = Direction::Difference;
    const auto d = block_resolvent_norm(prof, 1.0 / m.h, straddle, o);
    o.direction = Direction::Outgoing;
    const auto p = block_resolvent_norm(prof, 1.0 / m.h, straddle, o);
    triangle = triangle && d.log_helmholtz <= p.log_helmholtz + std::log(2.0) + 1e-9;
    st.row({static_cast<double>(m.j), 1.0 / m.h, d.log_norm, d.log_helmholtz, p.log_helmholtz});
    lambdas.push_back(1.0 / m.h);
    logs.push_back(d.log_norm);
    ctx.note("wave-norms straddle j = " + std::to_string(m.j) + " log norm " + format_number(d.log_norm));
  }
  ctx.add_csv("straddle", st);
  if (lambdas.size() < 3) throw config_error("straddle.j_last", "need at least three resonant frequencies");
  const auto fit = numerics::linear_fit(lambdas, logs);
  ctx.results["straddle_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
  ctx.results["R_c"] = w.R_c;
  ctx.checks.add("linear growth slope > 0", fit.slope > 0, fit.slope, 0.0);
  ctx.checks.add("linear growth R^2", fit.r_squared > c.number("straddle.r_squared_min"), fit.r_squared,
                 c.number("straddle.r_squared_min"));
  ctx.checks.add("triangle guard for the difference kernel", triangle, std::nan(""), std::nan(""));
}

void wave_evolve(Context& ctx) {
  const auto& c = ctx.c;
  const bool dipped = c.text("wave.profile") == "dipped";
  const auto prof = dipped ? make_profile(c, c.number("wave.s")) : constant_wavespeed();
  const double lambda = c.number("wave.frequency");
  double center = c.number("wave.center");
  CutoffAnnulus U{c.number("annulus.inner"), c.number("annulus.outer"), {}};
  int l = c.integer("wave.l");
  if (dipped) {
    const auto w = rc_threshold(prof);
    if (l < 0) l = static_cast<int>(std::lround(std::sqrt(w.M0) * lambda));
    if (center <= 0) center = w.r_max;
    if (U.outer <= 0) U = {w.r1_equiv, 0.5 * (prof.rho + w.R_c), {}};
    ctx.results["R_c"] = w.R_c;
  } else {
    if (l < 0) l = 0;
    if (center <= 0) center = 1.5;
    if (U.outer <= 0) U = {center - 0.3, center + 0.3, {}};
  }
  const double width = c.number("wave.width");
  const auto packet = [=](double r) {
    return std::exp(-std::pow((r - center) / width, 2)) * (dipped ? std::cos(lambda * r) : 1.0);
  };
  EvolutionOptions o;
  o.probe_frequency = lambda;
  const auto res = mode_energy_evolution(prof, c.integer("wave.n"), l, packet, {}, c.number("wave.T"), U, o);
  Csv out({"t", "E_U", "integral_E_U", "energy_total"});
  double drift = 0.0;
  const double e0 = res.series.front().energy_total;
  for (const auto& s : res.series) {
    out.row({s.t, s.energy_U, s.integral_U, s.energy_total});
    if (s.t < res.sponge_contact_time) drift = std::max(drift, std::abs(s.energy_total / e0 - 1.0));
  }
  ctx.add_csv("series", out);
  ctx.results["l"] = l;
  ctx.results["annulus"] = annulus_json(U);
  ctx.results["dr"] = res.dr;
  ctx.results["dt"] = res.dt;
  ctx.results["r_big"] = res.r_big;
  ctx.results["sponge_contact_time"] = number_or_null(res.sponge_contact_time);
  ctx.results["final_integral_E_U"] = res.series.back().integral_U;
  ctx.results["initial_energy"] = e0;
  const double tol = c.number("evolve.conservation_tolerance");
  ctx.checks.add("energy conserved before the sponge", drift < tol, drift, tol);
  const double rev = time_reversal_residual(prof, c.integer("wave.n"), l, packet, c.number("evolve.reversal_T"), o);
  ctx.checks.add("time reversal", rev < c.number("evolve.reversal_tolerance"), rev,
                 c.number("evolve.reversal_tolerance"));
}

const std::map<std::string, std::function<void(Context&)>>& runners() {
  static const std::map<std::string, std::function<void(Context&)>> r{
      {"thresholds", thresholds},   {"airy-table", airy_table},     {"kernel-compare", kernel_compare},
      {"error-control", error_control}, {"eigen", eigen},           {"norm-sweep", norm_sweep},
      {"lower-bound", lower_bound}, {"dichotomy", dichotomy},       {"wave-thresholds", wave_thresholds},
      {"wave-norms", wave_norms},   {"wave-evolve", wave_evolve}};
  return r;
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << content;
    f.flush();
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::ConfigInvalid, "line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw config_error(section, "keys must sit inside a [section]");
    for (const auto& [key, value] : body) c.set(section + "." + key, value.data());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigInvalid, "cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
    throw config_error(key, "keys have the form section.name");
  entries_[key] = value;
}

const std::string& ExperimentConfig::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw config_error(key, "missing");
  return it->second;
}

double ExperimentConfig::number(const std::string& key) const {
  const auto v = parse_number(text(key));
  if (!v) throw config_error(key, "not a number: '" + text(key) + "'");
  return *v;
}

int ExperimentConfig::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw config_error(key, "not an integer");
  return static_cast<int>(v);
}

std::vector<double> ExperimentConfig::numbers(const std::string& key) const {
  std::string s = text(key);
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    const auto v = parse_number(tok);
    if (!v) throw config_error(key, "not a number: '" + tok + "'");
    out.push_back(*v);
  }
  return out;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : defaults()) v.push_back(k);
    return v;
  }();
  return names;
}

ExperimentConfig resolve(const ExperimentConfig& user) {
  if (!user.has("experiment.name")) throw config_error("experiment.name", "missing");
  const auto& name = user.text("experiment.name");
  const auto it = defaults().find(name);
  if (it == defaults().end()) throw config_error("experiment.name", "unknown experiment '" + name + "'");
  ExperimentConfig out;
  for (const auto& [k, v] : it->second) out.set(k, v);
  for (const auto& [k, v] : user.entries()) {
    if (!it->second.count(k)) throw config_error(k, "unknown key for experiment " + name);
    out.set(k, v);
  }
  validate(out);
  return out;
}

Report run(const ExperimentConfig& resolved, unsigned threads, std::ostream* log) {
  Context ctx{resolved, threads, log, json::object(), {}, {}};
  const auto& name = resolved.text("experiment.name");
  runners().at(name)(ctx);

  json config = json::object();
  for (const auto& [k, v] : resolved.entries()) {
    const auto dot = k.find('.');
    config[k.substr(0, dot)][k.substr(dot + 1)] = v;
  }
  json files = json::array();
  for (const auto& f : ctx.csv) files.push_back(f.name);
  json summary{{"experiment", name},  {"config", config},          {"results", ctx.results},
               {"assertions", ctx.checks.list}, {"passed", ctx.checks.all}, {"files", files}};
  Report r;
  r.experiment = name;
  r.summary_json = summary.dump(2) + "\n";
  r.csv = std::move(ctx.csv);
  r.passed = ctx.checks.all;
  return r;
}

void write_report(const std::filesystem::path& dir, const Report& report) {
  std::filesystem::create_directories(dir);
  for (const auto& f : report.csv) write_atomically(dir / f.name, f.content);
  write_atomically(dir / (report.experiment + ".json"), report.summary_json);
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical lab for semiclassical resolvent estimates of radial operators"};
  app.require_subcommand(1);
  auto* list = app.add_subcommand("list", "List experiment names");
  auto* runc = app.add_subcommand("run", "Run one experiment");
  std::string experiment, config_path, out_dir, family, A, E0, h_list;
  std::vector<std::string> sets;
  unsigned threads = 0;
  bool verbose = false;
  runc->add_option("experiment", experiment, "Experiment name")->required();
  runc->add_option("--config", config_path, "INI config file");
  runc->add_option("--set", sets, "Override section.key=value")->take_all();
  runc->add_option("--family", family, "Potential family (potential.family)");
  runc->add_option("--A", A, "Bump amplitude (potential.A)");
  runc->add_option("--E0", E0, "Energy (potential.E0)");
  runc->add_option("--h-list", h_list, "Semiclassical parameters (numerics.h_list)");
  runc->add_option("--out", out_dir, "Output directory (output.dir)");
  runc->add_option("--threads", threads, "Worker threads (fallback RESOLVENT_LAB_THREADS)");
  runc->add_flag("--verbose", verbose, "Progress on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (*list) {
    for (const auto& n : experiment_names()) out << n << '\n';
    return kExitOk;
  }

  ExperimentConfig resolved;
  try {
    ExperimentConfig user = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (user.has("experiment.name") && user.text("experiment.name") != experiment)
      throw config_error("experiment.name", "config names '" + user.text("experiment.name") +
                                                "' but the command asks for '" + experiment + "'");
    user.set("experiment.name", experiment);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw config_error(s, "--set expects section.key=value");
      user.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!family.empty()) user.set("potential.family", family);
    if (!A.empty()) user.set("potential.A", A);
    if (!E0.empty()) user.set("potential.E0", E0);
    if (!h_list.empty()) user.set("numerics.h_list", h_list);
    if (!out_dir.empty()) user.set("output.dir", out_dir);
    resolved = resolve(user);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const Report r = run(resolved, numerics::resolve_thread_count(threads), verbose ? &err : nullptr);
    write_report(resolved.text("output.dir"), r);
    const json summary = json::parse(r.summary_json);
    for (const auto& line : summary["assertions"])
      out << (line["passed"].get<bool>() ? "PASS " : "FAIL ") << line["name"].get<std::string>() << '\n';
    if (!r.passed) {
      err << "ExperimentFailed: built-in assertions failed\n";
      return kExitFailed;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "ExperimentFailed: " << e.what() << '\n';
    return e.kind() == ErrorKind::ConfigInvalid ? kExitConfig : kExitFailed;
  } catch (const std::exception& e) {
    err << "ExperimentFailed: " << e.what() << '\n';
    return kExitFailed;
  }
}

}  // namespace rlab::cli

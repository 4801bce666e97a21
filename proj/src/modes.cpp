#include "rlab/modes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include "rlab/airy.hpp"
#include "rlab/asymptotics.hpp"
#include "rlab/errors.hpp"
#include "rlab/numerics.hpp"
#include "rlab/spectral.hpp"

namespace rlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kPanelOrder = 8;

long long binomial(long long n, long long k) {
  if (k < 0 || n < k) return 0;
  k = std::min(k, n - k);
  long long out = 1;
  for (long long i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

struct Panel {
  double lo = 0.0;
  double hi = 0.0;
};

// Panels of the union of both supports, aligned so that any two panels are
// either identical or have disjoint interiors. Panel width follows the local
// oscillation or growth scale h / sqrt|V_m - E|.
std::vector<Panel> union_panels(const EffectivePotential& vm, double h, double E,
                                const CutoffAnnulus& L, const CutoffAnnulus& R) {
  std::vector<double> cuts{L.inner, L.outer, R.inner, R.outer};
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Panel> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const double mid = 0.5 * (a + b);
    const bool covered = (mid > L.inner && mid < L.outer) || (mid > R.inner && mid < R.outer);
    if (!covered) continue;
    double rate = std::sqrt(std::abs(E));
    for (int k = 0; k <= 64; ++k) rate = std::max(rate, std::sqrt(std::abs(vm(a + (b - a) * k / 64.0) - E)));
    const double width = 2.0 * h / rate;
    const auto count = static_cast<std::size_t>(std::max(4.0, std::ceil((b - a) / width)));
    for (std::size_t p = 0; p < count; ++p)
      out.push_back({a + (b - a) * p / count, a + (b - a) * (p + 1) / count});
  }
  return out;
}

bool inside(const CutoffAnnulus& c, const Panel& p) {
  const double mid = 0.5 * (p.lo + p.hi);
  return mid > c.inner && mid < c.outer;
}

struct QuadPoint {
  double r = 0.0;
  double rp = 0.0;
  double w = 0.0;
};

// Product rule for the HS double integral. Panels on the diagonal are split
// into the two triangles r < r' and r > r' (collapsed coordinates), since
// |K|^2 has a kink along r = r'.
std::vector<QuadPoint> hs_rule(const std::vector<Panel>& panels, const CutoffAnnulus& L,
                               const CutoffAnnulus& R) {
  const auto unit = numerics::gauss_legendre(kPanelOrder, 0.0, 1.0);
  std::vector<QuadPoint> out;
  for (const auto& P : panels) {
    if (!inside(L, P)) continue;
    for (const auto& Q : panels) {
      if (!inside(R, Q)) continue;
      const double wp = P.hi - P.lo, wq = Q.hi - Q.lo;
      if (P.lo != Q.lo) {
        for (std::size_t i = 0; i < kPanelOrder; ++i)
          for (std::size_t j = 0; j < kPanelOrder; ++j)
            out.push_back({P.lo + wp * unit.nodes[i], Q.lo + wq * unit.nodes[j],
                           wp * wq * unit.weights[i] * unit.weights[j]});
        continue;
      }
      for (std::size_t i = 0; i < kPanelOrder; ++i) {
        const double s = P.lo + wp * unit.nodes[i];
        const double len = s - P.lo;
        for (std::size_t j = 0; j < kPanelOrder; ++j) {
          const double t = P.lo + len * unit.nodes[j];
          const double w = wp * unit.weights[i] * len * unit.weights[j];
          out.push_back({t, s, w});
          out.push_back({s, t, w});
        }
      }
    }
  }
  return out;
}

ResolventKernel build_kernel(const RadialPotential& V0, double m, double h, double E,
                             std::vector<double> nodes, const ModeNormOptions& options) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (!options.dirichlet_radius) return ResolventKernel(V0, m, h, E, nodes, options.integration);
  // Inside the barrier u0 and u1 both grow inward, so their Wronskian is
  // taken on extra nodes in the allowed zone past the outer turning point.
  const double rd = *options.dirichlet_radius;
  const LGFrame fr(V0, m, h, E, FrameConvention::PlainMomentum);
  const double R = std::isnan(fr.R_m()) ? rd : std::max(rd, fr.R_m());
  const double w_from = 1.1 * R;
  for (int i = 0; i < 16; ++i) nodes.push_back(w_from + 0.2 * R * i / 15.0);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  const double r_lo = std::min(nodes.front(), 0.99 * rd);
  auto u0 = integrate_dirichlet(V0, m, h, E, rd, r_lo, nodes.back(), nodes, options.integration);
  return ResolventKernel(std::move(u0), V0, nodes, options.integration, w_from);
}

LogComplex directed(const ResolventKernel& K, Direction d, double r, double rp) {
  switch (d) {
    case Direction::Outgoing:
      return K.outgoing(r, rp).value;
    case Direction::Incoming:
      return K.incoming(r, rp).value;
    case Direction::Difference: {
      // K - conj K = 2i |K| sin(arg K)
      const auto k = K.outgoing(r, rp).value;
      const double s = 2.0 * std::sin(k.phase);
      if (s == 0.0 || k.is_zero()) return {};
      return {k.log_mag + std::log(std::abs(s)), s > 0 ? std::numbers::pi / 2 : -std::numbers::pi / 2};
    }
  }
  return {};
}

double log_weight(const CutoffAnnulus& c, double r) {
  const double w = std::abs(c(r));
  return w > 0.0 ? std::log(w) : -kInf;
}

double minimum_on(const EffectivePotential& vm, double a, double b) {
  double lo = kInf;
  for (int i = 1; i <= 4000; ++i) lo = std::min(lo, vm(a + (b - a) * i / 4000.0));
  return lo;
}

}  // namespace

ModeIndex mode_index(int n, int l) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 2");
  if (l < 0) throw Error(ErrorKind::InvalidArgument, "degree must be >= 0");
  ModeIndex k;
  k.n = n;
  k.l = l;
  k.sigma = static_cast<double>(l) * (l + n - 2);
  // harmonic polynomials of degree l in n variables
  k.multiplicity = binomial(l + n - 1, n - 1) - binomial(l + n - 3, n - 1);
  return k;
}

std::vector<ModeIndex> sphere_spectrum(int n, int l_max) {
  std::vector<ModeIndex> out;
  for (int l = 0; l <= l_max; ++l) out.push_back(mode_index(n, l));
  return out;
}

double CutoffAnnulus::operator()(double r) const {
  if (r < inner || r > outer) return 0.0;
  return weight ? weight(r) : 1.0;
}

void CutoffAnnulus::validate() const {
  if (!(inner > 0 && outer > inner && std::isfinite(outer)))
    throw Error(ErrorKind::SupportViolated, "cutoff annulus needs 0 < inner < outer < inf");
}

std::string_view to_string(NormMethod m) noexcept {
  return m == NormMethod::HilbertSchmidt ? "hilbert_schmidt" : "nystrom";
}

NormEstimate mode_resolvent_norm(const RadialPotential& V0, const ModeIndex& mode, double h,
                                 double E, const CutoffAnnulus& chiL, const CutoffAnnulus& chiR,
                                 const ModeNormOptions& options) {
  chiL.validate();
  chiR.validate();
  if (options.nystrom_nodes < 2) throw Error(ErrorKind::InvalidArgument, "Nystrom needs >= 2 nodes");
  const double m = mode.m(h);
  const EffectivePotential vm(V0, m);

  const auto panels = union_panels(vm, h, E, chiL, chiR);
  const auto quad = hs_rule(panels, chiL, chiR);
  const auto gl_L = numerics::gauss_legendre(options.nystrom_nodes, chiL.inner, chiL.outer);
  const auto gl_R = numerics::gauss_legendre(options.nystrom_nodes, chiR.inner, chiR.outer);

  std::vector<double> nodes;
  nodes.reserve(2 * quad.size() + 2 * options.nystrom_nodes);
  for (const auto& q : quad) {
    nodes.push_back(q.r);
    nodes.push_back(q.rp);
  }
  nodes.insert(nodes.end(), gl_L.nodes.begin(), gl_L.nodes.end());
  nodes.insert(nodes.end(), gl_R.nodes.begin(), gl_R.nodes.end());
  const auto K = build_kernel(V0, m, h, E, std::move(nodes), options);

  NormEstimate est;
  est.mode = mode;
  est.E = E;
  est.h = h;
  est.method = options.method;

  // Hilbert-Schmidt: log of sum w |chi_L|^2 |chi_R|^2 |K|^2, accumulated in logs
  double log_hs2 = -kInf;
  for (const auto& q : quad) {
    const double lw = 2.0 * (log_weight(chiL, q.r) + log_weight(chiR, q.rp));
    if (std::isinf(lw)) continue;
    log_hs2 = numerics::log_add(log_hs2, std::log(q.w) + lw +
                                             2.0 * directed(K, options.direction, q.r, q.rp).log_mag);
  }
  est.log_hs = 0.5 * log_hs2;

  // Nystrom matrix with the global exponent factored out
  const std::size_t N = options.nystrom_nodes;
  std::vector<LogComplex> entries(N * N);
  double shift = -kInf;
  for (std::size_t i = 0; i < N; ++i) {
    const double ri = gl_L.nodes[i];
    const double li = 0.5 * std::log(gl_L.weights[i]) + log_weight(chiL, ri);
    for (std::size_t j = 0; j < N; ++j) {
      const double rj = gl_R.nodes[j];
      const double lj = 0.5 * std::log(gl_R.weights[j]) + log_weight(chiR, rj);
      auto e = directed(K, options.direction, ri, rj).scaled(li + lj);
      if (std::isinf(li + lj)) e = LogComplex{};
      entries[i * N + j] = e;
      shift = std::max(shift, e.log_mag);
    }
  }
  if (!std::isfinite(shift)) throw Error(ErrorKind::NumericalCancellation, "kernel vanishes on the supports");
  std::vector<std::complex<double>> A(N * N);
  double frob2 = 0.0;
  for (std::size_t k = 0; k < N * N; ++k) {
    A[k] = entries[k].shifted(shift);
    frob2 += std::norm(A[k]);
  }
  est.log_discrete_hs = shift + 0.5 * std::log(frob2);

  // power iteration on A^* A
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss;
  std::vector<std::complex<double>> v(N), y(N), z(N);
  double vn = 0.0;
  for (auto& x : v) {
    x = {gauss(rng), gauss(rng)};
    vn += std::norm(x);
  }
  for (auto& x : v) x /= std::sqrt(vn);
  double lambda = 0.0;
  for (int it = 0; it < options.power_steps; ++it) {
    for (std::size_t i = 0; i < N; ++i) {
      std::complex<double> s = 0.0;
      for (std::size_t j = 0; j < N; ++j) s += A[i * N + j] * v[j];
      y[i] = s;
    }
    std::fill(z.begin(), z.end(), std::complex<double>{});
    double ny = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      ny += std::norm(y[i]);
      for (std::size_t j = 0; j < N; ++j) z[j] += std::conj(A[i * N + j]) * y[i];
    }
    const double prev = lambda;
    lambda = ny;  // v has unit norm
    double nz = 0.0;
    for (const auto& x : z) nz += std::norm(x);
    nz = std::sqrt(nz);
    if (nz == 0.0) break;
    for (std::size_t j = 0; j < N; ++j) v[j] = z[j] / nz;
    if (it > 0 && std::abs(lambda - prev) <= options.power_tol * lambda) {
      est.power_iteration_converged = true;
      break;
    }
  }
  est.log_op = shift + 0.5 * std::log(lambda);
  return est;
}

double log_turning_bound(const RadialPotential& V0, double m, double h, double E,
                         const CutoffAnnulus& chiL, const CutoffAnnulus& chiR, double C_A) {
  const EffectivePotential vm(V0, m);
  // V_m - E must go from positive to negative exactly once
  const double r_far = std::max({10.0 * chiR.outer, 10.0 * chiL.outer, 4.0 * std::sqrt(std::abs(m) / E)});
  int changes = 0;
  double prev = vm(1e-4 * r_far) - E;
  if (!(prev > 0)) return kInf;
  for (int i = 1; i <= 20000; ++i) {
    const double r = 1e-4 * r_far * std::pow(1e4, i / 20000.0);
    const double cur = vm(r) - E;
    if ((cur > 0) != (prev > 0)) ++changes;
    prev = cur;
  }
  if (changes != 1 || prev > 0) return kInf;
  double total = 2.0 * std::log(C_A * std::numbers::pi / h);
  for (const auto* c : {&chiL, &chiR}) {
    const double s0 = vm(c->inner) - E;
    for (int i = 0; i <= 256; ++i) {
      const double s = vm(c->inner + c->width() * i / 256.0) - E;
      if (s == 0.0 || (s > 0) != (s0 > 0)) return kInf;
    }
    const double I = numerics::integrate(
        [&](double r) {
          const double w = (*c)(r);
          return w * w / std::sqrt(std::abs(vm(r) - E));
        },
        c->inner, c->outer, 1e-8);
    total += std::log(I);
  }
  return 0.5 * total;
}

FullNormResult full_resolvent_norm(const RadialPotential& V0, int n, double h, double E,
                                   const CutoffAnnulus& chiL, const CutoffAnnulus& chiR,
                                   const TruncationPolicy& policy, const ModeNormOptions& options,
                                   std::optional<ResonantAnchor> anchor) {
  chiL.validate();
  chiR.validate();
  static const double kEstimatedCA = airy_modulus_bound_grid(30.0, 6001);
  const double C_A = std::isnan(policy.C_A) ? kEstimatedCA : policy.C_A;
  const unsigned threads = numerics::resolve_thread_count(policy.threads);
  const int batch = static_cast<int>(std::max(4u, 2 * threads));

  FullNormResult out;
  out.best.log_op = out.best.log_hs = -kInf;
  double prev_bound = kInf;
  int run = 0;
  for (int l0 = 0;; l0 += batch) {
    const int cap = policy.l_max_override >= 0 ? policy.l_max_override : policy.l_hard_cap;
    const int l1 = std::min(l0 + batch - 1, cap);
    if (l0 > l1) break;
    std::vector<NormEstimate> block(static_cast<std::size_t>(l1 - l0 + 1));
    numerics::parallel_for(
        block.size(),
        [&](std::size_t i) {
          const int l = l0 + static_cast<int>(i);
          ModeNormOptions o = options;
          if (anchor && anchor->l == l) o.dirichlet_radius = anchor->r_dirichlet;
          else o.dirichlet_radius.reset();
          block[i] = mode_resolvent_norm(V0, mode_index(n, l), h, E, chiL, chiR, o);
        },
        threads);
    for (const auto& est : block) {
      out.per_mode.push_back(est);
      if (est.log_norm() > out.best.log_norm()) out.best = est;
      out.l_stop = est.mode.l;
      out.m_stop = est.mode.m(h);
      if (policy.l_max_override >= 0) continue;
      const double bound = log_turning_bound(V0, out.m_stop, h, E, chiL, chiR, C_A) + std::log(policy.safety);
      run = bound < prev_bound ? run + 1 : 0;
      prev_bound = bound;
      if (bound < out.best.log_norm() && run >= policy.monotone_run) {
        out.log_bound_at_stop = bound;
        return out;
      }
    }
    if (policy.l_max_override >= 0 && l1 == policy.l_max_override) return out;
    if (l1 == policy.l_hard_cap)
      throw Error(ErrorKind::TruncationUnsafe,
                  "mode bound did not drop below the running supremum by l = " + std::to_string(l1));
  }
  return out;
}

std::vector<double> chebyshev_energies(double lo, double hi, std::size_t count) {
  if (count == 0 || !(hi >= lo)) throw Error(ErrorKind::InvalidArgument, "bad energy interval");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double x = std::cos(std::numbers::pi * (2.0 * k + 1.0) / (2.0 * count));
    out[count - 1 - k] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
  }
  return out;
}

EnergySweepResult energy_sweep(const RadialPotential& V0, int n, double h,
                               const std::vector<double>& energies, const CutoffAnnulus& chiL,
                               const CutoffAnnulus& chiR, const TruncationPolicy& policy,
                               const ModeNormOptions& options) {
  if (energies.empty()) throw Error(ErrorKind::InvalidArgument, "no energies to sweep");
  EnergySweepResult out;
  double best = -kInf;
  for (double E : energies) {
    auto r = full_resolvent_norm(V0, n, h, E, chiL, chiR, policy, options);
    out.log_norm_by_E.emplace_back(E, r.best.log_norm());
    if (r.best.log_norm() > best) {
      best = r.best.log_norm();
      out.E_argmax = E;
      out.at_max = std::move(r);
    }
  }
  return out;
}

ModeIndex mode_nearest(int n, double M0, double h) {
  const double offset = (n - 1.0) * (n - 3.0) / 4.0;
  // l(l + n - 2) = M0 / h^2 - offset
  const double target = M0 / (h * h) - offset;
  const double b = n - 2.0;
  const double l_real = 0.5 * (-b + std::sqrt(b * b + 4.0 * std::max(target, 0.0)));
  ModeIndex best = mode_index(n, 0);
  for (int l = std::max(0, static_cast<int>(std::floor(l_real)) - 1); l <= static_cast<int>(l_real) + 2; ++l) {
    const auto k = mode_index(n, l);
    if (std::abs(k.m(h) - M0) < std::abs(best.m(h) - M0)) best = k;
  }
  return best;
}

double agmon_prediction(const RadialPotential& V0, double m, double E, const CutoffAnnulus& chiL,
                        const CutoffAnnulus& chiR) {
  const LGFrame fr(V0, m, 1.0, E, FrameConvention::PlainMomentum);
  const double R = fr.R_m();
  if (std::isnan(R)) throw Error(ErrorKind::RegimeUndefined, "no outer turning point");
  const EffectivePotential vm(V0, m);
  // S decreases up to R, so its sup over a support sits at the left end
  const auto S = [&](const CutoffAnnulus& c) {
    return c.inner >= R ? 0.0 : agmon_distance(vm, E, c.inner, R);
  };
  return S(chiL) + S(chiR);
}

double trapped_energy(const RadialPotential& V0, const ThresholdData& t, double m, double h,
                      const IntegrationOptions& options) {
  const EffectivePotential vm(V0, m);
  const double lo = minimum_on(vm, 1e-3 * t.r2, t.r2);
  const auto q = default_quasimode(V0, t);
  const double rq = rayleigh_quotient_bound(V0, m, h, q, t.r2);
  return dirichlet_ground_energy(V0, m, h, lo, rq + 0.5 * (rq - lo), t.r2, options).E;
}

namespace {

LowerBoundRow lower_bound_row(const RadialPotential& V0, const ModeIndex& mode, double h, double E,
                              const ThresholdData& t, const CutoffAnnulus& chiL,
                              const CutoffAnnulus& chiR, const ModeNormOptions& options) {
  LowerBoundRow row;
  row.h = h;
  row.mode = mode;
  row.m = mode.m(h);
  row.E = E;
  ModeNormOptions o = options;
  o.dirichlet_radius = t.r2;
  o.direction = Direction::Outgoing;
  row.log_norm = mode_resolvent_norm(V0, mode, h, E, chiL, chiR, o).log_norm();
  o.direction = Direction::Incoming;
  row.log_norm_incoming = mode_resolvent_norm(V0, mode, h, E, chiL, chiR, o).log_norm();
  row.measured = h * row.log_norm;
  row.predicted = agmon_prediction(V0, row.m, E, chiL, chiR);
  row.ratio = row.measured / row.predicted;
  return row;
}

void require_straddle(const ThresholdData& t, const CutoffAnnulus& chiL) {
  chiL.validate();
  if (chiL.outer <= t.r1 || chiL.inner >= t.r2)
    throw Error(ErrorKind::SupportViolated, "chi_L must meet [r1, r2]");
}

}  // namespace

std::vector<LowerBoundRow> lower_bound_experiment(const RadialPotential& V0, int n,
                                                  const ThresholdData& t,
                                                  const CutoffAnnulus& chiL,
                                                  const CutoffAnnulus& chiR,
                                                  const std::vector<double>& h_list,
                                                  const ModeNormOptions& options) {
  require_straddle(t, chiL);
  chiR.validate();
  std::vector<LowerBoundRow> out;
  for (double h : h_list) {
    const auto mode = mode_nearest(n, t.M0, h);
    const double E = trapped_energy(V0, t, mode.m(h), h, options.integration);
    out.push_back(lower_bound_row(V0, mode, h, E, t, chiL, chiR, options));
  }
  return out;
}

std::vector<LowerBoundRow> lower_bound_sequence(const RadialPotential& V0, int n,
                                                const ThresholdData& t, const CutoffAnnulus& chiL,
                                                const CutoffAnnulus& chiR, int j_first,
                                                int j_last, const ModeNormOptions& options) {
  require_straddle(t, chiL);
  chiR.validate();
  const auto seq = resonant_sequence_hj(V0, t, n, j_first, j_last, options.integration);
  std::vector<LowerBoundRow> out;
  for (const auto& s : seq) {
    if (std::isnan(s.h)) continue;
    out.push_back(lower_bound_row(V0, mode_index(n, s.j), s.h, t.E0, t, chiL, chiR, options));
  }
  return out;
}

}  // namespace rlab

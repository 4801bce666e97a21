#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "rlab/potential.hpp"
#include "rlab/radial_ode.hpp"

namespace rlab {

struct ModeIndex {
  int n = 3;
  int l = 0;
  double sigma = 0.0;  // l(l + n - 2)
  long long multiplicity = 1;

  /// h^2 (sigma + (n-1)(n-3)/4).
  double m(double h) const { return h * h * (sigma + (n - 1.0) * (n - 3.0) / 4.0); }
};

ModeIndex mode_index(int n, int l);

/// Eigenvalues l(l + n - 2), l = 0..l_max, of the Laplacian on the unit
/// (n-1)-sphere with their multiplicities.
std::vector<ModeIndex> sphere_spectrum(int n, int l_max);

/// Radial profile of a cutoff: weight(r) on [inner, outer], zero elsewhere.
struct CutoffAnnulus {
  double inner = 0.0;
  double outer = 0.0;
  /// Empty means the indicator.
  std::function<double(double)> weight;

  double operator()(double r) const;
  double width() const { return outer - inner; }
  /// Throws SupportViolated unless 0 < inner < outer < inf.
  void validate() const;
};

enum class NormMethod { HilbertSchmidt, Nystrom };
/// Difference is the jump K - conj K across the real axis, the kernel of
/// R(E + i0) - R(E - i0).
enum class Direction { Outgoing, Incoming, Difference };

std::string_view to_string(NormMethod m) noexcept;

struct NormEstimate {
  /// Logarithms of the norms of chi_L (P_m - E -+ i0)^{-1} chi_R on L^2(dr).
  double log_hs = 0.0;       // double quadrature of |K|^2
  double log_op = 0.0;       // largest singular value of the Nystrom matrix
  double log_discrete_hs = 0.0;  // Frobenius norm of the same Nystrom matrix
  bool power_iteration_converged = false;
  ModeIndex mode;
  double E = 0.0;
  double h = 0.0;
  NormMethod method = NormMethod::Nystrom;

  double log_norm() const { return method == NormMethod::HilbertSchmidt ? log_hs : log_op; }
};

struct ModeNormOptions {
  NormMethod method = NormMethod::Nystrom;
  Direction direction = Direction::Outgoing;
  /// Gauss-Legendre nodes per annulus for the Nystrom matrix.
  std::size_t nystrom_nodes = 256;
  int power_steps = 200;
  double power_tol = 1e-8;
  /// If set, u0 is the solution vanishing at this radius, integrated away
  /// from it. Needed when E is a Dirichlet eigenvalue behind a barrier: a
  /// shot from the origin then loses exp(2S/h) to cancellation.
  std::optional<double> dirichlet_radius;
  IntegrationOptions integration;
};

NormEstimate mode_resolvent_norm(const RadialPotential& V0, const ModeIndex& mode, double h,
                                 double E, const CutoffAnnulus& chiL, const CutoffAnnulus& chiR,
                                 const ModeNormOptions& options = {});

struct TruncationPolicy {
  int l_hard_cap = 10000;
  /// Consecutive modes over which the turning-regime bound must decrease.
  int monotone_run = 3;
  /// Airy modulus constant in the turning-regime bound; NaN means estimate it.
  double C_A = std::numeric_limits<double>::quiet_NaN();
  /// Headroom for the (1 + O(h / sqrt m)) factor of that bound.
  double safety = 2.0;
  /// Only modes up to here are evaluated (no certificate needed); -1 means none.
  int l_max_override = -1;
  unsigned threads = 0;
};

/// Mode whose u0 is anchored at a Dirichlet radius (see ModeNormOptions).
struct ResonantAnchor {
  int l = 0;
  double r_dirichlet = 0.0;
};

struct FullNormResult {
  NormEstimate best;  // supremum over modes and its mode
  std::vector<NormEstimate> per_mode;
  int l_stop = 0;  // last mode evaluated
  double m_stop = 0.0;
  /// Turning-regime bound (log) at the stopping mode.
  double log_bound_at_stop = 0.0;
};

FullNormResult full_resolvent_norm(const RadialPotential& V0, int n, double h, double E,
                                   const CutoffAnnulus& chiL, const CutoffAnnulus& chiR,
                                   const TruncationPolicy& policy = {},
                                   const ModeNormOptions& options = {},
                                   std::optional<ResonantAnchor> anchor = std::nullopt);

/// log of the turning-regime kernel bound C_A pi / h |E - V_m|^{-1/4} |E - V_m'|^{-1/4}
/// integrated over the supports (Hilbert-Schmidt form). +inf when the supports
/// reach the turning point or V_m - E has more than one sign change.
double log_turning_bound(const RadialPotential& V0, double m, double h, double E,
                         const CutoffAnnulus& chiL, const CutoffAnnulus& chiR, double C_A);

/// Chebyshev points of the first kind on [lo, hi], ascending.
std::vector<double> chebyshev_energies(double lo, double hi, std::size_t count);

struct EnergySweepResult {
  FullNormResult at_max;
  double E_argmax = 0.0;
  std::vector<std::pair<double, double>> log_norm_by_E;
};

EnergySweepResult energy_sweep(const RadialPotential& V0, int n, double h,
                               const std::vector<double>& energies, const CutoffAnnulus& chiL,
                               const CutoffAnnulus& chiR, const TruncationPolicy& policy = {},
                               const ModeNormOptions& options = {});

/// Degree l with m_l(h) nearest M0.
ModeIndex mode_nearest(int n, double M0, double h);

/// sup over the supports of S(r) + S(r'), S the Agmon distance to the outer
/// turning point of V_m at E (zero beyond it).
double agmon_prediction(const RadialPotential& V0, double m, double E, const CutoffAnnulus& chiL,
                        const CutoffAnnulus& chiR);

struct LowerBoundRow {
  double h = 0.0;
  ModeIndex mode;
  double m = 0.0;
  double E = 0.0;
  double log_norm = 0.0;
  double measured = 0.0;   // h log norm
  double predicted = 0.0;  // Agmon prediction
  double ratio = 0.0;
  double log_norm_incoming = 0.0;
};

/// For each h: the mode with m_j nearest M0, its Dirichlet ground energy E(h)
/// on (0, r2), and the cutoff resolvent norm for that mode at E(h).
std::vector<LowerBoundRow> lower_bound_experiment(const RadialPotential& V0, int n,
                                                  const ThresholdData& t,
                                                  const CutoffAnnulus& chiL,
                                                  const CutoffAnnulus& chiR,
                                                  const std::vector<double>& h_list,
                                                  const ModeNormOptions& options = {});

/// Fixed-energy variant: E = E0 and h = h_j from the resonant sequence
/// (requires max V0 < E0 on (0, r2)).
std::vector<LowerBoundRow> lower_bound_sequence(const RadialPotential& V0, int n,
                                                const ThresholdData& t, const CutoffAnnulus& chiL,
                                                const CutoffAnnulus& chiR, int j_first,
                                                int j_last, const ModeNormOptions& options = {});

/// Dirichlet ground energy on (0, r2) for V_m, searched from min V_m upward.
double trapped_energy(const RadialPotential& V0, const ThresholdData& t, double m, double h,
                      const IntegrationOptions& options = {});

}  // namespace rlab

#pragma once

// Latent evolution model: temporal non-negative tri-factorization
// G_t ~ U_t C V_t with transition matrices A (U_{t-1} A ~ U_t) and
// B (V_{t-1} B ~ V_t), anchored by long-term guide matrices.

#include "lemcpd/graphseq.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lemcpd {

struct HyperParams {
  int k = 16;                  // latent dimension
  int window = 3;              // short window T
  int long_multiplier = 4;     // long window = long_multiplier * T
  double lambda1 = 0.5;        // transition regularizer
  double lambda2 = 8.0;        // long-term regularizer
  double epsilon = 1e-4;       // relative loss change stopping tolerance
  int max_iter = 200;
  double delta_guard = 1e-12;  // added to every multiplicative-update denominator

  int long_window() const { return window * long_multiplier; }

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

/// Factors for one short window. U[t] is n x k, V[t] is k x n, C and A are
/// k x k, B is n x n. All entries non-negative.
struct LatentState {
  std::vector<Matrix> U;
  std::vector<Matrix> V;
  Matrix C;
  Matrix A;
  Matrix B;

  int window() const { return static_cast<int>(U.size()); }
  int rank() const { return static_cast<int>(C.rows()); }
  Eigen::Index nodes() const { return B.rows(); }
  bool non_negative() const;
};

struct LongTermGuide {
  Matrix U;   // n x k
  Matrix V;   // k x n
  Vector r;   // adaptive per-snapshot weights over the long window, sum 1
};

struct LossBreakdown {
  double reconstruction = 0.0;  // sum_t ||G_t - U_t C V_t||^2
  double transition = 0.0;      // sum_{t>=2} ||U_t - U_{t-1}A||^2 + ||V_t - V_{t-1}B||^2
  double longterm = 0.0;        // ||U_lt - U_T A||^2 + ||V_lt - V_T B||^2
  double total = 0.0;           // reconstruction + lambda1 transition + lambda2 longterm
};

LossBreakdown objective(const GraphSequence& seq, const LatentState& state,
                        const LongTermGuide& guide, const HyperParams& hp);

// Multiplicative updates. Each returns the new factor and leaves `state`
// untouched; `t` is a 0-based position inside the window.
Matrix update_U(const LatentState& state, const LongTermGuide& guide, const GraphSequence& seq,
                const HyperParams& hp, int t);
Matrix update_V(const LatentState& state, const LongTermGuide& guide, const GraphSequence& seq,
                const HyperParams& hp, int t);
Matrix update_A(const LatentState& state, const LongTermGuide& guide, const HyperParams& hp);
Matrix update_B(const LatentState& state, const LongTermGuide& guide, const HyperParams& hp);
Matrix update_C(const LatentState& state, const GraphSequence& seq, const HyperParams& hp);

/// Softmax of normalized similarities to the last snapshot of `long_seq`.
/// Similarity is 1 / (1 + ||G_t - G_last||_F), scaled to sum to 1.
Vector adaptive_weights(const GraphSequence& long_seq);

/// Weighted objective of the guide: sum_t ||r_t (G_t - U_lt V_lt)||_F^2.
double longterm_objective(const GraphSequence& long_seq, const LongTermGuide& guide);

struct LongTermFit {
  LongTermGuide guide;
  std::vector<double> trace;  // guide objective, initial value first
};

/// Learns U_lt, V_lt by alternating multiplicative updates until the
/// relative objective change drops below hp.epsilon or hp.max_iter sweeps.
/// Starts from `init` when its shapes match, otherwise from seeded random
/// factors. The result is rescaled so column j of U_lt and row j of V_lt
/// have equal norms.
LongTermFit fit_longterm(const GraphSequence& long_seq, const Vector& r, const HyperParams& hp,
                         std::uint64_t seed,
                         const std::optional<LongTermGuide>& init = std::nullopt);

/// Random cold-start factors scaled to the mean edge weight of `seq`;
/// transitions and C start at identity plus 0.01.
LatentState init_state(const GraphSequence& seq, const HyperParams& hp, std::uint64_t seed);

/// Fraction of the squared data norm below which a loss is treated as zero
/// by the stopping test.
inline constexpr double kNegligibleLoss = 1e-20;

struct FitResult {
  LatentState state;
  std::vector<double> trace;  // total loss, initial value first, then one per sweep
  int iterations() const { return static_cast<int>(trace.size()) - 1; }
};

/// Gauss-Seidel sweeps (U_t, V_t for t ascending, then A, B, C) until the
/// relative loss change is below hp.epsilon or hp.max_iter sweeps. At least
/// one sweep is always performed. Throws NumericalError on a non-finite loss.
FitResult fit(const GraphSequence& seq, const LongTermGuide& guide, const HyperParams& hp,
              LatentState init);

/// (U_T A) C (V_T B), stamped one step after `last`.
GraphSnapshot predict_next(const LatentState& state, Timestamp last = 0);

}  // namespace lemcpd

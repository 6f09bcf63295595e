#pragma once

// Graph Laplacians, singular-value signatures and cosine anomaly scores.

#include "lemcpd/graphseq.hpp"

#include <vector>

namespace lemcpd {

/// Singular values of a Laplacian, sorted descending.
struct SpectrumSignature {
  Vector sigma;
  /// Set when the directed construction needed teleportation.
  bool perturbed = false;
};

struct ScoreTriple {
  double z1 = 0.0;
  double z2 = 0.0;
  double z = 0.0;
  double alpha = 0.0;
};

/// L = I - D^{-1/2} W D^{-1/2}; rows and columns of zero-degree nodes are 0.
Matrix laplacian_undirected(const GraphSnapshot& g);

/// Row-normalized weights; rows without out-weight become uniform 1/n.
Matrix transition_matrix(const GraphSnapshot& g);

struct PerronResult {
  Vector phi;              // positive, sums to 1
  bool perturbed = false;  // teleportation was needed
  int iterations = 0;
};

inline constexpr int kPerronMaxIterations = 10000;
inline constexpr double kPerronTolerance = 1e-10;
inline constexpr double kTeleportation = 0.05;

/// Stationary distribution of a row-stochastic matrix by power iteration.
/// Falls back to (1-gamma) P + gamma/n J when plain iteration does not
/// converge to a strictly positive vector. Throws NumericalError if the
/// fallback fails too.
PerronResult perron_vector(const Matrix& P);

struct DirectedLaplacian {
  Matrix L;
  bool perturbed = false;
};

/// L = I - (Phi^{1/2} P Phi^{-1/2} + Phi^{-1/2} P^T Phi^{1/2}) / 2.
DirectedLaplacian laplacian_directed(const GraphSnapshot& g);

/// All singular values of a symmetric matrix (|eigenvalues|), descending.
SpectrumSignature spectrum(const Matrix& L);

/// Element-wise mean of equally sized signatures.
Vector normal_pattern(const std::vector<SpectrumSignature>& signatures);

/// 1 - cos(a, b), clamped to [0, 1]. When either vector is all zero the
/// score is 0 if both are, 1 otherwise.
double cosine_score(const Vector& a, const Vector& b);

inline double score_z1(const Vector& sigma_p, const Vector& sigma_a) {
  return cosine_score(sigma_p, sigma_a);
}
inline double score_z2(const Vector& sigma_nor, const Vector& sigma_a) {
  return cosine_score(sigma_nor, sigma_a);
}

/// alpha * z1 + (1 - alpha) * z2.
double combine_score(double z1, double z2, double alpha);

enum class LaplacianMode { kAuto, kUndirected, kDirected };

/// Signature of `g` under a resolved (non-auto) mode.
SpectrumSignature signature(const GraphSnapshot& g, LaplacianMode mode);

}  // namespace lemcpd

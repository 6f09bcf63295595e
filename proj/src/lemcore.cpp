#include "lemcpd/lemcore.hpp"

#include "lemcpd/errors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace lemcpd {

void HyperParams::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (window < 2) throw ConfigError("window must be >= 2");
  if (long_multiplier < 1) throw ConfigError("long_multiplier must be >= 1");
  if (!(lambda1 >= 0.0)) throw ConfigError("lambda1 must be >= 0");
  if (!(lambda2 >= 0.0)) throw ConfigError("lambda2 must be >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(delta_guard > 0.0)) throw ConfigError("delta_guard must be > 0");
}

bool LatentState::non_negative() const {
  auto ok = [](const Matrix& m) { return (m.array() >= 0.0).all(); };
  for (const auto& u : U) if (!ok(u)) return false;
  for (const auto& v : V) if (!ok(v)) return false;
  return ok(C) && ok(A) && ok(B);
}

namespace {

void check_shapes(const GraphSequence& seq, const LatentState& s) {
  const auto T = static_cast<std::size_t>(s.window());
  if (s.U.size() != s.V.size() || T == 0) throw DataError("shape mismatch: U/V list lengths");
  if (seq.length() != T) {
    throw DataError("shape mismatch: sequence has " + std::to_string(seq.length()) +
                    " snapshots, state has " + std::to_string(T));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(seq.nodes());
  const Eigen::Index k = s.C.rows();
  if (s.C.cols() != k || s.A.rows() != k || s.A.cols() != k || s.B.rows() != n ||
      s.B.cols() != n) {
    throw DataError("shape mismatch: C, A or B");
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (s.U[t].rows() != n || s.U[t].cols() != k || s.V[t].rows() != k || s.V[t].cols() != n) {
      throw DataError("shape mismatch: U/V at position " + std::to_string(t));
    }
  }
}

void check_guide(const LatentState& s, const LongTermGuide& g) {
  if (g.U.rows() != s.nodes() || g.U.cols() != s.rank() || g.V.rows() != s.rank() ||
      g.V.cols() != s.nodes()) {
    throw DataError("shape mismatch: long-term guide");
  }
}

Matrix multiplicative(const Matrix& x, const Matrix& num, const Matrix& den, double delta) {
  Matrix out = x.cwiseProduct(num).cwiseQuotient((den.array() + delta).matrix());
  // Entries that decay into the subnormal range are flushed; arithmetic on
  // them is orders of magnitude slower and they carry no signal.
  return (out.array() < std::numeric_limits<double>::min()).select(0.0, out);
}

}  // namespace

LossBreakdown objective(const GraphSequence& seq, const LatentState& s, const LongTermGuide& g,
                        const HyperParams& hp) {
  check_shapes(seq, s);
  check_guide(s, g);
  const int T = s.window();
  LossBreakdown loss;
  for (int t = 0; t < T; ++t) {
    loss.reconstruction += (seq[t].weights() - s.U[t] * s.C * s.V[t]).squaredNorm();
  }
  for (int t = 1; t < T; ++t) {
    loss.transition += (s.U[t] - s.U[t - 1] * s.A).squaredNorm();
    loss.transition += (s.V[t] - s.V[t - 1] * s.B).squaredNorm();
  }
  loss.longterm = (g.U - s.U[T - 1] * s.A).squaredNorm() + (g.V - s.V[T - 1] * s.B).squaredNorm();
  loss.total = loss.reconstruction + hp.lambda1 * loss.transition + hp.lambda2 * loss.longterm;
  return loss;
}

// Neighbour terms that reference U_0 or U_{T+1} do not exist in the
// transition objective, so they are dropped together with the matching
// denominator contribution.
Matrix update_U(const LatentState& s, const LongTermGuide& g, const GraphSequence& seq,
                const HyperParams& hp, int t) {
  check_shapes(seq, s);
  check_guide(s, g);
  const int T = s.window();
  if (t < 0 || t >= T) throw DataError("update_U: position out of range");
  const Matrix& U = s.U[t];
  const Matrix CV = s.C * s.V[t];
  Matrix num = seq[t].weights() * CV.transpose();
  Matrix den = U * (CV * CV.transpose());
  if (t > 0) {
    num += hp.lambda1 * (s.U[t - 1] * s.A);
    den += hp.lambda1 * U;
  }
  const Matrix AAt = s.A * s.A.transpose();
  if (t + 1 < T) {
    num += hp.lambda1 * (s.U[t + 1] * s.A.transpose());
    den += hp.lambda1 * (U * AAt);
  }
  if (t == T - 1) {
    num += hp.lambda2 * (g.U * s.A.transpose());
    den += hp.lambda2 * (U * AAt);
  }
  return multiplicative(U, num, den, hp.delta_guard);
}

Matrix update_V(const LatentState& s, const LongTermGuide& g, const GraphSequence& seq,
                const HyperParams& hp, int t) {
  check_shapes(seq, s);
  check_guide(s, g);
  const int T = s.window();
  if (t < 0 || t >= T) throw DataError("update_V: position out of range");
  const Matrix& V = s.V[t];
  const Matrix UC = s.U[t] * s.C;
  Matrix num = UC.transpose() * seq[t].weights();
  Matrix den = (UC.transpose() * UC) * V;
  if (t > 0) {
    num += hp.lambda1 * (s.V[t - 1] * s.B);
    den += hp.lambda1 * V;
  }
  const bool needs_bbt = t + 1 < T || t == T - 1;
  Matrix VBBt;
  if (needs_bbt) VBBt = (V * s.B) * s.B.transpose();
  if (t + 1 < T) {
    num += hp.lambda1 * (s.V[t + 1] * s.B.transpose());
    den += hp.lambda1 * VBBt;
  }
  if (t == T - 1) {
    num += hp.lambda2 * (g.V * s.B.transpose());
    den += hp.lambda2 * VBBt;
  }
  return multiplicative(V, num, den, hp.delta_guard);
}

Matrix update_A(const LatentState& s, const LongTermGuide& g, const HyperParams& hp) {
  check_guide(s, g);
  const int T = s.window();
  const Eigen::Index k = s.rank();
  // With both regularizers off A no longer enters the objective.
  if (hp.lambda1 == 0.0 && hp.lambda2 == 0.0) return s.A;
  Matrix num = Matrix::Zero(k, k);
  Matrix den = Matrix::Zero(k, k);
  for (int t = 1; t < T; ++t) {
    num += s.U[t - 1].transpose() * s.U[t];
    den += s.U[t - 1].transpose() * (s.U[t - 1] * s.A);
  }
  num *= hp.lambda1;
  den *= hp.lambda1;
  const Matrix& UT = s.U[T - 1];
  num += hp.lambda2 * (UT.transpose() * g.U);
  den += hp.lambda2 * (UT.transpose() * (UT * s.A));
  return multiplicative(s.A, num, den, hp.delta_guard);
}

Matrix update_B(const LatentState& s, const LongTermGuide& g, const HyperParams& hp) {
  check_guide(s, g);
  const int T = s.window();
  const Eigen::Index n = s.nodes();
  if (hp.lambda1 == 0.0 && hp.lambda2 == 0.0) return s.B;
  Matrix num = Matrix::Zero(n, n);
  Matrix den = Matrix::Zero(n, n);
  for (int t = 1; t < T; ++t) {
    num.noalias() += s.V[t - 1].transpose() * s.V[t];
    den.noalias() += s.V[t - 1].transpose() * (s.V[t - 1] * s.B);
  }
  num *= hp.lambda1;
  den *= hp.lambda1;
  const Matrix& VT = s.V[T - 1];
  num.noalias() += hp.lambda2 * (VT.transpose() * g.V);
  den.noalias() += hp.lambda2 * (VT.transpose() * (VT * s.B));
  return multiplicative(s.B, num, den, hp.delta_guard);
}

Matrix update_C(const LatentState& s, const GraphSequence& seq, const HyperParams& hp) {
  check_shapes(seq, s);
  const Eigen::Index k = s.rank();
  Matrix num = Matrix::Zero(k, k);
  Matrix den = Matrix::Zero(k, k);
  for (int t = 0; t < s.window(); ++t) {
    const Matrix& U = s.U[t];
    const Matrix& V = s.V[t];
    num += U.transpose() * seq[t].weights() * V.transpose();
    den += (U.transpose() * U) * s.C * (V * V.transpose());
  }
  return multiplicative(s.C, num, den, hp.delta_guard);
}

Vector adaptive_weights(const GraphSequence& long_seq) {
  if (long_seq.empty()) throw DataError("adaptive_weights: empty sequence");
  const auto m = static_cast<Eigen::Index>(long_seq.length());
  const GraphSnapshot& last = long_seq[long_seq.length() - 1];
  Vector s(m);
  for (Eigen::Index t = 0; t < m; ++t) {
    s[t] = 1.0 / (1.0 + frobenius_distance(long_seq[static_cast<std::size_t>(t)], last));
  }
  s /= s.sum();
  Vector r = (s.array() - s.maxCoeff()).exp().matrix();
  return r / r.sum();
}

namespace {

// sum_t r_t^2 ||G_t - X||^2 depends on the snapshots only through the
// weighted mean, which keeps each guide sweep at the cost of a single
// factorization.
struct WeightedTarget {
  Matrix mean;         // sum_t w_t G_t / sum_t w_t
  double total = 0.0;  // sum_t w_t
};

WeightedTarget weighted_target(const GraphSequence& long_seq, const Vector& r) {
  if (static_cast<std::size_t>(r.size()) != long_seq.length()) {
    throw DataError("adaptive weight count does not match long window length");
  }
  const auto n = static_cast<Eigen::Index>(long_seq.nodes());
  WeightedTarget target{Matrix::Zero(n, n), 0.0};
  for (std::size_t t = 0; t < long_seq.length(); ++t) {
    const double w = r[static_cast<Eigen::Index>(t)] * r[static_cast<Eigen::Index>(t)];
    target.mean += w * long_seq[t].weights();
    target.total += w;
  }
  if (target.total > 0.0) target.mean /= target.total;
  return target;
}

double uniform_open_closed(std::mt19937_64& rng) {
  // (0, 1]
  return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

Matrix random_factor(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * uniform_open_closed(rng);
  }
  return m;
}

double factor_scale(double mean_weight, int k) {
  const double scale = std::sqrt(std::max(mean_weight, 0.0) / k);
  return scale > 0.0 ? scale : 1.0 / std::sqrt(static_cast<double>(k));
}

// Losses below `floor` count as zero when judging convergence.
double relative_change(double before, double after, double floor) {
  const double scale = std::max(before, floor);
  if (scale == 0.0) return after == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(before - after) / scale;
}

}  // namespace

double longterm_objective(const GraphSequence& long_seq, const LongTermGuide& guide) {
  if (static_cast<std::size_t>(guide.r.size()) != long_seq.length()) {
    throw DataError("adaptive weight count does not match long window length");
  }
  const Matrix approx = guide.U * guide.V;
  double total = 0.0;
  for (std::size_t t = 0; t < long_seq.length(); ++t) {
    const double w = guide.r[static_cast<Eigen::Index>(t)];
    total += w * w * (long_seq[t].weights() - approx).squaredNorm();
  }
  return total;
}

LongTermFit fit_longterm(const GraphSequence& long_seq, const Vector& r, const HyperParams& hp,
                         std::uint64_t seed, const std::optional<LongTermGuide>& init) {
  hp.validate();
  if (long_seq.empty()) throw DataError("fit_longterm: empty sequence");
  const WeightedTarget target = weighted_target(long_seq, r);
  const auto n = static_cast<Eigen::Index>(long_seq.nodes());
  const Eigen::Index k = hp.k;

  std::mt19937_64 rng(seed);
  const double scale = factor_scale(target.mean.mean(), hp.k);
  LongTermFit out;
  if (init && init->U.rows() == n && init->U.cols() == k && init->V.rows() == k &&
      init->V.cols() == n) {
    out.guide.U = init->U;
    out.guide.V = init->V;
  } else {
    out.guide.U = random_factor(n, k, scale, rng);
    out.guide.V = random_factor(k, n, scale, rng);
  }
  out.guide.r = r;

  // Constant part of the objective that the weighted mean does not see.
  double offset = 0.0;
  for (std::size_t t = 0; t < long_seq.length(); ++t) {
    const double w = r[static_cast<Eigen::Index>(t)] * r[static_cast<Eigen::Index>(t)];
    offset += w * (long_seq[t].weights() - target.mean).squaredNorm();
  }
  auto loss = [&](const Matrix& U, const Matrix& V) {
    return offset + target.total * (target.mean - U * V).squaredNorm();
  };

  const double floor = kNegligibleLoss * target.total * target.mean.squaredNorm();

  Matrix& U = out.guide.U;
  Matrix& V = out.guide.V;
  out.trace.push_back(loss(U, V));
  for (int iter = 0; iter < hp.max_iter; ++iter) {
    const Matrix Vt = V.transpose();
    U = multiplicative(U, target.mean * Vt, (U * (V * Vt)).eval(), hp.delta_guard);
    const Matrix Ut = U.transpose();
    V = multiplicative(V, Ut * target.mean, ((Ut * U) * V).eval(), hp.delta_guard);
    const double current = loss(U, V);
    if (!std::isfinite(current)) throw NumericalError("fit_longterm: non-finite objective");
    const double previous = out.trace.back();
    out.trace.push_back(current);
    if (relative_change(previous, current, floor) < hp.epsilon) break;
  }
  // U D^-1 D V is the same product; equal column/row norms keep the guide on
  // the scale the short-window factors are initialized at.
  for (Eigen::Index j = 0; j < k; ++j) {
    const double cu = U.col(j).norm();
    const double rv = V.row(j).norm();
    if (cu > 0.0 && rv > 0.0) {
      const double d = std::sqrt(rv / cu);
      U.col(j) *= d;
      V.row(j) /= d;
    }
  }
  return out;
}

LatentState init_state(const GraphSequence& seq, const HyperParams& hp, std::uint64_t seed) {
  hp.validate();
  if (seq.empty()) throw DataError("init_state: empty sequence");
  const auto n = static_cast<Eigen::Index>(seq.nodes());
  const Eigen::Index k = hp.k;
  double mean = 0.0;
  for (const auto& snap : seq) mean += snap.weights().mean();
  mean /= static_cast<double>(seq.length());
  const double scale = factor_scale(mean, hp.k);

  std::mt19937_64 rng(seed);
  LatentState s;
  for (std::size_t t = 0; t < seq.length(); ++t) {
    s.U.push_back(random_factor(n, k, scale, rng));
    s.V.push_back(random_factor(k, n, scale, rng));
  }
  auto near_identity = [](Eigen::Index d) {
    return Matrix(Matrix::Identity(d, d).array() + 0.01);
  };
  s.C = near_identity(k);
  s.A = near_identity(k);
  s.B = near_identity(n);
  return s;
}

FitResult fit(const GraphSequence& seq, const LongTermGuide& guide, const HyperParams& hp,
              LatentState init) {
  hp.validate();
  check_shapes(seq, init);
  check_guide(init, guide);
  FitResult result{std::move(init), {}};
  LatentState& s = result.state;
  const int T = s.window();

  auto total = [&]() {
    const double value = objective(seq, s, guide, hp).total;
    if (!std::isfinite(value)) throw NumericalError("fit: non-finite loss");
    return value;
  };

  double data = 0.0;
  for (const auto& snap : seq) data += snap.weights().squaredNorm();
  const double floor = kNegligibleLoss * data;

  result.trace.push_back(total());
  for (int iter = 0; iter < hp.max_iter; ++iter) {
    for (int t = 0; t < T; ++t) {
      s.U[t] = update_U(s, guide, seq, hp, t);
      s.V[t] = update_V(s, guide, seq, hp, t);
    }
    s.A = update_A(s, guide, hp);
    s.B = update_B(s, guide, hp);
    s.C = update_C(s, seq, hp);
    const double previous = result.trace.back();
    result.trace.push_back(total());
    if (relative_change(previous, result.trace.back(), floor) < hp.epsilon) break;
  }
  return result;
}

GraphSnapshot predict_next(const LatentState& state, Timestamp last) {
  if (state.U.empty()) throw DataError("predict_next: empty state");
  const Matrix& UT = state.U.back();
  const Matrix& VT = state.V.back();
  Matrix g = (UT * state.A) * state.C * (VT * state.B);
  // Products of non-negative factors; clear rounding-level negatives.
  g = g.cwiseMax(0.0);
  return GraphSnapshot(last + 1, std::move(g), Directedness::kDirected);
}

}  // namespace lemcpd

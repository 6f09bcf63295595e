#pragma once

#include "lemcpd/lemcore.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace lemcpd::fixture {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                            double lo = 0.1, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

inline Matrix random_symmetric(Eigen::Index n, std::mt19937_64& rng, double lo = 0.1,
                               double hi = 1.0) {
  Matrix m = random_matrix(n, n, rng, lo, hi);
  Matrix s = (m + m.transpose()) / 2.0;
  s.diagonal().setZero();
  return s;
}

struct Instance {
  GraphSequence seq;
  LatentState state;
  LongTermGuide guide;
  HyperParams hp;
};

// Strictly positive factors, guide and snapshots of matching shapes.
inline Instance random_instance(int n, int k, int T, std::mt19937_64& rng) {
  Instance in;
  std::vector<Matrix> g;
  for (int t = 0; t < T; ++t) {
    g.push_back(random_matrix(n, n, rng, 0.0, 2.0));
    in.state.U.push_back(random_matrix(n, k, rng));
    in.state.V.push_back(random_matrix(k, n, rng));
  }
  in.seq = GraphSequence::from_matrices(g);
  in.state.C = random_matrix(k, k, rng);
  in.state.A = random_matrix(k, k, rng);
  in.state.B = random_matrix(n, n, rng, 0.0, 0.5);
  in.guide.U = random_matrix(n, k, rng);
  in.guide.V = random_matrix(k, n, rng);
  in.guide.r = Vector::Constant(T, 1.0 / T);
  in.hp.k = k;
  in.hp.lambda1 = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
  in.hp.lambda2 = std::uniform_real_distribution<double>(0.1, 8.0)(rng);
  return in;
}

// U_t = U_{t-1} A, V_t = V_{t-1} B, G_t = U_t C V_t and the guide equal to
// the one-step continuation, so every term of the loss is zero.
inline Instance exact_instance(int n, int k, int T, std::mt19937_64& rng) {
  Instance in;
  Matrix A = random_matrix(k, k, rng);
  A = (A.array().colwise() / A.rowwise().sum().array()).matrix();
  Matrix B = random_matrix(n, n, rng);
  B = (B.array().colwise() / B.rowwise().sum().array()).matrix();
  in.state.A = A;
  in.state.B = B;
  in.state.C = random_matrix(k, k, rng, 0.5, 1.5);
  Matrix U = random_matrix(n, k, rng);
  Matrix V = random_matrix(k, n, rng);
  std::vector<Matrix> g;
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      U = U * A;
      V = V * B;
    }
    in.state.U.push_back(U);
    in.state.V.push_back(V);
    g.push_back(U * in.state.C * V);
  }
  in.seq = GraphSequence::from_matrices(g);
  in.guide.U = U * A;
  in.guide.V = V * B;
  in.guide.r = Vector::Constant(T, 1.0 / T);
  in.hp.k = k;
  return in;
}

inline double relative_gap(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return scale == 0.0 ? 0.0 : (a - b).cwiseAbs().maxCoeff() / scale;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("lemcpd_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace lemcpd::fixture

#include "lemcpd/spectral.hpp"

#include "lemcpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace lemcpd {

Matrix laplacian_undirected(const GraphSnapshot& g) {
  const Matrix& w = g.weights();
  const Eigen::Index n = w.rows();
  const Vector degree = w.rowwise().sum();
  Vector inv_sqrt = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degree[i] > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  }
  Matrix L = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degree[i] > 0.0) L(i, i) += 1.0;
  }
  return L;
}

Matrix transition_matrix(const GraphSnapshot& g) {
  const Matrix& w = g.weights();
  const Eigen::Index n = w.rows();
  Matrix P(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double out = w.row(i).sum();
    if (out > 0.0) {
      P.row(i) = w.row(i) / out;
    } else {
      P.row(i).setConstant(1.0 / static_cast<double>(n));
    }
  }
  return P;
}

namespace {

struct PowerIteration {
  Vector phi;
  bool converged = false;
  int iterations = 0;
};

PowerIteration power_iterate(const std::function<Vector(const Vector&)>& step, Eigen::Index n) {
  PowerIteration out;
  out.phi = Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 1; it <= kPerronMaxIterations; ++it) {
    Vector next = step(out.phi);
    next /= next.sum();
    const double diff = (next - out.phi).lpNorm<Eigen::Infinity>();
    out.phi = std::move(next);
    out.iterations = it;
    if (diff < kPerronTolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

PerronResult perron_vector(const Matrix& P) {
  const Eigen::Index n = P.rows();
  if (n == 0 || P.cols() != n) throw DataError("perron_vector: P must be square and non-empty");
  const Matrix Pt = P.transpose();

  PowerIteration plain = power_iterate([&](const Vector& x) { return Vector(Pt * x); }, n);
  if (plain.converged && plain.phi.minCoeff() > 0.0) {
    return {std::move(plain.phi), false, plain.iterations};
  }

  const double uniform = kTeleportation / static_cast<double>(n);
  PowerIteration tele = power_iterate(
      [&](const Vector& x) {
        return Vector((1.0 - kTeleportation) * (Pt * x).array() + uniform * x.sum());
      },
      n);
  if (!tele.converged || !(tele.phi.minCoeff() > 0.0)) {
    throw NumericalError("perron_vector: power iteration did not converge after " +
                         std::to_string(kPerronMaxIterations) + " iterations");
  }
  return {std::move(tele.phi), true, plain.iterations + tele.iterations};
}

DirectedLaplacian laplacian_directed(const GraphSnapshot& g) {
  const Matrix P = transition_matrix(g);
  const PerronResult perron = perron_vector(P);
  const Eigen::Index n = P.rows();
  const Vector root = perron.phi.cwiseSqrt();
  const Vector inv_root = root.cwiseInverse();
  const Matrix S = root.asDiagonal() * P * inv_root.asDiagonal();
  DirectedLaplacian out;
  out.L = Matrix::Identity(n, n) - 0.5 * (S + S.transpose());
  out.perturbed = perron.perturbed;
  return out;
}

SpectrumSignature spectrum(const Matrix& L) {
  if (L.rows() != L.cols()) throw DataError("spectrum: matrix must be square");
  if (!L.allFinite()) throw NumericalError("spectrum: non-finite Laplacian");
  SpectrumSignature sig;
  if (L.rows() == 0) return sig;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(L, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("spectrum: eigensolver failed");
  sig.sigma = solver.eigenvalues().cwiseAbs();
  std::sort(sig.sigma.begin(), sig.sigma.end(), std::greater<>());
  return sig;
}

Vector normal_pattern(const std::vector<SpectrumSignature>& signatures) {
  if (signatures.empty()) throw DataError("normal_pattern: no signatures");
  const Eigen::Index n = signatures.front().sigma.size();
  Vector mean = Vector::Zero(n);
  for (const auto& s : signatures) {
    if (s.sigma.size() != n) throw DataError("normal_pattern: signature length mismatch");
    mean += s.sigma;
  }
  return mean / static_cast<double>(signatures.size());
}

double cosine_score(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DataError("cosine_score: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
  const double cosine = a.dot(b) / (na * nb);
  return std::clamp(1.0 - cosine, 0.0, 1.0);
}

double combine_score(double z1, double z2, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  return alpha * z1 + (1.0 - alpha) * z2;
}

SpectrumSignature signature(const GraphSnapshot& g, LaplacianMode mode) {
  switch (mode) {
    case LaplacianMode::kUndirected:
      return spectrum(laplacian_undirected(g));
    case LaplacianMode::kDirected: {
      DirectedLaplacian d = laplacian_directed(g);
      SpectrumSignature sig = spectrum(d.L);
      sig.perturbed = d.perturbed;
      return sig;
    }
    case LaplacianMode::kAuto:
      break;
  }
  throw ConfigError("signature: Laplacian mode must be resolved before use");
}

}  // namespace lemcpd

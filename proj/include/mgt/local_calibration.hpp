#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "mgt/base_detectors.hpp"
#include "mgt/errors.hpp"
#include "mgt/score_model.hpp"

namespace mgt {

/// Two-class belief matrix: column 0 is the human belief, column 1 the
/// machine belief, one row per token.
template <typename Scalar>
using BeliefMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

struct CalibrationParams {
  Eigen::Matrix2d W = Eigen::Matrix2d::Ones();
  int t0 = 20;
  int iters = 10;

  static CalibrationParams uniform(double w, int t0 = 20, int iters = 10) {
    return {Eigen::Matrix2d::Constant(w), t0, iters};
  }
};

void validate(const CalibrationParams& params);

/// Positional weight of a 1-based position: a sigmoid centred on t0.
template <typename Scalar = double>
Scalar beta(long long j, long long t0) {
  using std::exp;
  return Scalar(1) / (Scalar(1) + exp(-Scalar(j - t0)));
}

/// Symmetric chain adjacency. Edge e joins 0-based tokens e and e+1 and has
/// weight beta(e + 2, t0), i.e. the later token of the pair in 1-based terms.
template <typename Scalar = double>
struct ChainAdjacency {
  Eigen::Index n = 0;
  Vector<Scalar> edge;  // length max(n - 1, 0)

  // Dense lookup with 1-based indices, zero off the two off-diagonals.
  Scalar operator()(Eigen::Index i, Eigen::Index j) const {
    if (i < 1 || j < 1 || i > n || j > n) return Scalar(0);
    if (j == i + 1) return edge[i - 1];
    if (i == j + 1) return edge[j - 1];
    return Scalar(0);
  }
};

template <typename Scalar = double>
ChainAdjacency<Scalar> build_adjacency(Eigen::Index n, long long t0) {
  ChainAdjacency<Scalar> a;
  a.n = n;
  a.edge.resize(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index e = 0; e + 1 < n; ++e) a.edge[e] = beta<Scalar>(e + 2, t0);
  return a;
}

/// Q^(0) = [1 - p, p] with p clamped away from 0 and 1.
template <typename Derived>
BeliefMatrix<typename Derived::Scalar> initial_beliefs(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  constexpr Scalar kClamp = Scalar(1e-12);
  BeliefMatrix<Scalar> q(p.size(), 2);
  for (Eigen::Index t = 0; t < p.size(); ++t) {
    const Scalar pt = std::clamp<Scalar>(p[t], kClamp, Scalar(1) - kClamp);
    q(t, 1) = pt;
    q(t, 0) = Scalar(1) - pt;
  }
  return q;
}

/// One mean-field sweep: Q <- softmax(log Q - A Q (W o [[-1, 1], [1, -1]])).
/// The row softmax of log Q - M is evaluated as Q o exp(-(M - min M)) / rowsum,
/// which never takes a log and leaves Q unchanged bit-for-bit when M = 0.
template <typename Scalar>
BeliefMatrix<Scalar> mean_field_step(const BeliefMatrix<Scalar>& q, const ChainAdjacency<Scalar>& a,
                                     const Eigen::Matrix<Scalar, 2, 2>& coupling) {
  const Eigen::Index n = q.rows();
  BeliefMatrix<Scalar> neighbours = BeliefMatrix<Scalar>::Zero(n, 2);
  for (Eigen::Index e = 0; e + 1 < n; ++e) {
    neighbours.row(e) += a.edge[e] * q.row(e + 1);
    neighbours.row(e + 1) += a.edge[e] * q.row(e);
  }
  const BeliefMatrix<Scalar> message = neighbours * coupling;

  BeliefMatrix<Scalar> next(n, 2);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Scalar floor = message.row(t).minCoeff();
    using std::exp;
    const Scalar u0 = q(t, 0) * exp(-(message(t, 0) - floor));
    const Scalar u1 = q(t, 1) * exp(-(message(t, 1) - floor));
    const Scalar z = u0 + u1;
    next(t, 0) = u0 / z;
    next(t, 1) = u1 / z;
  }
  return next;
}

/// W o [[-1, 1], [1, -1]]
template <typename Scalar = double>
Eigen::Matrix<Scalar, 2, 2> signed_coupling(const Eigen::Matrix2d& w) {
  Eigen::Matrix<Scalar, 2, 2> sign;
  sign << Scalar(-1), Scalar(1), Scalar(1), Scalar(-1);
  return w.cast<Scalar>().cwiseProduct(sign);
}

/// Runs `params.iters` mean-field sweeps from Q^(0) built out of `p`.
template <typename Derived>
BeliefMatrix<typename Derived::Scalar> mean_field_calibrate(const Eigen::MatrixBase<Derived>& p,
                                                            const CalibrationParams& params) {
  using Scalar = typename Derived::Scalar;
  if (p.size() < 1) throw LengthError("mean_field_calibrate: empty sequence");
  const auto a = build_adjacency<Scalar>(p.size(), params.t0);
  const auto coupling = signed_coupling<Scalar>(params.W);
  BeliefMatrix<Scalar> q = initial_beliefs(p);
  for (int r = 0; r < params.iters; ++r) q = mean_field_step(q, a, coupling);
  return q;
}

/// Machine column of Diag(beta(1..N)) * Q.
template <typename Scalar>
Vector<Scalar> final_calibration(const BeliefMatrix<Scalar>& q, long long t0) {
  Vector<Scalar> out(q.rows());
  for (Eigen::Index t = 0; t < q.rows(); ++t) out[t] = beta<Scalar>(t + 1, t0) * q(t, 1);
  return out;
}

/// Calibrated per-token scores for one record: the f_mrf(f_tok(s)) part of
/// the enhanced detector.
Eigen::VectorXd calibrated_scores(const TokenScoreRecord& record, const DetectorMethod& method,
                                  const CalibrationParams& params);

/// Enhanced detector f_dec(f_mrf(f_tok(s))).
double enhance(const TokenScoreRecord& record, const DetectorMethod& method,
               const CalibrationParams& params);

}  // namespace mgt

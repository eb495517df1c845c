// Copyright 2026 The cmaze Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "cmaze/ilqr.h"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace cmaze {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd Diff(const IlqrProblem& p, const VectorXd& a, const VectorXd& b) {
  return p.difference ? p.difference(a, b) : VectorXd(a - b);
}

const VectorXd& StateTarget(const IlqrProblem& p, int k) {
  return p.x_target.size() == 1 ? p.x_target.front() : p.x_target[k];
}

VectorXd ControlDeviation(const IlqrProblem& p, int k, const VectorXd& u) {
  if (p.u_target.empty()) return u;
  return u - (p.u_target.size() == 1 ? p.u_target.front() : p.u_target[k]);
}

bool Bounded(const IlqrProblem& p) { return p.u_lower.size() > 0; }

VectorXd Clamp(const IlqrProblem& p, const VectorXd& u) {
  if (!Bounded(p)) return u;
  return u.cwiseMax(p.u_lower).cwiseMin(p.u_upper);
}

void CheckProblem(const IlqrProblem& p, const VectorXd& x0,
                  const std::vector<VectorXd>& u) {
  const auto nx = x0.size();
  if (!p.dynamics) throw IlqrError("iLQR: no dynamics");
  if (p.horizon < 1) throw IlqrError("iLQR: horizon must be >= 1");
  if (static_cast<int>(u.size()) != p.horizon) {
    throw IlqrError("iLQR: control sequence length != horizon");
  }
  if (p.q.rows() != nx || p.q.cols() != nx || p.q_final.rows() != nx ||
      p.q_final.cols() != nx) {
    throw IlqrError("iLQR: state weight shape");
  }
  const auto nu = u.front().size();
  if (p.r.rows() != nu || p.r.cols() != nu) {
    throw IlqrError("iLQR: control weight shape");
  }
  const size_t nxt = p.x_target.size();
  if (nxt != 1 && nxt != static_cast<size_t>(p.horizon) + 1) {
    throw IlqrError("iLQR: state target count");
  }
  const size_t nut = p.u_target.size();
  if (nut > 1 && nut != static_cast<size_t>(p.horizon)) {
    throw IlqrError("iLQR: control target count");
  }
  if (p.u_lower.size() != p.u_upper.size() ||
      (Bounded(p) && p.u_lower.size() != nu)) {
    throw IlqrError("iLQR: control bound shape");
  }
}

constexpr double kLinearizeStep = 1e-5;

struct BackwardPass {
  std::vector<VectorXd> k_ff;
  std::vector<MatrixXd> k_fb;
  // predicted cost change of a full step: alpha * dv1 + alpha^2 * dv2
  double dv1 = 0.0;
  double dv2 = 0.0;
};

}  // namespace

Jacobians Linearize(const DynamicsFn& f, const VectorXd& x, const VectorXd& u,
                    const DifferenceFn& diff, double rel_step,
                    const VectorXd& u_lower, const VectorXd& u_upper) {
  auto d = [&](const VectorXd& a, const VectorXd& b) -> VectorXd {
    return diff ? diff(a, b) : VectorXd(a - b);
  };
  auto eval = [&](const VectorXd& xe, const VectorXd& ue) {
    VectorXd y = f(xe, ue);
    if (!y.allFinite()) throw IlqrError("Linearize: non-finite evaluation");
    return y;
  };
  const VectorXd y0 = eval(x, u);
  Jacobians j;
  j.a.resize(y0.size(), x.size());
  j.b.resize(y0.size(), u.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    j.a.col(i) = d(eval(xp, u), eval(xm, u)) / (2 * h);
  }
  const bool bounded = u_lower.size() == u.size() && u_upper.size() == u.size();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(u(i)));
    VectorXd up = u, um = u;
    up(i) += h;
    um(i) -= h;
    if (bounded && up(i) > u_upper(i)) {
      // one-sided into the box so the difference never straddles a clamp
      j.b.col(i) = d(y0, eval(x, um)) / h;
    } else if (bounded && um(i) < u_lower(i)) {
      j.b.col(i) = d(eval(x, up), y0) / h;
    } else {
      j.b.col(i) = d(eval(x, up), eval(x, um)) / (2 * h);
    }
  }
  return j;
}

double TrajectoryCost(const IlqrProblem& p, const std::vector<VectorXd>& x,
                      const std::vector<VectorXd>& u) {
  double cost = 0.0;
  for (int k = 0; k < p.horizon; ++k) {
    const VectorXd dx = Diff(p, x[k], StateTarget(p, k));
    const VectorXd du = ControlDeviation(p, k, u[k]);
    cost += dx.dot(p.q * dx) + du.dot(p.r * du);
  }
  const VectorXd dx = Diff(p, x[p.horizon], StateTarget(p, p.horizon));
  return cost + dx.dot(p.q_final * dx);
}

std::vector<VectorXd> Rollout(const IlqrProblem& p, const VectorXd& x0,
                              const std::vector<VectorXd>& u) {
  std::vector<VectorXd> x(u.size() + 1);
  x[0] = x0;
  for (size_t k = 0; k < u.size(); ++k) {
    x[k + 1] = p.dynamics(x[k], u[k]);
    if (!x[k + 1].allFinite()) throw IlqrError("iLQR: non-finite rollout");
  }
  return x;
}

BoxQpResult SolveBoxQp(const MatrixXd& h, const VectorXd& g,
                       const VectorXd& lower, const VectorXd& upper,
                       const VectorXd& start) {
  const auto n = g.size();
  auto value = [&](const VectorXd& k) { return 0.5 * k.dot(h * k) + g.dot(k); };
  BoxQpResult out;
  out.k = start.cwiseMax(lower).cwiseMin(upper);
  out.free.assign(n, true);
  for (int iter = 0; iter < 100; ++iter) {
    const VectorXd grad = g + h * out.k;
    std::vector<int> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool clamped = (out.k(i) <= lower(i) && grad(i) > 0) ||
                           (out.k(i) >= upper(i) && grad(i) < 0);
      out.free[i] = !clamped;
      if (!clamped) idx.push_back(static_cast<int>(i));
    }
    if (idx.empty()) break;
    const auto m = static_cast<Eigen::Index>(idx.size());
    MatrixXd hff(m, m);
    VectorXd gf(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      gf(a) = grad(idx[a]);
      for (Eigen::Index b = 0; b < m; ++b) hff(a, b) = h(idx[a], idx[b]);
    }
    if (gf.norm() < 1e-13) break;
    Eigen::LLT<MatrixXd> llt(hff);
    if (llt.info() != Eigen::Success) {
      out.ok = false;
      return out;
    }
    const VectorXd step_f = -llt.solve(gf);
    VectorXd search = VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) search(idx[a]) = step_f(a);

    const double v0 = value(out.k);
    const double slope = grad.dot(search);
    double alpha = 1.0;
    bool moved = false;
    while (alpha > 1e-10) {
      const VectorXd trial =
          (out.k + alpha * search).cwiseMax(lower).cwiseMin(upper);
      if (value(trial) - v0 <= 0.1 * alpha * slope && value(trial) < v0) {
        moved = (trial - out.k).norm() > 1e-14;
        out.k = trial;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  // final active set
  const VectorXd grad = g + h * out.k;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.free[i] = !((out.k(i) <= lower(i) && grad(i) > 0) ||
                    (out.k(i) >= upper(i) && grad(i) < 0));
  }
  return out;
}

IlqrSolution IlqrSolve(const IlqrProblem& p, const VectorXd& x0,
                       const std::vector<VectorXd>& u_init,
                       const IlqrOptions& options) {
  CheckProblem(p, x0, u_init);
  const int t_len = p.horizon;
  const auto nx = x0.size();
  const auto nu = u_init.front().size();

  IlqrSolution sol;
  sol.u.resize(t_len);
  for (int k = 0; k < t_len; ++k) sol.u[k] = Clamp(p, u_init[k]);
  sol.x = Rollout(p, x0, sol.u);
  sol.cost = TrajectoryCost(p, sol.x, sol.u);
  sol.k_fb.assign(t_len, MatrixXd::Zero(nu, nx));
  if (!std::isfinite(sol.cost)) throw IlqrError("iLQR: non-finite cost");

  std::vector<Jacobians> jac(t_len);
  BackwardPass bp;
  bp.k_ff.assign(t_len, VectorXd::Zero(nu));
  bp.k_fb.assign(t_len, MatrixXd::Zero(nu, nx));

  auto backward = [&](double mu) {
    const VectorXd dxt = Diff(p, sol.x[t_len], StateTarget(p, t_len));
    VectorXd vx = 2.0 * p.q_final * dxt;
    MatrixXd vxx = 2.0 * p.q_final;
    bp.dv1 = 0.0;
    bp.dv2 = 0.0;
    for (int k = t_len - 1; k >= 0; --k) {
      const MatrixXd& a = jac[k].a;
      const MatrixXd& b = jac[k].b;
      const VectorXd dx = Diff(p, sol.x[k], StateTarget(p, k));
      const VectorXd du = ControlDeviation(p, k, sol.u[k]);
      const VectorXd qx = 2.0 * p.q * dx + a.transpose() * vx;
      const VectorXd qu = 2.0 * p.r * du + b.transpose() * vx;
      const MatrixXd qxx = 2.0 * p.q + a.transpose() * vxx * a;
      MatrixXd vreg = vxx;
      vreg.diagonal().array() += mu;
      MatrixXd quu = 2.0 * p.r + b.transpose() * vreg * b;
      quu = 0.5 * (quu + quu.transpose());
      const MatrixXd qux = b.transpose() * vreg * a;
      // the value update uses the unregularized expansion
      const MatrixXd quu0 = 2.0 * p.r + b.transpose() * vxx * b;
      const MatrixXd qux0 = b.transpose() * vxx * a;

      VectorXd kff;
      MatrixXd kfb = MatrixXd::Zero(nu, nx);
      if (Bounded(p)) {
        const BoxQpResult qp =
            SolveBoxQp(quu, qu, p.u_lower - sol.u[k], p.u_upper - sol.u[k],
                       bp.k_ff[k]);
        if (!qp.ok) return false;
        kff = qp.k;
        std::vector<int> idx;
        for (Eigen::Index i = 0; i < nu; ++i) {
          if (qp.free[i]) idx.push_back(static_cast<int>(i));
        }
        if (!idx.empty()) {
          const auto m = static_cast<Eigen::Index>(idx.size());
          MatrixXd hff(m, m);
          MatrixXd quxf(m, nx);
          for (Eigen::Index r = 0; r < m; ++r) {
            quxf.row(r) = qux.row(idx[r]);
            for (Eigen::Index c = 0; c < m; ++c) hff(r, c) = quu(idx[r], idx[c]);
          }
          Eigen::LLT<MatrixXd> llt(hff);
          if (llt.info() != Eigen::Success) return false;
          const MatrixXd kf = -llt.solve(quxf);
          for (Eigen::Index r = 0; r < m; ++r) kfb.row(idx[r]) = kf.row(r);
        }
      } else {
        Eigen::LLT<MatrixXd> llt(quu);
        if (llt.info() != Eigen::Success) return false;
        kff = -llt.solve(qu);
        kfb = -llt.solve(qux);
      }
      vx = qx + kfb.transpose() * quu0 * kff + kfb.transpose() * qu +
           qux0.transpose() * kff;
      vxx = qxx + kfb.transpose() * quu0 * kfb + kfb.transpose() * qux0 +
            qux0.transpose() * kfb;
      vxx = 0.5 * (vxx + vxx.transpose());
      bp.k_ff[k] = kff;
      bp.k_fb[k] = kfb;
      bp.dv1 += kff.dot(qu);
      bp.dv2 += 0.5 * kff.dot(quu0 * kff);
    }
    return true;
  };

  double mu = 0.0;
  double delta = 1.0;
  auto increase = [&] {
    delta = std::max(options.mu_factor, delta * options.mu_factor);
    mu = std::max(options.mu_min, mu * delta);
  };
  auto decrease = [&] {
    delta = std::min(1.0 / options.mu_factor, delta / options.mu_factor);
    mu *= delta;
    if (mu < options.mu_min) mu = 0.0;
  };

  bool relinearize = true;
  constexpr std::array<double, 11> kAlphas = {
      1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125,
      0.00390625, 0.001953125, 0.0009765625};
  while (sol.iterations < options.max_iterations) {
    if (relinearize) {
      for (int k = 0; k < t_len; ++k) {
        jac[k] = Linearize(p.dynamics, sol.x[k], sol.u[k], p.difference,
                           kLinearizeStep, p.u_lower, p.u_upper);
      }
      relinearize = false;
    }
    while (!backward(mu)) {
      increase();
      if (mu > options.mu_max) {
        throw IlqrError("iLQR: backward pass not positive definite");
      }
    }
    ++sol.iterations;
    sol.k_fb = bp.k_fb;

    double step = 0.0;
    for (const auto& k : bp.k_ff) step = std::max(step, k.cwiseAbs().maxCoeff());
    const double expected = -(bp.dv1 + bp.dv2);
    if (step < options.step_tolerance ||
        expected < options.rel_tolerance * std::abs(sol.cost)) {
      sol.converged = true;
      sol.cost_history.push_back(sol.cost);
      break;
    }

    bool accepted = false;
    for (double alpha : kAlphas) {
      std::vector<VectorXd> xn(t_len + 1);
      std::vector<VectorXd> un(t_len);
      xn[0] = x0;
      bool finite = true;
      for (int k = 0; k < t_len && finite; ++k) {
        un[k] = Clamp(p, sol.u[k] + alpha * bp.k_ff[k] +
                             bp.k_fb[k] * Diff(p, xn[k], sol.x[k]));
        xn[k + 1] = p.dynamics(xn[k], un[k]);
        finite = xn[k + 1].allFinite();
      }
      if (!finite) continue;
      const double cost = TrajectoryCost(p, xn, un);
      if (cost < sol.cost) {
        const double rel = (sol.cost - cost) / std::max(std::abs(sol.cost), 1e-300);
        sol.x = std::move(xn);
        sol.u = std::move(un);
        sol.cost = cost;
        accepted = true;
        relinearize = true;
        decrease();
        if (rel < options.rel_tolerance) sol.converged = true;
        break;
      }
    }
    sol.cost_history.push_back(sol.cost);
    if (sol.converged) break;
    if (!accepted) {
      increase();
      if (mu > options.mu_max) break;
    }
  }
  return sol;
}

}  // namespace cmaze

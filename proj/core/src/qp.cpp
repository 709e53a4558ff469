#include "peergrid/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

namespace peergrid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Small deterministic generator for PSD probing; independent of any
// library RNG so validation is bitwise stable.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

void QpProblem::validate() const {
  if (dim <= 0) throw std::invalid_argument("QpProblem: dim must be positive");
  if (quad.rows() != dim || quad.cols() != dim) {
    throw std::invalid_argument("QpProblem: quad must be dim x dim");
  }
  if (lin.size() != dim) throw std::invalid_argument("QpProblem: lin size mismatch");
  if (lower.size() != dim || upper.size() != dim) {
    throw std::invalid_argument("QpProblem: bound size mismatch");
  }
  if (eq_matrix.cols() != dim) {
    throw std::invalid_argument("QpProblem: eq_matrix column count mismatch");
  }
  if (eq_rhs.size() != eq_matrix.rows()) {
    throw std::invalid_argument("QpProblem: eq_rhs size mismatch");
  }
  for (int i = 0; i < dim; ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i])) {
      throw std::invalid_argument("QpProblem: NaN bound at index " + std::to_string(i));
    }
    if (lower[i] > upper[i]) {
      throw std::invalid_argument("QpProblem: lower > upper at index " +
                                  std::to_string(i));
    }
    if (lower[i] == kInf || upper[i] == -kInf) {
      throw std::invalid_argument("QpProblem: empty bound interval at index " +
                                  std::to_string(i));
    }
  }
  if (!lin.allFinite() || (eq_rhs.size() > 0 && !eq_rhs.allFinite())) {
    throw std::invalid_argument("QpProblem: non-finite objective or rhs data");
  }

  double scale = 1.0;
  for (int col = 0; col < quad.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(quad, col); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw std::invalid_argument("QpProblem: non-finite quad entry");
      }
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  const Eigen::SparseMatrix<double> qt = quad.transpose();
  Eigen::SparseMatrix<double> diff = quad - qt;
  double asym = 0.0;
  for (int col = 0; col < diff.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, col); it; ++it) {
      asym = std::max(asym, std::abs(it.value()));
    }
  }
  if (asym > 1e-9 * scale) {
    throw std::invalid_argument("QpProblem: quad is not symmetric");
  }
  for (int col = 0; col < eq_matrix.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(eq_matrix, col); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw std::invalid_argument("QpProblem: non-finite eq_matrix entry");
      }
    }
  }

  // Curvature probe along seeded random directions.
  SplitMix64 rng(0x5eedULL + static_cast<std::uint64_t>(dim));
  for (int probe = 0; probe < 16; ++probe) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 2.0 * rng.uniform() - 1.0;
    const double nrm = v.norm();
    if (nrm == 0.0) continue;
    v /= nrm;
    const double curvature = v.dot(quad * v);
    if (curvature < -1e-8 * scale) {
      throw std::invalid_argument("QpProblem: negative curvature probe (quad not PSD)");
    }
  }
}

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& primal,
                    const Eigen::VectorXd& eq_duals, const Eigen::VectorXd& lower_duals,
                    const Eigen::VectorXd& upper_duals) {
  const int n = problem.dim;
  if (primal.size() != n || lower_duals.size() != n || upper_duals.size() != n ||
      eq_duals.size() != problem.eq_count()) {
    throw std::invalid_argument("kkt_residual: dimension mismatch");
  }

  Eigen::VectorXd stat = problem.quad * primal + problem.lin - lower_duals + upper_duals;
  if (problem.eq_count() > 0) {
    stat += problem.eq_matrix.transpose() * eq_duals;
  }
  double res = inf_norm(stat);

  if (problem.eq_count() > 0) {
    res = std::max(res, inf_norm(problem.eq_matrix * primal - problem.eq_rhs));
  }

  for (int i = 0; i < n; ++i) {
    res = std::max(res, problem.lower[i] - primal[i]);
    res = std::max(res, primal[i] - problem.upper[i]);
    // min(multiplier, slack) is zero exactly at a complementary pair with
    // the right signs; it also flags negative multipliers.
    const double slack_lo = primal[i] - problem.lower[i];  // +inf when unbounded
    const double slack_hi = problem.upper[i] - primal[i];
    res = std::max(res, std::abs(std::min(lower_duals[i], slack_lo)));
    res = std::max(res, std::abs(std::min(upper_duals[i], slack_hi)));
  }
  return res;
}

QpSolver::QpSolver(QpProblem problem, SolverSettings settings)
    : problem_(std::move(problem)), settings_(settings) {
  problem_.validate();
  n_ = problem_.dim;
  m_ = problem_.eq_count();
  penalty_ = settings_.split_penalty;

  build_scaling();
  build_kkt(penalty_);

  x_ = Eigen::VectorXd::Zero(n_);
  z_ = Eigen::VectorXd::Zero(m_ + n_).cwiseMax(lo_).cwiseMin(hi_);
  y_ = Eigen::VectorXd::Zero(m_ + n_);
}

void QpSolver::build_scaling() {
  var_scale_ = Eigen::VectorXd::Ones(n_);
  row_scale_ = Eigen::VectorXd::Ones(m_ + n_);
  cost_scale_ = 1.0;

  P_ = problem_.quad;
  q_ = problem_.lin;

  // K stacks the equality matrix over the identity (box rows).
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(problem_.eq_matrix.nonZeros() + n_);
  for (int col = 0; col < problem_.eq_matrix.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(problem_.eq_matrix, col); it;
         ++it) {
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value());
    }
  }
  for (int i = 0; i < n_; ++i) trips.emplace_back(m_ + i, i, 1.0);
  K_.resize(m_ + n_, n_);
  K_.setFromTriplets(trips.begin(), trips.end());

  lo_.resize(m_ + n_);
  hi_.resize(m_ + n_);
  lo_.head(m_) = problem_.eq_rhs;
  hi_.head(m_) = problem_.eq_rhs;
  lo_.tail(n_) = problem_.lower;
  hi_.tail(n_) = problem_.upper;

  if (!settings_.scaling) return;

  // Ruiz equilibration on [P K'; K 0].
  for (int pass = 0; pass < settings_.scaling_iters; ++pass) {
    Eigen::VectorXd col_norm = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(m_ + n_);
    for (int col = 0; col < P_.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(P_, col); it; ++it) {
        col_norm[col] = std::max(col_norm[col], std::abs(it.value()));
      }
    }
    for (int col = 0; col < K_.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(K_, col); it; ++it) {
        const double a = std::abs(it.value());
        col_norm[col] = std::max(col_norm[col], a);
        row_norm[it.row()] = std::max(row_norm[it.row()], a);
      }
    }
    Eigen::VectorXd dc(n_), dr(m_ + n_);
    for (int j = 0; j < n_; ++j) {
      dc[j] = col_norm[j] > 1e-12 ? 1.0 / std::sqrt(col_norm[j]) : 1.0;
    }
    for (int i = 0; i < m_ + n_; ++i) {
      dr[i] = row_norm[i] > 1e-12 ? 1.0 / std::sqrt(row_norm[i]) : 1.0;
    }
    for (int col = 0; col < P_.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(P_, col); it; ++it) {
        it.valueRef() *= dc[it.row()] * dc[it.col()];
      }
    }
    for (int col = 0; col < K_.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(K_, col); it; ++it) {
        it.valueRef() *= dr[it.row()] * dc[it.col()];
      }
    }
    q_.array() *= dc.array();
    lo_.array() *= dr.array();
    hi_.array() *= dr.array();
    var_scale_.array() *= dc.array();
    row_scale_.array() *= dr.array();
  }

  // Cost normalization.
  double mean_col = 0.0;
  for (int col = 0; col < P_.outerSize(); ++col) {
    double cn = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(P_, col); it; ++it) {
      cn = std::max(cn, std::abs(it.value()));
    }
    mean_col += cn;
  }
  mean_col /= std::max(1, n_);
  const double denom = std::max({mean_col, inf_norm(q_), 1e-8});
  cost_scale_ = std::clamp(1.0 / denom, 1e-6, 1e6);
  P_ *= cost_scale_;
  q_ *= cost_scale_;
}

void QpSolver::build_kkt(double penalty) {
  penalty_ = penalty;
  penalty_vec_.resize(m_ + n_);
  for (int i = 0; i < m_ + n_; ++i) {
    const bool pinned = (i < m_) || (lo_[i] == hi_[i]);
    penalty_vec_[i] = pinned ? penalty * settings_.eq_penalty_scale : penalty;
  }
  penalty_inv_ = penalty_vec_.cwiseInverse();

  const int dim = n_ + m_ + n_;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(P_.nonZeros() + 2 * K_.nonZeros() + dim);
  for (int col = 0; col < P_.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(P_, col); it; ++it) {
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value());
    }
  }
  for (int i = 0; i < n_; ++i) {
    trips.emplace_back(i, i, settings_.regularization);
  }
  for (int col = 0; col < K_.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K_, col); it; ++it) {
      const int r = n_ + static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      trips.emplace_back(r, c, it.value());
      trips.emplace_back(c, r, it.value());
    }
  }
  for (int i = 0; i < m_ + n_; ++i) {
    trips.emplace_back(n_ + i, n_ + i, -penalty_inv_[i]);
  }
  Eigen::SparseMatrix<double> kkt(dim, dim);
  kkt.setFromTriplets(trips.begin(), trips.end());
  kkt_.compute(kkt);
  if (kkt_.info() != Eigen::Success) {
    throw std::runtime_error("QpSolver: KKT factorization failed");
  }
}

QpSolution solve_qp(const QpProblem& problem, const SolverSettings& settings) {
  QpSolver solver(problem, settings);
  return solver.solve();
}

QpSolution QpSolver::solve() {
  x_.setZero();
  z_ = Eigen::VectorXd::Zero(m_ + n_).cwiseMax(lo_).cwiseMin(hi_);
  y_.setZero();
  warm_ = false;
  return run();
}

QpSolution QpSolver::solve_with_lin(const Eigen::VectorXd& lin) {
  if (lin.size() != n_) throw std::invalid_argument("solve_with_lin: size mismatch");
  problem_.lin = lin;
  q_ = cost_scale_ * var_scale_.cwiseProduct(lin);
  warm_ = true;
  return run();
}

void QpSolver::evaluate_candidate(QpSolution& best, int iteration) const {
  QpSolution cand;
  cand.primal = var_scale_.cwiseProduct(x_).cwiseMax(problem_.lower).cwiseMin(problem_.upper);
  const Eigen::VectorXd y_unscaled = row_scale_.cwiseProduct(y_) / cost_scale_;
  cand.eq_duals = y_unscaled.head(m_);
  const Eigen::VectorXd y_box = y_unscaled.tail(n_);
  cand.lower_duals = (-y_box).cwiseMax(0.0);
  cand.upper_duals = y_box.cwiseMax(0.0);
  cand.kkt_residual = kkt_residual(problem_, cand.primal, cand.eq_duals,
                                   cand.lower_duals, cand.upper_duals);
  cand.iterations = iteration;
  if (cand.kkt_residual < best.kkt_residual) {
    cand.status = best.status;
    cand.trace = std::move(best.trace);
    cand.polished = false;
    best = std::move(cand);
  }
}

QpSolution QpSolver::run() {
  QpSolution best;
  best.status = SolveStatus::iteration_limit;

  Eigen::VectorXd rhs(n_ + m_ + n_);
  Eigen::VectorXd fixed_point = z_ + penalty_inv_.cwiseProduct(y_);
  Eigen::VectorXd y_prev_check = y_;
  int iter = 0;
  // Each penalty rebuild resets the fixed-point contraction, so the
  // trigger ratio escalates and the count is capped; degenerate problems
  // otherwise thrash between penalties forever.
  int rebuilds = 0;

  for (iter = 1; iter <= settings_.max_iter; ++iter) {
    rhs.head(n_) = settings_.regularization * x_ - q_;
    rhs.tail(m_ + n_) = z_ - penalty_inv_.cwiseProduct(y_);
    const Eigen::VectorXd sol = kkt_.solve(rhs);
    const auto x_tilde = sol.head(n_);
    const auto nu = sol.tail(m_ + n_);
    const Eigen::VectorXd z_tilde = z_ + penalty_inv_.cwiseProduct(nu - y_);

    const double alpha = settings_.relaxation;
    x_ = alpha * x_tilde + (1.0 - alpha) * x_;
    const Eigen::VectorXd w =
        alpha * z_tilde + (1.0 - alpha) * z_ + penalty_inv_.cwiseProduct(y_);
    z_ = w.cwiseMax(lo_).cwiseMin(hi_);
    y_ = penalty_vec_.cwiseProduct(w - z_);

    const bool checkpoint =
        (iter % settings_.check_interval == 0) || iter == settings_.max_iter;

    if (settings_.record_trace || checkpoint) {
      const Eigen::VectorXd rp_vec = K_ * x_ - z_;
      const Eigen::VectorXd rd_vec = P_ * x_ + q_ + K_.transpose() * y_;
      const double rp = inf_norm(rp_vec.cwiseQuotient(row_scale_));
      const double rd = inf_norm(rd_vec.cwiseQuotient(var_scale_)) / cost_scale_;

      if (settings_.record_trace) {
        const Eigen::VectorXd fp_next = z_ + penalty_inv_.cwiseProduct(y_);
        best.trace.push_back({iter, rp, rd, (fp_next - fixed_point).norm()});
        fixed_point = fp_next;
      }

      if (checkpoint) {
        evaluate_candidate(best, iter);
        if (best.kkt_residual <= settings_.tolerance) {
          best.status = SolveStatus::optimal;
          break;
        }

        // Primal infeasibility certificate from the dual drift.
        const Eigen::VectorXd dy =
            row_scale_.cwiseProduct(y_ - y_prev_check) / cost_scale_;
        const double dy_norm = inf_norm(dy);
        if (dy_norm > 1e-10) {
          const Eigen::VectorXd dyn = dy / dy_norm;
          Eigen::VectorXd kt_dy = dyn.tail(n_);
          if (m_ > 0) kt_dy += problem_.eq_matrix.transpose() * dyn.head(m_);
          if (inf_norm(kt_dy) <= settings_.eps_infeasible) {
            double support = 0.0;
            bool unbounded_support = false;
            for (int i = 0; i < m_ + n_; ++i) {
              const double d = dyn[i];
              const double up = i < m_ ? problem_.eq_rhs[i] : problem_.upper[i - m_];
              const double lo = i < m_ ? problem_.eq_rhs[i] : problem_.lower[i - m_];
              if (d > 1e-12) {
                if (up == kInf) { unbounded_support = true; break; }
                support += up * d;
              } else if (d < -1e-12) {
                if (lo == -kInf) { unbounded_support = true; break; }
                support += lo * d;
              }
            }
            if (!unbounded_support && support < -settings_.eps_infeasible) {
              best.status = SolveStatus::infeasible;
              best.iterations = iter;
              return best;
            }
          }
        }
        y_prev_check = y_;

        if (settings_.adaptive_penalty) {
          const Eigen::VectorXd kx = K_ * x_;
          const double np = std::max({inf_norm(kx), inf_norm(z_), 1e-10});
          const double nd = std::max({inf_norm(P_ * x_), inf_norm(q_),
                                      inf_norm(K_.transpose() * y_), 1e-10});
          const double rp_rel = inf_norm(kx - z_) / np;
          const double rd_rel =
              inf_norm(P_ * x_ + q_ + K_.transpose() * y_) / nd;
          if (rp_rel > 1e-14 && rd_rel > 1e-14 && rebuilds < 10) {
            const double proposed = std::clamp(
                penalty_ * std::sqrt(rp_rel / rd_rel), 1e-6, 1e6);
            const double trigger = 5.0 * (1 << rebuilds);
            if (proposed > trigger * penalty_ || proposed < penalty_ / trigger) {
              build_kkt(proposed);
              ++rebuilds;
            }
          }
        }
      }
    }
  }

  return polish_and_finish(std::move(best), std::min(iter, settings_.max_iter));
}

QpSolution QpSolver::polish_and_finish(QpSolution best, int iterations) const {
  best.iterations = iterations;

  if (settings_.polish && best.primal.size() == n_) {
    // Guess active bounds from dual signs, then solve the reduced KKT
    // system on the original (unscaled) data with iterative refinement.
    std::vector<int> act_lo, act_hi;
    for (int i = 0; i < n_; ++i) {
      if (best.lower_duals[i] > best.upper_duals[i] && problem_.lower[i] > -kInf) {
        act_lo.push_back(i);
      } else if (best.upper_duals[i] > best.lower_duals[i] &&
                 problem_.upper[i] < kInf) {
        act_hi.push_back(i);
      }
    }
    const int ka = static_cast<int>(act_lo.size() + act_hi.size());
    const int rows = m_ + ka;
    const int dim = n_ + rows;
    const double reg = 1e-9;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(problem_.quad.nonZeros() + 2 * problem_.eq_matrix.nonZeros() +
                  2 * ka + dim);
    for (int col = 0; col < problem_.quad.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(problem_.quad, col); it; ++it) {
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
      }
    }
    for (int i = 0; i < n_; ++i) trips.emplace_back(i, i, reg);
    for (int col = 0; col < problem_.eq_matrix.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(problem_.eq_matrix, col); it;
           ++it) {
        trips.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
        trips.emplace_back(static_cast<int>(it.col()), n_ + static_cast<int>(it.row()),
                           it.value());
      }
    }
    Eigen::VectorXd rhs(dim);
    rhs.head(n_) = -problem_.lin;
    rhs.segment(n_, m_) = problem_.eq_rhs;
    int r = m_;
    for (int i : act_lo) {
      trips.emplace_back(n_ + r, i, 1.0);
      trips.emplace_back(i, n_ + r, 1.0);
      rhs[n_ + r] = problem_.lower[i];
      ++r;
    }
    for (int i : act_hi) {
      trips.emplace_back(n_ + r, i, 1.0);
      trips.emplace_back(i, n_ + r, 1.0);
      rhs[n_ + r] = problem_.upper[i];
      ++r;
    }
    for (int i = 0; i < rows; ++i) trips.emplace_back(n_ + i, n_ + i, -reg);

    Eigen::SparseMatrix<double> kkt(dim, dim);
    kkt.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fact(kkt);
    if (fact.info() == Eigen::Success) {
      Eigen::VectorXd sol = fact.solve(rhs);
      // Refine against the unregularized system.
      Eigen::SparseMatrix<double> g(rows, n_);
      {
        std::vector<Eigen::Triplet<double>> gt;
        gt.reserve(problem_.eq_matrix.nonZeros() + ka);
        for (int col = 0; col < problem_.eq_matrix.outerSize(); ++col) {
          for (Eigen::SparseMatrix<double>::InnerIterator it(problem_.eq_matrix, col);
               it; ++it) {
            gt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                            it.value());
          }
        }
        int gr = m_;
        for (int i : act_lo) gt.emplace_back(gr++, i, 1.0);
        for (int i : act_hi) gt.emplace_back(gr++, i, 1.0);
        g.setFromTriplets(gt.begin(), gt.end());
      }
      for (int refine = 0; refine < 3; ++refine) {
        Eigen::VectorXd resid(dim);
        resid.head(n_) = rhs.head(n_) - problem_.quad * sol.head(n_) -
                         g.transpose() * sol.tail(rows);
        resid.tail(rows) = rhs.tail(rows) - g * sol.head(n_);
        sol += fact.solve(resid);
      }

      QpSolution pol;
      pol.primal =
          sol.head(n_).cwiseMax(problem_.lower).cwiseMin(problem_.upper);
      pol.eq_duals = sol.segment(n_, m_);
      pol.lower_duals = Eigen::VectorXd::Zero(n_);
      pol.upper_duals = Eigen::VectorXd::Zero(n_);
      int pr = m_;
      for (int i : act_lo) pol.lower_duals[i] = std::max(0.0, -sol[n_ + pr++]);
      for (int i : act_hi) pol.upper_duals[i] = std::max(0.0, sol[n_ + pr++]);
      pol.kkt_residual = kkt_residual(problem_, pol.primal, pol.eq_duals,
                                      pol.lower_duals, pol.upper_duals);
      if (pol.kkt_residual < best.kkt_residual) {
        pol.status = best.status;
        pol.iterations = best.iterations;
        pol.trace = std::move(best.trace);
        pol.polished = true;
        best = std::move(pol);
      }
    }
  }

  if (best.primal.size() == n_) {
    best.objective = 0.5 * best.primal.dot(problem_.quad * best.primal) +
                     problem_.lin.dot(best.primal);
    if (best.kkt_residual <= settings_.tolerance) {
      best.status = SolveStatus::optimal;
    }
  }
  return best;
}

void dump_problem(const QpProblem& problem, std::ostream& out) {
  const auto write_sparse = [&](const char* tag, const Eigen::SparseMatrix<double>& m) {
    out << tag << ' ' << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (int col = 0; col < m.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
        out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
      }
    }
  };
  const auto write_vec = [&](const char* tag, const Eigen::VectorXd& v) {
    out << tag << ' ' << v.size() << '\n';
    for (int i = 0; i < v.size(); ++i) {
      if (v[i] == kInf) out << "inf\n";
      else if (v[i] == -kInf) out << "-inf\n";
      else out << v[i] << '\n';
    }
  };
  out.precision(17);
  out << "%%peergrid-qp 1\n";
  out << "dim " << problem.dim << '\n';
  write_sparse("quad", problem.quad);
  write_vec("lin", problem.lin);
  write_sparse("eq_matrix", problem.eq_matrix);
  write_vec("eq_rhs", problem.eq_rhs);
  write_vec("lower", problem.lower);
  write_vec("upper", problem.upper);
  out << "end\n";
}

}  // namespace peergrid

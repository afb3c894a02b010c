#include "msh/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "num_text.hpp"

namespace msh::optim {

namespace {

// A trial evaluation that throws (state blew up) counts as a rejected step.
bool try_value(const Objective& obj, const Eigen::VectorXd& x, double* value) {
  try {
    *value = obj.eval(x, nullptr, nullptr);
  } catch (const std::runtime_error&) {
    return false;
  }
  return std::isfinite(*value);
}

}  // namespace

NlcgResult nlcg_minimize(const Objective& obj, const Eigen::VectorXd& x0, const NlcgConfig& cfg,
                         const RowMetric& metric) {
  NlcgResult out;
  out.x = x0;

  Eigen::VectorXd g(x0.size()), y(x0.size());
  y.setZero();
  double f = obj.eval(out.x, &g, &y);
  if (y.isZero(0.0) && !g.isZero(0.0)) y = g;  // objective without preconditioner
  out.initial_grad_norm = g.norm();
  out.value = f;
  out.grad_norm = out.initial_grad_norm;
  if (out.initial_grad_norm == 0.0) return out;  // already stationary

  Eigen::VectorXd d = -y;
  double step = cfg.initial_step;
  int since_restart = 0;
  int no_progress = 0;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    double slope = g.dot(d);
    if (slope >= 0.0) {  // not a descent direction; restart
      d = -y;
      slope = g.dot(d);
      since_restart = 0;
      if (slope >= 0.0) {
        d = -g;
        slope = -g.squaredNorm();
      }
    }

    // Armijo backtracking from the previous accepted step, slightly expanded.
    double trial = step;
    double f_trial = 0.0;
    bool accepted = false;
    bool fell_back = false;
    for (;;) {
      for (int b = 0; b <= cfg.max_backtracks; ++b) {
        if (try_value(obj, out.x + trial * d, &f_trial) &&
            f_trial <= f + cfg.sufficient_decrease * trial * slope) {
          accepted = true;
          break;
        }
        trial *= cfg.backtrack;
      }
      if (accepted || fell_back) break;
      // One retry along preconditioned steepest descent.
      fell_back = true;
      d = -y;
      slope = g.dot(d);
      if (slope >= 0.0) {
        d = -g;
        slope = -g.squaredNorm();
      }
      since_restart = 0;
      trial = cfg.initial_step;
    }
    if (!accepted) {
      out.status = NlcgStatus::line_search_failed;
      out.message = "line search failed along steepest descent at iteration " +
                    std::to_string(iter);
      break;
    }

    const double f_prev = f;
    out.x += trial * d;
    Eigen::VectorXd g_new(x0.size()), y_new(x0.size());
    y_new.setZero();
    f = obj.eval(out.x, &g_new, &y_new);
    if (y_new.isZero(0.0) && !g_new.isZero(0.0)) y_new = g_new;

    out.iterations = iter;
    out.value = f;
    out.grad_norm = g_new.norm();

    IterRow row;
    row.inner = iter;
    row.objective = f;
    row.grad_norm = out.grad_norm;
    row.step = trial;
    if (metric) {
      row.metric = metric();
      row.has_metric = true;
    }
    out.trace.push_back(row);

    if (out.grad_norm <= cfg.grad_tol * out.initial_grad_norm) {
      out.status = NlcgStatus::converged;
      return out;
    }

    // Armijo accepts a step with no decrease once c1 * trial * slope is below
    // one ulp of f; several in a row means the precision floor, not progress.
    no_progress = f < f_prev ? 0 : no_progress + 1;
    if (no_progress >= 3) {
      out.status = NlcgStatus::stalled;
      out.message = "objective progress reached numerical precision at iteration " +
                    std::to_string(iter);
      return out;
    }

    ++since_restart;
    double beta = 0.0;
    if (since_restart < cfg.restart_every) {
      double denom = y.dot(g);
      if (denom > 0.0) beta = std::max(0.0, y_new.dot(g_new - g) / denom);
    } else {
      since_restart = 0;
    }
    d = beta * d - y_new;
    g = g_new;
    y = y_new;
    step = trial * 2.0;  // warm start the next search
  }

  if (out.status != NlcgStatus::line_search_failed) out.status = NlcgStatus::max_iterations;
  return out;
}

namespace {

class AlInnerObjective final : public Objective {
 public:
  explicit AlInnerObjective(AlProblem& p) : p_(p) {}
  double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
              Eigen::VectorXd* pre_grad) const override {
    return p_.eval(x, grad, pre_grad);
  }

 private:
  AlProblem& p_;
};

}  // namespace

AlResult al_solve(AlProblem& problem, const Eigen::VectorXd& x0, const AlConfig& al_cfg,
                  const NlcgConfig& nlcg_cfg) {
  AlResult out;
  out.x = x0;
  const double mu0 = problem.mu();
  const double scale = problem.constraint_scale() > 0.0 ? problem.constraint_scale() : 1.0;
  AlInnerObjective inner(problem);

  double inner_tol = al_cfg.inner_tol_initial;
  for (int outer = 0; outer < al_cfg.max_outer; ++outer) {
    NlcgConfig ncfg = nlcg_cfg;
    ncfg.grad_tol = inner_tol;
    NlcgResult res = nlcg_minimize(inner, out.x, ncfg,
                                   [&problem] { return problem.last_eval_constraint(); });
    out.x = res.x;
    out.value = res.value;
    out.inner_iterations += res.iterations;
    out.outer_iterations = outer + 1;
    for (IterRow row : res.trace) {
      row.outer = outer;
      row.mu = problem.mu();
      row.has_mu = true;
      out.trace.push_back(row);
    }
    if (res.status == NlcgStatus::line_search_failed) {
      out.status = AlStatus::line_search_failed;
      out.message = res.message;
      out.constraint_inf = problem.constraint_inf_norm(out.x);
      return out;
    }

    out.constraint_inf = problem.constraint_inf_norm(out.x);
    const bool feasible = out.constraint_inf <= al_cfg.constraint_tol * scale;
    const bool at_final_tol = inner_tol <= al_cfg.inner_tol_final * (1.0 + 1e-12);
    // A stalled inner solve is as converged as the arithmetic allows.
    const bool inner_done =
        res.status == NlcgStatus::converged || res.status == NlcgStatus::stalled;
    if (feasible && at_final_tol && inner_done) {
      out.status = AlStatus::converged;
      return out;
    }

    problem.update_multipliers(out.x, al_cfg.decrease_required, al_cfg.rho_mu);
    if (problem.mu() > al_cfg.mu_max_factor * mu0) {
      out.status = AlStatus::infeasible;
      out.message = "constraint infeasible at this resolution (penalty exceeded " +
                    detail::shortest(al_cfg.mu_max_factor) + " times its initial value)";
      return out;
    }
    // Once feasible, jump straight to the final tolerance instead of walking
    // the schedule down.
    inner_tol = feasible ? al_cfg.inner_tol_final
                         : std::max(al_cfg.inner_tol_final, inner_tol * al_cfg.inner_tol_decay);
  }
  out.status = AlStatus::max_outer;
  out.message = "outer iteration limit reached";
  return out;
}

std::string trace_csv(const std::vector<IterRow>& rows) {
  std::string csv = "outer,inner,objective,grad_norm,constraint_inf_norm,mu,step_len\n";
  for (const IterRow& r : rows) {
    csv += std::to_string(r.outer);
    csv += ',';
    csv += std::to_string(r.inner);
    csv += ',';
    csv += detail::shortest(r.objective);
    csv += ',';
    csv += detail::shortest(r.grad_norm);
    csv += ',';
    if (r.has_metric) csv += detail::shortest(r.metric);
    csv += ',';
    if (r.has_mu) csv += detail::shortest(r.mu);
    csv += ',';
    csv += detail::shortest(r.step);
    csv += '\n';
  }
  return csv;
}

void write_trace_csv(const std::string& path, const std::vector<IterRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace file for writing: " + path);
  f << trace_csv(rows);
}

}  // namespace msh::optim

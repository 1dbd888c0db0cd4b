#include "mpflow/optimize.hpp"

#include <chrono>
#include <cmath>
#include <deque>

namespace mpf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

struct CorrectionPair {
    std::vector<double> s, y;
    double rho = 0.0;
};

// Two-loop recursion: dir = -H * g with implicit H from the stored pairs.
void lbfgs_direction(const std::deque<CorrectionPair>& pairs, std::span<const double> grad,
                     std::vector<double>& dir) {
    dir.assign(grad.begin(), grad.end());
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
        alpha[i] = pairs[i].rho * dot(pairs[i].s, dir);
        for (std::size_t k = 0; k < dir.size(); ++k) dir[k] -= alpha[i] * pairs[i].y[k];
    }
    if (!pairs.empty()) {
        const auto& last = pairs.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& x : dir) x *= gamma;
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double beta = pairs[i].rho * dot(pairs[i].y, dir);
        for (std::size_t k = 0; k < dir.size(); ++k) dir[k] += (alpha[i] - beta) * pairs[i].s[k];
    }
    for (double& x : dir) x = -x;
}

struct LinePoint {
    double alpha;
    double f;
    double dphi;  // directional derivative g(x+alpha d).d
    ObjectiveEval eval;
};

}  // namespace

OptimizeResult lbfgs_minimize(const Objective& objective, std::span<const double> theta0,
                              const OptimizerOptions& opts) {
    const auto t0 = Clock::now();
    OptimizeResult res;
    res.theta.assign(theta0.begin(), theta0.end());
    const std::size_t n = res.theta.size();

    auto record = [&](std::size_t iter, double f, double ginf) {
        TraceRecord rec{iter, f, ginf, seconds_since(t0)};
        if (!res.trace.records.empty() && rec.elapsed_s <= res.trace.records.back().elapsed_s)
            rec.elapsed_s = res.trace.records.back().elapsed_s + 1e-9;
        res.trace.records.push_back(rec);
        if (opts.observer) opts.observer(rec, res.theta);
    };

    ObjectiveEval cur = objective(res.theta);
    res.diagnostics.merge(cur.diagnostics);
    double ginf = inf_norm(cur.gradient);
    record(0, cur.value, ginf);
    res.objective = cur.value;

    if (!std::isfinite(cur.value) || !all_finite(cur.gradient)) {
        res.status = OptimizeStatus::NonFiniteGradient;
        return res;
    }
    if (ginf <= opts.grad_tol) {
        res.status = OptimizeStatus::Converged;
        return res;
    }

    std::deque<CorrectionPair> pairs;
    std::vector<double> dir(n), trial(n);

    for (std::size_t iter = 1; iter <= opts.max_iters; ++iter) {
        lbfgs_direction(pairs, cur.gradient, dir);
        double dphi0 = dot(cur.gradient, dir);
        if (!(dphi0 < 0.0)) {
            // Not a descent direction (stale curvature); fall back to steepest descent.
            pairs.clear();
            for (std::size_t k = 0; k < n; ++k) dir[k] = -cur.gradient[k];
            dphi0 = dot(cur.gradient, dir);
            if (!(dphi0 < 0.0)) break;  // gradient numerically zero
        }

        auto eval_at = [&](double alpha) -> LinePoint {
            for (std::size_t k = 0; k < n; ++k) trial[k] = res.theta[k] + alpha * dir[k];
            ObjectiveEval e = objective(trial);
            res.diagnostics.merge(e.diagnostics);
            return {alpha, e.value, dot(e.gradient, dir), std::move(e)};
        };

        // Strong Wolfe line search: bracketing phase followed by zoom bisection
        // with quadratic interpolation.
        const double f0 = cur.value;
        const double c1 = opts.wolfe_c1, c2 = opts.wolfe_c2;
        double alpha_init = 1.0;
        if (pairs.empty()) {
            alpha_init = std::min(1.0, 1.0 / std::max(1e-12, inf_norm(cur.gradient)));
        }

        LinePoint lo{0.0, f0, dphi0, {}};
        LinePoint chosen{0.0, f0, dphi0, {}};
        bool found = false, failed = false;

        LinePoint prev = lo;
        double alpha = alpha_init;
        LinePoint hi{0.0, 0.0, 0.0, {}};
        bool bracketed = false;
        for (int tries = 0; tries < 20; ++tries) {
            LinePoint pt = eval_at(alpha);
            if (!std::isfinite(pt.f) || pt.f > f0 + c1 * alpha * dphi0 || (tries > 0 && pt.f >= prev.f)) {
                lo = prev;
                hi = pt;
                bracketed = true;
                break;
            }
            if (std::abs(pt.dphi) <= -c2 * dphi0) {
                chosen = std::move(pt);
                found = true;
                break;
            }
            if (pt.dphi >= 0.0) {
                lo = pt;
                hi = prev;
                bracketed = true;
                break;
            }
            prev = std::move(pt);
            alpha *= 2.0;
        }

        if (!found && bracketed) {
            for (int zi = 0; zi < 40; ++zi) {
                // Quadratic interpolation using lo's value/slope and hi's value,
                // safeguarded to the interior of the bracket.
                double a_lo = lo.alpha, a_hi = hi.alpha;
                double mid = 0.5 * (a_lo + a_hi);
                double denom = 2.0 * (hi.f - lo.f - lo.dphi * (a_hi - a_lo));
                if (std::isfinite(denom) && std::abs(denom) > 1e-300) {
                    double interp = a_lo - lo.dphi * (a_hi - a_lo) * (a_hi - a_lo) / denom;
                    double lob = std::min(a_lo, a_hi), upb = std::max(a_lo, a_hi);
                    double margin = 0.1 * (upb - lob);
                    if (interp > lob + margin && interp < upb - margin) mid = interp;
                }
                LinePoint pt = eval_at(mid);
                if (!std::isfinite(pt.f) || pt.f > f0 + c1 * mid * dphi0 || pt.f >= lo.f) {
                    hi = std::move(pt);
                } else {
                    if (std::abs(pt.dphi) <= -c2 * dphi0) {
                        chosen = std::move(pt);
                        found = true;
                        break;
                    }
                    if (pt.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                    lo = std::move(pt);
                }
                if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
            }
            if (!found && lo.alpha > 0.0 && lo.f < f0) {
                // Sufficient decrease without curvature: accept the best point
                // rather than aborting, but flag the search.
                chosen = std::move(lo);
                found = true;
                failed = true;
            }
        }

        if (!found) {
            res.status = OptimizeStatus::LineSearchFailed;
            return res;
        }

        // Accept the step.
        for (std::size_t k = 0; k < n; ++k) trial[k] = res.theta[k] + chosen.alpha * dir[k];
        CorrectionPair cp;
        cp.s.resize(n);
        cp.y.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            cp.s[k] = trial[k] - res.theta[k];
            cp.y[k] = chosen.eval.gradient[k] - cur.gradient[k];
        }
        const double sy = dot(cp.s, cp.y);
        if (sy > 1e-12 * std::sqrt(dot(cp.s, cp.s)) * std::sqrt(dot(cp.y, cp.y))) {
            cp.rho = 1.0 / sy;
            pairs.push_back(std::move(cp));
            if (pairs.size() > opts.memory) pairs.pop_front();
        }

        const double f_prev = cur.value;
        res.theta.swap(trial);
        cur = std::move(chosen.eval);
        res.objective = cur.value;
        ginf = inf_norm(cur.gradient);
        record(iter, cur.value, ginf);

        if (!all_finite(cur.gradient)) {
            res.status = OptimizeStatus::NonFiniteGradient;
            return res;
        }
        if (failed) {
            res.status = OptimizeStatus::LineSearchFailed;
            return res;
        }
        if (ginf <= opts.grad_tol) {
            res.status = OptimizeStatus::Converged;
            return res;
        }
        if (opts.f_tol > 0.0 &&
            std::abs(f_prev - cur.value) <= opts.f_tol * std::max(1.0, std::abs(f_prev))) {
            res.status = OptimizeStatus::Converged;
            return res;
        }
    }

    res.status = OptimizeStatus::MaxIterations;
    return res;
}

OptimizeResult gd_minimize(const Objective& objective, std::span<const double> theta0,
                           const LinearSchedule& schedule, std::size_t n_updates) {
    const auto t0 = Clock::now();
    OptimizeResult res;
    res.theta.assign(theta0.begin(), theta0.end());

    auto record = [&](std::size_t iter, double f, double ginf) {
        TraceRecord rec{iter, f, ginf, seconds_since(t0)};
        if (!res.trace.records.empty() && rec.elapsed_s <= res.trace.records.back().elapsed_s)
            rec.elapsed_s = res.trace.records.back().elapsed_s + 1e-9;
        res.trace.records.push_back(rec);
    };

    ObjectiveEval cur = objective(res.theta);
    res.diagnostics.merge(cur.diagnostics);
    res.objective = cur.value;
    record(0, cur.value, inf_norm(cur.gradient));

    for (std::size_t t = 0; t < n_updates; ++t) {
        if (!all_finite(cur.gradient)) {
            res.status = OptimizeStatus::NonFiniteGradient;
            return res;
        }
        const double rate = schedule.rate(t, n_updates);
        for (std::size_t k = 0; k < res.theta.size(); ++k) res.theta[k] -= rate * cur.gradient[k];
        cur = objective(res.theta);
        res.diagnostics.merge(cur.diagnostics);
        res.objective = cur.value;
        record(t + 1, cur.value, inf_norm(cur.gradient));
    }
    res.status = OptimizeStatus::Converged;
    return res;
}

}  // namespace mpf

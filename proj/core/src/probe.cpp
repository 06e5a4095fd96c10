#include "rediscover/probe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rediscover/number_format.hpp"
#include "rediscover/program.hpp"

namespace rediscover {
namespace {

Expression with_constants(const Expression& e, std::span<const double> values, std::size_t& next) {
  switch (e.kind()) {
    case Expression::Kind::constant: return Expression::constant(values[next++]);
    case Expression::Kind::variable: return e;
    case Expression::Kind::apply: break;
  }
  std::vector<Expression> children;
  children.reserve(e.children().size());
  for (const auto& c : e.children()) children.push_back(with_constants(c, values, next));
  return Expression::apply(e.op(), std::move(children));
}

Expression with_constants(const Expression& e, std::span<const double> values) {
  std::size_t next = 0;
  return with_constants(e, values, next);
}

// Box-constrained Levenberg-Marquardt in unit coordinates u in [-1, 1].
// `residual` returns false when the model is invalid at some point.
using Residual = std::function<bool(const Eigen::VectorXd& u, Eigen::VectorXd& r)>;

Eigen::VectorXd fit_box(const Residual& residual, Eigen::VectorXd u, int m) {
  const int n = static_cast<int>(u.size());
  if (n == 0) return u;
  Eigen::VectorXd r(m);
  if (!residual(u, r)) return u;
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  constexpr double step = 1e-3;
  Eigen::MatrixXd jac(m, n);
  Eigen::VectorXd rp(m), rm(m), trial(m);
  for (int iter = 0; iter < 200 && cost > 1e-32; ++iter) {
    bool jac_ok = true;
    for (int j = 0; j < n && jac_ok; ++j) {
      Eigen::VectorXd up = u, um = u;
      const double hi = std::min(1.0, u[j] + step);
      const double lo = std::max(-1.0, u[j] - step);
      up[j] = hi;
      um[j] = lo;
      jac_ok = residual(up, rp) && residual(um, rm);
      if (jac_ok) jac.col(j) = (rp - rm) / (hi - lo);
    }
    if (!jac_ok) break;
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    // Parameters pinned at a bound by the descent direction stay out of the solve.
    std::vector<int> free;
    for (int j = 0; j < n; ++j) {
      if ((u[j] >= 1.0 && g[j] < 0.0) || (u[j] <= -1.0 && g[j] > 0.0)) continue;
      free.push_back(j);
    }
    if (free.empty()) break;
    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd af(nf, nf);
    Eigen::VectorXd gf(nf);
    for (int p = 0; p < nf; ++p) {
      gf[p] = g[free[p]];
      for (int q = 0; q < nf; ++q) af(p, q) = a(free[p], free[q]);
    }
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd damped = af;
      for (int p = 0; p < nf; ++p) damped(p, p) += lambda * af(p, p) + lambda * 1e-12 + 1e-300;
      const Eigen::VectorXd delta = damped.ldlt().solve(-gf);
      Eigen::VectorXd next = u;
      for (int p = 0; p < nf; ++p) next[free[p]] = std::clamp(u[free[p]] + delta[p], -1.0, 1.0);
      if (residual(next, trial)) {
        const double c = trial.squaredNorm();
        if (c < cost) {
          const double moved = (next - u).norm();
          u = next;
          r = trial;
          cost = c;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = moved > 1e-15;
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }
  return u;
}

struct Side {
  Program program;
  std::size_t first_param;
};

}  // namespace

std::string_view name(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::equivalent: return "equivalent";
    case ProbeVerdict::constant_offset: return "constant_offset";
    case ProbeVerdict::constant_ratio: return "constant_ratio";
    case ProbeVerdict::not_equivalent: return "not_equivalent";
    case ProbeVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

void ProbeConfig::validate() const {
  if (points < 2) throw std::invalid_argument("probe points must be >= 2");
  if (!(tolerance > 0.0)) throw std::invalid_argument("probe tolerance must be > 0");
  if (constant_digits < 0) throw std::invalid_argument("constant_digits must be >= 0");
  if (!(min_constant > 0.0) || !(max_constant > min_constant)) {
    throw std::invalid_argument("probe constant range is empty");
  }
}

double rounding_half_width(double c, int digits) {
  if (digits <= 0 || c == 0.0) return 0.0;
  if (c == std::nearbyint(c) && std::fabs(c) < 1e5) return 0.0;
  const double centre = round_significant(c, digits);
  return 0.5 * std::pow(10.0, decimal_exponent(centre) - digits + 1);
}

ProbeResult probe_equivalence(const Expression& a, const Expression& b,
                              std::span<const SamplingSpec> domain, const ProbeConfig& cfg) {
  cfg.validate();
  ProbeResult out;
  out.fitted_a = a;
  out.fitted_b = b;

  int nvars = 0;
  for (const auto& s : domain) nvars = std::max(nvars, s.variable);
  std::vector<bool> bound(static_cast<std::size_t>(nvars) + 1, false);
  for (const auto& s : domain) bound[static_cast<std::size_t>(s.variable)] = true;
  for (const auto* e : {&a, &b}) {
    for (int v : variables(*e)) {
      if (v > nvars || !bound[static_cast<std::size_t>(v)]) {
        out.note = "v" + std::to_string(v) + " has no sampling spec";
        return out;
      }
    }
  }

  Program pa(a), pb(b);
  const std::size_t na = pa.constants().size();
  const std::size_t nb = pb.constants().size();

  Rng rng(cfg.seed);
  std::vector<double> rows;
  std::vector<double> point(static_cast<std::size_t>(nvars), 0.0);
  std::vector<double> ya, yb;
  for (int i = 0; i < cfg.points; ++i) {
    for (const auto& s : domain) point[static_cast<std::size_t>(s.variable - 1)] = s.draw(rng);
    const auto va = pa.eval(point);
    const auto vb = pb.eval(point);
    if (!va || !vb) continue;
    rows.insert(rows.end(), point.begin(), point.end());
    ya.push_back(*va);
    yb.push_back(*vb);
  }
  const int m = static_cast<int>(ya.size());
  out.valid_points = m;
  if (2 * m < cfg.points) {
    out.note = "only " + std::to_string(m) + " of " + std::to_string(cfg.points) +
               " points valid for both sides";
    return out;
  }
  const std::size_t stride = static_cast<std::size_t>(nvars);

  // Free parameters: every constant that carries rounding uncertainty.
  std::vector<double> all;
  all.insert(all.end(), pa.constants().begin(), pa.constants().end());
  all.insert(all.end(), pb.constants().begin(), pb.constants().end());
  std::vector<std::size_t> slot;
  std::vector<double> centre, half;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (cfg.exact_b && i >= na) break;
    const double h = rounding_half_width(all[i], cfg.constant_digits);
    if (h <= 0.0) continue;
    slot.push_back(i);
    centre.push_back(round_significant(all[i], cfg.constant_digits));
    half.push_back(h);
  }
  const int n = static_cast<int>(slot.size());
  Eigen::VectorXd u0(n);
  for (int j = 0; j < n; ++j) u0[j] = std::clamp((all[slot[j]] - centre[j]) / half[j], -1.0, 1.0);

  std::vector<double> weight(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double w = std::max(std::fabs(ya[i]), std::fabs(yb[i]));
    weight[static_cast<std::size_t>(i)] = w > 0.0 ? w : 1.0;
  }

  auto constants_at = [&](const Eigen::VectorXd& u) {
    std::vector<double> c = all;
    for (int j = 0; j < n; ++j) c[slot[j]] = centre[j] + u[j] * half[j];
    return c;
  };
  std::vector<double> ea(static_cast<std::size_t>(m)), eb(static_cast<std::size_t>(m));
  auto evaluate_at = [&](const Eigen::VectorXd& u) {
    const auto c = constants_at(u);
    const std::span<const double> cs(c);
    pa.eval_rows(rows, stride, ea, cs.subspan(0, na));
    pb.eval_rows(rows, stride, eb, cs.subspan(na, nb));
    for (int i = 0; i < m; ++i) {
      if (!std::isfinite(ea[i]) || !std::isfinite(eb[i])) return false;
    }
    return true;
  };

  double scale = 0.0;
  auto finish = [&](ProbeVerdict v, double k, const Eigen::VectorXd& u) {
    out.verdict = v;
    out.k = k;
    const auto c = constants_at(u);
    const std::span<const double> cs(c);
    out.fitted_a = with_constants(a, cs.subspan(0, na));
    out.fitted_b = with_constants(b, cs.subspan(na, nb));
    return out;
  };

  // Equivalence: a - b vanishes.
  const Eigen::VectorXd u_eq = fit_box(
      [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
        if (!evaluate_at(u)) return false;
        for (int i = 0; i < m; ++i) r[i] = (ea[i] - eb[i]) / weight[static_cast<std::size_t>(i)];
        return true;
      },
      u0, m);
  if (!evaluate_at(u_eq)) evaluate_at(u0);
  double max_diff = 0.0;
  for (int i = 0; i < m; ++i) {
    scale = std::max({scale, std::fabs(ea[i]), std::fabs(eb[i])});
    max_diff = std::max(max_diff, std::fabs(ea[i] - eb[i]));
  }
  out.scale = scale;
  out.max_abs_diff = max_diff;
  if (max_diff <= cfg.tolerance * scale) return finish(ProbeVerdict::equivalent, 0.0, u_eq);

  auto in_range = [&](double k) {
    return std::fabs(k) >= cfg.min_constant && std::fabs(k) <= cfg.max_constant;
  };

  // Constant offset: a - b has no spread.
  auto mean_diff = [&] {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += ea[i] - eb[i];
    return s / m;
  };
  const Eigen::VectorXd u_off = fit_box(
      [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
        if (!evaluate_at(u)) return false;
        const double k = mean_diff();
        for (int i = 0; i < m; ++i) r[i] = (ea[i] - eb[i] - k) / scale;
        return true;
      },
      u_eq, m);
  if (evaluate_at(u_off)) {
    const double k = mean_diff();
    double var = 0.0;
    for (int i = 0; i < m; ++i) var += (ea[i] - eb[i] - k) * (ea[i] - eb[i] - k);
    const double sd = std::sqrt(var / std::max(1, m - 1));
    if (sd <= cfg.tolerance * scale && std::fabs(k) > cfg.tolerance * scale) {
      if (!in_range(k)) {
        out.note = "offset " + format_constant(k) + " outside the accepted range";
        return finish(ProbeVerdict::inconclusive, k, u_off);
      }
      return finish(ProbeVerdict::constant_offset, k, u_off);
    }
  }

  // Constant ratio: log|a/b| has no spread and the sign never changes.
  auto ratio_ok = [&] {
    for (int i = 0; i < m; ++i) {
      if (ea[i] == 0.0 || eb[i] == 0.0 || (ea[i] > 0.0) != (ea[0] > 0.0) ||
          (eb[i] > 0.0) != (eb[0] > 0.0)) {
        return false;
      }
    }
    return true;
  };
  auto mean_log = [&] {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += std::log(std::fabs(ea[i] / eb[i]));
    return s / m;
  };
  if (evaluate_at(u_eq) && ratio_ok()) {
    const Eigen::VectorXd u_ratio = fit_box(
        [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
          if (!evaluate_at(u) || !ratio_ok()) return false;
          const double k = mean_log();
          for (int i = 0; i < m; ++i) r[i] = std::log(std::fabs(ea[i] / eb[i])) - k;
          return true;
        },
        u_eq, m);
    if (evaluate_at(u_ratio) && ratio_ok()) {
      const double sign = (ea[0] > 0.0) == (eb[0] > 0.0) ? 1.0 : -1.0;
      const double k = sign * std::exp(mean_log());
      double spread = 0.0;
      for (int i = 0; i < m; ++i) spread = std::max(spread, std::fabs(ea[i] / eb[i] / k - 1.0));
      if (spread <= cfg.tolerance) {
        if (!in_range(k)) {
          out.note = "ratio " + format_constant(k) + " outside the accepted range";
          return finish(ProbeVerdict::inconclusive, k, u_ratio);
        }
        return finish(ProbeVerdict::constant_ratio, k, u_ratio);
      }
    }
  }
  return finish(ProbeVerdict::not_equivalent, 0.0, u_eq);
}

}  // namespace rediscover

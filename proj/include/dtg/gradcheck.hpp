#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dtg/errors.hpp"
#include "dtg/losses.hpp"
#include "dtg/rng.hpp"

namespace dtg {

enum class LossId { kFocal, kSmoothL1, kRankMatching, kLinearControl };

inline const char* loss_name(LossId id) {
  switch (id) {
    case LossId::kFocal: return "focal";
    case LossId::kSmoothL1: return "smooth_l1";
    case LossId::kRankMatching: return "rank_matching";
    case LossId::kLinearControl: return "linear_control";
  }
  return "?";
}

namespace detail {

// Central differences against an analytic gradient over one input vector.
// `inject` shifts the analytic gradient and exists as a negative-control hook
// for the gradcheck command.
template <typename LossFn>
double max_rel_err(std::vector<double> x, LossFn&& fn, double eps, double inject) {
  const std::size_t n = x.size();
  std::vector<double> analytic(n);
  fn(x, &analytic);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = fn(x, nullptr);
    x[i] = keep - eps;
    const double down = fn(x, nullptr);
    x[i] = keep;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw ValidationError("loss is not finite at a perturbed point");
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i] + inject;
    const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace detail

// Compares the analytic gradient of the named loss against central finite
// differences on `trials` random inputs; returns the max relative error
// |a-n| / max(1, |a|, |n|) over all coordinates.
inline double grad_check(LossId id, Rng& rng, int trials, double eps, double inject = 0.0) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw ValidationError("gradcheck eps must lie in (0, 1e-2]");
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    switch (id) {
      case LossId::kFocal: {
        const int classes = rng.uniform_int(1, 5);
        const int target = rng.uniform_int(-1, classes - 1);  // -1 = background
        const double gamma = rng.coin() ? 2.0 : rng.uniform(0.0, 4.0);
        const double alpha_f = rng.uniform(0.05, 0.95);
        std::vector<double> probs(classes);
        for (double& p : probs) p = rng.uniform(0.05, 0.95);
        worst = std::max(worst, detail::max_rel_err(
            probs,
            [&](std::span<const double> x, std::vector<double>* grad) {
              const FocalLoss fl = focal_loss(x, target, gamma, alpha_f);
              if (grad) *grad = fl.grad;
              return fl.value;
            },
            eps, inject));
        break;
      }
      case LossId::kSmoothL1: {
        const double beta = rng.uniform(0.5, 2.0);
        RegressionDelta target{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                               rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        std::vector<double> pred(4);
        // keep every coordinate away from the |d| == beta kink
        for (int i = 0; i < 4; ++i) {
          const double t = i == 0 ? target.dx : i == 1 ? target.dy : i == 2 ? target.dw : target.dh;
          double d = rng.uniform(-3.0, 3.0);
          while (std::abs(std::abs(d) - beta) < 64.0 * eps) d = rng.uniform(-3.0, 3.0);
          pred[i] = t + d;
        }
        worst = std::max(worst, detail::max_rel_err(
            pred,
            [&](std::span<const double> x, std::vector<double>* grad) {
              const SmoothL1Loss sl =
                  smooth_l1(RegressionDelta{x[0], x[1], x[2], x[3]}, target, beta);
              if (grad) *grad = {sl.grad.dx, sl.grad.dy, sl.grad.dw, sl.grad.dh};
              return sl.value;
            },
            eps, inject));
        break;
      }
      case LossId::kRankMatching: {
        const int members = rng.uniform_int(2, 8);
        const double temperature = trial % 3 == 0 ? 0.5 : trial % 3 == 1 ? 1.0 : 2.0;
        std::vector<double> teacher(members), student(members);
        for (double& s : teacher) s = rng.uniform(0.01, 0.99);
        for (double& s : student) s = rng.uniform(0.01, 0.99);
        worst = std::max(worst, detail::max_rel_err(
            student,
            [&](std::span<const double> x, std::vector<double>* grad) {
              const RankMatchingLoss rm = rank_matching_loss(teacher, x, temperature);
              if (grad) *grad = rm.grad;
              return rm.value;
            },
            eps, inject));
        break;
      }
      case LossId::kLinearControl: {
        std::vector<double> x(4);
        for (double& v : x) v = rng.uniform(-5.0, 5.0);
        worst = std::max(worst, detail::max_rel_err(
            x,
            [](std::span<const double> v, std::vector<double>* grad) {
              if (grad) grad->assign(v.size(), 1.0);
              double sum = 0.0;
              for (double e : v) sum += e;
              return sum;
            },
            eps, inject));
        break;
      }
    }
  }
  return worst;
}

}  // namespace dtg

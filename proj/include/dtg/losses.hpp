#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "dtg/errors.hpp"
#include "dtg/labels.hpp"

namespace dtg {

// Probabilities are floored away from {0,1} before any log so that saturated
// teacher scores cannot produce infinities.
inline constexpr double kProbFloor = 1e-7;

inline double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

// target_class value meaning "background" in focal_loss.
inline constexpr int kBackgroundClass = -1;

struct FocalLoss {
  double value = 0.0;
  std::vector<double> grad;  // d value / d fg_probs, aligned with the input
};

// Focal loss over a sample's foreground probabilities. For a foreground
// target c the loss is -alpha_f (1-p_c)^gamma log(p_c) on that entry alone;
// for a background target it is the sum over every foreground entry of
// -(1-alpha_f) p^gamma log(1-p), i.e. the loss against each class's negative
// probability.
inline FocalLoss focal_loss(std::span<const double> fg_probs, int target_class, double gamma,
                            double alpha_f) {
  const int n = static_cast<int>(fg_probs.size());
  if (target_class < kBackgroundClass || target_class >= n)
    throw InvariantError("focal target class out of range");
  FocalLoss out;
  out.grad.assign(n, 0.0);
  if (target_class == kBackgroundClass) {
    const double w = 1.0 - alpha_f;
    for (int c = 0; c < n; ++c) {
      const double p = clamp_prob(fg_probs[c]);
      const double log_neg = std::log1p(-p);
      out.value += -w * std::pow(p, gamma) * log_neg;
      out.grad[c] = w * (std::pow(p, gamma) / (1.0 - p) - gamma * std::pow(p, gamma - 1.0) * log_neg);
    }
  } else {
    const double p = clamp_prob(fg_probs[target_class]);
    const double log_p = std::log(p);
    out.value = -alpha_f * std::pow(1.0 - p, gamma) * log_p;
    out.grad[target_class] =
        alpha_f * (gamma * std::pow(1.0 - p, gamma - 1.0) * log_p - std::pow(1.0 - p, gamma) / p);
  }
  return out;
}

struct SmoothL1Loss {
  double value = 0.0;
  RegressionDelta grad;  // d value / d pred
};

inline SmoothL1Loss smooth_l1(const RegressionDelta& pred, const RegressionDelta& target,
                              double beta_sl1) {
  if (!(beta_sl1 > 0.0)) throw ValidationError("smooth-l1 beta must be positive");
  const std::array<double, 4> diffs = {pred.dx - target.dx, pred.dy - target.dy,
                                       pred.dw - target.dw, pred.dh - target.dh};
  SmoothL1Loss out;
  std::array<double, 4> grads{};
  for (int i = 0; i < 4; ++i) {
    const double d = diffs[i];
    const double ad = std::abs(d);
    if (ad < beta_sl1) {
      out.value += 0.5 * d * d / beta_sl1;
      grads[i] = d / beta_sl1;
    } else {
      out.value += ad - 0.5 * beta_sl1;
      grads[i] = d > 0.0 ? 1.0 : -1.0;
    }
  }
  out.grad = RegressionDelta{grads[0], grads[1], grads[2], grads[3]};
  return out;
}

struct RankDistribution {
  std::vector<double> probs;
};

// Temperature softmax over a cluster's member scores, max-subtracted for
// stability. Entries sum to 1.
inline RankDistribution rank_distribution(std::span<const double> scores, double temperature) {
  if (scores.empty()) throw ValidationError("rank distribution needs at least one score");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  RankDistribution out;
  out.probs.resize(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.probs[i] = std::exp((scores[i] - m) / temperature);
    sum += out.probs[i];
  }
  for (double& p : out.probs) p /= sum;
  return out;
}

struct RankMatchingLoss {
  double value = 0.0;
  std::vector<double> grad;  // d value / d student_scores
};

// KL divergence from the teacher rank distribution to the student one over a
// cluster's aligned member scores. Zero for singleton clusters and for
// identical score vectors. Gradient w.r.t. the student scores is
// (D_s - D_t) / T.
inline RankMatchingLoss rank_matching_loss(std::span<const double> teacher_scores,
                                           std::span<const double> student_scores,
                                           double temperature) {
  if (teacher_scores.size() != student_scores.size())
    throw InvariantError("rank matching requires aligned teacher/student score vectors");
  if (teacher_scores.empty()) throw ValidationError("rank matching needs at least one score");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");

  const std::size_t n = teacher_scores.size();
  RankMatchingLoss out;
  out.grad.assign(n, 0.0);
  if (n == 1) return out;  // both distributions are the point mass

  auto log_softmax = [&](std::span<const double> scores) {
    double m = scores[0];
    for (double s : scores) m = std::max(m, s);
    std::vector<double> logits(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = (scores[i] - m) / temperature;
      sum += std::exp(logits[i]);
    }
    const double lse = std::log(sum);
    for (double& l : logits) l -= lse;
    return logits;
  };

  const std::vector<double> log_t = log_softmax(teacher_scores);
  const std::vector<double> log_s = log_softmax(student_scores);
  for (std::size_t i = 0; i < n; ++i) {
    const double d_t = std::exp(log_t[i]);
    const double d_s = std::exp(log_s[i]);
    out.value += d_t * (log_t[i] - log_s[i]);
    out.grad[i] = (d_s - d_t) / temperature;
  }
  return out;
}

// Unlabeled-data loss: classification + regression + weighted rank matching.
inline double combine_unlabeled(double l_cls, double l_reg, double l_rm, double beta) {
  return l_cls + l_reg + beta * l_rm;
}

// Overall loss: labeled-data loss plus alpha-weighted unlabeled-data loss.
inline double combine_total(double l_labeled, double l_unlabeled, double alpha) {
  return l_labeled + alpha * l_unlabeled;
}

// Per-image loss scalars plus gradients of l_unlabeled w.r.t. the student's
// class probabilities and predicted regression deltas, aligned with the
// student sample list.
struct LossReport {
  double l_cls = 0.0;
  double l_reg = 0.0;
  double l_rm = 0.0;
  double l_unlabeled = 0.0;
  double l_total = 0.0;
  std::vector<std::vector<double>> grad_student_scores;
  std::vector<std::array<double, 4>> grad_student_deltas;
};

}  // namespace dtg

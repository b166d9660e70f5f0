#pragma once

#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "skillrank/types.hpp"

namespace skillrank {

// Correctness-reference objectives: 64-bit floats, gradients with respect to
// the similarity/score inputs only.

struct InfoNceResult {
    double loss = 0.0;
    Eigen::MatrixXd grad;  // d loss / d sim
};

// In-batch contrastive loss over a B x B query-skill similarity matrix whose
// diagonal holds the positives:
//   loss = -(1/B) sum_i log( exp(sim_ii/tau) / sum_j exp(sim_ij/tau) )
// Row-max subtraction keeps the softmax stable.
InfoNceResult info_nce(const Eigen::MatrixXd& sim, double tau = 0.05);

struct ListwiseResult {
    double loss = 0.0;
    Eigen::VectorXd grad;
};

// Listwise cross-entropy over K candidate scores with one positive:
//   loss = -log( exp(f_pos/tau) / sum_j exp(f_j/tau) )
ListwiseResult listwise_ce(const Eigen::VectorXd& scores, Eigen::Index positive_index,
                           double tau = 1.0);

// Mean binary cross-entropy with logits, log-sum-exp stabilized:
//   loss = -(1/K) sum_j [ y_j log s(f_j) + (1-y_j) log(1-s(f_j)) ]
ListwiseResult pointwise_bce(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

// Loss with its analytic gradient, evaluated at a point.
using LossFn = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

// Central-difference check of the analytic gradient; returns the worst
// per-coordinate absolute discrepancy.
double finite_diff_check(const LossFn& loss_fn, const Eigen::VectorXd& point,
                         double step = 1e-4);

}  // namespace skillrank

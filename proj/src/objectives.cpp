#include "skillrank/objectives.hpp"

#include <cmath>

namespace skillrank {

namespace {

// softplus(x) = log(1 + e^x) without overflow.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Row-stabilized softmax of v / tau.
Eigen::VectorXd softmax_scaled(const Eigen::VectorXd& v, double tau) {
    const Eigen::VectorXd z = v / tau;
    const double m = z.maxCoeff();
    Eigen::VectorXd e = (z.array() - m).exp();
    return e / e.sum();
}

}  // namespace

InfoNceResult info_nce(const Eigen::MatrixXd& sim, double tau) {
    if (sim.rows() != sim.cols()) {
        throw ValidationError("info_nce: similarity matrix must be square");
    }
    if (sim.rows() == 0) throw ValidationError("info_nce: empty matrix");
    if (tau <= 0.0) throw ValidationError("info_nce: tau must be > 0");

    const Eigen::Index batch = sim.rows();
    const double inv_batch = 1.0 / static_cast<double>(batch);

    InfoNceResult result;
    result.grad.resize(batch, batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
        const Eigen::VectorXd row = sim.row(i).transpose();
        const Eigen::VectorXd p = softmax_scaled(row, tau);
        // -log softmax at the diagonal, recomputed in log space for accuracy.
        const Eigen::VectorXd z = row / tau;
        const double m = z.maxCoeff();
        const double log_sum = std::log((z.array() - m).exp().sum()) + m;
        result.loss += -(z[i] - log_sum);
        result.grad.row(i) = (p.transpose() * (inv_batch / tau));
        result.grad(i, i) -= inv_batch / tau;
    }
    result.loss *= inv_batch;
    return result;
}

ListwiseResult listwise_ce(const Eigen::VectorXd& scores, Eigen::Index positive_index,
                           double tau) {
    if (scores.size() == 0) throw ValidationError("listwise_ce: empty score vector");
    if (positive_index < 0 || positive_index >= scores.size()) {
        throw ValidationError("listwise_ce: positive index out of range");
    }
    if (tau <= 0.0) throw ValidationError("listwise_ce: tau must be > 0");

    const Eigen::VectorXd z = scores / tau;
    const double m = z.maxCoeff();
    const double log_sum = std::log((z.array() - m).exp().sum()) + m;

    ListwiseResult result;
    result.loss = -(z[positive_index] - log_sum);
    result.grad = softmax_scaled(scores, tau) / tau;
    result.grad[positive_index] -= 1.0 / tau;
    return result;
}

ListwiseResult pointwise_bce(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    if (scores.size() != labels.size()) {
        throw ValidationError("pointwise_bce: scores and labels differ in length");
    }
    if (scores.size() == 0) throw ValidationError("pointwise_bce: empty score vector");
    for (Eigen::Index j = 0; j < labels.size(); ++j) {
        if (labels[j] != 0.0 && labels[j] != 1.0) {
            throw ValidationError("pointwise_bce: labels must be 0 or 1");
        }
    }

    const auto k = static_cast<double>(scores.size());
    ListwiseResult result;
    result.grad.resize(scores.size());
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
        // -[y log s(f) + (1-y) log(1-s(f))] = softplus(f) - y f
        result.loss += softplus(scores[j]) - labels[j] * scores[j];
        result.grad[j] = (sigmoid(scores[j]) - labels[j]) / k;
    }
    result.loss /= k;
    return result;
}

double finite_diff_check(const LossFn& loss_fn, const Eigen::VectorXd& point, double step) {
    if (step <= 0.0) throw ValidationError("finite_diff_check: step must be > 0");
    const auto [loss, grad] = loss_fn(point);
    (void)loss;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        Eigen::VectorXd forward = point;
        Eigen::VectorXd backward = point;
        forward[i] += step;
        backward[i] -= step;
        const double numeric =
            (loss_fn(forward).first - loss_fn(backward).first) / (2.0 * step);
        worst = std::max(worst, std::abs(numeric - grad[i]));
    }
    return worst;
}

}  // namespace skillrank

#include "isrbcd/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace isrbcd {

void DesignProblem::validate() const {
    if (!loss || !penalty) {
        throw std::invalid_argument("problem needs a loss and a penalty");
    }
    if (labels.size() != features.rows()) {
        throw std::invalid_argument("label count does not match sample count");
    }
    if (features.cols() == 0 || features.rows() == 0) {
        throw std::invalid_argument("empty design matrix");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be finite and non-negative");
    }
}

double DesignProblem::objective(const Eigen::VectorXd& x) const {
    const PredictionCache cache = make_cache(features, x);
    return loss_value(*loss, cache.margins, labels) + penalty_value(*penalty, x, lambda);
}

} // namespace isrbcd

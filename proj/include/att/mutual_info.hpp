#pragma once

#include <cstddef>

#include "att/data_batch.hpp"
#include "att/model.hpp"

namespace att {

inline constexpr std::size_t kMaxExactBmiVariables = 16;

// Mutual information (nats) between the two variable groups separated by e,
// by enumerating all 2^n configurations.
double bmi_exact(const TensorTreeModel& m, Edge e);

struct BmiEstimate {
  double value = 0.0;      // |raw_mean|
  double raw_mean = 0.0;   // sample mean of ln p(a,b) / (p(a) p(b))
  double std_error = 0.0;  // standard error of raw_mean
  std::size_t samples = 0;
};

// Sample estimate of the mutual information across e. Marginals come from
// the canonical form centred on e, so the model is re-centred there first
// when e is not the root edge.
BmiEstimate bmi_empirical(const TensorTreeModel& m, Edge e, const DataBatch& batch);

// Same estimator from the pieces available at a root edge: per-sample
// messages of the two sides in the Schmidt basis and the Schmidt weights.
// With clamp, probabilities are floored at kMinProbability instead of
// raising ZeroAmplitudeError.
BmiEstimate bmi_from_schmidt(const Eigen::Ref<const Eigen::MatrixXd>& side_a,
                             const Eigen::Ref<const Eigen::MatrixXd>& side_b,
                             const Eigen::Ref<const Eigen::VectorXd>& weights, bool clamp = false);

}  // namespace att

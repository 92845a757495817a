#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "att/data_batch.hpp"
#include "att/tensor.hpp"
#include "att/topology.hpp"

namespace att {

// Tensor tree wave function. Internal node x owns a 3-leg tensor whose axes
// follow the slot order of x in the topology; leaves own nothing. On a
// virtual root edge the amplitude contracts diag(lambda) across that edge.
// If the root edge touches a leaf, the adjacent internal node holds the
// whole weight and lambda only records the singular values of that cut.
class TensorTreeModel {
 public:
  TensorTreeModel() = default;
  TensorTreeModel(TreeTopology topology, std::vector<DenseTensor> tensors,
                  std::vector<double> lambda, std::size_t chi);

  const TreeTopology& topology() const { return topology_; }
  TreeTopology& topology() { return topology_; }
  std::size_t num_variables() const { return topology_.num_variables(); }
  std::size_t chi() const { return chi_; }

  const DenseTensor& tensor(NodeId node) const { return tensors_.at(node); }
  void set_tensor(NodeId node, DenseTensor t) { tensors_.at(node) = std::move(t); }
  const std::vector<DenseTensor>& tensors() const { return tensors_; }

  std::span<const double> lambda() const { return lambda_; }
  void set_lambda(std::vector<double> lambda) { lambda_ = std::move(lambda); }

  std::size_t bond_dim(Edge e) const;
  bool leaf_rooted() const;
  // Sum of lambda squared; equals the norm of the state in canonical form.
  double partition_function() const;

  // Shape agreement between tensors, topology and lambda.
  void validate() const;

  friend bool operator==(const TensorTreeModel&, const TensorTreeModel&) = default;

 private:
  TreeTopology topology_;
  std::vector<DenseTensor> tensors_;
  std::vector<double> lambda_;
  std::size_t chi_ = 0;
};

// Slot of each internal node facing the root edge; -1 for the node that
// carries the weight when the root edge touches a leaf, and for leaves.
std::vector<int> root_facing_slots(const TreeTopology& t);

// Gaussian entries, bond extents min(chi, 2^min(|A|,|B|)), canonical and
// normalized at the topology's root edge.
TensorTreeModel init_model(const TreeTopology& t, std::size_t chi, std::uint64_t seed);

TensorTreeModel canonicalize(const TensorTreeModel& m, Edge root);
void canonicalize_in_place(TensorTreeModel& m, Edge root);

// target must share a node with the current root edge.
TensorTreeModel move_root(const TensorTreeModel& m, Edge target);
void move_root_in_place(TensorTreeModel& m, Edge target);

// Scales the state to Z = 1.
void normalize(TensorTreeModel& m);

// Largest deviation from the identity over all isometry checks, plus the
// ordering and positivity checks on lambda folded in as 1.0 when violated.
double canonical_error(const TensorTreeModel& m);

// psi = mantissa * 2^exponent, so that large models do not underflow.
struct ScaledAmplitudes {
  std::vector<double> mantissa;
  std::vector<double> exponent;
};
ScaledAmplitudes scaled_amplitudes(const TensorTreeModel& m, const DataBatch& batch, std::size_t threads = 1);

double amplitude(const TensorTreeModel& m, std::span<const std::uint8_t> x);
// Plain doubles; underflow to zero is possible on large models.
std::vector<double> amplitudes(const TensorTreeModel& m, const DataBatch& batch,
                               std::size_t threads = 1);

double log_prob(const TensorTreeModel& m, std::span<const std::uint8_t> x);

enum class ZeroPolicy {
  Strict,  // zero amplitude gives +inf NLL
  Clamp    // squared mantissa clamped at kMinProbability
};
inline constexpr double kMinProbability = 1e-300;

double nll(const TensorTreeModel& m, const DataBatch& batch, ZeroPolicy policy = ZeroPolicy::Strict,
           std::size_t threads = 1);

// Root working tensor: the 4-leg contraction (a, b, c, d) of the two root
// tensors with lambda for a virtual root, the weight-carrying 3-leg tensor
// (slot order) for a leaf root. Leg order follows root_legs.
DenseTensor root_working_tensor(const TensorTreeModel& m);

// Gradient of the batch NLL with respect to the root working tensor.
// Throws ZeroAmplitudeError naming the first sample with psi = 0.
DenseTensor grad_root_tensor(const TensorTreeModel& m, const DataBatch& batch);

// p(x) for all 2^n configurations; bit i of the index is variable i.
std::vector<double> exact_distribution(const TensorTreeModel& m);
inline constexpr std::size_t kMaxEnumerationVariables = 20;

}  // namespace att

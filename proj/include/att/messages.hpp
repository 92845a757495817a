#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "att/data_batch.hpp"
#include "att/topology.hpp"

namespace att {

class TensorTreeModel;

// Lazily computed subtree contractions over a batch. message(x, s) is the
// (batch x extent) matrix obtained by cutting the edge at slot s of node x
// and contracting the part containing x with leaves clamped to the batch.
// Each row is stored rescaled by a power of two; the true row is
// message(x, s).row(r) * 2^exponent(x, s)(r). Both the model and the batch
// must outlive the cache. Computing a message frees the one running the
// opposite way along the same edge, so a returned reference is only good
// until the next message() or toward() call.
class MessageCache {
 public:
  MessageCache(const TensorTreeModel& model, const DataBatch& batch);

  const Eigen::MatrixXd& message(NodeId node, std::size_t slot);
  // Message out of `from` along the edge to `to`.
  const Eigen::MatrixXd& toward(NodeId from, NodeId to);
  // Base-2 row exponents of message(node, slot); zero for leaf messages.
  const Eigen::VectorXd& exponent(NodeId node, std::size_t slot);
  const Eigen::VectorXd& toward_exponent(NodeId from, NodeId to);

  // The tensor at `node` changed: drops every message that depends on it.
  void invalidate(NodeId node);
  void invalidate_all();
  void rebind(const DataBatch& batch);

  std::size_t batch_size() const { return batch_->num_samples(); }
  const DataBatch& batch() const { return *batch_; }
  // Internal-node messages computed since construction.
  std::size_t computed() const { return computed_; }

 private:
  std::size_t key(NodeId node, std::size_t slot) const { return 3 * node + slot; }
  void compute(NodeId node, std::size_t slot);
  void fill_leaves();

  const TensorTreeModel* model_;
  const DataBatch* batch_;
  std::vector<Eigen::MatrixXd> msg_;
  std::vector<Eigen::VectorXd> exp_;
  std::vector<char> valid_;
  std::size_t computed_ = 0;
};

// Row-wise Kronecker product: out(r, i * y.cols() + j) = x(r, i) * y(r, j).
Eigen::MatrixXd row_kron(const Eigen::Ref<const Eigen::MatrixXd>& x,
                         const Eigen::Ref<const Eigen::MatrixXd>& y);

}  // namespace att

#include "att/messages.hpp"

#include <cmath>
#include <string>

#include "att/errors.hpp"
#include "att/model.hpp"

namespace att {

Eigen::MatrixXd row_kron(const Eigen::Ref<const Eigen::MatrixXd>& x,
                         const Eigen::Ref<const Eigen::MatrixXd>& y) {
  if (x.rows() != y.rows()) throw ShapeError("row_kron: row counts differ");
  Eigen::MatrixXd out(x.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    out.middleCols(i * y.cols(), y.cols()) = y.array().colwise() * x.col(i).array();
  }
  return out;
}

MessageCache::MessageCache(const TensorTreeModel& model, const DataBatch& batch)
    : model_(&model), batch_(&batch) {
  if (batch.num_variables() != model.num_variables()) {
    throw FormatError("batch has " + std::to_string(batch.num_variables()) +
                      " variables, model has " + std::to_string(model.num_variables()));
  }
  msg_.resize(3 * model.topology().num_nodes());
  exp_.resize(msg_.size());
  valid_.assign(msg_.size(), 0);
  fill_leaves();
}

void MessageCache::fill_leaves() {
  const std::size_t rows = batch_->num_samples();
  for (NodeId leaf = 0; leaf < model_->num_variables(); ++leaf) {
    Eigen::MatrixXd& m = msg_[key(leaf, 0)];
    m.setZero(static_cast<Eigen::Index>(rows), 2);
    for (std::size_t r = 0; r < rows; ++r) m(static_cast<Eigen::Index>(r), batch_->at(r, leaf)) = 1.0;
    exp_[key(leaf, 0)].setZero(static_cast<Eigen::Index>(rows));
    valid_[key(leaf, 0)] = 1;
  }
}

void MessageCache::rebind(const DataBatch& batch) {
  if (batch.num_variables() != model_->num_variables()) {
    throw FormatError("batch variable count does not match the model");
  }
  batch_ = &batch;
  invalidate_all();
  fill_leaves();
}

void MessageCache::invalidate_all() {
  for (std::size_t k = 3 * model_->num_variables(); k < msg_.size(); ++k) {
    valid_[k] = 0;
    msg_[k].resize(0, 0);
    exp_[k].resize(0);
  }
}

void MessageCache::invalidate(NodeId node) {
  const TreeTopology& t = model_->topology();
  if (t.is_leaf(node)) return;
  // Every message pointing away from `node` depends on its tensor.
  std::vector<std::pair<NodeId, NodeId>> stack;  // (node, node it was reached from)
  stack.emplace_back(node, node);
  while (!stack.empty()) {
    auto [x, from] = stack.back();
    stack.pop_back();
    if (t.is_leaf(x)) continue;
    const auto nb = t.neighbors(x);
    for (std::size_t s = 0; s < nb.size(); ++s) {
      if (nb[s] == from && x != node) continue;
      valid_[key(x, s)] = 0;
      msg_[key(x, s)].resize(0, 0);
      exp_[key(x, s)].resize(0);
      stack.emplace_back(nb[s], x);
    }
  }
}

const Eigen::MatrixXd& MessageCache::toward(NodeId from, NodeId to) {
  return message(from, model_->topology().slot_of(from, to));
}

const Eigen::MatrixXd& MessageCache::message(NodeId node, std::size_t slot) {
  if (!valid_[key(node, slot)]) compute(node, slot);
  return msg_[key(node, slot)];
}

const Eigen::VectorXd& MessageCache::exponent(NodeId node, std::size_t slot) {
  if (!valid_[key(node, slot)]) compute(node, slot);
  return exp_[key(node, slot)];
}

const Eigen::VectorXd& MessageCache::toward_exponent(NodeId from, NodeId to) {
  return exponent(from, model_->topology().slot_of(from, to));
}

void MessageCache::compute(NodeId node, std::size_t slot) {
  // Iterative post-order so long chains do not exhaust the stack.
  const TreeTopology& t = model_->topology();
  std::vector<std::pair<NodeId, std::size_t>> stack{{node, slot}};
  while (!stack.empty()) {
    auto [x, s] = stack.back();
    if (valid_[key(x, s)]) {
      stack.pop_back();
      continue;
    }
    std::size_t in[2];
    int k = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (i != s) in[k++] = i;
    }
    bool ready = true;
    for (std::size_t i : in) {
      const NodeId y = t.neighbor(x, i);
      const std::size_t back = t.slot_of(y, x);
      if (!valid_[key(y, back)]) {
        stack.emplace_back(y, back);
        ready = false;
      }
    }
    if (!ready) continue;
    stack.pop_back();

    const NodeId y0 = t.neighbor(x, in[0]);
    const NodeId y1 = t.neighbor(x, in[1]);
    const Eigen::MatrixXd& m0 = msg_[key(y0, t.slot_of(y0, x))];
    const Eigen::MatrixXd& m1 = msg_[key(y1, t.slot_of(y1, x))];
    const std::size_t perm[3] = {in[0], in[1], s};
    const Eigen::MatrixXd tm = matricize(model_->tensor(x), perm, 2);
    Eigen::MatrixXd next = row_kron(m0, m1) * tm;
    Eigen::VectorXd e = exp_[key(y0, t.slot_of(y0, x))] + exp_[key(y1, t.slot_of(y1, x))];
    for (Eigen::Index r = 0; r < next.rows(); ++r) {
      const double peak = next.row(r).cwiseAbs().maxCoeff();
      if (!(peak > 0.0) || !std::isfinite(peak)) continue;
      int k = 0;
      std::frexp(peak, &k);
      if (k == 0) continue;
      next.row(r) *= std::ldexp(1.0, -k);
      e(r) += k;
    }
    msg_[key(x, s)] = std::move(next);
    exp_[key(x, s)] = std::move(e);
    valid_[key(x, s)] = 1;
    ++computed_;

    // Keep one direction per edge resident.
    const NodeId out = t.neighbor(x, s);
    if (!t.is_leaf(out)) {
      const std::size_t rev = key(out, t.slot_of(out, x));
      valid_[rev] = 0;
      msg_[rev].resize(0, 0);
      exp_[rev].resize(0);
    }
  }
}

}  // namespace att

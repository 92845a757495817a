#include "att/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "att/datasets.hpp"
#include "att/errors.hpp"
#include "att/local_update.hpp"
#include "att/mutual_info.hpp"

namespace att {
namespace {

// Process CPU time, so step timings are not inflated by preemption.
struct Clock {
  using duration = std::chrono::nanoseconds;
  using rep = duration::rep;
  using period = duration::period;
  using time_point = std::chrono::time_point<Clock>;
  static constexpr bool is_steady = true;
  static time_point now() noexcept {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return time_point(std::chrono::seconds(ts.tv_sec) + std::chrono::nanoseconds(ts.tv_nsec));
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Positions of the outer legs (a, b, c, d) in each group, per pairing.
struct Grouping {
  std::array<int, 2> g1, g2;
  std::array<std::size_t, 4> perm;  // (a, b, c, d) tensor -> grouped order
};

Grouping grouping(Pairing p) {
  switch (p) {
    case Pairing::Keep: return {{0, 1}, {2, 3}, {0, 1, 2, 3}};
    case Pairing::AC_BD: return {{0, 2}, {1, 3}, {0, 2, 1, 3}};
    case Pairing::AD_BC: return {{0, 3}, {1, 2}, {0, 3, 1, 2}};
  }
  throw std::logic_error("unknown pairing");
}

// Tensor with legs (first, second, bond) permuted into `node`'s slot order.
DenseTensor to_slot_order(const TreeTopology& t, NodeId node, NodeId first, NodeId second, NodeId bond,
                          DenseTensor grouped) {
  std::array<std::size_t, 3> perm{};
  for (std::size_t s = 0; s < 3; ++s) {
    const NodeId y = t.neighbor(node, s);
    perm[s] = y == first ? 0 : y == second ? 1 : y == bond ? 2 : 3;
    if (perm[s] == 3) throw std::logic_error("slot does not match a grouped leg");
  }
  return grouped.permuted(perm);
}

struct Candidate {
  Pairing pairing = Pairing::Keep;
  linalg::Svd svd;
  double bmi = std::numeric_limits<double>::infinity();
  double nll = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void TrainConfig::validate() const {
  if (chi < 2) throw std::invalid_argument("chi must be at least 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (batch_refresh == RefreshPolicy::EveryK && refresh_interval == 0) {
    throw std::invalid_argument("refresh interval must be positive");
  }
  if (threads == 0) throw std::invalid_argument("thread count must be positive");
}

std::string to_string(RefreshPolicy p) { return p == RefreshPolicy::Sweep ? "sweep" : "steps"; }

std::string to_string(InitialTopology t) {
  switch (t) {
    case InitialTopology::Train: return "train";
    case InitialTopology::Balanced: return "balanced";
    case InitialTopology::Random: return "random";
    case InitialTopology::FromFile: return "file";
  }
  return "unknown";
}

InitialTopology parse_initial_topology(const std::string& s) {
  if (s == "train") return InitialTopology::Train;
  if (s == "balanced") return InitialTopology::Balanced;
  if (s == "random") return InitialTopology::Random;
  if (s == "file") return InitialTopology::FromFile;
  throw std::invalid_argument("unknown initial topology: " + s);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

Trainer::Trainer(TensorTreeModel model, TrainConfig cfg) : model_(std::move(model)), cfg_(cfg) {
  cfg_.validate();
}

void Trainer::set_batch(DataBatch batch) {
  batch_ = std::move(batch);
  if (!cache_) {
    cache_ = std::make_unique<MessageCache>(model_, batch_);
  } else {
    cache_->rebind(batch_);
  }
}

StepResult Trainer::step(Edge target, std::int64_t iteration) {
  if (!cache_) throw std::logic_error("Trainer::step called before set_batch");
  TreeTopology& t = model_.topology();
  if (!t.has_edge(target) || !t.is_virtual(target)) {
    throw TopologyError("reconnection target must be a virtual bond");
  }
  StepResult res;
  res.bond = target;
  res.candidate_bmi.fill(std::numeric_limits<double>::quiet_NaN());
  auto t0 = Clock::now();

  // Working pair with the central weight folded in. Every other tensor is
  // already isometric toward the target when it touches the root edge.
  const Edge root = t.root_edge();
  Eigen::VectorXd mid;
  DenseTensor tu, tv;
  if (target == root || model_.leaf_rooted() || !(target.touches(root.a) || target.touches(root.b))) {
    if (target != root) {
      canonicalize_in_place(model_, target);
      cache_->invalidate_all();
    }
    mid = Eigen::Map<const Eigen::VectorXd>(model_.lambda().data(),
                                            static_cast<Eigen::Index>(model_.lambda().size()));
    tu = model_.tensor(target.a);
    tv = model_.tensor(target.b);
  } else {
    const NodeId shared = target.touches(root.a) ? root.a : root.b;
    const Eigen::Map<const Eigen::VectorXd> lambda(model_.lambda().data(),
                                                   static_cast<Eigen::Index>(model_.lambda().size()));
    const DenseTensor absorbed = apply_to_axis(model_.tensor(shared), t.slot_of(shared, root.other(shared)),
                                               Eigen::MatrixXd(lambda.asDiagonal()));
    tu = shared == target.a ? absorbed : model_.tensor(target.a);
    tv = shared == target.b ? absorbed : model_.tensor(target.b);
    mid = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(model_.bond_dim(target)));
    t.set_root_edge(target);
  }
  const RootLegs legs = root_legs(t);
  const std::array<NodeId, 4> leg_node{legs.a, legs.b, legs.c, legs.d};
  const std::size_t pu[3] = {t.slot_of(legs.u, legs.a), t.slot_of(legs.u, legs.b), t.slot_of(legs.u, legs.v)};
  const std::size_t pv[3] = {t.slot_of(legs.v, legs.c), t.slot_of(legs.v, legs.d), t.slot_of(legs.v, legs.u)};
  const std::array<std::size_t, 4> dim{tu.extent(pu[0]), tu.extent(pu[1]), tv.extent(pv[0]), tv.extent(pv[1])};
  FactoredTensor theta{matricize(tu, pu, 2) * mid.asDiagonal(), matricize(tv, pv, 2)};
  res.arithmetic_seconds += seconds_since(t0);

  t0 = Clock::now();
  std::array<Eigen::MatrixXd, 4> msg;
  msg[0] = cache_->toward(legs.a, legs.u);
  msg[1] = cache_->toward(legs.b, legs.u);
  msg[2] = cache_->toward(legs.c, legs.v);
  msg[3] = cache_->toward(legs.d, legs.v);
  // log of the factor dropped from each row by the message scaling
  Eigen::VectorXd log_scale = cache_->toward_exponent(legs.a, legs.u) + cache_->toward_exponent(legs.b, legs.u) +
                              cache_->toward_exponent(legs.c, legs.v) + cache_->toward_exponent(legs.d, legs.v);
  log_scale *= std::numbers::ln2;
  res.message_seconds = seconds_since(t0);

  t0 = Clock::now();
  const double lr = cfg_.learning_rate;
  const bool clamp = cfg_.clamp_zero;
  theta.scale(1.0 / std::sqrt(theta.squared_norm()));
  {
    const Eigen::MatrixXd a = row_kron(msg[0], msg[1]);
    const Eigen::MatrixXd b = row_kron(msg[2], msg[3]);
    for (std::size_t k = 0; k < cfg_.combined_updates; ++k) gradient_step(theta, a, b, lr, clamp);
  }

  std::vector<Pairing> pairings{Pairing::Keep};
  if (!cfg_.structure_fixed) pairings = {Pairing::Keep, Pairing::AC_BD, Pairing::AD_BC};
  DenseTensor theta4;  // (a, b, c, d), built on first use
  Candidate best;
  for (Pairing p : pairings) {
    const Grouping g = grouping(p);
    Candidate c;
    c.pairing = p;
    if (p == Pairing::Keep) {
      c.svd = truncate_normalized(theta, cfg_.chi);
    } else {
      if (theta4.rank() == 0) {
        const std::size_t id[4] = {0, 1, 2, 3};
        theta4 = tensorize(theta.dense(), {dim[0], dim[1], dim[2], dim[3]}, id);
      }
      c.svd = truncate_normalized(matricize(theta4, g.perm, 2), cfg_.chi);
    }
    const Eigen::MatrixXd a = row_kron(msg[g.g1[0]], msg[g.g1[1]]);
    const Eigen::MatrixXd b = row_kron(msg[g.g2[0]], msg[g.g2[1]]);
    for (std::size_t k = 0; k < cfg_.candidate_updates; ++k) {
      FactoredTensor f = FactoredTensor::from_svd(c.svd);
      gradient_step(f, a, b, lr, clamp);
      c.svd = truncate_normalized(f, cfg_.chi);
    }
    const Eigen::MatrixXd side_a = a * c.svd.u;
    const Eigen::MatrixXd side_b = b * c.svd.v;
    c.bmi = bmi_from_schmidt(side_a, side_b, c.svd.s, clamp).value;
    const Eigen::VectorXd psi = (side_a.array() * side_b.array()).matrix() * c.svd.s;
    double total = 0.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      double p2 = psi(i) * psi(i);
      if (p2 < kMinProbability) {
        if (!clamp && p2 == 0.0) throw ZeroAmplitudeError(static_cast<std::size_t>(i), "zero amplitude");
        p2 = kMinProbability;
      }
      total -= std::log(p2) + 2.0 * log_scale(i);
    }
    c.nll = total / static_cast<double>(psi.size());
    res.candidate_bmi[static_cast<std::size_t>(p)] = c.bmi;
    // Strict improvement only: ties keep the current grouping, then the
    // lower pairing index.
    if (p == Pairing::Keep || c.bmi < best.bmi) best = std::move(c);
  }

  // Install the chosen decomposition and regroup the topology.
  const Grouping g = grouping(best.pairing);
  const auto r = static_cast<std::size_t>(best.svd.s.size());
  const std::size_t id3[3] = {0, 1, 2};
  DenseTensor gu = tensorize(best.svd.u, {dim[g.g1[0]], dim[g.g1[1]], r}, id3);
  DenseTensor gv = tensorize(best.svd.v, {dim[g.g2[0]], dim[g.g2[1]], r}, id3);
  t.regroup(best.pairing, iteration);
  model_.set_tensor(legs.u, to_slot_order(t, legs.u, leg_node[g.g1[0]], leg_node[g.g1[1]], legs.v, std::move(gu)));
  model_.set_tensor(legs.v, to_slot_order(t, legs.v, leg_node[g.g2[0]], leg_node[g.g2[1]], legs.u, std::move(gv)));
  model_.set_lambda(std::vector<double>(best.svd.s.data(), best.svd.s.data() + best.svd.s.size()));
  cache_->invalidate(legs.u);
  cache_->invalidate(legs.v);

  res.chosen = best.pairing;
  res.bmi = best.bmi;
  res.batch_nll = best.nll;
  res.arithmetic_seconds += seconds_since(t0);
  return res;
}

ReconnectResult reconnect_step(const TensorTreeModel& m, const DataBatch& batch, const TrainConfig& cfg,
                               Edge target, std::int64_t iteration) {
  Trainer tr(m, cfg);
  tr.set_batch(batch);
  StepResult step = tr.step(target, iteration);
  return {tr.model(), step};
}

Edge next_target(const TreeTopology& t, Edge current) {
  std::optional<Edge> best;
  std::int64_t best_age = 0;
  for (NodeId x : {current.a, current.b}) {
    if (t.is_leaf(x)) continue;
    for (NodeId y : t.neighbors(x)) {
      const Edge e = Edge::of(x, y);
      if (e == current || !t.is_virtual(e)) continue;
      const std::int64_t age = t.edge_age(e);
      if (!best || age < best_age || (age == best_age && e < *best)) {
        best = e;
        best_age = age;
      }
    }
  }
  if (best) return *best;
  if (t.has_edge(current) && t.is_virtual(current)) return current;
  const auto bonds = t.virtual_bonds();
  if (bonds.empty()) throw TopologyError("topology has no virtual bond");
  return bonds.front();
}

TreeTopology initial_topology(const TrainConfig& cfg, std::size_t n, const TreeTopology* from_file) {
  switch (cfg.initial_topology) {
    case InitialTopology::Train: return make_tensor_train(n);
    case InitialTopology::Balanced: return make_balanced_tree(n);
    case InitialTopology::Random: return make_random_tree(n, derive_seed(cfg.seed, 0));
    case InitialTopology::FromFile:
      if (from_file == nullptr) throw std::invalid_argument("initial topology file not supplied");
      if (from_file->num_variables() != n) throw FormatError("initial topology does not match the data width");
      return *from_file;
  }
  throw std::logic_error("unknown initial topology");
}

TrainResult train(const DataBatch& data, const TrainConfig& cfg, const DataBatch* test,
                  const TreeTopology* initial, const TrainCallback& callback) {
  cfg.validate();
  if (data.empty()) throw FormatError("training data is empty");
  const std::size_t n = data.num_variables();
  if (n < 4) throw std::invalid_argument("training needs at least 4 variables (one virtual bond)");
  if (test != nullptr && test->num_variables() != n) throw FormatError("test data width differs from training data");

  TensorTreeModel model = init_model(initial_topology(cfg, n, initial), cfg.chi, derive_seed(cfg.seed, 1));
  std::mt19937_64 rng(derive_seed(cfg.seed, 2));
  const auto bonds = model.topology().virtual_bonds();
  Edge target = bonds[std::uniform_int_distribution<std::size_t>(0, bonds.size() - 1)(rng)];

  MinibatchStream stream(data, std::min(cfg.batch_size, data.num_samples()), derive_seed(cfg.seed, 3));
  Trainer tr(std::move(model), cfg);
  tr.set_batch(stream.current());

  TrainReport report;
  std::int64_t sweep_start = 0;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    if (it > 0) target = next_target(tr.model().topology(), tr.model().topology().root_edge());
    const StepResult step = tr.step(target, static_cast<std::int64_t>(it));
    const TreeTopology& t = tr.model().topology();

    report.nll_history.push_back(step.batch_nll);
    report.edge_bmi[step.bond] = step.bmi;
    if (step.chosen != Pairing::Keep) {
      ++report.rewires;
      std::erase_if(report.edge_bmi, [&](const auto& kv) { return !t.has_edge(kv.first); });
    }

    std::optional<double> test_nll;
    const bool last = it + 1 == cfg.max_iterations;
    if (test != nullptr && (last || (cfg.test_interval > 0 && (it + 1) % cfg.test_interval == 0))) {
      test_nll = nll(tr.model(), *test, ZeroPolicy::Clamp, cfg.threads);
      if (!report.best_test_nll || *test_nll < *report.best_test_nll) {
        report.best_test_nll = test_nll;
        report.best_model = tr.model();
        report.best_iteration = it;
      }
    }
    report.test_nll_history.push_back(test_nll);
    if (cfg.snapshot_interval > 0 && (it + 1) % cfg.snapshot_interval == 0) {
      report.structure_snapshots.emplace_back(it, t);
    }
    if (callback) callback(it, tr.model(), step);

    bool refresh = false;
    if (cfg.batch_refresh == RefreshPolicy::EveryK) {
      refresh = (it + 1) % cfg.refresh_interval == 0;
    } else {
      refresh = true;
      for (Edge e : t.virtual_bonds()) {
        if (t.edge_age(e) < sweep_start) {
          refresh = false;
          break;
        }
      }
      if (refresh) sweep_start = static_cast<std::int64_t>(it) + 1;
    }
    if (refresh && !last) {
      tr.set_batch(stream.refresh());
      ++report.batch_refreshes;
    }
  }
  return {tr.model(), std::move(report)};
}

}  // namespace att

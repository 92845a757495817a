#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "att/data_batch.hpp"
#include "att/messages.hpp"
#include "att/model.hpp"
#include "att/topology.hpp"

namespace att {

enum class RefreshPolicy { EveryK, Sweep };
enum class InitialTopology { Train, Balanced, Random, FromFile };

struct TrainConfig {
  std::size_t chi = 4;
  double learning_rate = 0.001;
  std::size_t combined_updates = 1;
  std::size_t candidate_updates = 10;
  std::size_t max_iterations = 1000;
  std::size_t batch_size = 1000;
  RefreshPolicy batch_refresh = RefreshPolicy::EveryK;
  std::size_t refresh_interval = 1000;  // K for RefreshPolicy::EveryK
  std::uint64_t seed = 0;
  bool structure_fixed = false;
  InitialTopology initial_topology = InitialTopology::Train;
  // Test NLL is evaluated every test_interval iterations and after the last.
  std::size_t test_interval = 100;
  std::size_t snapshot_interval = 0;  // 0 disables topology snapshots
  bool clamp_zero = true;             // floor psi^2 during updates
  std::size_t threads = 1;            // test NLL evaluation only

  // Throws std::invalid_argument on a non-positive count or rate.
  void validate() const;
};

std::string to_string(RefreshPolicy p);
std::string to_string(InitialTopology t);
InitialTopology parse_initial_topology(const std::string& s);

struct StepResult {
  Edge bond{};
  Pairing chosen = Pairing::Keep;
  double bmi = 0.0;
  // BMI per pairing; NaN for pairings not evaluated.
  std::array<double, 3> candidate_bmi{};
  double batch_nll = 0.0;
  double arithmetic_seconds = 0.0;  // working-tensor algebra, SVDs included (process CPU time)
  double message_seconds = 0.0;     // leg message evaluation
};

// Owns the model during training together with the message cache for the
// current mini-batch.
class Trainer {
 public:
  Trainer(TensorTreeModel model, TrainConfig cfg);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  void set_batch(DataBatch batch);
  const DataBatch& batch() const { return batch_; }

  // Branch reconnection at `target`; the root ends there in canonical form.
  StepResult step(Edge target, std::int64_t iteration);

  const TensorTreeModel& model() const { return model_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  TensorTreeModel model_;
  TrainConfig cfg_;
  DataBatch batch_;
  std::unique_ptr<MessageCache> cache_;
};

struct ReconnectResult {
  TensorTreeModel model;
  StepResult step;
};

ReconnectResult reconnect_step(const TensorTreeModel& m, const DataBatch& batch, const TrainConfig& cfg,
                               Edge target, std::int64_t iteration = 0);

// Least recently processed virtual bond touching the current root edge.
Edge next_target(const TreeTopology& t, Edge current);

struct TrainReport {
  std::vector<double> nll_history;                      // mini-batch NLL after each iteration
  std::vector<std::optional<double>> test_nll_history;  // same length, set where evaluated
  std::map<Edge, double> edge_bmi;
  std::vector<std::pair<std::size_t, TreeTopology>> structure_snapshots;
  std::optional<TensorTreeModel> best_model;  // lowest test NLL seen
  std::optional<double> best_test_nll;
  std::size_t best_iteration = 0;
  std::size_t rewires = 0;
  std::size_t batch_refreshes = 0;
};

struct TrainResult {
  TensorTreeModel model;
  TrainReport report;
};

using TrainCallback = std::function<void(std::size_t iteration, const TensorTreeModel&, const StepResult&)>;

// initial is required for InitialTopology::FromFile and ignored otherwise.
TrainResult train(const DataBatch& data, const TrainConfig& cfg, const DataBatch* test = nullptr,
                  const TreeTopology* initial = nullptr, const TrainCallback& callback = {});

TreeTopology initial_topology(const TrainConfig& cfg, std::size_t n, const TreeTopology* from_file = nullptr);

// Seed of the independent random stream `stream` derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace att

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "getup/stats/statistics.hpp"

namespace getup {

struct ProtocolSettings {
  int n_seeds = 10;
  int n_episodes = 100;
  std::uint64_t experiment_seed = 0;
  BootstrapOptions bootstrap;
  double alpha = 0.05;
};

// One training run. `id` is stable across reruns and safe as a file name.
struct TrainJob {
  std::size_t index = 0;
  std::string id;
  std::string group;  // the cell row this run belongs to
  std::vector<std::string> train_set;
  int seed_slot = 0;
  std::uint64_t seed = 0;
};

struct EvalJob {
  std::size_t train_job = 0;
  std::string morphology;
  int episodes = 0;
  std::uint64_t seed = 0;
};

struct JobPlan {
  std::string protocol;
  std::vector<TrainJob> train;
  std::vector<EvalJob> eval;
  std::string describe() const;
};

// Executes jobs. Implementations may cache results between runs; any
// exception is recorded against the job and the protocol carries on.
class ProtocolRunner {
 public:
  virtual ~ProtocolRunner() = default;
  // Returns an opaque reference to the trained policy.
  virtual std::string train(const TrainJob& job) = 0;
  virtual std::vector<EpisodeResult> evaluate(const TrainJob& job, const std::string& policy, const EvalJob& eval) = 0;
};

struct PlanOutcome {
  std::vector<std::optional<std::string>> policies;  // per train job
  std::vector<std::string> train_errors;
  std::vector<std::optional<std::vector<EpisodeResult>>> evaluations;  // per eval job
  std::vector<std::string> eval_errors;
};

PlanOutcome execute(const JobPlan& plan, ProtocolRunner& runner);

struct Cell {
  std::string row;
  std::string column;
  bool zero_shot = false;
  // Absent when no seed of the cell produced results.
  std::optional<SuccessStatistics> stats;
  std::optional<Comparison> vs_specialist;
  std::vector<std::string> errors;
  bool complete() const { return stats.has_value() && errors.empty(); }
};

// Aggregates the eval jobs of `plan` matching (group, morphology) into a
// cell; seeds whose jobs failed contribute their errors instead.
Cell aggregate_cell(const JobPlan& plan, const PlanOutcome& outcome, const std::string& group,
                    const std::string& morphology, Rng& rng, const ProtocolSettings& settings);

// Rows are held-out morphologies, columns evaluation morphologies.
struct LOOMatrix {
  std::vector<std::string> morphologies;
  std::vector<std::vector<Cell>> cells;
  const Cell& at(std::size_t held_out, std::size_t eval) const { return cells.at(held_out).at(eval); }
  std::size_t size() const { return morphologies.size(); }
};

JobPlan plan_loo(const std::vector<std::string>& suite, const ProtocolSettings& settings);
LOOMatrix loo_protocol(const std::vector<std::string>& suite, ProtocolRunner& runner,
                       const ProtocolSettings& settings,
                       const std::map<std::string, SuccessStatistics>* specialists = nullptr);
LOOMatrix loo_from_outcome(const std::vector<std::string>& suite, const JobPlan& plan, const PlanOutcome& outcome,
                           const ProtocolSettings& settings,
                           const std::map<std::string, SuccessStatistics>* specialists = nullptr);

struct ScalingSet {
  std::string label;  // e.g. "3-diverse"
  std::vector<std::string> members;
  bool diverse = false;
};

struct ScalingPoint {
  std::string label;
  int k = 0;
  bool diverse = false;
  Cell cell;
};

struct ScalingCurve {
  std::string holdout;
  std::vector<ScalingPoint> points;
};

JobPlan plan_scaling(const std::vector<ScalingSet>& sets, const std::string& holdout,
                     const ProtocolSettings& settings);
ScalingCurve scaling_protocol(const std::vector<ScalingSet>& sets, const std::string& holdout,
                              ProtocolRunner& runner, const ProtocolSettings& settings);
ScalingCurve scaling_from_outcome(const std::vector<ScalingSet>& sets, const std::string& holdout,
                                  const JobPlan& plan, const PlanOutcome& outcome, const ProtocolSettings& settings);

struct DeltaRow {
  std::string morphology;
  double shared_mean = 0.0;
  double specialist_mean = 0.0;
  double delta = 0.0;
  Interval ci;
  Comparison test;
};

// Delta = shared - specialist per morphology; the CI comes from an
// independent two-sample bootstrap.
std::vector<DeltaRow> compare_specialist_shared(const std::map<std::string, SuccessStatistics>& shared,
                                                const std::map<std::string, SuccessStatistics>& specialist,
                                                Rng& rng, const BootstrapOptions& opts = {});

struct CompareResult {
  std::vector<std::string> morphologies;
  std::vector<Cell> shared;      // per morphology
  std::vector<Cell> specialist;  // per morphology
  std::vector<DeltaRow> deltas;  // morphologies where both sides have >= 2 seeds
};

// Without the shared row only the specialists are planned; job ids and
// seeds are the same either way.
JobPlan plan_compare(const std::vector<std::string>& suite, const ProtocolSettings& settings,
                     bool include_shared = true);
CompareResult compare_protocol(const std::vector<std::string>& suite, ProtocolRunner& runner,
                               const ProtocolSettings& settings);
CompareResult compare_from_outcome(const std::vector<std::string>& suite, const JobPlan& plan,
                                   const PlanOutcome& outcome, const ProtocolSettings& settings);

}  // namespace getup

#include "getup/stats/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "getup/core/error.hpp"

namespace getup {

namespace {

constexpr std::uint64_t kCellStream = 0x43454c4cULL;

std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '-';
  return out;
}

std::string join(const std::vector<std::string>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

void check_settings(const ProtocolSettings& s) {
  if (s.n_seeds < 1) throw ArgumentError("protocol needs at least one seed");
  if (s.n_episodes < 1) throw ArgumentError("protocol needs at least one evaluation episode");
}

void check_suite(const std::vector<std::string>& suite, std::size_t min_size) {
  if (suite.size() < min_size)
    throw ArgumentError("protocol needs at least " + std::to_string(min_size) + " morphologies");
  const std::set<std::string> unique(suite.begin(), suite.end());
  if (unique.size() != suite.size()) throw ArgumentError("suite lists a morphology twice");
}

// Adds n_seeds training runs for one row and their evaluations.
void add_row(JobPlan& plan, std::size_t row, const std::string& group, const std::string& id_prefix,
             const std::vector<std::string>& train_set, const std::vector<std::string>& eval_on,
             const std::vector<std::size_t>& eval_streams, const ProtocolSettings& s) {
  const std::uint64_t row_seed = derive_seed(s.experiment_seed, row);
  for (int slot = 0; slot < s.n_seeds; ++slot) {
    TrainJob t;
    t.index = plan.train.size();
    t.id = id_prefix + "_s" + std::to_string(slot);
    t.group = group;
    t.train_set = train_set;
    t.seed_slot = slot;
    t.seed = derive_seed(row_seed, static_cast<std::uint64_t>(slot));
    for (std::size_t j = 0; j < eval_on.size(); ++j) {
      plan.eval.push_back({t.index, eval_on[j], s.n_episodes, derive_seed(t.seed, 1 + eval_streams[j])});
    }
    plan.train.push_back(std::move(t));
  }
}

Rng cell_rng(const ProtocolSettings& s, std::size_t cell_index) {
  return Rng(derive_seed(derive_seed(s.experiment_seed, kCellStream), cell_index));
}

}  // namespace

std::string JobPlan::describe() const {
  std::ostringstream os;
  os << "protocol " << protocol << ": " << train.size() << " training runs, " << eval.size() << " evaluations\n";
  for (const auto& t : train) {
    os << "  train " << t.id << " on [" << join(t.train_set) << "] seed " << t.seed << "\n";
    for (const auto& e : eval) {
      if (e.train_job == t.index) os << "    eval " << e.morphology << " x" << e.episodes << " seed " << e.seed << "\n";
    }
  }
  return os.str();
}

PlanOutcome execute(const JobPlan& plan, ProtocolRunner& runner) {
  PlanOutcome out;
  out.policies.resize(plan.train.size());
  out.train_errors.resize(plan.train.size());
  out.evaluations.resize(plan.eval.size());
  out.eval_errors.resize(plan.eval.size());
  for (const auto& t : plan.train) {
    try {
      out.policies[t.index] = runner.train(t);
    } catch (const std::exception& e) {
      out.train_errors[t.index] = "training " + t.id + " failed: " + e.what();
    }
  }
  for (std::size_t i = 0; i < plan.eval.size(); ++i) {
    const EvalJob& e = plan.eval[i];
    const TrainJob& t = plan.train.at(e.train_job);
    if (!out.policies[t.index]) {
      out.eval_errors[i] = out.train_errors[t.index];
      continue;
    }
    try {
      auto r = runner.evaluate(t, *out.policies[t.index], e);
      if (r.empty()) throw std::runtime_error("no episodes returned");
      out.evaluations[i] = std::move(r);
    } catch (const std::exception& ex) {
      out.eval_errors[i] = "evaluating " + t.id + " on " + e.morphology + " failed: " + ex.what();
    }
  }
  return out;
}

Cell aggregate_cell(const JobPlan& plan, const PlanOutcome& outcome, const std::string& group,
                    const std::string& morphology, Rng& rng, const ProtocolSettings& settings) {
  Cell c;
  c.row = group;
  c.column = morphology;
  std::map<std::uint64_t, std::vector<bool>> flags;
  std::vector<bool> pooled;
  for (std::size_t i = 0; i < plan.eval.size(); ++i) {
    const EvalJob& e = plan.eval[i];
    const TrainJob& t = plan.train.at(e.train_job);
    if (t.group != group || e.morphology != morphology) continue;
    if (!outcome.evaluations.at(i)) {
      c.errors.push_back(outcome.eval_errors.at(i));
      continue;
    }
    auto& f = flags[static_cast<std::uint64_t>(t.seed_slot)];
    for (const auto& r : *outcome.evaluations[i]) {
      f.push_back(r.success);
      pooled.push_back(r.success);
    }
  }
  if (flags.empty()) return c;
  c.stats = success_rate(flags);
  if (c.stats->n_seeds() >= 2) attach_ci(*c.stats, rng, settings.bootstrap, &pooled);
  return c;
}

// ---- leave-one-out

JobPlan plan_loo(const std::vector<std::string>& suite, const ProtocolSettings& settings) {
  check_suite(suite, 2);
  check_settings(settings);
  JobPlan plan;
  plan.protocol = "loo";
  std::vector<std::size_t> streams(suite.size());
  for (std::size_t j = 0; j < suite.size(); ++j) streams[j] = j;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    std::vector<std::string> train_set;
    for (const auto& m : suite) {
      if (m != suite[i]) train_set.push_back(m);
    }
    add_row(plan, i, "without_" + suite[i], "loo_without_" + file_safe(suite[i]), train_set, suite, streams,
            settings);
  }
  return plan;
}

LOOMatrix loo_from_outcome(const std::vector<std::string>& suite, const JobPlan& plan, const PlanOutcome& outcome,
                           const ProtocolSettings& settings,
                           const std::map<std::string, SuccessStatistics>* specialists) {
  LOOMatrix m;
  m.morphologies = suite;
  m.cells.resize(suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i) {
    for (std::size_t j = 0; j < suite.size(); ++j) {
      Rng rng = cell_rng(settings, i * suite.size() + j);
      Cell c = aggregate_cell(plan, outcome, "without_" + suite[i], suite[j], rng, settings);
      c.row = suite[i];
      c.zero_shot = i == j;
      if (specialists && c.stats) {
        const auto it = specialists->find(suite[j]);
        if (it != specialists->end() && c.stats->n_seeds() >= 2 && it->second.n_seeds() >= 2)
          c.vs_specialist = compare_samples(c.stats->per_seed_rates, it->second.per_seed_rates);
      }
      m.cells[i].push_back(std::move(c));
    }
  }
  return m;
}

LOOMatrix loo_protocol(const std::vector<std::string>& suite, ProtocolRunner& runner,
                       const ProtocolSettings& settings,
                       const std::map<std::string, SuccessStatistics>* specialists) {
  const JobPlan plan = plan_loo(suite, settings);
  return loo_from_outcome(suite, plan, execute(plan, runner), settings, specialists);
}

// ---- scaling

namespace {

void check_scaling(const std::vector<ScalingSet>& sets, const std::string& holdout) {
  if (sets.empty()) throw ArgumentError("scaling protocol needs at least one training set");
  std::set<std::string> labels;
  for (const auto& s : sets) {
    if (s.members.empty()) throw ArgumentError("scaling set '" + s.label + "' is empty");
    if (std::find(s.members.begin(), s.members.end(), holdout) != s.members.end())
      throw ArgumentError("holdout '" + holdout + "' is a member of scaling set '" + s.label + "'");
    if (!labels.insert(s.label).second) throw ArgumentError("duplicate scaling set label '" + s.label + "'");
  }
}

}  // namespace

JobPlan plan_scaling(const std::vector<ScalingSet>& sets, const std::string& holdout,
                     const ProtocolSettings& settings) {
  check_scaling(sets, holdout);
  check_settings(settings);
  JobPlan plan;
  plan.protocol = "scale";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    add_row(plan, i, "set_" + sets[i].label, "scale_" + file_safe(holdout) + "_" + file_safe(sets[i].label),
            sets[i].members, {holdout}, {0}, settings);
  }
  return plan;
}

ScalingCurve scaling_from_outcome(const std::vector<ScalingSet>& sets, const std::string& holdout,
                                  const JobPlan& plan, const PlanOutcome& outcome, const ProtocolSettings& settings) {
  ScalingCurve curve;
  curve.holdout = holdout;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Rng rng = cell_rng(settings, i);
    ScalingPoint p;
    p.label = sets[i].label;
    p.k = static_cast<int>(sets[i].members.size());
    p.diverse = sets[i].diverse;
    p.cell = aggregate_cell(plan, outcome, "set_" + sets[i].label, holdout, rng, settings);
    p.cell.row = sets[i].label;
    p.cell.zero_shot = true;
    curve.points.push_back(std::move(p));
  }
  return curve;
}

ScalingCurve scaling_protocol(const std::vector<ScalingSet>& sets, const std::string& holdout,
                              ProtocolRunner& runner, const ProtocolSettings& settings) {
  const JobPlan plan = plan_scaling(sets, holdout, settings);
  return scaling_from_outcome(sets, holdout, plan, execute(plan, runner), settings);
}

// ---- specialist vs shared

std::vector<DeltaRow> compare_specialist_shared(const std::map<std::string, SuccessStatistics>& shared,
                                                const std::map<std::string, SuccessStatistics>& specialist,
                                                Rng& rng, const BootstrapOptions& opts) {
  if (shared.size() != specialist.size()) throw ArgumentError("shared and specialist morphologies differ");
  std::vector<DeltaRow> rows;
  for (const auto& [m, sh] : shared) {
    const auto it = specialist.find(m);
    if (it == specialist.end()) throw ArgumentError("no specialist statistics for '" + m + "'");
    DeltaRow r;
    r.morphology = m;
    r.shared_mean = sh.mean;
    r.specialist_mean = it->second.mean;
    r.delta = sh.mean - it->second.mean;
    r.ci = bootstrap_delta_ci(sh.per_seed_rates, it->second.per_seed_rates, rng, opts);
    r.test = compare_samples(sh.per_seed_rates, it->second.per_seed_rates);
    rows.push_back(r);
  }
  return rows;
}

JobPlan plan_compare(const std::vector<std::string>& suite, const ProtocolSettings& settings, bool include_shared) {
  check_suite(suite, 1);
  check_settings(settings);
  JobPlan plan;
  plan.protocol = "compare";
  std::vector<std::size_t> streams(suite.size());
  for (std::size_t j = 0; j < suite.size(); ++j) streams[j] = j;
  if (include_shared) add_row(plan, 0, "shared", "compare_shared", suite, suite, streams, settings);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    add_row(plan, i + 1, "specialist_" + suite[i], "compare_specialist_" + file_safe(suite[i]), {suite[i]},
            {suite[i]}, {i}, settings);
  }
  return plan;
}

CompareResult compare_from_outcome(const std::vector<std::string>& suite, const JobPlan& plan,
                                   const PlanOutcome& outcome, const ProtocolSettings& settings) {
  CompareResult r;
  r.morphologies = suite;
  std::map<std::string, SuccessStatistics> sh, sp;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    Rng a = cell_rng(settings, 2 * i), b = cell_rng(settings, 2 * i + 1);
    Cell s = aggregate_cell(plan, outcome, "shared", suite[i], a, settings);
    Cell p = aggregate_cell(plan, outcome, "specialist_" + suite[i], suite[i], b, settings);
    s.row = "shared";
    p.row = "specialist";
    if (s.stats && p.stats && s.stats->n_seeds() >= 2 && p.stats->n_seeds() >= 2) {
      sh[suite[i]] = *s.stats;
      sp[suite[i]] = *p.stats;
    }
    r.shared.push_back(std::move(s));
    r.specialist.push_back(std::move(p));
  }
  Rng rng = cell_rng(settings, 2 * suite.size());
  auto rows = compare_specialist_shared(sh, sp, rng, settings.bootstrap);
  // Keep suite order rather than map order.
  for (const auto& m : suite) {
    for (auto& row : rows) {
      if (row.morphology == m) r.deltas.push_back(row);
    }
  }
  return r;
}

CompareResult compare_protocol(const std::vector<std::string>& suite, ProtocolRunner& runner,
                               const ProtocolSettings& settings) {
  const JobPlan plan = plan_compare(suite, settings);
  return compare_from_outcome(suite, plan, execute(plan, runner), settings);
}

}  // namespace getup

#include <iostream>

#include "CLI11.hpp"

#include "getup/app/commands.hpp"
#include "getup/core/error.hpp"

using namespace getup;

int main(int argc, char** argv) {
  CLI::App app{"Get-up policy training, evaluation and experiment protocols"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train one policy");
  t->add_option("config", train.config, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
  t->add_option("--suite", train.suite, "comma separated morphology ids (overrides the config)");
  t->add_option("--seed", train.seed, "training seed");
  t->add_option("--algo", train.algorithm, "crossq or sac");
  t->add_option("--steps", train.steps, "total environment steps (overrides the config)");
  t->add_option("--out", train.out, "output directory")->required();
  t->add_flag("--resume", train.resume, "continue from out/state.ckpt when present");
  t->add_flag("--dry-run", train.dry_run, "print the run and exit");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint on one morphology");
  e->add_option("checkpoint", eval.checkpoint, "policy checkpoint")->required();
  e->add_option("--morph", eval.morphology, "morphology id")->required();
  e->add_option("--episodes", eval.episodes, "episodes to run");
  e->add_option("--seed", eval.seed, "evaluation seed");
  e->add_option("--out", eval.out, "CSV path (default: stdout)");
  e->add_option("--config", eval.config, "config declaring custom models");
  e->add_flag("--no-randomize", eval.no_randomize, "evaluate without domain randomization");

  ProtocolArgs proto;
  auto* p = app.add_subcommand("protocol", "run an experiment protocol (loo, scale, compare)");
  p->add_option("kind", proto.kind, "loo, scale or compare")->required()->check(CLI::IsMember({"loo", "scale", "compare"}));
  p->add_option("config", proto.config, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
  p->add_option("--out", proto.out, "run directory (reruns resume from its manifest)")->required();
  p->add_option("--holdout", proto.holdout, "held-out morphology for scale");
  p->add_option("--suite", proto.suite, "comma separated morphology ids (overrides the config)");
  p->add_flag("--dry-run", proto.dry_run, "print the job plan and touch no files");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "re-emit the report of a protocol run from its cached results");
  r->add_option("dir", report.dir, "protocol run directory")->required();

  auto* l = app.add_subcommand("list", "list built-in morphology ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*t) return cmd_train(train, std::cout);
    if (*e) return cmd_eval(eval, std::cout);
    if (*p) return cmd_protocol(proto, std::cout);
    if (*r) return cmd_report(report, std::cout);
    if (*l) return cmd_list(std::cout);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ArgumentError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "failed: " << err.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}

/* Copyright 2026 The ragcheck Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// ragcheck: evaluation toolbox for retrieval-augmented answer corpora.
//
// Subcommands: validate, metrics-auto, sample, judge, estimate, simulate,
// report. Exit codes: 0 success, 1 data validation failure, 2 usage error,
// 3 configuration or input problem, 4 unexpected runtime failure.

#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ragcheck/config.hpp"
#include "ragcheck/corpus.hpp"
#include "ragcheck/http_backend.hpp"
#include "ragcheck/io.hpp"
#include "ragcheck/judge.hpp"
#include "ragcheck/report.hpp"
#include "ragcheck/sampler.hpp"
#include "ragcheck/simulation.hpp"
#include "ragcheck/text_metrics.hpp"

namespace {

using namespace ragcheck;

constexpr int kExitOk = 0;
constexpr int kExitDataInvalid = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitRuntime = 4;

struct Cli {
  std::string config_path;
  RunConfig cfg;

  // Raw flag storage; only values the user actually passed override the
  // config file.
  std::string questions, answers, sentences, annotations, embeddings, sources;
  std::string adapter, abstentions, few_shot, out_dir;
  double alpha = 0.05;
  uint64_t seed = 0;
  uint64_t budget = 0;
  uint64_t per_cluster = 3;
  std::string unit_kind, group_by;
  bool french_only = false;
  double lambda = 1.0;
  std::string metric_filter, theme_filter;
  std::string backend_kind = "http";
  std::string endpoint_url, model, api_key;
  double temperature = 0.0;
  uint64_t max_attempts = 4, parallelism = 4, batch_size = 1;
  bool lenient = false;
  std::string allocation_path;
  std::string veracity_template_path, relevance_template_path;

  // simulate parameters
  double sim_p = 0.8, sim_q = 0.8;
  uint64_t sim_n = 140, sim_N = 3985;
  double sim_step = 0.01;
  uint64_t sim_trials = 0;
  std::optional<double> sim_single_a;
};

void add_dataset_flags(CLI::App* cmd, Cli& cli) {
  cmd->add_option("--config", cli.config_path, "key = value configuration file");
  cmd->add_option("--questions", cli.questions, "questions JSONL");
  cmd->add_option("--answers", cli.answers, "answers JSONL");
  cmd->add_option("--sentences", cli.sentences, "sentences JSONL");
  cmd->add_option("--annotations", cli.annotations, "annotations JSONL");
  cmd->add_option("--embeddings", cli.embeddings, "embeddings JSONL");
  cmd->add_option("--sources", cli.sources, "source texts JSONL (judge veracity)");
  cmd->add_option("--adapter", cli.adapter, "field-name adapter JSON");
}

void merge_flags(const CLI::App* cmd, Cli& cli) {
  if (!cli.config_path.empty()) {
    cli.cfg = RunConfig::from_file(cli.config_path);
  } else {
    cli.cfg.apply_env();
  }
  auto passed = [&](const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (passed("--questions")) cli.cfg.dataset.questions = cli.questions;
  if (passed("--answers")) cli.cfg.dataset.answers = cli.answers;
  if (passed("--sentences")) cli.cfg.dataset.sentences = cli.sentences;
  if (passed("--annotations")) cli.cfg.dataset.annotations = cli.annotations;
  if (passed("--embeddings")) cli.cfg.dataset.embeddings = cli.embeddings;
  if (passed("--sources")) cli.cfg.sources_path = cli.sources;
  if (passed("--adapter")) cli.cfg.adapter_path = cli.adapter;
  if (passed("--abstentions")) cli.cfg.abstentions_path = cli.abstentions;
  if (passed("--few-shot")) cli.cfg.few_shot_path = cli.few_shot;
  if (passed("--out")) cli.cfg.out_dir = cli.out_dir;
  if (passed("--alpha")) cli.cfg.alpha = cli.alpha;
  if (passed("--seed")) cli.cfg.seed = cli.seed;
  if (passed("--budget")) cli.cfg.budget = cli.budget;
  if (passed("--per-cluster")) cli.cfg.per_cluster = cli.per_cluster;
  if (passed("--unit-kind")) cli.cfg.unit_kind = cli.unit_kind;
  if (passed("--group-by")) cli.cfg.group_by = cli.group_by;
  if (passed("--french-only")) cli.cfg.french_only = cli.french_only;
  if (passed("--lambda")) cli.cfg.fixed_lambda = cli.lambda;
  if (passed("--endpoint")) cli.cfg.endpoint_url = cli.endpoint_url;
  if (passed("--model")) cli.cfg.model = cli.model;
  if (passed("--api-key")) cli.cfg.api_key = cli.api_key;
  if (passed("--temperature")) cli.cfg.temperature = cli.temperature;
  if (passed("--max-attempts")) cli.cfg.max_attempts = cli.max_attempts;
  if (passed("--parallelism")) cli.cfg.parallelism = cli.parallelism;
  if (passed("--batch-size")) cli.cfg.batch_size = cli.batch_size;
  if (passed("--lenient")) cli.cfg.lenient_parsing = cli.lenient;
  cli.cfg.validate();
}

LoadOptions load_options(const Cli& cli) {
  LoadOptions opts;
  if (!cli.cfg.adapter_path.empty()) {
    opts.adapter = FieldAdapter::from_file(cli.cfg.adapter_path);
  }
  return opts;
}

Corpus load_corpus_or_throw(const Cli& cli) {
  return Corpus::load(cli.cfg.dataset, load_options(cli));
}

AbstentionList abstentions_for(const Cli& cli) {
  if (!cli.cfg.abstentions_path.empty()) {
    return AbstentionList::from_file(cli.cfg.abstentions_path);
  }
  return AbstentionList::defaults();
}

GroupBy group_by_for(const Cli& cli) {
  return cli.cfg.group_by == "theme_difficulty" ? GroupBy::theme_difficulty
                                                : GroupBy::theme;
}

std::vector<MetricKind> metric_scope(const Cli& cli) {
  if (cli.metric_filter.empty()) {
    return {MetricKind::relevance, MetricKind::veracity};
  }
  const auto metric = parse_metric(cli.metric_filter);
  if (!metric) throw std::runtime_error("unknown metric '" + cli.metric_filter + "'");
  return {*metric};
}

std::vector<Theme> theme_scope(const Cli& cli) {
  if (cli.theme_filter.empty()) return {Theme::finance, Theme::it, Theme::rh};
  const auto theme = parse_theme(cli.theme_filter);
  if (!theme) throw std::runtime_error("unknown theme '" + cli.theme_filter + "'");
  return {*theme};
}

// Deterministic artifacts go through atomic_write; wall-clock metadata lives
// in a separate sidecar so reruns stay byte-identical.
void write_sidecar(const std::filesystem::path& dir, const std::string& command) {
  const json meta = {{"command", command},
                     {"unix_time", static_cast<int64_t>(std::time(nullptr))}};
  atomic_write(dir / "run_meta.json", meta.dump(2) + "\n");
}

EstimateOptions estimate_options(const Cli& cli) {
  EstimateOptions opts;
  opts.alpha = cli.cfg.alpha;
  opts.lambda = cli.cfg.fixed_lambda ? LambdaChoice::fixed(*cli.cfg.fixed_lambda)
                                     : LambdaChoice::tuned();
  opts.metrics = metric_scope(cli);
  opts.themes = theme_scope(cli);
  opts.french_only = cli.cfg.french_only;
  return opts;
}

std::vector<MetricTable> run_estimates(const Corpus& corpus, const EstimateOptions& opts) {
  std::vector<MetricTable> tables;
  for (MetricKind metric : opts.metrics) {
    MetricTable table = estimate_metric(corpus, metric, opts);
    if (!table.rows.empty()) tables.push_back(std::move(table));
  }
  return tables;
}

SweepResult run_simulation(const Cli& cli) {
  std::vector<double> grid;
  if (cli.sim_single_a) {
    grid.push_back(*cli.sim_single_a);
  } else {
    grid = default_agreement_grid(cli.sim_p, cli.sim_q, cli.sim_step);
  }
  if (cli.sim_trials > 0) {
    return monte_carlo_sweep(cli.sim_p, cli.sim_q, cli.sim_n, cli.sim_N, cli.cfg.alpha,
                             grid, cli.sim_trials, cli.cfg.seed);
  }
  return analytic_sweep(cli.sim_p, cli.sim_q, cli.sim_n, cli.sim_N, cli.cfg.alpha, grid);
}

int cmd_validate(Cli& cli, const CLI::App* cmd) {
  merge_flags(cmd, cli);
  try {
    const Corpus corpus = load_corpus_or_throw(cli);
    std::cout << "corpus valid: " << corpus.questions().size() << " questions, "
              << corpus.answers().size() << " answers, " << corpus.sentences().size()
              << " sentences, " << corpus.annotations().size() << " annotations, "
              << corpus.embeddings().size() << " embeddings\n";
    return kExitOk;
  } catch (const CorpusLoadError& e) {
    for (const Issue& issue : e.issues()) std::cerr << issue.format() << "\n";
    std::cerr << e.issues().size() << " issue(s) found\n";
    return kExitDataInvalid;
  }
}

int cmd_metrics_auto(Cli& cli, const CLI::App* cmd) {
  merge_flags(cmd, cli);
  const Corpus corpus = load_corpus_or_throw(cli);
  AutoRatesOptions opts;
  opts.abstentions = abstentions_for(cli);
  opts.group_by = group_by_for(cli);

  EvaluationReport report;
  report.config_snapshot = cli.cfg.to_json();
  report.auto_metrics = auto_rates(corpus, cli.cfg.alpha, opts);

  const std::filesystem::path out(cli.cfg.out_dir);
  DirLock lock(out);
  atomic_write(out / "auto_metrics.json", report.to_json().dump(2) + "\n");
  atomic_write(out / "auto_metrics.csv", report.auto_metrics_csv());
  write_sidecar(out, "metrics-auto");
  std::cout << "wrote " << (out / "auto_metrics.csv").string() << " ("
            << report.auto_metrics.size() << " rows)\n";
  return kExitOk;
}

int cmd_sample(Cli& cli, const CLI::App* cmd) {
  merge_flags(cmd, cli);
  const Corpus corpus = load_corpus_or_throw(cli);
  SamplerOptions opts;
  opts.budget = cli.cfg.budget;
  opts.per_cluster = cli.cfg.per_cluster;
  opts.seed = cli.cfg.seed;
  opts.unit_kind = cli.cfg.unit_kind == "answer" ? UnitKind::answer : UnitKind::sentence;
  opts.group_by = group_by_for(cli);
  if (!cli.allocation_path.empty()) {
    std::ifstream in(cli.allocation_path);
    if (!in) throw std::runtime_error("cannot open allocation file: " + cli.allocation_path);
    const json alloc = json::parse(in);
    for (const auto& [label, value] : alloc.items()) {
      opts.budget_override[label] = value.get<size_t>();
    }
  }
  const SamplingPlan plan = plan_sample(corpus, opts);

  const std::filesystem::path out(cli.cfg.out_dir);
  DirLock lock(out);
  atomic_write(out / "plan.json", plan.to_json().dump(2) + "\n");
  atomic_write(out / "worklist.csv", plan.worklist_csv(corpus));
  write_sidecar(out, "sample");
  std::cout << "wrote sampling plan: " << plan.selected_count() << " unit(s) selected\n";
  return kExitOk;
}

int cmd_judge(Cli& cli, const CLI::App* cmd) {
  merge_flags(cmd, cli);
  const Corpus corpus = load_corpus_or_throw(cli);

  AnnotateOptions opts;
  const auto metric = parse_metric(cli.metric_filter);
  if (!metric) {
    throw std::runtime_error("judge: --metric must be 'relevance' or 'veracity'");
  }
  opts.metric = *metric;
  opts.model_id = cli.cfg.model;
  opts.temperature = cli.cfg.temperature;
  opts.retry.max_attempts = cli.cfg.max_attempts;
  opts.parallelism = cli.cfg.parallelism;
  opts.batch_size = cli.cfg.batch_size;
  opts.leniency = cli.cfg.lenient_parsing ? ParseLeniency::strip_fences
                                          : ParseLeniency::strict;
  opts.provenance = cli.cfg.model + "@T=" + format_double(cli.cfg.temperature);
  if (!cli.cfg.few_shot_path.empty()) {
    opts.slots = FewShotSlots::from_file(cli.cfg.few_shot_path);
  }
  if (!cli.veracity_template_path.empty()) {
    opts.veracity_template =
        PromptTemplate::from_file(MetricKind::veracity, cli.veracity_template_path);
  }
  if (!cli.relevance_template_path.empty()) {
    opts.relevance_template =
        PromptTemplate::from_file(MetricKind::relevance, cli.relevance_template_path);
  }
  if (opts.metric == MetricKind::veracity) {
    if (cli.cfg.sources_path.empty()) {
      throw std::runtime_error("judge: veracity needs --sources (source texts JSONL)");
    }
    opts.sources = SourceTable::from_jsonl(cli.cfg.sources_path);
  }

  std::unique_ptr<JudgeBackend> backend;
  if (cli.backend_kind == "mock") {
    backend = std::make_unique<MockJudgeBackend>();
  } else if (cli.backend_kind == "http") {
    if (cli.cfg.endpoint_url.empty()) {
      throw std::runtime_error("judge: --endpoint (or RAGCHECK_ENDPOINT) is required "
                               "for the http backend");
    }
    EndpointConfig endpoint;
    endpoint.base_url = cli.cfg.endpoint_url;
    endpoint.path = cli.cfg.endpoint_path;
    endpoint.api_key = cli.cfg.api_key;
    endpoint.model = cli.cfg.model;
    endpoint.temperature = cli.cfg.temperature;
    backend = std::make_unique<HttpJudgeBackend>(endpoint);
  } else {
    throw std::runtime_error("judge: unknown backend '" + cli.backend_kind + "'");
  }

  const AnnotateResult result = annotate_corpus(corpus, *backend, opts);

  const std::filesystem::path out(cli.cfg.out_dir);
  DirLock lock(out);
  std::string records;
  for (const Annotation& rec : result.records) {
    records += rec.raw.dump();
    records += "\n";
  }
  atomic_write(out / "judge_annotations.jsonl", records);
  atomic_write(out / "judge_manifest.jsonl", result.manifest.to_jsonl());
  write_sidecar(out, "judge");
  std::cout << "judge run: " << result.manifest.ok_count() << " ok, "
            << result.manifest.failed_count() << " failed, over "
            << result.manifest.outcomes.size() << " unit(s)\n";
  return kExitOk;
}

int cmd_estimate(Cli& cli, const CLI::App* cmd) {
  merge_flags(cmd, cli);
  const Corpus corpus = load_corpus_or_throw(cli);

  EvaluationReport report;
  report.config_snapshot = cli.cfg.to_json();
  report.annotated = run_estimates(corpus, estimate_options(cli));
  if (report.annotated.empty()) {
    throw std::runtime_error("estimate: no estimable rows (need human and judge "
                             "annotations)");
  }

  const std::filesystem::path out(cli.cfg.out_dir);
  DirLock lock(out);
  atomic_write(out / "report.json", report.to_json().dump(2) + "\n");
  atomic_write(out / "estimates.csv", report.estimates_csv());
  atomic_write(out / "agreement.csv", report.agreement_csv());
  write_sidecar(out, "estimate");
  std::cout << "wrote " << (out / "report.json").string() << "\n";
  return kExitOk;
}

int cmd_simulate(Cli& cli, const CLI::App* cmd) {
  merge_flags(cmd, cli);
  const SweepResult sweep = run_simulation(cli);
  const std::filesystem::path out(cli.cfg.out_dir);
  DirLock lock(out);
  atomic_write(out / "simulation.csv", simulation_csv(sweep));
  write_sidecar(out, "simulate");
  std::cout << "wrote " << (out / "simulation.csv").string() << " ("
            << sweep.points.size() << " grid points)\n";
  return kExitOk;
}

int cmd_report(Cli& cli, const CLI::App* cmd, bool with_simulation) {
  merge_flags(cmd, cli);
  const Corpus corpus = load_corpus_or_throw(cli);

  EvaluationReport report;
  report.config_snapshot = cli.cfg.to_json();
  AutoRatesOptions auto_opts;
  auto_opts.abstentions = abstentions_for(cli);
  auto_opts.group_by = group_by_for(cli);
  report.auto_metrics = auto_rates(corpus, cli.cfg.alpha, auto_opts);
  report.annotated = run_estimates(corpus, estimate_options(cli));
  if (with_simulation) report.simulation = run_simulation(cli);

  const std::filesystem::path out(cli.cfg.out_dir);
  DirLock lock(out);
  atomic_write(out / "report.json", report.to_json().dump(2) + "\n");
  atomic_write(out / "auto_metrics.csv", report.auto_metrics_csv());
  atomic_write(out / "estimates.csv", report.estimates_csv());
  atomic_write(out / "agreement.csv", report.agreement_csv());
  if (report.simulation) {
    atomic_write(out / "simulation.csv", simulation_csv(*report.simulation));
  }
  write_sidecar(out, "report");
  std::cout << "wrote merged report under " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation toolbox for retrieval-augmented answer corpora: automated "
               "failure rates, stratified annotation sampling, machine-judge "
               "annotation, and hybrid human/judge estimates with valid confidence "
               "intervals."};
  app.require_subcommand(1);
  Cli cli;

  auto add_common = [&](CLI::App* cmd) {
    add_dataset_flags(cmd, cli);
    cmd->add_option("--out,-o", cli.out_dir, "output directory");
    cmd->add_option("--alpha", cli.alpha, "1 - confidence level (default 0.05)");
    cmd->add_option("--seed", cli.seed, "random seed");
    cmd->add_option("--abstentions", cli.abstentions, "abstention phrase list");
    cmd->add_option("--group-by", cli.group_by,
                    "stratification level: theme | theme_difficulty");
    return cmd;
  };

  CLI::App* validate = add_common(app.add_subcommand(
      "validate", "Check the dataset files against the schema and invariants"));

  CLI::App* metrics = add_common(app.add_subcommand(
      "metrics-auto", "Automated rates (language, effective response, functional "
                      "citations) per stratum with Wald bars"));

  CLI::App* sample = add_common(app.add_subcommand(
      "sample", "Budget-driven stratified sampling plan (k-means per stratum)"));
  sample->add_option("--budget", cli.budget, "total annotation budget")->required();
  sample->add_option("--per-cluster", cli.per_cluster, "units drawn per cluster");
  sample->add_option("--unit-kind", cli.unit_kind, "answer | sentence");
  sample->add_option("--allocation", cli.allocation_path,
                     "JSON file of per-stratum budget overrides");

  CLI::App* judge = add_common(app.add_subcommand(
      "judge", "Run the machine judge over the corpus and emit annotations"));
  judge->add_option("--metric", cli.metric_filter, "relevance | veracity")->required();
  judge->add_option("--backend", cli.backend_kind, "http | mock");
  judge->add_option("--endpoint", cli.endpoint_url, "chat-completions base URL");
  judge->add_option("--model", cli.model, "model identifier");
  judge->add_option("--api-key", cli.api_key, "bearer token (or RAGCHECK_API_KEY)");
  judge->add_option("--temperature", cli.temperature, "sampling temperature");
  judge->add_option("--max-attempts", cli.max_attempts, "retry budget per unit");
  judge->add_option("--parallelism", cli.parallelism, "request fan-out width");
  judge->add_option("--batch-size", cli.batch_size, "sentences per veracity request");
  judge->add_flag("--lenient", cli.lenient, "strip markdown fences before parsing");
  judge->add_option("--few-shot", cli.few_shot, "few-shot slot overrides (JSON)");
  judge->add_option("--veracity-template", cli.veracity_template_path,
                    "veracity prompt template file");
  judge->add_option("--relevance-template", cli.relevance_template_path,
                    "relevance prompt template file");

  CLI::App* estimate = add_common(app.add_subcommand(
      "estimate", "Human, judge, and hybrid estimates with confidence intervals per "
                  "theme"));
  estimate->add_option("--metric", cli.metric_filter, "limit to one metric");
  estimate->add_option("--theme", cli.theme_filter, "limit to one theme");
  estimate->add_option("--lambda", cli.lambda, "fixed lambda (default: power-tuned)");
  estimate->add_flag("--french-only", cli.french_only,
                     "drop non-French answers from the denominators");

  CLI::App* simulate = add_common(app.add_subcommand(
      "simulate", "Agreement-sensitivity sweep of the hybrid estimator"));
  simulate->add_option("--p", cli.sim_p, "human marginal rate");
  simulate->add_option("--q", cli.sim_q, "judge marginal rate");
  simulate->add_option("--n", cli.sim_n, "human control sample size");
  simulate->add_option("--N", cli.sim_N, "machine-only sample size");
  simulate->add_option("--a-step", cli.sim_step, "agreement grid step");
  simulate->add_option("--a", [&cli](const std::vector<std::string>& vals) {
    cli.sim_single_a = std::stod(vals.front());
    return true;
  }, "evaluate a single agreement level");
  simulate->add_option("--trials", cli.sim_trials,
                       "Monte Carlo trials per grid point (0 = analytic only)");

  CLI::App* report = add_common(app.add_subcommand(
      "report", "Merged report: automated rates, estimates, agreement tables"));
  report->add_option("--metric", cli.metric_filter, "limit to one metric");
  report->add_option("--theme", cli.theme_filter, "limit to one theme");
  report->add_option("--lambda", cli.lambda, "fixed lambda (default: power-tuned)");
  report->add_flag("--french-only", cli.french_only,
                   "drop non-French answers from the denominators");
  bool report_with_sim = false;
  report->add_flag("--with-simulation", report_with_sim,
                   "include an analytic sensitivity sweep");
  report->add_option("--p", cli.sim_p, "simulation: human marginal rate");
  report->add_option("--q", cli.sim_q, "simulation: judge marginal rate");
  report->add_option("--n", cli.sim_n, "simulation: control sample size");
  report->add_option("--N", cli.sim_N, "simulation: machine-only sample size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(cli, validate);
    if (metrics->parsed()) return cmd_metrics_auto(cli, metrics);
    if (sample->parsed()) return cmd_sample(cli, sample);
    if (judge->parsed()) return cmd_judge(cli, judge);
    if (estimate->parsed()) return cmd_estimate(cli, estimate);
    if (simulate->parsed()) return cmd_simulate(cli, simulate);
    if (report->parsed()) return cmd_report(cli, report, report_with_sim);
  } catch (const CorpusLoadError& e) {
    for (const Issue& issue : e.issues()) std::cerr << issue.format() << "\n";
    return kExitDataInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

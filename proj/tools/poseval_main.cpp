#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "poseval/exclusion.hpp"
#include "poseval/report.hpp"
#include "poseval/runner.hpp"
#include "poseval/scoring.hpp"
#include "poseval/stats.hpp"

namespace {

using namespace poseval;
using nlohmann::json;

void write_output(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error("cannot write " + out_path);
  out << content;
}

std::vector<scoring::GradedRecord> grade_store(const runner::RunConfig& config,
                                               const runner::ExperimentContext& ctx,
                                               runner::RunStore& store) {
  const auto records = store.load_all();
  return scoring::score_records(
      records,
      [&](const std::string& task_id, const std::string& target_id) {
        return ctx.find_instance(task_id, target_id);
      });
}

std::set<std::string> excluded_models(const runner::RunConfig& config,
                                      const std::vector<scoring::GradedRecord>& graded) {
  if (!config.exclusion) return {};
  return runner::apply_exclusion(graded, *config.exclusion).excluded_models();
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Position-controlled long-context evaluation harness"};
  app.require_subcommand(1);

  std::string config_path, store_dir, out_path;

  auto* plan_cmd = app.add_subcommand("plan", "Print the condition matrix summary");
  plan_cmd->add_option("--config", config_path, "run config JSON")->required();

  auto* run_cmd = app.add_subcommand("run", "Execute the plan resumably");
  int workers = 1;
  long throttle_ms = 0, limit = 0, retry_base_ms = 1000;
  std::string log_path;
  run_cmd->add_option("--config", config_path)->required();
  run_cmd->add_option("--store", store_dir, "record store directory")->required();
  run_cmd->add_option("--workers", workers, "worker threads");
  run_cmd->add_option("--throttle-ms", throttle_ms, "pause between records");
  run_cmd->add_option("--limit", limit, "stop after N new records");
  run_cmd->add_option("--retry-base-ms", retry_base_ms, "backoff base delay");
  run_cmd->add_option("--log", log_path, "redacted request log (JSONL)");

  auto* score_cmd = app.add_subcommand("score", "Grade stored records");
  score_cmd->add_option("--config", config_path)->required();
  score_cmd->add_option("--store", store_dir)->required();
  score_cmd->add_option("--out", out_path, "graded JSONL path (default stdout)");

  auto* stats_cmd = app.add_subcommand("stats", "Emit cells, drops and p-values");
  std::string stats_format = "json";
  double alpha = 0.01;
  long comparisons = 0;
  std::string sidedness = "one_sided";
  stats_cmd->add_option("--config", config_path)->required();
  stats_cmd->add_option("--store", store_dir)->required();
  stats_cmd->add_option("--format", stats_format, "json|csv");
  stats_cmd->add_option("--alpha", alpha);
  stats_cmd->add_option("--m", comparisons, "comparison count (0 = drop count)");
  stats_cmd->add_option("--sidedness", sidedness, "one_sided|two_sided display");
  stats_cmd->add_option("--out", out_path);

  auto* report_cmd = app.add_subcommand("report", "Render a result table");
  std::string table, filler, task, format = "markdown", seed_stat = "acc";
  std::vector<std::string> tiers;
  std::vector<long long> seeds;
  bool include_excluded = false;
  report_cmd->add_option("--config", config_path)->required();
  report_cmd->add_option("--store", store_dir)->required();
  report_cmd->add_option("--table", table, "table kind")->required();
  report_cmd->add_option("--filler", filler, "filler kind (ws|qo_v2|neutral)");
  report_cmd->add_option("--task", task);
  report_cmd->add_option("--tier", tiers, "tier labels");
  report_cmd->add_option("--seeds", seeds, "seed filter");
  report_cmd->add_option("--format", format, "markdown|csv|json");
  report_cmd->add_option("--seed-stat", seed_stat, "seed_stability: acc|drop");
  report_cmd->add_option("--alpha", alpha);
  report_cmd->add_option("--m", comparisons);
  report_cmd->add_flag("--include-excluded", include_excluded);
  report_cmd->add_option("--out", out_path);

  auto* validate_cmd = app.add_subcommand("validate",
                                          "Re-derive stored prompts and check layouts");
  validate_cmd->add_option("--config", config_path)->required();
  validate_cmd->add_option("--store", store_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (plan_cmd->parsed()) {
    const auto config = runner::RunConfig::load(config_path);
    const auto plan = runner::plan_matrix(config);
    std::cout << plan.size() << " conditions (models=" << config.models.size()
              << " tasks=" << config.tasks.size()
              << " fillers=" << config.fillers.size()
              << " tiers=" << config.tiers.size()
              << " layouts=" << config.layouts.size()
              << " seeds=" << config.seeds.size()
              << " variants=" << config.gen_variants.size() << ")\n";
    return 0;
  }

  if (run_cmd->parsed()) {
    const auto config = runner::RunConfig::load(config_path);
    const auto ctx = runner::ExperimentContext::build(config);
    const auto plan = runner::plan_matrix(config);
    runner::RunStore store(store_dir);
    store.open();
    modelgate::RetryPolicy retry;
    retry.base_delay_ms = retry_base_ms;
    modelgate::RoutingGateway gateway(retry, log_path);
    runner::ExecuteOptions options;
    options.workers = workers;
    options.throttle_ms = throttle_ms;
    options.limit = limit;
    const auto summary = execute(ctx, plan, store, gateway, config, options);
    std::cout << json{{"completed", summary.completed},
                      {"skipped_existing", summary.skipped_existing},
                      {"failed", summary.failed},
                      {"store_size", store.size()}}
                     .dump()
              << "\n";
    return 0;
  }

  const auto config = runner::RunConfig::load(config_path);
  const auto ctx = runner::ExperimentContext::build(config);
  runner::RunStore store(store_dir);
  store.open();

  if (score_cmd->parsed()) {
    const auto graded = grade_store(config, ctx, store);
    std::string out;
    for (const auto& g : graded) out += g.to_json().dump() + "\n";
    write_output(out, out_path);
    return 0;
  }

  if (stats_cmd->parsed()) {
    const auto graded = grade_store(config, ctx, store);
    const auto cells = stats::aggregate_all(graded);
    const auto displayed = sidedness == "two_sided" ? stats::Sidedness::two_sided
                                                    : stats::Sidedness::one_sided;
    // end/middle drops per cell pair
    std::vector<stats::DropResult> drops;
    for (const auto& end_cell : cells) {
      if (end_cell.axes.layout != "end") continue;
      for (const auto& mid_cell : cells) {
        if (mid_cell.axes.layout != "middle") continue;
        if (!end_cell.axes.same_except_layout(mid_cell.axes)) continue;
        drops.push_back(stats::compute_drop(end_cell, mid_cell));
      }
    }
    const auto sweep = stats::significance_sweep(drops, alpha, comparisons, displayed);

    if (stats_format == "csv") {
      std::string out =
          "model,task,filler,tier,gen_variant,seeds,end_successes,end_n,"
          "mid_successes,mid_n,drop_pp,p_one_sided,p_two_sided,significant,"
          "threshold,sidedness\n";
      for (const auto& d : sweep.drops) {
        const auto& a = d.end_cell.axes;
        std::string seed_list;
        for (auto s : a.seeds) seed_list += (seed_list.empty() ? "" : ";") + std::to_string(s);
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.6e,%.6e,%d,%.6e,%s",
                      d.p_one_sided, d.p_two_sided, d.significant ? 1 : 0,
                      sweep.threshold, to_string(displayed).c_str());
        out += a.model_id + "," + a.task_id + "," + a.filler_kind + "," +
               a.tier_label + "," + a.gen_variant + "," + seed_list + "," +
               std::to_string(d.end_cell.successes) + "," +
               std::to_string(d.end_cell.n) + "," +
               std::to_string(d.mid_cell.successes) + "," +
               std::to_string(d.mid_cell.n) + "," +
               std::to_string(d.drop_pp) + "," + buf + "\n";
      }
      write_output(out, out_path);
      return 0;
    }

    json out;
    out["metadata"] = {
        {"p_value_display", to_string(displayed)},
        {"p_value_note",
         "One-sided values are the hypergeometric tail in the direction of the "
         "observed difference; two-sided values sum all tables no more probable "
         "than the observed one (roughly double). Published positional-drop "
         "tables labelled two-sided reproduce under the one-sided convention; "
         "both are emitted so either reading can be checked."},
        {"p_method", "hypergeometric_log_gamma"},
        {"bonferroni_threshold", sweep.threshold},
        {"alpha", alpha},
        {"comparisons", comparisons > 0 ? comparisons
                                        : static_cast<long>(sweep.drops.size())}};
    out["cells"] = json::array();
    for (const auto& c : cells) {
      out["cells"].push_back({{"model", c.axes.model_id},
                              {"task", c.axes.task_id},
                              {"filler", c.axes.filler_kind},
                              {"tier", c.axes.tier_label},
                              {"layout", c.axes.layout},
                              {"gen_variant", c.axes.gen_variant},
                              {"seeds", c.axes.seeds},
                              {"successes", c.successes},
                              {"n", c.n},
                              {"accuracy", c.accuracy()},
                              {"error_count", c.error_count}});
    }
    out["drops"] = json::array();
    for (const auto& d : sweep.drops) {
      const auto& a = d.end_cell.axes;
      out["drops"].push_back({{"model", a.model_id},
                              {"task", a.task_id},
                              {"filler", a.filler_kind},
                              {"tier", a.tier_label},
                              {"gen_variant", a.gen_variant},
                              {"seeds", a.seeds},
                              {"end", {{"successes", d.end_cell.successes}, {"n", d.end_cell.n}}},
                              {"middle", {{"successes", d.mid_cell.successes}, {"n", d.mid_cell.n}}},
                              {"drop_pp", d.drop_pp},
                              {"p_one_sided", d.p_one_sided},
                              {"p_two_sided", d.p_two_sided},
                              {"significant", d.significant}});
    }
    write_output(out.dump(2) + "\n", out_path);
    return 0;
  }

  if (report_cmd->parsed()) {
    const auto graded = grade_store(config, ctx, store);
    report::ReportSpec spec;
    spec.table_kind = report::table_kind_from_string(table);
    spec.format = report::output_format_from_string(format);
    if (!filler.empty()) spec.filler_kind = filler;
    if (!task.empty()) spec.task_id = task;
    spec.tiers = tiers;
    spec.seeds = seeds;
    spec.alpha = alpha;
    spec.comparisons = comparisons;
    spec.seed_stat = seed_stat;
    spec.include_excluded = include_excluded;
    for (const auto& m : config.models) spec.model_order.push_back(m.model_id);
    spec.worst_case_filler = config.worst_case_filler;
    spec.excluded_models = excluded_models(config, graded);
    const auto t = report::emit(graded, spec);
    write_output(report::render(t, spec.format), out_path);
    return 0;
  }

  if (validate_cmd->parsed()) {
    const auto records = store.load_all();
    long violations = 0;
    for (const auto& record : records) {
      const auto prompt = ctx.build_prompt(record.key);
      const std::string rebuilt_hash = util::content_hash(prompt.text);
      if (rebuilt_hash != record.prompt_hash) {
        ++violations;
        std::cout << record.key.to_key_string()
                  << ": prompt hash mismatch (stored " << record.prompt_hash
                  << ", rebuilt " << rebuilt_hash << ")\n";
      }
      const auto check = promptbuild::layout_check(prompt);
      for (const auto& v : check.violations) {
        ++violations;
        std::cout << record.key.to_key_string() << ": " << v << "\n";
      }
    }
    std::cout << records.size() << " records checked, " << violations
              << " violations\n";
    return violations == 0 ? 0 : 1;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
}

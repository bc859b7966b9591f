#include "poseval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace poseval::report {

using scoring::GradedRecord;
using stats::ConditionCell;
using nlohmann::json;

TableKind table_kind_from_string(const std::string& s) {
  if (s == "drop_by_tier") return TableKind::drop_by_tier;
  if (s == "ablation_8k") return TableKind::ablation_8k;
  if (s == "filler_match") return TableKind::filler_match;
  if (s == "seed_stability") return TableKind::seed_stability;
  if (s == "qov2_drops") return TableKind::qov2_drops;
  if (s == "neutral_controls") return TableKind::neutral_controls;
  if (s == "filler_penalty") return TableKind::filler_penalty;
  if (s == "maxgen_rerun") return TableKind::maxgen_rerun;
  if (s == "restatement") return TableKind::restatement;
  throw Error("unknown table kind: " + s);
}

std::string to_string(TableKind k) {
  switch (k) {
    case TableKind::drop_by_tier: return "drop_by_tier";
    case TableKind::ablation_8k: return "ablation_8k";
    case TableKind::filler_match: return "filler_match";
    case TableKind::seed_stability: return "seed_stability";
    case TableKind::qov2_drops: return "qov2_drops";
    case TableKind::neutral_controls: return "neutral_controls";
    case TableKind::filler_penalty: return "filler_penalty";
    case TableKind::maxgen_rerun: return "maxgen_rerun";
    case TableKind::restatement: return "restatement";
  }
  throw Error("bad TableKind");
}

OutputFormat output_format_from_string(const std::string& s) {
  if (s == "markdown" || s == "md") return OutputFormat::markdown;
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw Error("unknown output format: " + s);
}

// --- display formatting ------------------------------------------------

std::string format_pct(long successes, long n) {
  if (n <= 0) throw Error("format_pct: empty cell");
  const long long pct =
      util::round_half_away(100.0 * static_cast<double>(successes) /
                            static_cast<double>(n));
  return std::to_string(pct) + "%";
}

std::string format_pct_counts(long successes, long n) {
  return format_pct(successes, n) + " (" + std::to_string(successes) + "/" +
         std::to_string(n) + ")";
}

std::string format_pp(double pp) {
  const long long v = util::round_half_away(pp);
  return (v >= 0 ? "+" : "") + std::to_string(v) + "pp";
}

std::string format_p(double p) {
  if (p < 0.0001) return "<0.0001";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", p);
  return buf;
}

std::string tier_display(long budget_tokens, const std::string& fallback_label) {
  if (budget_tokens > 0 && budget_tokens % 1024 == 0)
    return std::to_string(budget_tokens / 1024) + "K";
  if (budget_tokens > 0) return std::to_string(budget_tokens);
  return fallback_label;
}

namespace {

std::string layout_display(const std::string& layout) {
  if (layout == "middle") return "mid";
  if (layout == "middle_twice") return "midx2";
  if (layout == "middle_dup") return "mid+end";
  return layout;
}

std::string filler_display(const std::string& kind) {
  if (kind == "none") return "none";
  return corpus::short_code(corpus::filler_kind_from_string(kind));
}

std::string canonical_filler(const std::string& kind) {
  if (kind == "none") return "none";
  return corpus::to_string(corpus::filler_kind_from_string(kind));
}

long tier_sort_key(const std::string& label) {
  long value = 0;
  size_t i = 0;
  while (i < label.size() && std::isdigit(static_cast<unsigned char>(label[i])))
    value = value * 10 + (label[i++] - '0');
  if (i < label.size() && (label[i] == 'K' || label[i] == 'k')) value *= 1024;
  if (i < label.size() && (label[i] == 'M' || label[i] == 'm'))
    value *= 1024 * 1024;
  return value == 0 ? std::numeric_limits<long>::max() : value;
}

std::string format_sig_note(const stats::SweepResult& sweep, double alpha,
                            long m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "*: Fisher exact %s p < %.2e (alpha=%g, m=%ld comparisons).",
                sweep.sidedness == stats::Sidedness::one_sided ? "one-sided"
                                                               : "two-sided",
                sweep.threshold, alpha, m);
  return buf;
}

constexpr const char* kSidednessNote =
    "p-value convention: the displayed tail is one-sided in the direction of "
    "the observed difference; the two-sided sum-of-no-more-probable-tables "
    "convention roughly doubles these values. Both are written by the stats "
    "command.";

// --- cell index ----------------------------------------------------------

struct CellEntry {
  ConditionCell cell;
  long budget_tokens = 0;
};

class CellIndex {
 public:
  CellIndex(const std::vector<GradedRecord>& graded, const ReportSpec& spec,
            bool filter_variant)
      : spec_(spec) {
    for (const auto& g : graded) {
      if (filter_variant && g.key.gen_variant != spec.gen_variant) continue;
      add(g);
    }
  }

  /// Pools matching per-seed cells (spec.seeds, or every seed present).
  std::optional<CellEntry> find(const std::string& model, const std::string& task,
                                const std::string& filler, const std::string& tier,
                                const std::string& layout) const {
    return find_seeded(model, task, filler, tier, layout, spec_.seeds);
  }

  std::optional<CellEntry> find_seed(const std::string& model,
                                     const std::string& task,
                                     const std::string& filler,
                                     const std::string& tier,
                                     const std::string& layout,
                                     long long seed) const {
    return find_seeded(model, task, filler, tier, layout, {seed});
  }

  std::vector<std::string> models() const {
    return distinct([](const Key& k) { return k.model; });
  }
  std::vector<std::string> tiers() const {
    auto out = distinct([](const Key& k) { return k.tier; });
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return tier_sort_key(a) < tier_sort_key(b);
    });
    return out;
  }
  std::vector<std::string> tasks() const {
    return distinct([](const Key& k) { return k.task; });
  }
  std::vector<std::string> fillers() const {
    return distinct([](const Key& k) { return k.filler; });
  }
  std::vector<long long> seeds() const {
    std::set<long long> s;
    for (const auto& [k, v] : cells_) s.insert(k.seed);
    return {s.begin(), s.end()};
  }

 private:
  struct Key {
    std::string model, task, filler, tier, layout, variant;
    long long seed;
    auto tie() const { return std::tie(model, task, filler, tier, layout, variant, seed); }
    bool operator<(const Key& o) const { return tie() < o.tie(); }
  };

  void add(const GradedRecord& g) {
    Key k{g.key.model_id,   g.key.task_id, g.key.filler_kind, g.key.tier_label,
          g.key.layout,     g.key.gen_variant, g.key.seed};
    auto& entry = cells_[k];
    if (entry.cell.n == 0) {
      entry.cell.axes.model_id = k.model;
      entry.cell.axes.task_id = k.task;
      entry.cell.axes.filler_kind = k.filler;
      entry.cell.axes.tier_label = k.tier;
      entry.cell.axes.layout = k.layout;
      entry.cell.axes.gen_variant = k.variant;
      entry.cell.axes.seeds = {k.seed};
      entry.budget_tokens = g.budget_tokens;
    }
    entry.cell.n += 1;
    if (g.correct) entry.cell.successes += 1;
    if (g.error_flag) entry.cell.error_count += 1;
  }

  std::optional<CellEntry> find_seeded(const std::string& model,
                                       const std::string& task,
                                       const std::string& filler,
                                       const std::string& tier,
                                       const std::string& layout,
                                       const std::vector<long long>& seeds) const {
    std::vector<ConditionCell> matched;
    long budget = 0;
    for (const auto& [k, entry] : cells_) {
      if (k.model != model || k.task != task || k.filler != filler ||
          k.tier != tier || k.layout != layout)
        continue;
      if (!seeds.empty() &&
          std::find(seeds.begin(), seeds.end(), k.seed) == seeds.end())
        continue;
      matched.push_back(entry.cell);
      budget = entry.budget_tokens;
    }
    if (matched.empty()) return std::nullopt;
    CellEntry out;
    out.cell = matched.size() == 1 ? matched.front() : stats::pool_seeds(matched);
    out.budget_tokens = budget;
    return out;
  }

  template <typename F>
  std::vector<std::string> distinct(F&& f) const {
    std::set<std::string> s;
    for (const auto& [k, v] : cells_) s.insert(f(k));
    return {s.begin(), s.end()};
  }

  const ReportSpec& spec_;
  std::map<Key, CellEntry> cells_;
};

// --- shared row helpers ----------------------------------------------------

std::string pick_task(const CellIndex& index, const ReportSpec& spec) {
  if (spec.task_id) return *spec.task_id;
  const auto tasks = index.tasks();
  if (tasks.size() == 1) return tasks.front();
  throw Error("several tasks in the record set; pass an explicit task filter");
}

std::vector<std::string> pick_models(const CellIndex& index,
                                     const ReportSpec& spec,
                                     std::vector<std::string>* excluded_notes) {
  std::vector<std::string> models =
      spec.model_order.empty() ? index.models() : spec.model_order;
  std::vector<std::string> out;
  for (const auto& m : models) {
    if (!spec.include_excluded && spec.excluded_models.count(m)) {
      if (excluded_notes)
        excluded_notes->push_back("excluded from this table: " + m +
                                  " (baseline quality gate).");
      continue;
    }
    out.push_back(m);
  }
  return out;
}

std::vector<std::string> pick_tiers(const CellIndex& index,
                                    const ReportSpec& spec) {
  if (!spec.tiers.empty()) return spec.tiers;
  return index.tiers();
}

}  // namespace

// --- renderers ----------------------------------------------------------

std::string to_markdown(const Table& t) {
  std::string out = t.title + "\n\n|";
  for (const auto& c : t.columns) out += " " + c + " |";
  out += "\n|";
  for (size_t i = 0; i < t.columns.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& row : t.rows) {
    out += "|";
    for (const auto& cell : row) out += " " + cell + " |";
    out += "\n";
  }
  if (!t.notes.empty()) {
    out += "\n";
    for (const auto& n : t.notes) out += n + "\n";
  }
  return out;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (size_t i = 0; i < t.columns.size(); ++i)
    out += (i ? "," : "") + csv_escape(t.columns[i]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out += (i ? "," : "") + csv_escape(row[i]);
    out += "\n";
  }
  for (const auto& n : t.notes) out += "# " + n + "\n";
  return out;
}

json to_json(const Table& t) {
  return {{"id", t.id},
          {"title", t.title},
          {"columns", t.columns},
          {"rows", t.rows},
          {"notes", t.notes}};
}

Table table_from_json(const json& j) {
  Table t;
  t.id = j.at("id").get<std::string>();
  t.title = j.at("title").get<std::string>();
  t.columns = j.at("columns").get<std::vector<std::string>>();
  t.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
  t.notes = j.at("notes").get<std::vector<std::string>>();
  return t;
}

std::string render(const Table& t, OutputFormat format) {
  switch (format) {
    case OutputFormat::markdown: return to_markdown(t);
    case OutputFormat::csv: return to_csv(t);
    case OutputFormat::json: return to_json(t).dump(2) + "\n";
  }
  throw Error("bad OutputFormat");
}

// --- drop tables ----------------------------------------------------------

Table emit_drop_by_tier(const std::vector<GradedRecord>& graded,
                        const ReportSpec& spec) {
  if (!spec.filler_kind)
    throw Error("drop_by_tier needs a filler kind");
  const std::string filler = canonical_filler(*spec.filler_kind);
  CellIndex index(graded, spec, true);
  const std::string task = pick_task(index, spec);
  const std::vector<std::string> tiers = pick_tiers(index, spec);
  Table t;
  t.id = "drop_by_tier";

  std::vector<std::string> excluded_notes;
  const auto models = pick_models(index, spec, &excluded_notes);

  struct PairCells {
    std::optional<CellEntry> end, mid;
  };
  std::vector<std::vector<PairCells>> grid(models.size());
  std::vector<stats::DropResult> drops;
  std::vector<std::pair<size_t, size_t>> drop_slots;  // (model idx, tier idx)
  for (size_t mi = 0; mi < models.size(); ++mi) {
    grid[mi].resize(tiers.size());
    for (size_t ti = 0; ti < tiers.size(); ++ti) {
      auto& pc = grid[mi][ti];
      pc.end = index.find(models[mi], task, filler, tiers[ti], "end");
      pc.mid = index.find(models[mi], task, filler, tiers[ti], "middle");
      if (pc.end && pc.mid) {
        drops.push_back(stats::compute_drop(pc.end->cell, pc.mid->cell));
        drop_slots.emplace_back(mi, ti);
      }
    }
  }
  const long m = spec.comparisons > 0 ? spec.comparisons
                                      : static_cast<long>(drops.size());
  const auto sweep =
      stats::significance_sweep(std::move(drops), spec.alpha, m, spec.sidedness);

  // significance flag per (model, tier)
  std::map<std::pair<size_t, size_t>, const stats::DropResult*> by_slot;
  for (size_t i = 0; i < sweep.drops.size(); ++i)
    by_slot[drop_slots[i]] = &sweep.drops[i];

  const bool single_tier = tiers.size() == 1;
  if (single_tier) {
    t.title = "End vs middle accuracy at " + tiers.front() + " (" +
              filler_display(filler) + " filler, " + task + ")";
    t.columns = {"Model", "End", "Mid", "Drop", "Fisher p", "Sig."};
    for (size_t mi = 0; mi < models.size(); ++mi) {
      const auto& pc = grid[mi][0];
      std::vector<std::string> row{models[mi], "N/A", "N/A", "N/A", "N/A", ""};
      if (pc.end) row[1] = format_pct(pc.end->cell.successes, pc.end->cell.n);
      if (pc.mid) row[2] = format_pct(pc.mid->cell.successes, pc.mid->cell.n);
      if (auto it = by_slot.find({mi, 0}); it != by_slot.end()) {
        row[3] = format_pp(it->second->drop_pp);
        row[4] = format_p(spec.sidedness == stats::Sidedness::one_sided
                              ? it->second->p_one_sided
                              : it->second->p_two_sided);
        row[5] = it->second->significant ? "*" : "";
      } else {
        t.notes.push_back("missing cell: " + models[mi] + " at " + tiers.front());
      }
      t.rows.push_back(std::move(row));
    }
  } else {
    t.title = "End-position accuracy and end-to-middle drop by tier (" +
              filler_display(filler) + " filler, " + task + ")";
    t.columns = {"Model"};
    for (const auto& tier : tiers) {
      t.columns.push_back(tier + " End");
      t.columns.push_back(tier + " Drop");
      t.columns.push_back(tier + " Sig.");
    }
    for (size_t mi = 0; mi < models.size(); ++mi) {
      std::vector<std::string> row{models[mi]};
      bool any_missing = false;
      for (size_t ti = 0; ti < tiers.size(); ++ti) {
        const auto& pc = grid[mi][ti];
        row.push_back(pc.end ? format_pct(pc.end->cell.successes, pc.end->cell.n)
                             : "N/A");
        if (auto it = by_slot.find({mi, ti}); it != by_slot.end()) {
          row.push_back(format_pp(it->second->drop_pp));
          row.push_back(it->second->significant ? "*" : "");
        } else {
          row.push_back("N/A");
          row.push_back("");
          any_missing = true;
        }
      }
      if (any_missing)
        t.notes.push_back("missing cells for " + models[mi] + "; N/A rendered.");
      t.rows.push_back(std::move(row));
    }
  }
  t.notes.push_back("Drop = middle accuracy minus end accuracy, in percentage points.");
  t.notes.push_back(format_sig_note(sweep, spec.alpha, m));
  t.notes.push_back(kSidednessNote);
  for (auto& n : excluded_notes) t.notes.push_back(std::move(n));
  return t;
}

// --- ablation spectrum ------------------------------------------------------

Table emit_ablation_8k(const std::vector<GradedRecord>& graded,
                       const ReportSpec& spec) {
  CellIndex index(graded, spec, true);
  const std::string task = pick_task(index, spec);
  const std::string tier = spec.tiers.empty() ? "8K" : spec.tiers.front();
  Table t;
  t.id = "ablation_8k";
  t.title = "Position ablation spectrum at " + tier +
            " (each model on its worst-case filler, " + task + ")";
  t.columns = {"Model", "Filler", "End", "Mid", "Mid x2", "Mid+End", "Dup-End"};

  std::vector<std::string> excluded_notes;
  for (const auto& model : pick_models(index, spec, &excluded_notes)) {
    auto it = spec.worst_case_filler.find(model);
    if (it == spec.worst_case_filler.end()) {
      t.notes.push_back("no worst-case filler configured for " + model +
                        "; row skipped.");
      continue;
    }
    const std::string filler = canonical_filler(it->second);
    std::vector<std::string> row{model, filler_display(filler)};
    const auto end_cell = index.find(model, task, filler, tier, "end");
    const auto mid = index.find(model, task, filler, tier, "middle");
    const auto mid2 = index.find(model, task, filler, tier, "middle_twice");
    const auto dup = index.find(model, task, filler, tier, "middle_dup");
    for (const auto* c : {&end_cell, &mid, &mid2, &dup})
      row.push_back(*c ? format_pct((*c)->cell.successes, (*c)->cell.n) : "N/A");
    if (end_cell && dup)
      row.push_back(format_pp(100.0 * (dup->cell.accuracy() - end_cell->cell.accuracy())));
    else
      row.push_back("N/A");
    t.rows.push_back(std::move(row));
  }
  t.notes.push_back(
      "Mid x2 = two adjacent middle copies; Mid+End = middle copy plus end "
      "copy; Dup-End = Mid+End accuracy minus End accuracy.");
  for (auto& n : excluded_notes) t.notes.push_back(std::move(n));
  return t;
}

// --- filler match ---------------------------------------------------------

Table emit_filler_match(const std::vector<GradedRecord>& graded,
                        const ReportSpec& spec) {
  Table t;
  t.id = "filler_match";
  t.title = "Filler answer matching among incorrect responses";
  t.columns = {"Model", "Filler", "Tier", "Pos", "Acc", "% Match Any",
               "% Match Last"};

  struct Group {
    long n = 0, correct = 0, wrong = 0, any = 0, last = 0;
    bool applicable = false;
  };
  std::map<std::tuple<std::string, std::string, std::string, std::string>, Group>
      groups;
  long mid_wrong = 0, mid_any = 0, end_wrong = 0, end_any = 0;
  for (const auto& g : graded) {
    if (g.key.gen_variant != spec.gen_variant) continue;
    if (spec.task_id && g.key.task_id != *spec.task_id) continue;
    if (!spec.seeds.empty() &&
        std::find(spec.seeds.begin(), spec.seeds.end(), g.key.seed) ==
            spec.seeds.end())
      continue;
    if (!spec.include_excluded && spec.excluded_models.count(g.key.model_id))
      continue;
    auto& grp = groups[{g.key.model_id, g.key.filler_kind, g.key.tier_label,
                        g.key.layout}];
    grp.n += 1;
    grp.applicable = grp.applicable || g.match_applicable;
    if (g.correct) {
      grp.correct += 1;
    } else {
      grp.wrong += 1;
      if (g.match_any_filler) grp.any += 1;
      if (g.match_last_filler) grp.last += 1;
      if (g.match_applicable) {
        if (g.key.layout == "middle") {
          mid_wrong += 1;
          if (g.match_any_filler) mid_any += 1;
        } else if (g.key.layout == "end") {
          end_wrong += 1;
          if (g.match_any_filler) end_any += 1;
        }
      }
    }
  }
  if (groups.empty()) throw Error("filler_match: no graded records selected");

  for (const auto& [key, grp] : groups) {
    const auto& [model, filler, tier, layout] = key;
    std::vector<std::string> row{model, filler_display(filler), tier,
                                 layout_display(layout)};
    row.push_back(format_pct(grp.correct, grp.n));
    if (!grp.applicable) {
      row.push_back("n/a");
      row.push_back("n/a");
    } else if (grp.wrong == 0) {
      row.push_back("-");
      row.push_back("-");
    } else {
      row.push_back(format_pct(grp.any, grp.wrong));
      row.push_back(format_pct(grp.last, grp.wrong));
    }
    t.rows.push_back(std::move(row));
  }
  if (mid_wrong > 0)
    t.notes.push_back("aggregate match-any among incorrect responses: middle " +
                      format_pct(mid_any, mid_wrong) +
                      (end_wrong > 0 ? ", end " + format_pct(end_any, end_wrong)
                                     : std::string()) +
                      ".");
  t.notes.push_back(
      "Match rates are computed over incorrect responses only; n/a marks "
      "gold-free (neutral) filler.");
  return t;
}

// --- seed stability ---------------------------------------------------------

Table emit_seed_stability(const std::vector<GradedRecord>& graded,
                          const ReportSpec& spec) {
  CellIndex index(graded, spec, true);
  const std::vector<long long> seeds =
      spec.seeds.empty() ? index.seeds() : spec.seeds;
  if (seeds.size() < 2)
    throw Error("seed_stability needs at least two seeds");
  Table t;
  t.id = "seed_stability";

  std::vector<std::string> excluded_notes;
  const auto models = pick_models(index, spec, &excluded_notes);
  const auto tiers = pick_tiers(index, spec);
  std::vector<std::string> fillers;
  if (spec.filler_kind) fillers.push_back(canonical_filler(*spec.filler_kind));
  else fillers = index.fillers();

  const bool drop_mode = spec.seed_stat == "drop";
  if (drop_mode) {
    t.title = "End-to-middle drop by seed";
    t.columns = {"Condition"};
    for (auto s : seeds) t.columns.push_back("seed" + std::to_string(s) + " drop");
    t.columns.push_back("Combined");
  } else {
    t.title = "Per-seed accuracy stability";
    t.columns = {"Condition"};
    for (auto s : seeds) t.columns.push_back("Seed " + std::to_string(s));
    t.columns.push_back("Diff");
    t.columns.push_back("Pooled");
  }

  for (const auto& task : index.tasks()) {
    if (spec.task_id && task != *spec.task_id) continue;
    for (const auto& model : models)
      for (const auto& filler : fillers)
        for (const auto& tier : tiers) {
          if (drop_mode) {
            std::vector<std::string> row;
            std::vector<stats::ConditionCell> ends, mids;
            bool complete = true;
            std::vector<std::string> per_seed;
            for (auto seed : seeds) {
              auto e = index.find_seed(model, task, filler, tier, "end", seed);
              auto m = index.find_seed(model, task, filler, tier, "middle", seed);
              if (!e || !m) {
                complete = false;
                break;
              }
              per_seed.push_back(format_pp(
                  100.0 * (m->cell.accuracy() - e->cell.accuracy())));
              ends.push_back(e->cell);
              mids.push_back(m->cell);
            }
            if (!complete) continue;
            const auto pooled_end = stats::pool_seeds(ends);
            const auto pooled_mid = stats::pool_seeds(mids);
            row.push_back(model + " " + filler_display(filler) + " " + tier);
            for (auto& cell : per_seed) row.push_back(std::move(cell));
            row.push_back(format_pp(
                100.0 * (pooled_mid.accuracy() - pooled_end.accuracy())));
            t.rows.push_back(std::move(row));
            continue;
          }
          for (const auto& layout :
               {std::string("end"), std::string("middle"),
                std::string("middle_twice"), std::string("middle_dup")}) {
            std::vector<stats::ConditionCell> cells;
            std::vector<std::string> accs;
            long budget = 0;
            bool complete = true;
            for (auto seed : seeds) {
              auto c = index.find_seed(model, task, filler, tier, layout, seed);
              if (!c) {
                complete = false;
                break;
              }
              accs.push_back(format_pct(c->cell.successes, c->cell.n));
              cells.push_back(c->cell);
              budget = c->budget_tokens;
            }
            if (!complete || cells.empty()) continue;
            std::vector<std::string> row;
            row.push_back(model + " " + filler_display(filler) + " " +
                          layout_display(layout) + " " +
                          tier_display(budget, tier));
            for (auto& a : accs) row.push_back(std::move(a));
            if (cells.size() == 2)
              row.push_back(format_pp(
                  100.0 * (cells[1].accuracy() - cells[0].accuracy())));
            else
              row.push_back("-");
            const auto pooled = stats::pool_seeds(cells);
            row.push_back(format_pct(pooled.successes, pooled.n));
            t.rows.push_back(std::move(row));
          }
        }
  }
  if (t.rows.empty())
    throw Error("seed_stability: no condition has cells for every seed");
  if (!drop_mode)
    t.notes.push_back("Diff = second-seed accuracy minus first-seed accuracy; "
                      "Pooled sums successes and trials across seeds.");
  else
    t.notes.push_back("Combined = drop of the seed-pooled cells "
                      "(successes and trials summed).");
  for (auto& n : excluded_notes) t.notes.push_back(std::move(n));
  return t;
}

// --- single-tier / multi-tier end-mid-drop tables ---------------------------

namespace {

Table emit_end_mid_drop(const std::vector<GradedRecord>& graded,
                        const ReportSpec& spec, const std::string& filler,
                        const std::string& id) {
  CellIndex index(graded, spec, true);
  const std::string task = pick_task(index, spec);
  const auto tiers = pick_tiers(index, spec);
  Table t;
  t.id = id;

  std::vector<std::string> excluded_notes;
  const auto models = pick_models(index, spec, &excluded_notes);

  if (tiers.size() == 1) {
    const std::string& tier = tiers.front();
    t.title = tier + " " + filler_display(filler) + " positional drop (" + task + ")";
    t.columns = {"Model", filler_display(filler) + " end",
                 filler_display(filler) + " middle", "Drop"};
    for (const auto& model : models) {
      auto e = index.find(model, task, filler, tier, "end");
      auto m = index.find(model, task, filler, tier, "middle");
      std::vector<std::string> row{model, "N/A", "N/A", "N/A"};
      if (e) row[1] = format_pct_counts(e->cell.successes, e->cell.n);
      if (m) row[2] = format_pct_counts(m->cell.successes, m->cell.n);
      if (e && m)
        row[3] = format_pp(100.0 * (m->cell.accuracy() - e->cell.accuracy()));
      else
        t.notes.push_back("missing cell: " + model + " at " + tier);
      t.rows.push_back(std::move(row));
    }
  } else {
    t.title = "End-to-middle drops under " + filler_display(filler) +
              " filler (" + task + ")";
    t.columns = {"Model"};
    for (const auto& tier : tiers) {
      t.columns.push_back(tier + " End");
      t.columns.push_back(tier + " Mid");
      t.columns.push_back(tier + " Drop");
    }
    for (const auto& model : models) {
      std::vector<std::string> row{model};
      for (const auto& tier : tiers) {
        auto e = index.find(model, task, filler, tier, "end");
        auto m = index.find(model, task, filler, tier, "middle");
        row.push_back(e ? format_pct(e->cell.successes, e->cell.n) : "N/A");
        row.push_back(m ? format_pct(m->cell.successes, m->cell.n) : "N/A");
        row.push_back(e && m ? format_pp(100.0 * (m->cell.accuracy() -
                                                  e->cell.accuracy()))
                             : "N/A");
      }
      t.rows.push_back(std::move(row));
    }
  }
  t.notes.push_back("Drop = middle accuracy minus end accuracy, in percentage points.");
  for (auto& n : excluded_notes) t.notes.push_back(std::move(n));
  return t;
}

}  // namespace

Table emit_qov2_drops(const std::vector<GradedRecord>& graded,
                      const ReportSpec& spec) {
  return emit_end_mid_drop(graded, spec, "questions_only_v2", "qov2_drops");
}

Table emit_neutral_controls(const std::vector<GradedRecord>& graded,
                            const ReportSpec& spec) {
  return emit_end_mid_drop(graded, spec, "neutral_text", "neutral_controls");
}

// --- filler penalty ---------------------------------------------------------

Table emit_filler_penalty(const std::vector<GradedRecord>& graded,
                          const ReportSpec& spec) {
  CellIndex index(graded, spec, true);
  const std::string task = pick_task(index, spec);
  const std::string tier = spec.tiers.empty() ? "8K" : spec.tiers.front();
  Table t;
  t.id = "filler_penalty";
  t.title = "End-position filler penalty at " + tier + " (" + task + ")";
  t.columns = {"Model", "Baseline", "ws end", "ws penalty", "qo_v2 penalty"};

  std::vector<std::string> excluded_notes;
  for (const auto& model : pick_models(index, spec, &excluded_notes)) {
    auto base = index.find(model, task, "none", tier, "end");
    auto ws = index.find(model, task, "with_solutions", tier, "end");
    auto qo = index.find(model, task, "questions_only_v2", tier, "end");
    std::vector<std::string> row{model, "N/A", "N/A", "N/A", "N/A"};
    if (base) row[1] = format_pct_counts(base->cell.successes, base->cell.n);
    if (ws) row[2] = format_pct_counts(ws->cell.successes, ws->cell.n);
    if (base && ws)
      row[3] = format_pp(100.0 * (ws->cell.accuracy() - base->cell.accuracy()));
    if (base && qo)
      row[4] = format_pp(100.0 * (qo->cell.accuracy() - base->cell.accuracy()));
    t.rows.push_back(std::move(row));
  }
  t.notes.push_back(
      "Baseline = no-filler end-position accuracy; penalties are end-position "
      "accuracy with filler minus baseline, in percentage points.");
  for (auto& n : excluded_notes) t.notes.push_back(std::move(n));
  return t;
}

// --- max-gen rerun -----------------------------------------------------------

Table emit_maxgen_rerun(const std::vector<GradedRecord>& graded,
                        const ReportSpec& spec) {
  Table t;
  t.id = "maxgen_rerun";
  t.title = "Generation-budget rerun (" + spec.variant_a + " vs " +
            spec.variant_b + ")";
  t.columns = {"Model", "Tier", "Acc(" + spec.variant_a + ")",
               "Acc(" + spec.variant_b + ")", "Delta"};

  struct Acc {
    long correct = 0, n = 0;
  };
  std::map<std::pair<std::string, std::string>, std::pair<Acc, Acc>> groups;
  for (const auto& g : graded) {
    if (spec.task_id && g.key.task_id != *spec.task_id) continue;
    if (!spec.include_excluded && spec.excluded_models.count(g.key.model_id))
      continue;
    const bool is_a = g.key.gen_variant == spec.variant_a;
    const bool is_b = g.key.gen_variant == spec.variant_b;
    if (!is_a && !is_b) continue;
    auto& slot = groups[{g.key.model_id, g.key.tier_label}];
    Acc& acc = is_a ? slot.first : slot.second;
    acc.n += 1;
    if (g.correct) acc.correct += 1;
  }
  for (const auto& [key, accs] : groups) {
    const auto& [model, tier] = key;
    if (accs.first.n == 0 || accs.second.n == 0) {
      t.notes.push_back("incomplete variant pair for " + model + " at " + tier +
                        "; row skipped.");
      continue;
    }
    const double a = static_cast<double>(accs.first.correct) / accs.first.n;
    const double b = static_cast<double>(accs.second.correct) / accs.second.n;
    t.rows.push_back({model, tier, format_pct(accs.first.correct, accs.first.n),
                      format_pct(accs.second.correct, accs.second.n),
                      format_pp(100.0 * (b - a))});
  }
  if (t.rows.empty()) throw Error("maxgen_rerun: no variant pairs found");
  t.notes.push_back("Accuracy aggregated over every condition run under both "
                    "generation variants; prompts are identical across variants.");
  return t;
}

// --- restatement -------------------------------------------------------------

Table emit_restatement(const std::vector<GradedRecord>& graded,
                       const ReportSpec& spec) {
  Table t;
  t.id = "restatement";
  t.title = "Reasoning-trace restatement rates";
  t.columns = {"Model", "Layout", "Restate rate"};
  struct Counts {
    long restated = 0, with_trace = 0;
  };
  std::map<std::pair<std::string, std::string>, Counts> groups;
  for (const auto& g : graded) {
    if (g.key.gen_variant != spec.gen_variant) continue;
    if (spec.task_id && g.key.task_id != *spec.task_id) continue;
    if (!g.restated_target) continue;
    auto& c = groups[{g.key.model_id, g.key.layout}];
    c.with_trace += 1;
    if (*g.restated_target) c.restated += 1;
  }
  if (groups.empty())
    throw Error("restatement: no graded records carry a reasoning trace");
  for (const auto& [key, c] : groups) {
    t.rows.push_back({key.first, layout_display(key.second),
                      format_pct(c.restated, c.with_trace) + " (" +
                          std::to_string(c.restated) + "/" +
                          std::to_string(c.with_trace) + ")"});
  }
  t.notes.push_back("Denominator = responses carrying a reasoning trace.");
  return t;
}

// --- dispatch ----------------------------------------------------------------

Table emit(const std::vector<GradedRecord>& graded, const ReportSpec& spec) {
  switch (spec.table_kind) {
    case TableKind::drop_by_tier: return emit_drop_by_tier(graded, spec);
    case TableKind::ablation_8k: return emit_ablation_8k(graded, spec);
    case TableKind::filler_match: return emit_filler_match(graded, spec);
    case TableKind::seed_stability: return emit_seed_stability(graded, spec);
    case TableKind::qov2_drops: return emit_qov2_drops(graded, spec);
    case TableKind::neutral_controls: return emit_neutral_controls(graded, spec);
    case TableKind::filler_penalty: return emit_filler_penalty(graded, spec);
    case TableKind::maxgen_rerun: return emit_maxgen_rerun(graded, spec);
    case TableKind::restatement: return emit_restatement(graded, spec);
  }
  throw Error("bad TableKind");
}

}  // namespace poseval::report

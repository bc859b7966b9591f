#include "poseval/promptbuild.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace poseval::promptbuild {

using corpus::FillerItem;
using corpus::FillerPool;
using corpus::TaskInstance;

std::string to_string(LayoutKind k) {
  switch (k) {
    case LayoutKind::end: return "end";
    case LayoutKind::middle: return "middle";
    case LayoutKind::middle_twice: return "middle_twice";
    case LayoutKind::middle_dup: return "middle_dup";
  }
  throw Error("bad LayoutKind");
}

LayoutKind layout_from_string(const std::string& s) {
  if (s == "end") return LayoutKind::end;
  if (s == "middle") return LayoutKind::middle;
  if (s == "middle_twice") return LayoutKind::middle_twice;
  if (s == "middle_dup") return LayoutKind::middle_dup;
  throw Error("unknown layout: " + s);
}

int copy_count(LayoutKind k) {
  return (k == LayoutKind::end || k == LayoutKind::middle) ? 1 : 2;
}

void TokenBudget::validate() const {
  if (filler_tokens <= 0) throw Error("TokenBudget: filler_tokens must be > 0");
  if (tolerance_fraction <= 0.0 || tolerance_fraction > 0.05)
    throw Error("TokenBudget: tolerance_fraction must be in (0, 0.05]");
  if (tier_label.empty()) throw Error("TokenBudget: empty tier_label");
}

// --- tokenizers ----------------------------------------------------------

const std::string& ByteEstimator::id() const {
  static const std::string kId = "bytes4-v1";
  return kId;
}

long ByteEstimator::count(const std::string& text) const {
  return static_cast<long>((text.size() + 3) / 4);
}

OracleFileTokenizer::OracleFileTokenizer(const std::string& path) {
  const auto lines = util::split_lines(util::read_file(path));
  if (lines.empty()) throw Error("token oracle file is empty: " + path);
  nlohmann::json header = nlohmann::json::parse(lines[0]);
  id_ = header.at("tokenizer_id").get<std::string>();
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::string line = util::trim(lines[i]);
    if (line.empty()) continue;
    size_t sp = line.find(' ');
    if (sp == std::string::npos)
      throw Error(path + ":" + std::to_string(i + 1) + ": expected '<hash> <count>'");
    counts_[line.substr(0, sp)] = std::stol(line.substr(sp + 1));
  }
}

const std::string& OracleFileTokenizer::id() const { return id_; }

long OracleFileTokenizer::count(const std::string& text) const {
  if (text.empty()) return 0;
  auto it = counts_.find(util::content_hash(text));
  if (it == counts_.end())
    throw Error("token oracle (" + id_ + ") has no count for text hash " +
                util::content_hash(text));
  return it->second;
}

long estimate_tokens(const Tokenizer& tok, const std::string& text) {
  return tok.count(text);
}

// --- packing ---------------------------------------------------------------

FillerSequence fill_to_budget(const FillerPool& pool, const TokenBudget& budget,
                              uint64_t seed, const Tokenizer& tok) {
  budget.validate();
  if (pool.items.empty()) throw Error("fill_to_budget: empty pool");

  std::vector<size_t> order(pool.items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  util::seeded_shuffle(order, seed);

  std::vector<long> costs(pool.items.size());
  for (size_t i = 0; i < pool.items.size(); ++i)
    costs[i] = tok.count(pool.items[i].text);

  FillerSequence seq;
  long total = 0;
  size_t pos = 0;
  for (;;) {
    const size_t idx = order[pos % order.size()];
    const long cost = costs[idx];
    if (total + cost > budget.filler_tokens) break;
    FillerItem item = pool.items[idx];
    item.est_tokens = cost;
    seq.items.push_back(std::move(item));
    total += cost;
    ++pos;
  }
  if (seq.items.empty())
    throw Error("fill_to_budget: a single item (" +
                std::to_string(costs[order[0]]) + " tokens) exceeds the " +
                std::to_string(budget.filler_tokens) + "-token budget");
  const double floor =
      (1.0 - budget.tolerance_fraction) * static_cast<double>(budget.filler_tokens);
  if (static_cast<double>(total) < floor)
    throw Error("fill_to_budget: packed " + std::to_string(total) +
                " tokens; tier " + budget.tier_label + " requires at least " +
                std::to_string(static_cast<long>(std::ceil(floor))) +
                " (items too coarse for the tolerance)");
  seq.wrap_count = static_cast<int>((seq.items.size() - 1) / pool.items.size());
  return seq;
}

// --- assembly ----------------------------------------------------------

namespace {

constexpr const char* kBlockSeparator = "\n\n";

/// Interior boundary (items before / items after) whose preceding-token
/// fraction is closest to 0.5; ties break toward the earlier boundary.
size_t middle_boundary(const std::vector<FillerItem>& items, long total) {
  size_t best = 1;
  double best_diff = 2.0;
  long prefix = 0;
  for (size_t b = 1; b < items.size(); ++b) {
    prefix += items[b - 1].est_tokens;
    const double diff =
        std::abs(static_cast<double>(prefix) / static_cast<double>(total) - 0.5);
    if (diff < best_diff - 1e-12) {
      best_diff = diff;
      best = b;
    }
  }
  return best;
}

}  // namespace

AssembledPrompt assemble(const TaskInstance& target, const FillerSequence& filler,
                         LayoutKind layout, const TokenBudget& budget,
                         const corpus::TemplateSet& tpl, const Tokenizer& tok) {
  budget.validate();
  const bool is_middle = layout != LayoutKind::end;
  if (is_middle && filler.items.size() < 2)
    throw Error("assemble: middle layouts need at least 2 filler items");
  for (const auto& f : filler.items)
    if (f.id == target.id)
      throw Error("assemble: filler item " + f.id + " equals the target id");

  AssembledPrompt p;
  p.layout = layout;
  p.tier = budget;
  p.wrap_count = filler.wrap_count;
  p.template_id = tpl.id();
  p.tokenizer_id = tok.id();
  p.target_id = target.id;
  p.target_gold = target.gold;
  p.task_kind = target.kind;
  p.system_text = tpl.system_message();
  p.target_text = tpl.render_target(target);
  if (filler.items.empty()) {
    p.filler_kind = "none";
  } else {
    p.filler_kind = corpus::to_string(filler.items.front().kind);
    for (const auto& f : filler.items)
      if (f.kind != filler.items.front().kind)
        throw Error("assemble: mixed filler kinds in one sequence");
  }

  long filler_total = 0;
  for (const auto& f : filler.items) filler_total += f.est_tokens;

  size_t boundary = filler.items.size();  // end layout: all filler first
  if (is_middle) {
    boundary = middle_boundary(filler.items, filler_total);
    long prefix = 0;
    for (size_t i = 0; i < boundary; ++i) prefix += filler.items[i].est_tokens;
    p.preceding_filler_fraction =
        static_cast<double>(prefix) / static_cast<double>(filler_total);
    if (p.preceding_filler_fraction < 0.45 || p.preceding_filler_fraction > 0.55)
      throw Error("assemble: no filler boundary lands within [0.45, 0.55] "
                  "of the token mass (closest: " +
                  std::to_string(p.preceding_filler_fraction) + ")");
  } else {
    p.preceding_filler_fraction = 1.0;
  }
  p.insert_index = boundary;

  const std::string target_block = p.target_text + kBlockSeparator;
  const long target_block_tokens = tok.count(target_block);
  const std::string& instruction = tpl.instruction(target.kind);

  std::string& text = p.text;
  auto append_filler = [&](const FillerItem& f) {
    ManifestEntry e;
    e.filler_id = f.id;
    e.gold = f.gold;
    e.est_tokens = f.est_tokens;
    e.start = text.size();
    text += f.text;
    e.end = text.size();
    p.filler_manifest.push_back(std::move(e));
  };
  auto append_target = [&] {
    p.target_spans.emplace_back(text.size(), text.size() + p.target_text.size());
    text += target_block;
  };

  for (size_t i = 0; i < boundary; ++i) append_filler(filler.items[i]);
  if (is_middle) {
    append_target();
    if (layout == LayoutKind::middle_twice) append_target();
    for (size_t i = boundary; i < filler.items.size(); ++i)
      append_filler(filler.items[i]);
    if (layout == LayoutKind::middle_dup) append_target();
  } else {
    append_target();
  }
  text += instruction;

  p.est_total_tokens = filler_total +
                       static_cast<long>(p.target_spans.size()) * target_block_tokens +
                       tok.count(instruction);
  return p;
}

// --- validation ----------------------------------------------------------

LayoutReport layout_check(const AssembledPrompt& p) {
  LayoutReport report;
  auto violate = [&](const std::string& msg) { report.violations.push_back(msg); };

  const size_t expected_copies = static_cast<size_t>(copy_count(p.layout));
  if (p.target_spans.size() != expected_copies)
    violate("span count mismatch: layout " + to_string(p.layout) + " expects " +
            std::to_string(expected_copies) + ", metadata has " +
            std::to_string(p.target_spans.size()));

  // spans must extract the rendered target verbatim
  for (size_t i = 0; i < p.target_spans.size(); ++i) {
    const auto [start, end] = p.target_spans[i];
    if (end > p.text.size() || start > end) {
      violate("span " + std::to_string(i) + " out of range");
      continue;
    }
    if (p.text.compare(start, end - start, p.target_text) != 0)
      violate("span " + std::to_string(i) + " does not reproduce the target text");
  }
  for (size_t i = 1; i < p.target_spans.size(); ++i)
    if (p.target_spans[i].first < p.target_spans[i - 1].second)
      violate("spans overlap or are out of order");

  // independent occurrence count of the rendered target in the text
  if (!p.target_text.empty()) {
    size_t found = 0, pos = 0;
    while ((pos = p.text.find(p.target_text, pos)) != std::string::npos) {
      ++found;
      pos += 1;
    }
    if (found != expected_copies)
      violate("span count mismatch: text contains " + std::to_string(found) +
              " target copies, layout expects " + std::to_string(expected_copies));
  }

  // manifest blocks must tile their recorded offsets
  long filler_total = 0, prefix = 0;
  for (size_t i = 0; i < p.filler_manifest.size(); ++i) {
    const auto& e = p.filler_manifest[i];
    if (e.end > p.text.size() || e.start >= e.end) {
      violate("manifest entry " + std::to_string(i) + " has bad offsets");
      continue;
    }
    filler_total += e.est_tokens;
    if (!p.target_spans.empty() && e.end <= p.target_spans.front().first)
      prefix += e.est_tokens;
  }
  if (filler_total > 0) {
    const double fraction = static_cast<double>(prefix) / static_cast<double>(filler_total);
    if (std::abs(fraction - p.preceding_filler_fraction) > 1e-9)
      violate("preceding_filler_fraction mismatch: recorded " +
              std::to_string(p.preceding_filler_fraction) + ", re-derived " +
              std::to_string(fraction));
    if (p.layout != LayoutKind::end && (fraction < 0.45 || fraction > 0.55))
      violate("fraction out of band: " + std::to_string(fraction));
  }
  if (p.layout == LayoutKind::end &&
      std::abs(p.preceding_filler_fraction - 1.0) > 1e-12 &&
      !p.filler_manifest.empty())
    violate("end layout must record preceding_filler_fraction 1.0");

  return report;
}

}  // namespace poseval::promptbuild

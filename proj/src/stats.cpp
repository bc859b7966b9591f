#include "poseval/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

namespace poseval::stats {

std::string to_string(Sidedness s) {
  return s == Sidedness::one_sided ? "one_sided" : "two_sided";
}

std::string to_string(CiMethod m) { return m == CiMethod::wald ? "wald" : "wilson"; }

bool CellAxes::same_except_layout(const CellAxes& o) const {
  return model_id == o.model_id && task_id == o.task_id &&
         filler_kind == o.filler_kind && tier_label == o.tier_label &&
         gen_variant == o.gen_variant && seeds == o.seeds;
}

bool CellAxes::same_except_seed(const CellAxes& o) const {
  return model_id == o.model_id && task_id == o.task_id &&
         filler_kind == o.filler_kind && tier_label == o.tier_label &&
         layout == o.layout && gen_variant == o.gen_variant;
}

std::string CellAxes::display() const {
  std::string s = model_id + " " + task_id + " " + filler_kind + " " +
                  tier_label + " " + layout + " " + gen_variant + " seed";
  for (auto v : seeds) s += " " + std::to_string(v);
  return s;
}

double ConditionCell::accuracy() const {
  if (n <= 0) throw Error("ConditionCell: n must be > 0");
  return static_cast<double>(successes) / static_cast<double>(n);
}

// --- Fisher exact ----------------------------------------------------------

namespace {

double log_choose(long n, long k) {
  return std::lgamma(static_cast<double>(n + 1)) -
         std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

/// Kahan-compensated sum of exp(logs[i] - log_max), rescaled at the end.
double sum_exp(const std::vector<double>& logs, const std::vector<bool>& take) {
  double log_max = -HUGE_VAL;
  for (size_t i = 0; i < logs.size(); ++i)
    if (take[i]) log_max = std::max(log_max, logs[i]);
  if (log_max == -HUGE_VAL) return 0.0;
  double sum = 0.0, comp = 0.0;
  for (size_t i = 0; i < logs.size(); ++i) {
    if (!take[i]) continue;
    const double term = std::exp(logs[i] - log_max);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return std::exp(log_max) * sum;
}

// Log-space slack for "at most as probable": wide enough to absorb
// lgamma rounding on true ties, far below any real probability gap.
constexpr double kTieLogEps = 1e-11;

}  // namespace

double fisher_exact(long a_succ, long a_n, long b_succ, long b_n,
                    Sidedness sidedness) {
  if (a_n <= 0 || b_n <= 0) throw Error("fisher_exact: group sizes must be > 0");
  if (a_succ < 0 || a_succ > a_n || b_succ < 0 || b_succ > b_n)
    throw Error("fisher_exact: successes out of range");

  const long total = a_n + b_n;
  const long succ_total = a_succ + b_succ;
  const long lo = std::max(0L, succ_total - b_n);
  const long hi = std::min(a_n, succ_total);
  const double log_denom = log_choose(total, succ_total);

  std::vector<double> logp(static_cast<size_t>(hi - lo + 1));
  for (long k = lo; k <= hi; ++k)
    logp[static_cast<size_t>(k - lo)] =
        log_choose(a_n, k) + log_choose(b_n, succ_total - k) - log_denom;
  const double log_obs = logp[static_cast<size_t>(a_succ - lo)];

  std::vector<bool> take(logp.size(), false);
  if (sidedness == Sidedness::two_sided) {
    for (size_t i = 0; i < logp.size(); ++i)
      take[i] = logp[i] <= log_obs + kTieLogEps;
  } else {
    // direction of the observed difference, without division
    const long long d = static_cast<long long>(a_succ) * b_n -
                        static_cast<long long>(b_succ) * a_n;
    if (d == 0) return 1.0;
    if (d > 0) {
      for (long k = a_succ; k <= hi; ++k) take[static_cast<size_t>(k - lo)] = true;
    } else {
      for (long k = lo; k <= a_succ; ++k) take[static_cast<size_t>(k - lo)] = true;
    }
  }
  return std::clamp(sum_exp(logp, take), 0.0, 1.0);
}

double bonferroni_threshold(double alpha, long comparisons) {
  if (comparisons < 1) throw Error("bonferroni_threshold: m must be >= 1");
  if (alpha <= 0.0 || alpha >= 1.0)
    throw Error("bonferroni_threshold: alpha must be in (0, 1)");
  return alpha / static_cast<double>(comparisons);
}

double binomial_ci_halfwidth(double p_hat, long n, double level, CiMethod method) {
  if (n <= 0) throw Error("binomial_ci_halfwidth: n must be > 0");
  if (p_hat < 0.0 || p_hat > 1.0)
    throw Error("binomial_ci_halfwidth: p_hat out of [0, 1]");
  if (level <= 0.0 || level >= 1.0)
    throw Error("binomial_ci_halfwidth: level must be in (0, 1)");
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + level / 2.0);
  const double nn = static_cast<double>(n);
  if (method == CiMethod::wald)
    return z * std::sqrt(p_hat * (1.0 - p_hat) / nn);
  const double z2 = z * z;
  return (z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn))) /
         (1.0 + z2 / nn);
}

DropResult compute_drop(const ConditionCell& end_cell,
                        const ConditionCell& mid_cell) {
  if (!end_cell.axes.same_except_layout(mid_cell.axes))
    throw Error("compute_drop: cells differ on axes other than layout (" +
                end_cell.axes.display() + " vs " + mid_cell.axes.display() + ")");
  if (end_cell.axes.layout == mid_cell.axes.layout)
    throw Error("compute_drop: cells share the same layout");
  DropResult d;
  d.end_cell = end_cell;
  d.mid_cell = mid_cell;
  d.drop_pp = 100.0 * (mid_cell.accuracy() - end_cell.accuracy());
  d.p_two_sided = fisher_exact(end_cell.successes, end_cell.n,
                               mid_cell.successes, mid_cell.n, Sidedness::two_sided);
  d.p_one_sided = fisher_exact(end_cell.successes, end_cell.n,
                               mid_cell.successes, mid_cell.n, Sidedness::one_sided);
  return d;
}

ConditionCell pool_seeds(const std::vector<ConditionCell>& cells) {
  if (cells.empty()) throw Error("pool_seeds: no cells");
  ConditionCell pooled = cells.front();
  for (size_t i = 1; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (!pooled.axes.same_except_seed(c.axes))
      throw Error("pool_seeds: axis mismatch between " + pooled.axes.display() +
                  " and " + c.axes.display());
    pooled.successes += c.successes;
    pooled.n += c.n;
    pooled.error_count += c.error_count;
    for (auto s : c.axes.seeds) pooled.axes.seeds.push_back(s);
  }
  std::sort(pooled.axes.seeds.begin(), pooled.axes.seeds.end());
  pooled.axes.seeds.erase(
      std::unique(pooled.axes.seeds.begin(), pooled.axes.seeds.end()),
      pooled.axes.seeds.end());
  return pooled;
}

bool CellFilter::matches(const runner::ConditionKey& key) const {
  if (model_id && *model_id != key.model_id) return false;
  if (task_id && *task_id != key.task_id) return false;
  if (filler_kind && *filler_kind != key.filler_kind) return false;
  if (tier_label && *tier_label != key.tier_label) return false;
  if (layout && *layout != key.layout) return false;
  if (gen_variant && *gen_variant != key.gen_variant) return false;
  if (seed && *seed != key.seed) return false;
  return true;
}

namespace {

CellAxes axes_of(const runner::ConditionKey& key) {
  CellAxes a;
  a.model_id = key.model_id;
  a.task_id = key.task_id;
  a.filler_kind = key.filler_kind;
  a.tier_label = key.tier_label;
  a.layout = key.layout;
  a.gen_variant = key.gen_variant;
  a.seeds = {key.seed};
  return a;
}

bool axes_equal(const CellAxes& a, const CellAxes& b) {
  return a.same_except_layout(b) && a.layout == b.layout;
}

void add_record(ConditionCell& cell, const scoring::GradedRecord& g) {
  cell.n += 1;
  if (g.correct) cell.successes += 1;
  if (g.error_flag) cell.error_count += 1;
}

}  // namespace

ConditionCell aggregate(const std::vector<scoring::GradedRecord>& records,
                        const CellFilter& filter) {
  ConditionCell cell;
  bool first = true;
  for (const auto& g : records) {
    if (!filter.matches(g.key)) continue;
    const CellAxes axes = axes_of(g.key);
    if (first) {
      cell.axes = axes;
      first = false;
    } else if (!axes_equal(cell.axes, axes)) {
      throw Error("aggregate: selection mixes cells " + cell.axes.display() +
                  " and " + axes.display());
    }
    add_record(cell, g);
  }
  if (first) throw Error("aggregate: empty selection");
  return cell;
}

std::vector<ConditionCell> aggregate_all(
    const std::vector<scoring::GradedRecord>& records) {
  auto tie_of = [](const CellAxes& a) {
    return std::tie(a.model_id, a.task_id, a.filler_kind, a.tier_label,
                    a.layout, a.gen_variant, a.seeds);
  };
  std::vector<ConditionCell> cells;
  for (const auto& g : records) {
    const CellAxes axes = axes_of(g.key);
    auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& c) {
      return axes_equal(c.axes, axes);
    });
    if (it == cells.end()) {
      ConditionCell cell;
      cell.axes = axes;
      cells.push_back(std::move(cell));
      it = std::prev(cells.end());
    }
    add_record(*it, g);
  }
  std::sort(cells.begin(), cells.end(), [&](const auto& a, const auto& b) {
    return tie_of(a.axes) < tie_of(b.axes);
  });
  return cells;
}

SweepResult significance_sweep(std::vector<DropResult> drops, double alpha,
                               long m, Sidedness sidedness) {
  SweepResult result;
  result.sidedness = sidedness;
  const long comparisons = m > 0 ? m : static_cast<long>(drops.size());
  result.threshold = bonferroni_threshold(alpha, std::max(1L, comparisons));
  for (auto& d : drops) {
    const double p =
        sidedness == Sidedness::one_sided ? d.p_one_sided : d.p_two_sided;
    d.significant = p < result.threshold;
    if (d.significant) ++result.significant_count;
  }
  result.drops = std::move(drops);
  return result;
}

}  // namespace poseval::stats

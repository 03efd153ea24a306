#include <algorithm>
#include <map>
#include <numeric>

#include "rhsim/characterize/characterize.hpp"
#include "rhsim/common.hpp"

namespace rhsim::characterize {

namespace {

/// Every logical row on the wordlines directly beside `row`'s.
std::vector<std::uint32_t> predicted_neighbors(const dram::RowMapping& m, std::uint32_t row) {
  std::vector<std::uint32_t> out;
  const std::int64_t w = m.wordline(row);
  for (std::int64_t d : {-1, 1}) {
    const std::int64_t n = w + d;
    if (n < 0 || n >= m.wordlines()) continue;
    const auto wl = static_cast<std::uint32_t>(n);
    for (std::uint32_t s = 0; s < m.rows_on_wordline(wl); ++s) out.push_back(m.to_logical({wl, s}));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Rows ordered by descending flip count (ties by row), zero counts dropped.
std::vector<std::uint32_t> ranked(const std::vector<std::uint64_t>& counts) {
  std::vector<std::uint32_t> rows;
  for (std::uint32_t r = 0; r < counts.size(); ++r) {
    if (counts[r] > 0) rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [&](auto a, auto b) { return counts[a] > counts[b]; });
  return rows;
}

bool top_matches(const std::vector<std::uint32_t>& rank, const std::vector<std::uint32_t>& expected) {
  if (rank.size() < expected.size()) return false;
  std::vector<std::uint32_t> top(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(expected.size()));
  std::sort(top.begin(), top.end());
  return top == expected;
}

/// Orders rows along a path assembled greedily from the heaviest flip-count
/// edges (each row keeps at most two, no cycles). Empty unless the result is
/// a single path over every row.
std::vector<std::uint32_t> chain(const std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>>& top,
                                 std::uint32_t rows) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> weight;
  for (std::uint32_t a = 0; a < rows; ++a) {
    for (const auto& [b, n] : top[a]) weight[{std::min(a, b), std::max(a, b)}] += n;
  }
  std::vector<std::pair<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>>> edges;
  for (const auto& [e, w] : weight) edges.push_back({w, e});
  std::stable_sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) { return x.first > y.first; });

  std::vector<std::uint32_t> parent(rows);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::vector<std::uint32_t>> adj(rows);
  std::uint32_t added = 0;
  for (const auto& [w, e] : edges) {
    const auto [a, b] = e;
    if (adj[a].size() == 2 || adj[b].size() == 2 || find(a) == find(b)) continue;
    parent[find(a)] = find(b);
    adj[a].push_back(b);
    adj[b].push_back(a);
    if (++added == rows - 1) break;
  }
  if (added != rows - 1) return {};
  std::uint32_t start = 0;
  while (adj[start].size() != 1) ++start;
  std::vector<std::uint32_t> order{start};
  std::uint32_t prev = start;
  std::uint32_t cur = adj[start][0];
  while (true) {
    order.push_back(cur);
    if (adj[cur].size() == 1) break;
    const auto next = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
    prev = cur;
    cur = next;
  }
  return order;
}

}  // namespace

MappingHypothesis reverse_engineer_mapping(ChipPort& chip, const ReverseOptions& opts) {
  const std::uint32_t rows = chip.rows();
  if (rows < 3) throw RangeError("too few rows to infer adjacency");
  if (opts.patterns.empty()) throw ConfigError("no data patterns given");
  std::uint64_t acts = opts.activations;
  if (acts == 0) {
    acts = static_cast<std::uint64_t>(32.0e6 / chip.timing().t_rc_ns);
    while (acts > 0 && !fault::fits_core_loop(chip.timing(), acts)) --acts;
  }
  std::vector<std::uint32_t> probes = opts.rows;
  if (probes.empty()) {
    probes.resize(rows);
    std::iota(probes.begin(), probes.end(), 0u);
  }

  std::vector<std::vector<std::uint32_t>> rank(rows);
  std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>> top(rows);
  std::vector<std::uint32_t> conclusive;
  MappingHypothesis h;
  for (auto r : probes) {
    if (r >= rows) throw RangeError("probe row out of range");
    std::vector<std::uint64_t> counts(rows, 0);
    for (auto dp : opts.patterns) {
      chip.write_pattern(dp, r);
      chip.set_refresh(false);
      chip.hammer(r, std::nullopt, acts);
      chip.set_refresh(true);
      // Read everything first: restoring a row rewrites its whole wordline.
      std::vector<std::uint32_t> dirty;
      for (std::uint32_t x = 0; x < rows; ++x) {
        const auto n = chip.read_row(x).size();
        counts[x] += n;
        if (n > 0) dirty.push_back(x);
      }
      for (auto x : dirty) chip.restore_row(x);
    }
    counts[r] = 0;
    rank[r] = ranked(counts);
    for (std::size_t i = 0; i < std::min<std::size_t>(4, rank[r].size()); ++i) top[r].push_back({rank[r][i], counts[rank[r][i]]});
    if (rank[r].empty()) {
      h.inconclusive.push_back(r);
    } else {
      conclusive.push_back(r);
    }
  }
  if (conclusive.empty()) return h;

  auto agreement_of = [&](const dram::RowMapping& m) {
    std::size_t ok = 0;
    for (auto r : conclusive) ok += top_matches(rank[r], predicted_neighbors(m, r)) ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(conclusive.size());
  };
  std::vector<dram::RowMapping> candidates = {dram::RowMapping::identity(rows)};
  if (rows % 2 == 0) {
    candidates.push_back(dram::RowMapping::paired_wordline(rows, 0));
    candidates.push_back(dram::RowMapping::paired_wordline(rows, 1));
  }
  double best = -1.0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double a = agreement_of(candidates[i]);
    if (a > best) {
      best = a;
      best_i = i;
    }
  }

  std::optional<dram::RowMapping> chosen;
  if (best >= 0.9) {
    chosen = candidates[best_i];
  } else if (probes.size() == rows) {
    const auto order = chain(top, rows);
    if (!order.empty()) {
      std::vector<std::uint32_t> table(rows);
      for (std::uint32_t w = 0; w < rows; ++w) table[order[w]] = w;
      chosen = dram::RowMapping::from_table(std::move(table));
    }
  }

  if (chosen) {
    h.kind = chosen->kind();
    h.pair_phase = chosen->pair_phase();
    h.agreement = agreement_of(*chosen);
    for (auto r : conclusive) h.neighbors[r] = predicted_neighbors(*chosen, r);
    h.mapping = chosen;
  } else {
    h.kind = dram::MappingKind::Permuted;
    for (auto r : conclusive) {
      const auto& rk = rank[r];
      h.neighbors[r] = {rk.begin(), rk.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(2, rk.size()))};
    }
  }
  return h;
}

}  // namespace rhsim::characterize

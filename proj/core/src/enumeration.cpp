/**
 * Exact labelled-state distributions by breadth-first expansion.
 */

#include "pavd/enumeration.hpp"

#include <cstddef>

#include "pavd/errors.hpp"

namespace pavd {
namespace {

struct State {
  std::vector<std::int32_t> parent;  // index label-1; -1 unassigned, 0 root
  std::vector<std::uint8_t> alive;
};

std::string encode(const State& s) {
  std::string out;
  for (std::size_t i = 0; i < s.parent.size(); ++i) {
    if (i) out += '|';
    if (s.parent[i] < 0) {
      out += '.';
    } else {
      out += std::to_string(s.parent[i]);
      out += s.alive[i] ? '+' : '-';
    }
  }
  return out;
}

State decode(const std::string& key, std::int64_t budget) {
  State s;
  s.parent.assign(static_cast<std::size_t>(budget), -1);
  s.alive.assign(static_cast<std::size_t>(budget), 0);
  std::size_t label = 0;
  std::size_t pos = 0;
  while (pos < key.size() && label < s.parent.size()) {
    std::size_t end = key.find('|', pos);
    if (end == std::string::npos) end = key.size();
    const std::string tok = key.substr(pos, end - pos);
    if (tok != ".") {
      const char flag = tok.back();
      s.parent[label] = static_cast<std::int32_t>(std::stol(tok.substr(0, tok.size() - 1)));
      s.alive[label] = flag == '+' ? 1 : 0;
    }
    ++label;
    pos = end + 1;
  }
  return s;
}

}  // namespace

std::string state_key(std::int64_t label_budget,
                      const std::function<std::int64_t(std::int64_t)>& parent_of,
                      const std::function<bool(std::int64_t)>& alive_of) {
  std::string out;
  for (std::int64_t label = 1; label <= label_budget; ++label) {
    if (label > 1) out += '|';
    const std::int64_t p = parent_of(label);
    if (p < 0) {
      out += '.';
    } else {
      out += std::to_string(p);
      out += alive_of(label) ? '+' : '-';
    }
  }
  return out;
}

ExactDistribution exact_state_distribution(const RateModel& model,
                                           std::int64_t steps) {
  if (steps < 0 || steps > 12) {
    throw OutOfRangeError("exact_state_distribution: steps must be in [0, 12]");
  }
  const std::int64_t budget = steps + 1;
  ExactDistribution out;
  out.label_budget = budget;

  State root;
  root.parent.assign(static_cast<std::size_t>(budget), -1);
  root.alive.assign(static_cast<std::size_t>(budget), 0);
  root.parent[0] = 0;
  root.alive[0] = 1;
  std::map<std::string, double> layer{{encode(root), 1.0}};
  out.by_step.push_back(layer);

  std::vector<std::int32_t> degree(static_cast<std::size_t>(budget) + 1, 0);
  for (std::int64_t n = 0; n < steps; ++n) {
    std::map<std::string, double> next;
    for (const auto& [key, prob] : layer) {
      State s = decode(key, budget);
      // Degrees count children: label j contributes to its parent.
      std::fill(degree.begin(), degree.end(), 0);
      for (std::size_t i = 0; i < s.parent.size(); ++i) {
        if (s.parent[i] > 0) degree[static_cast<std::size_t>(s.parent[i])] += 1;
      }
      double total = 0.0;
      for (std::size_t i = 0; i < s.alive.size(); ++i) {
        if (s.alive[i]) total += model.total_rate(degree[i + 1]);
      }
      if (total <= 0.0) {  // dead state: absorbing
        next[key] += prob;
        continue;
      }
      for (std::size_t i = 0; i < s.alive.size(); ++i) {
        if (!s.alive[i]) continue;
        const auto [b, d] = model.rates(degree[i + 1]);
        if (d > 0.0) {
          State dead = s;
          dead.alive[i] = 0;
          next[encode(dead)] += prob * d / total;
        }
        State born = s;
        born.parent[static_cast<std::size_t>(n + 1)] =
            static_cast<std::int32_t>(i + 1);
        born.alive[static_cast<std::size_t>(n + 1)] = 1;
        next[encode(born)] += prob * b / total;
      }
    }
    layer = std::move(next);
    out.by_step.push_back(layer);
  }
  return out;
}

}  // namespace pavd

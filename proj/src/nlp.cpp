#include "berth/nlp.hpp"

#include <stdexcept>

namespace berth {

std::string NlpProblem::describe_row(const std::vector<RowGroup>& groups, int row) {
  for (const RowGroup& g : groups) {
    if (row >= g.begin && row < g.begin + g.count) {
      return g.name + "[" + std::to_string(row - g.begin) + "]";
    }
  }
  return "?";
}

namespace {

void check_cover(const std::vector<RowGroup>& groups, int m, const char* what) {
  std::vector<int> hits(static_cast<std::size_t>(m), 0);
  for (const RowGroup& g : groups) {
    if (g.begin < 0 || g.count < 0 || g.begin + g.count > m) {
      throw std::invalid_argument(std::string(what) + " row group '" + g.name + "' out of range");
    }
    for (int i = g.begin; i < g.begin + g.count; ++i) ++hits[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < m; ++i) {
    if (hits[static_cast<std::size_t>(i)] != 1) {
      throw std::invalid_argument(std::string(what) + " row " + std::to_string(i) +
                                  " is not covered exactly once by the row metadata");
    }
  }
}

}  // namespace

void NlpProblem::check() const {
  if (n <= 0 || m_eq < 0 || m_in < 0) throw std::invalid_argument("nlp: bad dimensions");
  if (!objective) throw std::invalid_argument("nlp: missing objective");
  if (m_eq > 0 && !equalities) throw std::invalid_argument("nlp: missing equality evaluator");
  if (m_in > 0 && !inequalities) throw std::invalid_argument("nlp: missing inequality evaluator");
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("nlp: bound size mismatch");
  if (x_scale.size() != 0 && x_scale.size() != n) throw std::invalid_argument("nlp: scale size mismatch");
  for (int i = 0; i < n; ++i) {
    if (!(lower[i] <= upper[i])) {
      throw std::invalid_argument("nlp: empty bound interval for variable " + std::to_string(i));
    }
  }
  check_cover(eq_groups, m_eq, "equality");
  check_cover(in_groups, m_in, "inequality");
}

}  // namespace berth

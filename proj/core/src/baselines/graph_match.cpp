#include "coopalign/baselines/graph_match.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coopalign/common/error.hpp"
#include "coopalign/pgc/kabsch.hpp"

namespace coopalign::baselines {

void GraphMatchConfig::validate() const {
  if (!(edge_consistency_eps > 0.0)) throw InvalidArgument("graph match: edge_consistency_eps must be positive");
  if (min_consensus < 3) throw InvalidArgument("graph match: min_consensus must be >= 3");
}

std::optional<GraphMatch> graph_match_align(const BoxObservation& ego, const BoxObservation& nbr,
                                            const GraphMatchConfig& cfg) {
  cfg.validate();
  const std::size_t n_ego = ego.boxes.size();
  const std::size_t n_nbr = nbr.boxes.size();
  if (n_ego < static_cast<std::size_t>(cfg.min_consensus) || n_nbr < static_cast<std::size_t>(cfg.min_consensus)) {
    return std::nullopt;
  }

  auto pairwise = [](const std::vector<detection::RotatedBox3D>& boxes) {
    const std::size_t n = boxes.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k < n; ++k) {
        d[i * n + k] = d[k * n + i] = (boxes[i].center() - boxes[k].center()).norm();
      }
    }
    return d;
  };
  const auto d_ego = pairwise(ego.boxes);
  const auto d_nbr = pairwise(nbr.boxes);

  // Candidate c = (i, j) is stored at index i * n_nbr + j.
  const std::size_t n_cand = n_ego * n_nbr;
  std::vector<std::uint8_t> agree(n_cand * n_cand, 0);
  std::vector<std::size_t> degree(n_cand, 0);
  for (std::size_t p = 0; p < n_cand; ++p) {
    const std::size_t i = p / n_nbr, j = p % n_nbr;
    for (std::size_t q = p + 1; q < n_cand; ++q) {
      const std::size_t k = q / n_nbr, l = q % n_nbr;
      if (i == k || j == l) continue;
      if (std::abs(d_ego[i * n_ego + k] - d_nbr[j * n_nbr + l]) < cfg.edge_consistency_eps) {
        agree[p * n_cand + q] = agree[q * n_cand + p] = 1;
        ++degree[p];
        ++degree[q];
      }
    }
  }

  std::vector<std::size_t> order(n_cand);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });

  std::vector<std::size_t> best;
  std::vector<std::size_t> current;
  std::vector<std::uint8_t> ego_used(n_ego), nbr_used(n_nbr);
  for (std::size_t seed : order) {
    // A set grown from `seed` only holds candidates that agree with it.
    if (degree[seed] + 1 <= best.size()) break;
    current.assign(1, seed);
    std::fill(ego_used.begin(), ego_used.end(), 0);
    std::fill(nbr_used.begin(), nbr_used.end(), 0);
    ego_used[seed / n_nbr] = nbr_used[seed % n_nbr] = 1;
    for (std::size_t q : order) {
      if (ego_used[q / n_nbr] || nbr_used[q % n_nbr]) continue;
      const bool fits = std::all_of(current.begin(), current.end(),
                                    [&](std::size_t m) { return agree[m * n_cand + q] != 0; });
      if (!fits) continue;
      current.push_back(q);
      ego_used[q / n_nbr] = nbr_used[q % n_nbr] = 1;
    }
    if (current.size() > best.size()) best = current;
  }

  if (best.size() < static_cast<std::size_t>(cfg.min_consensus)) return std::nullopt;

  GraphMatch match;
  std::vector<Eigen::Vector3d> from_nbr, to_ego;
  std::sort(best.begin(), best.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(a / n_nbr, a % n_nbr) < std::pair(b / n_nbr, b % n_nbr);
  });
  for (std::size_t c : best) {
    match.matched_pairs.emplace_back(c / n_nbr, c % n_nbr);
    to_ego.push_back(ego.boxes[c / n_nbr].center());
    from_nbr.push_back(nbr.boxes[c % n_nbr].center());
  }
  try {
    match.pose = pgc::kabsch_solve(from_nbr, to_ego);
  } catch (const DegenerateSample&) {
    return std::nullopt;
  }
  return match;
}

std::string encode_box_message(const BoxObservation& obs) { return detection::encode_boxes_json(obs.boxes); }

}  // namespace coopalign::baselines

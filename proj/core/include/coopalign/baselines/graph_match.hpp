#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coopalign/detection/box.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign::baselines {

/// Boxes seen by one agent, in that agent's frame.
struct BoxObservation {
  std::vector<detection::RotatedBox3D> boxes;
};

struct GraphMatchConfig {
  double edge_consistency_eps = 0.3;  ///< meters
  int min_consensus = 3;

  void validate() const;
};

struct GraphMatch {
  Pose pose;  ///< maps the neighbor frame into the ego frame
  std::vector<std::pair<std::size_t, std::size_t>> matched_pairs;  ///< (ego index, neighbor index)
};

/// Greedy distance-consistency graph matching over box centers. Every
/// (ego box, neighbor box) pair is a candidate; two candidates agree when their
/// center-to-center distances differ by less than edge_consistency_eps. The
/// largest mutually consistent one-to-one set is grown greedily from each seed
/// (seeds ordered by descending agreement count, then index). std::nullopt
/// signals missing consensus: fewer than min_consensus matches, or matched
/// centers too degenerate for a rigid solve.
std::optional<GraphMatch> graph_match_align(const BoxObservation& ego, const BoxObservation& nbr,
                                            const GraphMatchConfig& cfg);

/// Box message: JSON list of 7-float boxes.
std::string encode_box_message(const BoxObservation& obs);

}  // namespace coopalign::baselines

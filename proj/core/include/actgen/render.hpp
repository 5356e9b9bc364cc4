#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "actgen/data.hpp"

namespace actgen {

/// Bone list for 2D stick-figure rendering; joint j uses coordinates
/// (2j, 2j+1) of a pose, so rendering requires d = 2 * joint count.
struct SkeletonTopology {
  std::vector<std::pair<std::size_t, std::size_t>> bones;
};

/// Topology file: a JSON array of [i, j] joint index pairs.
SkeletonTopology load_topology(const std::string& path);

/// One SVG strip per sequence: a fixed-size box per frame, frames left to
/// right, joints as dots and bones as lines, the whole sequence sharing one
/// coordinate scale.
std::string render_svg(const ActionSequence& sequence, const SkeletonTopology& topology);

/// Trajectory CSV: header "t,c0,...,c{d-1}", one row per frame.
std::string render_csv(const ActionSequence& sequence);

}  // namespace actgen

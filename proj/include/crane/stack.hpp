#ifndef CRANE_STACK_HPP
#define CRANE_STACK_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "crane/spatial.hpp"

namespace crane {

struct ProfileParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProfileValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleCorridorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StackInterval {
  double start = 0.0;
  double end = 0.0;
  double height = 0.0;
};

// Piecewise-constant loaded-container profile along the loading site.
struct StackProfile {
  double rail_height = 0.75;
  double ground_clearance = 0.15;
  std::vector<StackInterval> stacks;  // disjoint, sorted by start

  void validate() const;
};

// Per-grid-point payload depth bounds (downward-positive, so "upper" is
// the stack-limited depth and "lower" the ground clearance).
struct CorridorBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

// Stack height at x_p; 0 outside all stacks, max of adjacent values at a
// shared boundary point.
double height_at(const StackProfile& profile, double x_p);

// Bounds at every grid point, using the max stack height over the closed
// union of the grid intervals adjacent to the point. This keeps a
// linearly interpolated trajectory satisfying the point bounds from
// cutting a stack corner that falls between grid points.
CorridorBounds corridor_bounds(const StackProfile& profile, const SpatialGrid& grid);

// Parse and validate a profile document (JSON text with keys rail_height,
// ground_clearance, stacks; unknown keys rejected).
StackProfile parse_profile(const std::string& text);

}  // namespace crane

#endif  // CRANE_STACK_HPP

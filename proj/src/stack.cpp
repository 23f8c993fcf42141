#include "crane/stack.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace crane {

void StackProfile::validate() const {
  if (!(rail_height > 0.0))
    throw ProfileValidationError("profile: rail_height must be positive");
  if (!(ground_clearance >= 0.0))
    throw ProfileValidationError("profile: ground_clearance must be nonnegative");
  if (!(ground_clearance <= rail_height))
    throw ProfileValidationError("profile: ground_clearance exceeds rail height");
  const StackInterval* prev = nullptr;
  for (const auto& s : stacks) {
    if (!(s.end > s.start))
      throw ProfileValidationError("profile: stack end must exceed start");
    if (s.height < 0.0)
      throw ProfileValidationError("profile: negative stack height");
    if (s.height > rail_height)
      throw ProfileValidationError("profile: stack height exceeds rail height");
    if (prev && s.start < prev->end)
      throw ProfileValidationError("profile: stack intervals overlap");
    if (prev && s.start < prev->start)
      throw ProfileValidationError("profile: stacks not sorted by start");
    prev = &s;
  }
}

double height_at(const StackProfile& profile, double x_p) {
  double h = 0.0;
  for (const auto& s : profile.stacks) {
    if (x_p >= s.start && x_p <= s.end) h = std::max(h, s.height);
  }
  return h;
}

namespace {

// Max stack height over the closed interval [a, b].
double max_height_on(const StackProfile& profile, double a, double b) {
  double h = 0.0;
  for (const auto& s : profile.stacks) {
    if (s.end >= a && s.start <= b) h = std::max(h, s.height);
  }
  return h;
}

}  // namespace

CorridorBounds corridor_bounds(const StackProfile& profile, const SpatialGrid& grid) {
  grid.validate();
  profile.validate();
  CorridorBounds cb;
  cb.lower.resize(grid.k + 1);
  cb.upper.resize(grid.k + 1);
  for (int i = 0; i <= grid.k; ++i) {
    const double a = grid.point(std::max(0, i - 1));
    const double b = grid.point(std::min(grid.k, i + 1));
    cb.lower[i] = profile.ground_clearance;
    cb.upper[i] = profile.rail_height - max_height_on(profile, a, b);
    if (cb.lower[i] > cb.upper[i])
      throw InfeasibleCorridorError("corridor infeasible at grid point " + std::to_string(i));
  }
  return cb;
}

StackProfile parse_profile(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProfileParseError(std::string("profile: ") + e.what());
  }
  if (!j.is_object()) throw ProfileParseError("profile: document root must be an object");
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (key != "rail_height" && key != "ground_clearance" && key != "stacks")
      throw ProfileParseError("profile: unknown key '" + key + "'");
  }
  StackProfile p;
  try {
    p.rail_height = j.at("rail_height").get<double>();
    p.ground_clearance = j.value("ground_clearance", 0.0);
    if (j.contains("stacks")) {
      for (const auto& js : j.at("stacks")) {
        for (const auto& [key, val] : js.items()) {
          (void)val;
          if (key != "start" && key != "end" && key != "height")
            throw ProfileParseError("profile: unknown stack key '" + key + "'");
        }
        StackInterval s;
        s.start = js.at("start").get<double>();
        s.end = js.at("end").get<double>();
        s.height = js.at("height").get<double>();
        p.stacks.push_back(s);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProfileParseError(std::string("profile: ") + e.what());
  }
  std::sort(p.stacks.begin(), p.stacks.end(),
            [](const StackInterval& a, const StackInterval& b) { return a.start < b.start; });
  p.validate();
  return p;
}

}  // namespace crane

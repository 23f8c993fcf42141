#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crane/harness.hpp"

using namespace crane;
namespace fs = std::filesystem;

namespace {

const fs::path kDataDir = CRANE_DATA_DIR;

std::string profile_ref_config(const std::string& extra = "") {
  return std::string(R"({"profile": ")") + (kDataDir / "example_profile.json").string() + "\"" +
         extra + "}";
}

}  // namespace

TEST_CASE("load bundled example config") {
  const RunConfig cfg = load_config(kDataDir / "example_config.json");
  CHECK(cfg.params.m1 == 1.0);
  CHECK(cfg.params.m2 == 0.5);
  CHECK(cfg.params.gamma_t == 0.8);
  CHECK(cfg.grid.k == 50);
  CHECK(cfg.grid.xpf == 1.0);
  CHECK(cfg.profile.rail_height == 0.75);
  CHECK(cfg.profile.stacks.size() == 3);
  CHECK(cfg.state_bounds.l_max == 0.75);
  CHECK(cfg.input_bounds.fh_max == 8.0);
  REQUIRE(cfg.boundary.initial[sx::y_p].has_value());
  CHECK(*cfg.boundary.initial[sx::y_p] == 0.55);
  CHECK(!cfg.boundary.final[sx::t].has_value());
  CHECK(!cfg.boundary.final[sx::e_t].has_value());
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("nope", "."), ConfigError);
  CHECK_THROWS_AS(parse_config("{}", "."), ConfigError);  // profile required
  CHECK_THROWS_AS(parse_config(profile_ref_config(R"(, "typo": 1)"), "."), ConfigError);
  CHECK_THROWS_AS(parse_config(profile_ref_config(R"(, "crane": {"mass": 1})"), "."),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"profile": "/does/not/exist.json"})", "."), ConfigError);
  CHECK_THROWS_AS(
      parse_config(profile_ref_config(R"(, "boundary": {"initial": [1, 2, 3]})"), "."),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(profile_ref_config(R"(, "boundary": {"initial":
        [0, 0, 0, 0, 0, 0, 0, 0, 0, "pinned"]})"),
                   "."),
      ConfigError);
  // Physically invalid parameters surface as ConfigError too.
  CHECK_THROWS_AS(parse_config(profile_ref_config(R"(, "crane": {"m2": -1})"), "."),
                  ConfigError);
}

TEST_CASE("profile path resolves relative to the config directory") {
  const RunConfig cfg = parse_config(R"({"profile": "example_profile.json"})", kDataDir);
  CHECK(cfg.profile.stacks.size() == 3);
}

TEST_CASE("y_min overrides the profile ground clearance") {
  const RunConfig cfg =
      parse_config(profile_ref_config(R"(, "bounds": {"y_min": 0.22})"), ".");
  CHECK(cfg.profile.ground_clearance == 0.22);
}

TEST_CASE("boundary entries accept the free marker") {
  const RunConfig cfg = parse_config(
      profile_ref_config(R"(, "boundary": {"final": ["free", 0, 0.5, 0, 0.5, 0, 0, 0, "free", "free"]})"),
      ".");
  CHECK(!cfg.boundary.final[sx::t].has_value());
  CHECK(*cfg.boundary.final[sx::y_p] == 0.5);
}

TEST_CASE("make_ocp carries alpha and validates") {
  const RunConfig cfg = load_config(kDataDir / "example_config.json");
  const OcpSpec spec = make_ocp(cfg, 0.25);
  CHECK(spec.alpha == 0.25);
  CHECK(spec.grid.k == cfg.grid.k);
  CHECK_THROWS_AS(make_ocp(cfg, 1.5), std::domain_error);
}

TEST_CASE("alpha grid is logit spaced") {
  const auto g = alpha_grid(0.01, 0.99, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == doctest::Approx(0.01));
  CHECK(g.back() == doctest::Approx(0.99));
  CHECK(g[2] == doctest::Approx(0.5));
  // Symmetric in the logit: g[1] and g[3] are complements.
  CHECK(g[1] == doctest::Approx(1.0 - g[3]));
  for (size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK_THROWS_AS(alpha_grid(0.0, 0.5, 3), std::domain_error);
  CHECK_THROWS_AS(alpha_grid(0.5, 0.1, 3), std::domain_error);
  CHECK_THROWS_AS(alpha_grid(0.1, 0.9, 1), std::domain_error);
}

TEST_CASE("solution JSON round trip") {
  DiscretizedSolution sol;
  sol.grid = {0.0, 1.0, 2};
  sol.alpha = 0.3;
  sol.status = "converged";
  sol.iterations = 9;
  sol.states.resize(3);
  for (int i = 0; i <= 2; ++i) {
    SpatialState s{};
    s[sx::t] = 0.5 * i;
    s[sx::x_p_dot] = 1.0 + 0.1 * i;
    s[sx::y_p] = 0.5;
    s[sx::l] = 0.5;
    s[sx::e_t] = 0.01 * i;
    sol.states[i] = s;
  }
  sol.controls = {{0.1, 4.0}, {-0.1, 5.0}};
  sol.eta_t = {{1.0, 2.0}, {3.0, 4.0}};
  sol.eta_h = {{5.0, 6.0}, {7.0, 8.0}};
  sol.objective = mayer_objective(sol.states.back(), sol.alpha);

  StackProfile profile;
  profile.rail_height = 0.75;
  profile.ground_clearance = 0.15;
  profile.stacks = {{0.2, 0.4, 0.3}};

  const std::string text = solution_to_json(sol, profile);
  StackProfile profile2;
  const DiscretizedSolution sol2 = solution_from_json(text, &profile2);
  CHECK(sol2.alpha == sol.alpha);
  CHECK(sol2.grid.k == 2);
  CHECK(sol2.status == "converged");
  CHECK(sol2.iterations == 9);
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j < kNumSpatialStates; ++j) CHECK(sol2.states[i][j] == sol.states[i][j]);
  CHECK(sol2.controls[1].f_h == 5.0);
  CHECK(sol2.eta_t[1].eta0 == 4.0);
  CHECK(sol2.eta_h[0].eta1 == 5.0);
  CHECK(profile2.stacks.size() == 1);
  CHECK(profile2.stacks[0].height == 0.3);

  CHECK_THROWS_AS(solution_from_json("{bad", nullptr), ConfigError);
  CHECK_THROWS_AS(solution_from_json(R"({"alpha": 0.5})", nullptr), ConfigError);
}

TEST_CASE("report JSON carries all fields") {
  ValidationReport rep;
  rep.max_corridor_violation = 0.001;
  rep.grid_corridor_index = 4;
  rep.energy_discrepancy = 0.01;
  const std::string text = report_to_json(rep);
  for (const char* key :
       {"max_corridor_violation", "grid_corridor_violation", "grid_corridor_index",
        "max_input_violation", "final_state_mismatch", "energy_t", "energy_h",
        "energy_discrepancy", "sway_extremum"})
    CHECK(text.find(key) != std::string::npos);
}

TEST_CASE("pareto CSV round trip") {
  std::vector<ParetoPoint> pts(2);
  pts[0] = {0.01, 3.2, 0.4, 1.0, 1.05, "converged"};
  pts[1] = {0.99, 2.5, 0.6, 0.78, 1.0, "max_iterations"};
  std::stringstream ss;
  write_pareto_csv(pts, ss);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "alpha,tf,energy,rel_time,rel_energy,status");
  ss.seekg(0);
  const auto back = read_pareto_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].alpha == doctest::Approx(0.01));
  CHECK(back[1].status == "max_iterations");
  CHECK(back[1].rel_time == doctest::Approx(0.78));

  std::stringstream bad("not,a,header\n");
  CHECK_THROWS_AS(read_pareto_csv(bad), ConfigError);
}

TEST_CASE("plot data emission") {
  DiscretizedSolution sol;
  sol.grid = {0.0, 1.0, 2};
  sol.alpha = 0.5;
  sol.status = "converged";
  sol.states.resize(3);
  for (auto& s : sol.states) {
    s = SpatialState{};
    s[sx::x_p_dot] = 1.0;
    s[sx::y_p] = 0.5;
    s[sx::l] = 0.5;
  }
  sol.controls = {{0.1, 4.0}, {0.2, 5.0}};
  sol.eta_t.assign(2, {0.0, 0.0});
  sol.eta_h.assign(2, {0.0, 0.0});
  StackProfile profile;
  profile.rail_height = 0.75;
  profile.stacks = {{0.2, 0.4, 0.3}, {0.6, 0.8, 0.2}};

  std::vector<ParetoPoint> pareto(1);
  pareto[0] = {0.5, 2.0, 0.5, 1.0, 1.0, "converged"};

  const fs::path dir = fs::temp_directory_path() / "crane_plotdata_test";
  fs::remove_all(dir);
  write_plot_data(pareto, {{sol, profile}}, dir);

  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  CHECK(files == 5);
  for (const char* name : {"fig4_pareto.csv", "fig5_trajectory.csv", "fig6_inputs.csv",
                           "fig7_energy.csv", "fig8_hoist_sway.csv"})
    CHECK(fs::exists(dir / name));

  std::ifstream traj(dir / "fig5_trajectory.csv");
  std::string line;
  std::getline(traj, line);
  CHECK(line == "series,alpha,x_p,y");
  int stack_rows = 0, payload_rows = 0;
  while (std::getline(traj, line)) {
    if (line.rfind("stack,", 0) == 0) ++stack_rows;
    if (line.rfind("payload,", 0) == 0) ++payload_rows;
  }
  CHECK(stack_rows == 8);  // 4 corners per stack outline
  CHECK(payload_rows == 3);
  fs::remove_all(dir);
}

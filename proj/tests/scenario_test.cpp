#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geosmc/scenario.hpp"

using namespace geosmc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string scenario_path(const std::string& name) {
  return std::string(GEOSMC_SCENARIO_DIR) + "/" + name;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("geosmc_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("toml reader handles the scenario schema") {
  const std::string text = R"(
# comment
name = "demo"
count = 3
weight = 1.5e-3
flag = true
pair = [1.0, 2.0]
matrix = [[1, 0], [0, 1]]
inline = { a = 1, b = "x" }

[table.sub]
key = "value"

[[items]]
n = 1
[[items]]
n = 2
)";
  const toml::Value root = toml::parse(text);
  CHECK(root.at("name").as_string() == "demo");
  CHECK(root.at("count").as_int() == 3);
  CHECK(root.at("weight").as_double() == doctest::Approx(1.5e-3));
  CHECK(root.at("flag").as_bool());
  CHECK(root.at("pair").as_number_array() == std::vector<double>{1.0, 2.0});
  CHECK(root.at("matrix").as_array()[1].as_number_array() ==
        std::vector<double>{0.0, 1.0});
  CHECK(root.at("inline").at("a").as_int() == 1);
  CHECK(root.at("inline").at("b").as_string() == "x");
  CHECK(root.at("table").at("sub").at("key").as_string() == "value");
  CHECK(root.at("items").as_array().size() == 2);
  CHECK(root.at("items").as_array()[1].at("n").as_int() == 2);
}

TEST_CASE("toml reader reports line-anchored errors") {
  try {
    toml::parse("name = \"ok\"\nbroken = = 1\n");
    FAIL("expected a parse error");
  } catch (const ConfigError& err) {
    CHECK(err.line_number == 2);
    CHECK(std::string(err.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(toml::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(toml::parse("a = \"unterminated\n"), ConfigError);
  CHECK_THROWS_AS(toml::parse_file("/nonexistent/path.toml"), ConfigError);
}

TEST_CASE("bundled scenarios load and validate") {
  for (const std::string name :
       {"line_filippov.toml", "so3_first_order.toml", "sphere_first_order.toml",
        "sphere_terminal.toml", "mobius_smc.toml", "cylinder_twisting.toml",
        "mobius_portrait.toml", "cylinder_portrait.toml"}) {
    const Scenario sc = Scenario::load(scenario_path(name));
    CHECK(!sc.resolve_initial_states().empty());
    CHECK_NOTHROW(sc.build_system());
  }
  const Scenario twisting = Scenario::load(scenario_path("cylinder_twisting.toml"));
  CHECK(twisting.resolve_initial_states().size() == 12);
}

TEST_CASE("malformed twisting gains are a config error naming the ordering") {
  const std::string text = R"(
name = "bad"
manifold = "cylinder"
t_span = [0.0, 1.0]

[controller]
family = "cylinder_twisting"
k1 = 2.0
k2 = 5.0

[initial]
states = [[1.0, 0.0]]
)";
  try {
    Scenario::from_toml(toml::parse(text));
    FAIL("expected a config error");
  } catch (const ConfigError& err) {
    CHECK(std::string(err.what()).find("K1 > K2") != std::string::npos);
  }
}

TEST_CASE("family and manifold must agree") {
  const std::string text = R"(
name = "bad"
manifold = "s2"
t_span = [0.0, 1.0]

[controller]
family = "cylinder_twisting"
)";
  CHECK_THROWS_AS(Scenario::from_toml(toml::parse(text)), ConfigError);
}

TEST_CASE("off-manifold initial states are rejected") {
  const std::string text = R"(
name = "bad"
manifold = "s2"
t_span = [0.0, 1.0]

[controller]
family = "s2_first_order"
d_bar = 0.3

[initial]
states = [[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]]
)";
  const Scenario sc = Scenario::from_toml(toml::parse(text));
  CHECK_THROWS_AS(sc.resolve_initial_states(), ConfigError);
}

TEST_CASE("run_scenario writes per-run CSV and a summary with a config echo") {
  const Scenario sc = Scenario::load(scenario_path("line_filippov.toml"));
  const fs::path dir = fresh_dir("line");
  const RunResult result = run_scenario(sc, dir.string(), true);
  CHECK(result.exit_code == 0);
  CHECK(result.summaries.size() == 2);
  CHECK(fs::exists(dir / "line_filippov_run0.csv"));
  CHECK(fs::exists(dir / "line_filippov_run1.csv"));
  CHECK(fs::exists(dir / "line_filippov_summary.json"));

  const auto doc =
      nlohmann::json::parse(slurp((dir / "line_filippov_summary.json").string()));
  CHECK(doc["runs"].size() == 2);
  CHECK(doc["runs"][0]["reaching_time"].get<double>() ==
        doctest::Approx(2.0).epsilon(1e-6));
  CHECK(doc["config"]["integrator"]["step"].get<double>() == 1e-3);
  CHECK(doc["config"]["integrator"]["tol_event"].get<double>() == 1e-10);
  CHECK(doc["config"]["initial"]["resolved_states"].size() == 2);

  // CSV header matches the documented column layout.
  std::istringstream csv(slurp((dir / "line_filippov_run0.csv").string()));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,x,mode,s0,u0,drift");
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  const Scenario sc = Scenario::load(scenario_path("mobius_smc.toml"));
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  run_scenario(sc, a.string(), true);
  run_scenario(sc, b.string(), true);
  for (const std::string name :
       {"mobius_smc_run0.csv", "mobius_smc_run0_embedding.csv",
        "mobius_smc_summary.json"}) {
    CHECK(slurp((a / name).string()) == slurp((b / name).string()));
  }
}

TEST_CASE("moebius embedding values and orbit invariance") {
  const Vec3 a = mobius_embed(0.0, 0.0);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(0.0));
  CHECK(a[2] == doctest::Approx(0.0));

  const Vec3 b = mobius_embed(M_PI, 1.0);
  CHECK(b[0] == doctest::Approx(-1.0));
  CHECK(b[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b[2] == doctest::Approx(0.5));

  // Constant on each orbit: (theta + 2 pi, -omega) maps to the same point.
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double theta = -3.0 * M_PI + 6.0 * M_PI * i / 999.0;
    const double omega = std::sin(7.0 * theta) * 3.0;
    worst = std::max(worst, (mobius_embed(theta + 2.0 * M_PI, -omega) -
                             mobius_embed(theta, omega))
                                .norm());
  }
  CHECK(worst <= 1e-12);

  // Embedding agrees with the canonical representative.
  const QuotientManifold q{mobius_action()};
  Vec d(2);
  d << 2.0 * M_PI + 0.7, -1.3;
  const Vec c = q.canonicalize(d);
  CHECK((mobius_embed(d[0], d[1]) - mobius_embed(c[0], c[1])).norm() <= 1e-12);
}

TEST_CASE("cylinder embedding values") {
  CHECK((cylinder_embed(0.0, 0.0) - Vec3(1, 0, 0)).norm() <= 1e-15);
  CHECK((cylinder_embed(2.0 * M_PI, 1.0) - cylinder_embed(0.0, 1.0)).norm() <=
        1e-15);
  const Vec3 p = cylinder_embed(M_PI / 2.0, -2.0);
  CHECK(p[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1.0));
  CHECK(p[2] == doctest::Approx(-2.0));
}

TEST_CASE("embed subcommand maps a theta/omega CSV through the embedding") {
  const fs::path dir = fresh_dir("embed");
  const fs::path in = dir / "chart.csv";
  {
    std::ofstream out(in);
    out << "t,theta,omega\n0,0,0\n1," << format_double(M_PI) << ",1\n";
  }
  const fs::path out = dir / "embedded.csv";
  embed_csv(ManifoldId::Mobius, in.string(), out.string());
  const std::string text = slurp(out.string());
  CHECK(text.find("t,k1,k2,k3") == 0);
  CHECK(text.find("1,-1,") != std::string::npos);  // embedded (pi, 1)

  CHECK_THROWS_AS(embed_csv(ManifoldId::S2, in.string(), out.string()),
                  Unsupported);
}

TEST_CASE("portraits require a nonempty grid and a quotient manifold") {
  Scenario sc = Scenario::load(scenario_path("mobius_portrait.toml"));
  sc.initial.grid.reset();
  sc.initial.states.clear();
  CHECK_THROWS_AS(run_portrait(sc, fresh_dir("empty").string(), true),
                  ConfigError);

  const Scenario sphere = Scenario::load(scenario_path("sphere_terminal.toml"));
  CHECK_THROWS_AS(run_portrait(sphere, fresh_dir("bad_manifold").string(), true),
                  Unsupported);
}

TEST_CASE("descent scenario files delegate to the geometry checkers") {
  const Scenario sc = Scenario::load(scenario_path("descent_mobius_s.toml"));
  const fs::path dir = fresh_dir("descent");
  const RunResult result = run_check_descent(sc, dir.string(), true);
  CHECK(result.exit_code == 0);
  const auto doc =
      nlohmann::json::parse(slurp((dir / "descent_mobius_s_descent.json").string()));
  CHECK(doc["passed"].get<bool>());
  CHECK(doc["max_violation"].get<double>() <= 1e-9);
  CHECK(doc["samples"].get<int>() == 1000);
}

TEST_CASE("cylinder sliding-variable descent request is rejected") {
  const std::string text = R"(
name = "bad"
manifold = "cylinder"

[controller]
family = "cylinder_twisting"
k1 = 5.0
k2 = 2.0

[descent]
target = "sliding-variable"
z_range = 3
samples = 10
box = [[-1.0, -1.0], [1.0, 1.0]]
)";
  CHECK_THROWS_AS(Scenario::from_toml(toml::parse(text)), ConfigError);
}

TEST_CASE("budget exhaustion surfaces as exit code 3 with partial outputs") {
  Scenario sc = Scenario::load(scenario_path("line_filippov.toml"));
  sc.integrator.max_steps = 5;
  const fs::path dir = fresh_dir("budget");
  const RunResult result = run_scenario(sc, dir.string(), true);
  CHECK(result.exit_code == 3);
  CHECK(fs::exists(dir / "line_filippov_run0.csv"));
  for (const RunSummary& s : result.summaries) CHECK(s.stop_reason == "budget");
}

TEST_CASE("grid initial conditions expand with the documented ordering") {
  const std::string text = R"(
name = "grid"
manifold = "cylinder"
t_span = [0.0, 0.1]

[controller]
family = "cylinder_twisting"
k1 = 5.0
k2 = 2.0

[initial]
grid = { theta = [0.0, 1.0, 2], omega = [-1.0, 1.0, 2] }
extra = [[0.25, 0.5]]
)";
  const Scenario sc = Scenario::from_toml(toml::parse(text));
  const auto states = sc.resolve_initial_states();
  REQUIRE(states.size() == 5);
  CHECK(states[0][0] == 0.0);
  CHECK(states[0][1] == -1.0);
  CHECK(states[1][1] == 1.0);
  CHECK(states[2][0] == 1.0);
  CHECK(states[4][0] == 0.25);
}

TEST_CASE("random initial conditions are reproducible from the seed") {
  const std::string text = R"(
name = "rand"
manifold = "s2"
seed = 9
t_span = [0.0, 0.1]

[controller]
family = "s2_first_order"
d_bar = 0.3

[initial]
random = { count = 4, box = [[-1, -1, -1, -1, -1, -1], [1, 1, 1, 1, 1, 1]] }
)";
  const Scenario sc = Scenario::from_toml(toml::parse(text));
  const auto a = sc.resolve_initial_states();
  const auto b = sc.resolve_initial_states();
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK((a[i] - b[i]).norm() == 0.0);
    CHECK(std::abs(a[i].head(3).norm() - 1.0) <= 1e-12);  // on the sphere
  }
}

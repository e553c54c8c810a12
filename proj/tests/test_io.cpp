#include <sstream>

#include <gtest/gtest.h>

#include "hlip/io/csv_log.hpp"
#include "hlip/io/json_io.hpp"

using namespace hlip;
using nlohmann::json;

namespace {

const std::string kScenarios = std::string(HLIP_SOURCE_DIR) + "/scenarios/";

ErrorCode parse_code(const json& doc) {
  try {
    io::scenario_from_json(doc);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidKind;  // sentinel: accepted
}

sim::Scenario sample_scenario() {
  sim::Scenario sc;
  sc.composition = CompositionKind::SP2_CP2;
  sc.u_star_left_x = 0.12;
  sc.velocity.points = {{0.0, 0.0, 0.0}, {2.0, 0.5, 0.1}};
  sc.pushes = {{1.0, 0.1, {30.0, -10.0}}};
  sc.sim.terrain.patches = {{0.5, 1.0, 0.02}};
  sc.sim.rng_seed = 7;
  sc.sim.sensor_noise_std = 1e-4;
  sc.estimator = sim::EstimatorMode::Hlip;
  sc.sim.ideal_tracking = true;
  sc.duration = 3.5;
  return sc;
}

}  // namespace

TEST(ScenarioJson, RoundTrip) {
  const sim::Scenario sc = sample_scenario();
  const sim::Scenario back = io::scenario_from_json(io::scenario_to_json(sc));
  EXPECT_EQ(back.sim, sc.sim);
  EXPECT_EQ(back.composition, sc.composition);
  EXPECT_EQ(back.u_star_left_x, sc.u_star_left_x);
  EXPECT_EQ(back.estimator, sc.estimator);
  EXPECT_EQ(back.duration, sc.duration);
  ASSERT_EQ(back.velocity.points.size(), 2u);
  EXPECT_EQ(back.velocity.points[1].vx, 0.5);
  ASSERT_EQ(back.pushes.size(), 1u);
  EXPECT_EQ(back.pushes[0].force, sc.pushes[0].force);
}

TEST(ScenarioJson, StrictKeysAndVersion) {
  json doc = io::scenario_to_json(sim::Scenario{});
  EXPECT_EQ(parse_code(doc), ErrorCode::InvalidKind);  // accepted
  json extra = doc;
  extra["velocity"] = 1.0;
  EXPECT_EQ(parse_code(extra), ErrorCode::Parse);
  json nested = doc;
  nested["gait"]["Tssp"] = 0.3;
  EXPECT_EQ(parse_code(nested), ErrorCode::Parse);
  json version = doc;
  version["schema_version"] = 2;
  EXPECT_EQ(parse_code(version), ErrorCode::Parse);
  json missing = doc;
  missing.erase("schema_version");
  EXPECT_EQ(parse_code(missing), ErrorCode::Parse);
  json bad_comp = doc;
  bad_comp["composition"] = "sP1-cP3";
  EXPECT_EQ(parse_code(bad_comp), ErrorCode::Parse);
  json bad_range = doc;
  bad_range["gait"]["T_SSP"] = 0.5;  // longer than T
  EXPECT_EQ(parse_code(bad_range), ErrorCode::Parse);
  json bad_row = doc;
  bad_row["velocity_profile"] = json::array({json::array({0.0, 1.0})});
  EXPECT_EQ(parse_code(bad_row), ErrorCode::Parse);
}

TEST(ScenarioJson, MinimalDocumentUsesDefaults) {
  const sim::Scenario sc = io::scenario_from_json(json{{"schema_version", 1}});
  EXPECT_EQ(sc.sim, sim::SimConfig{});
  EXPECT_EQ(sc.composition, CompositionKind::SP1_CP2);
}

TEST(ScenarioJson, BundledFilesLoad) {
  for (const char* name : {"forward_walk", "stepping_in_place", "push_recovery", "hlip_limit"}) {
    EXPECT_NO_THROW(io::load_scenario(kScenarios + name + ".json")) << name;
  }
  const sim::Scenario fw = io::load_scenario(kScenarios + "forward_walk.json");
  EXPECT_EQ(fw.sim.gait.t, 0.35);
  EXPECT_EQ(fw.sim.gait.u_star_left_y, -0.2);
  EXPECT_EQ(fw.sim.gait.z_sw_max, 0.15);
  EXPECT_EQ(fw.velocity.at(100.0).x(), 1.0);
  EXPECT_EQ(fw.duration, 10.0);
}

TEST(ScenarioJson, FileErrors) {
  try {
    io::load_scenario("/nonexistent/file.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
  try {
    io::parse_json("{not json", "inline");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
}

TEST(RecordsJson, RoundTripIsLossless) {
  sim::Scenario sc;
  sc.duration = 2.0;
  sc.velocity = sim::VelocityProfile::constant(0.4);
  const sim::RunResult run = sim::run_scenario(sc, {false});
  std::stringstream buf;
  io::write_records(buf, run.records);
  const std::vector<sim::StepRecord> back = io::read_records(buf);
  ASSERT_EQ(back.size(), run.records.size());
  std::stringstream again;
  io::write_records(again, back);
  EXPECT_EQ(again.str(), buf.str());
  EXPECT_FALSE(back.back().sagittal().w.has_value());
  EXPECT_EQ(back.front().sagittal().x, run.records.front().sagittal().x);
}

TEST(RecordsJson, MalformedLine) {
  std::stringstream in("{\"step_index\": 1}\n");
  try {
    io::read_records(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
  std::stringstream blank("\n   \n");
  EXPECT_TRUE(io::read_records(blank).empty());
}

TEST(PolytopeJson, RoundTrip) {
  const Polytope2 box = Polytope2::box(0.1, 0.2);
  const json j = io::polytope_to_json(box);
  ASSERT_EQ(j.size(), 4u);
  const Polytope2 back = io::polytope_from_json(j);
  EXPECT_NEAR(back.area(), box.area(), 1e-15);
  EXPECT_TRUE(back.is_convex_ccw());
  EXPECT_THROW(io::polytope_from_json(json::object()), Error);
}

TEST(TrajectoryCsv, HeaderAndRows) {
  sim::Scenario sc;
  sc.duration = 0.5;
  const sim::RunResult run = sim::run_scenario(sc);
  std::ostringstream out;
  io::write_trajectory(out, run.trajectory);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, io::kTrajectoryHeader);
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  std::size_t rows = 0;
  bool saw_impact = false;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ',') + 1, columns);
    saw_impact = saw_impact || line.find(",1,0") != std::string::npos;
  }
  EXPECT_EQ(rows, run.trajectory.size());
  EXPECT_TRUE(saw_impact);
}

TEST(TrajectoryCsv, EmptyRunWritesHeaderOnly) {
  sim::Scenario sc;
  sc.duration = 0.0;
  const sim::RunResult run = sim::run_scenario(sc);
  EXPECT_TRUE(run.trajectory.empty());
  EXPECT_TRUE(run.records.empty());
  std::ostringstream out;
  io::write_trajectory(out, run.trajectory);
  EXPECT_EQ(out.str(), std::string(io::kTrajectoryHeader) + "\n");
}

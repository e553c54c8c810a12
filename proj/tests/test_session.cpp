#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hlip/service/session.hpp"
#include "schema_check.hpp"

using namespace hlip;
using namespace hlip::service;

namespace {

const std::string kSource = HLIP_SOURCE_DIR;

schema_check::Validator schema(const std::string& name) {
  return schema_check::Validator::load(kSource + "/schemas/" + name + ".schema.json");
}

SessionConfig in_place() {
  SessionConfig c;
  c.scenario = io::load_scenario(kSource + "/scenarios/stepping_in_place.json");
  return c;
}

ErrorCode parse_code(const std::string& text) {
  try {
    parse_command_text(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidKind;  // accepted
}

void run_steps(SimSession& s, int steps) {
  const int target = s.walker().state().step_index + steps;
  while (!s.fell() && s.walker().state().step_index < target) s.tick();
}

double mean_vx(const std::vector<sim::StepRecord>& rec, std::size_t from) {
  double sum = 0.0;
  for (std::size_t i = from; i < rec.size(); ++i) sum += rec[i].sagittal().x.v;
  return sum / static_cast<double>(rec.size() - from);
}

}  // namespace

TEST(SessionCommands, ParsesEveryType) {
  EXPECT_TRUE(std::holds_alternative<SetVelocity>(parse_command_text(R"({"type":"set_velocity","vx":0.5,"vy":0})")));
  EXPECT_TRUE(std::holds_alternative<SetVelocity>(
      parse_command_text(R"({"type":"set_velocity","vx":0.5,"vy":0,"heading":0.1})")));
  const Command p = parse_command_text(R"({"type":"set_param","name":"z0","value":0.9})");
  ASSERT_TRUE(std::holds_alternative<SetParam>(p));
  EXPECT_EQ(std::get<SetParam>(p).name, "z0");
  const Command push = parse_command_text(R"({"type":"push","fx":60,"fy":-5,"duration":0.1})");
  EXPECT_EQ(std::get<Push>(push).fx, 60.0);
  EXPECT_TRUE(std::holds_alternative<Reset>(parse_command_text(R"({"type":"reset"})")));
  EXPECT_TRUE(std::holds_alternative<Pause>(parse_command_text(R"({"type":"pause"})")));
  EXPECT_TRUE(std::holds_alternative<Resume>(parse_command_text(R"({"type":"resume"})")));
}

TEST(SessionCommands, ProtocolViolations) {
  for (const char* bad : {"not json", "[]", "{}", R"({"type":3})", R"({"type":"fly"})",
                          R"({"type":"set_velocity","vx":0.5})", R"({"type":"set_velocity","vx":"fast","vy":0})",
                          R"({"type":"set_velocity","vx":0.5,"vy":0,"extra":1})", R"({"type":"pause","now":true})",
                          R"({"type":"set_param","name":5,"value":1})", R"({"type":"push","fx":1,"fy":1})"}) {
    EXPECT_EQ(parse_code(bad), ErrorCode::Parse) << bad;
  }
}

TEST(SessionCommands, CommandSchemaAgreesWithParser) {
  const schema_check::Validator v = schema("command");
  for (const char* good : {R"({"type":"set_velocity","vx":0.5,"vy":0})", R"({"type":"set_param","name":"T","value":0.4})",
                           R"({"type":"push","fx":60,"fy":0,"duration":0.1})", R"({"type":"reset"})"}) {
    EXPECT_TRUE(v.valid(nlohmann::json::parse(good))) << good;
    EXPECT_EQ(parse_code(good), ErrorCode::InvalidKind);
  }
  for (const char* bad : {R"({"type":"set_velocity","vx":0.5})", R"({"type":"pause","now":true})", R"({"type":"fly"})"}) {
    EXPECT_FALSE(v.valid(nlohmann::json::parse(bad))) << bad;
    EXPECT_EQ(parse_code(bad), ErrorCode::Parse);
  }
}

TEST(SessionCommands, OutOfRangeLeavesStateUnchanged) {
  SimSession s(in_place());
  const GaitParams before = s.commanded_gait();
  const schema_check::Validator reply = schema("reply");
  for (const Command& c : {Command{SetParam{"u_star_L_y", 0.6}}, Command{SetParam{"T", 0.1}},
                           Command{SetParam{"mass", 30.0}}, Command{SetParam{"z0", 5.0}}}) {
    const CommandResult r = s.apply(c);
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.to_json(c).at("type"), "error");
    EXPECT_TRUE(reply.valid(r.to_json(c)));
    EXPECT_EQ(s.commanded_gait(), before);
  }
  EXPECT_FALSE(s.apply(SetVelocity{3.5, 0.0}).ok);
  EXPECT_EQ(s.velocity_command(), Vector2d::Zero());
  EXPECT_FALSE(s.apply(Push{3000.0, 0.0, 0.1}).ok);
  EXPECT_FALSE(s.apply(Push{10.0, 0.0, 0.0}).ok);
  EXPECT_FALSE(s.walker().push_active());
  const CommandResult ok = s.apply(SetVelocity{0.5, 0.0});
  EXPECT_TRUE(ok.ok);
  EXPECT_TRUE(reply.valid(ok.to_json(SetVelocity{})));
}

TEST(SessionParams, ApplyAtNextImpact) {
  SimSession s(in_place());
  run_steps(s, 2);
  for (int i = 0; i < 10; ++i) s.tick();  // mid-SSP
  const int step = s.walker().state().step_index;
  ASSERT_TRUE(s.apply(SetParam{"z_sw_max", 0.2}).ok);
  EXPECT_EQ(s.commanded_gait().z_sw_max, 0.2);
  EXPECT_NE(s.walker().config().gait.z_sw_max, 0.2);
  while (s.walker().state().step_index == step) {
    EXPECT_NE(s.walker().config().gait.z_sw_max, 0.2);
    s.tick();
  }
  EXPECT_EQ(s.walker().config().gait.z_sw_max, 0.2);
}

TEST(SessionParams, VelocityLowPass) {
  SessionConfig cfg = in_place();
  cfg.velocity_time_constant = 0.5;
  SimSession s(cfg);
  ASSERT_TRUE(s.apply(SetVelocity{1.0, -0.2}).ok);
  const double dt = s.walker().config().dt;
  const double alpha = 1.0 - std::exp(-dt / 0.5);
  for (int n = 1; n <= 200; ++n) {
    s.tick();
    const double expect = 1.0 - std::pow(1.0 - alpha, n);
    ASSERT_NEAR(s.velocity_filtered().x(), expect, 1e-12);
    ASSERT_NEAR(s.velocity_filtered().y(), -0.2 * expect, 1e-12);
  }
  // one time constant leaves 1/e of the gap
  SimSession t(cfg);
  t.apply(SetVelocity{1.0, 0.0});
  t.advance(0.5);
  EXPECT_NEAR(t.velocity_filtered().x(), 1.0 - std::exp(-1.0), 2e-3);
}

TEST(SessionParams, FuzzKeepsModelConsistent) {
  std::mt19937_64 rng(11);
  SimSession s(in_place());
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int round = 0; round < 60 && !s.fell(); ++round) {
    const ParamRange& r = kParamRanges[pick(rng)];
    // occasionally out of range
    const double span = r.hi - r.lo;
    const double value = r.lo - 0.1 * span + 1.2 * span * unit(rng);
    s.apply(SetParam{r.name, value});
    if (round % 5 == 0) s.apply(SetVelocity{unit(rng) - 0.5, 0.0});
    for (int i = 0; i < 37; ++i) {
      s.tick();
      const sim::SteppingController& c = s.walker().controller();
      const ModelParams m = s.walker().config().params();
      ASSERT_EQ(c.params(), m);
      const S2SMatrices ref = s2s_matrices(m);
      ASSERT_LT((c.matrices().a - ref.a).norm(), 1e-12);
      ASSERT_LT((c.matrices().b - ref.b).norm(), 1e-12);
      ASSERT_LT((c.gain().k - deadbeat_gain(m).k).norm(), 1e-12);
      const GaitParams& g = s.walker().config().gait;
      ASSERT_TRUE(g.valid());
      ASSERT_GE(g.t, 0.3 - 1e-12);
      ASSERT_LE(g.t, 0.5 + 1e-12);
    }
  }
  EXPECT_FALSE(s.fell());
}

TEST(SessionParams, HeightChangeStaysBounded) {
  SessionConfig cfg = in_place();
  cfg.scenario.sim.gait.z0 = 1.0;
  SimSession s(cfg);
  run_steps(s, 6);
  ASSERT_TRUE(s.apply(SetParam{"z0", 0.8}).ok);
  double max_err = 0.0;
  for (int k = 0; k < 30 && !s.fell(); ++k) {
    run_steps(s, 1);
    max_err = std::max(max_err, std::abs(s.walker().state().com_pos.z() - 0.8) * (k > 5));
  }
  EXPECT_FALSE(s.fell());
  EXPECT_LT(max_err, 0.02);
  EXPECT_LT(std::abs(s.walker().records().back().sagittal().x.v), 0.1);
}

TEST(SessionParams, PeriodChangeStaysStable) {
  SimSession s(in_place());
  s.apply(SetVelocity{0.5, 0.0});
  run_steps(s, 10);
  ASSERT_TRUE(s.apply(SetParam{"T", 0.5}).ok);
  run_steps(s, 10);
  ASSERT_TRUE(s.apply(SetParam{"T", 0.3}).ok);
  run_steps(s, 30);
  EXPECT_FALSE(s.fell());
  const auto& rec = s.walker().records();
  EXPECT_NEAR(rec.back().params.t_ssp + rec.back().params.t_dsp, 0.3, 1e-12);
  EXPECT_NEAR(mean_vx(rec, rec.size() - 10), 0.5, 0.05);
}

TEST(SessionParams, VelocityTracking) {
  SimSession s(in_place());
  ASSERT_TRUE(s.apply(SetVelocity{0.5, 0.0}).ok);
  run_steps(s, 40);
  const auto& rec = s.walker().records();
  ASSERT_GE(rec.size(), 30u);
  EXPECT_NEAR(mean_vx(rec, rec.size() - 15), 0.5, 0.05);
}

TEST(SessionPush, LeavesAndReentersInvariantSet) {
  SimSession s(in_place());
  run_steps(s, 25);
  ASSERT_TRUE(s.invariant(0).has_value());
  ASSERT_TRUE(s.telemetry().at("planes").at("x").at("e_in_set").get<bool>());
  for (int i = 0; i < 10; ++i) s.tick();
  ASSERT_TRUE(s.apply(Push{60.0, 0.0, 0.1}).ok);
  int out_at = -1;
  int back_at = -1;
  for (int k = 0; k < 12 && back_at < 0; ++k) {
    run_steps(s, 1);
    const bool inside = s.telemetry().at("planes").at("x").at("e_in_set").get<bool>();
    if (!inside && out_at < 0) out_at = k;
    if (inside && out_at >= 0) back_at = k;
  }
  EXPECT_FALSE(s.fell());
  EXPECT_GE(out_at, 0);
  ASSERT_GE(back_at, 0);
  EXPECT_LE(back_at - out_at, 4);
}

TEST(SessionLifecycle, PauseResumeReset) {
  SimSession s(in_place());
  s.advance(0.5);
  const double t = s.time();
  s.apply(Pause{});
  EXPECT_TRUE(s.paused());
  EXPECT_EQ(s.health().at("status"), "paused");
  for (int i = 0; i < 50; ++i) s.tick();
  s.advance(1.0);
  EXPECT_EQ(s.time(), t);
  s.apply(Resume{});
  s.advance(0.5);
  // ticks are cut at events, so advance may overrun by under one dt
  EXPECT_GE(s.time(), t + 0.5 - 1e-12);
  EXPECT_LT(s.time(), t + 0.5 + s.walker().config().dt);
  s.apply(SetVelocity{0.7, 0.0});
  s.apply(SetParam{"z_sw_max", 0.2});
  s.apply(Reset{});
  EXPECT_EQ(s.time(), 0.0);
  EXPECT_EQ(s.walker().state().step_index, 0);
  EXPECT_EQ(s.velocity_command(), Vector2d::Zero());
  EXPECT_EQ(s.commanded_gait(), in_place().scenario.sim.gait);
  EXPECT_TRUE(s.walker().records().empty());
}

TEST(SessionLifecycle, FallStopsSimulation) {
  SimSession s(in_place());
  s.advance(0.3);
  s.apply(Push{2000.0, 0.0, 0.5});
  s.advance(3.0);
  ASSERT_TRUE(s.fell());
  const double t = s.time();
  s.tick();
  EXPECT_EQ(s.time(), t);
  EXPECT_EQ(s.health().at("status"), "fell_over");
  EXPECT_TRUE(s.telemetry().at("events").at("fell_over").get<bool>());
  s.apply(Reset{});
  EXPECT_FALSE(s.fell());
}

TEST(SessionTelemetry, FramesMatchSchema) {
  const schema_check::Validator tv = schema("telemetry");
  const schema_check::Validator hv = schema("health");
  SimSession s(in_place());
  s.apply(SetVelocity{0.4, 0.05});
  double last_time = -1.0;
  std::size_t last_seq = 0;
  bool saw_sets = false;
  bool saw_impact = false;
  for (int f = 0; f < 300; ++f) {
    s.advance(1.0 / 30.0);
    if (f == 150) s.apply(Push{40.0, 10.0, 0.1});
    const nlohmann::json frame = s.telemetry();
    const std::vector<std::string> errs = tv.errors(frame);
    ASSERT_TRUE(errs.empty()) << errs.front();
    ASSERT_TRUE(hv.valid(s.health()));
    EXPECT_GT(frame.at("time").get<double>(), last_time);
    if (f > 0) {
      EXPECT_EQ(frame.at("seq").get<std::size_t>(), last_seq + 1);
    }
    last_time = frame.at("time").get<double>();
    last_seq = frame.at("seq").get<std::size_t>();
    saw_sets = saw_sets || !frame.at("invariant_sets").is_null();
    saw_impact = saw_impact || frame.at("events").at("impact").get<bool>();
    EXPECT_LE(frame.at("footprints").size(), 32u);
  }
  EXPECT_TRUE(saw_sets);
  EXPECT_TRUE(saw_impact);
  // one-shot flags clear once reported
  s.apply(Pause{});
  s.telemetry();
  EXPECT_FALSE(s.telemetry().at("events").at("impact").get<bool>());
}

TEST(SessionTelemetry, SchemaRejectsBrokenFrames) {
  const schema_check::Validator tv = schema("telemetry");
  SimSession s(in_place());
  nlohmann::json frame = s.telemetry();
  ASSERT_TRUE(tv.valid(frame));
  nlohmann::json missing = frame;
  missing.erase("planes");
  EXPECT_FALSE(tv.valid(missing));
  nlohmann::json extra = frame;
  extra["bonus"] = 1;
  EXPECT_FALSE(tv.valid(extra));
  nlohmann::json phase = frame;
  phase["phase"] = "flight";
  EXPECT_FALSE(tv.valid(phase));
}

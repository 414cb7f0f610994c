#include <gtest/gtest.h>

#include <cmath>

#include "qosrate/json_io.hpp"

using namespace qosrate;

namespace {

std::string field_of(const Json& doc) {
  try {
    source_from_json(doc);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(SourceJson, EveryKindParses) {
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"constant","lambda":2})")).index(), 0u);
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"onoff-discrete","p11":0.8,"p22":0.8})"))
                .index(),
            1u);
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"onoff-fluid","alpha":1,"beta":2})")).index(),
            2u);
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"onoff-mmpp","alpha":1,"beta":2})")).index(),
            3u);
  EXPECT_EQ(source_from_json(Json::parse(
                                 R"({"kind":"discrete","transition":[[0.5,0.5],[0.2,0.8]],
                                     "rates":[0,1]})"))
                .index(),
            4u);
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"fluid","transition":[[-1,1],[2,-2]],
                                             "rates":[0,1]})"))
                .index(),
            5u);
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"mmpp","transition":[[-1,1],[2,-2]],
                                             "intensities":[0,1]})"))
                .index(),
            6u);
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"binomial-discrete","n":5,"s":0.5})")).index(),
            4u);
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"birth-death-fluid","n":5,"alpha":1,"beta":2})"))
                .index(),
            5u);
  EXPECT_EQ(source_from_json(Json::parse(R"({"kind":"birth-death-mmpp","n":5,"alpha":1,"beta":2})"))
                .index(),
            6u);
}

TEST(SourceJson, ValuesCarryThrough) {
  const auto s = std::get<OnOffDiscreteParams>(
      source_from_json(Json::parse(R"({"kind":"onoff-discrete","p11":0.3,"p22":0.6,"lambda":4})")));
  EXPECT_EQ(s.p11, 0.3);
  EXPECT_EQ(s.p22, 0.6);
  EXPECT_EQ(s.lambda, 4.0);
}

TEST(SourceJson, ErrorsNameTheField) {
  EXPECT_EQ(field_of(Json::parse(R"({"kind":"discrete","transition":[[0.5,0.5],[1.2,-0.2]],
                                     "rates":[0,1]})")),
            "source/transition/1/0");
  EXPECT_EQ(field_of(Json::parse(R"({"kind":"onoff-discrete","p11":2,"p22":0.5})")), "source/p11");
  EXPECT_EQ(field_of(Json::parse(R"({"kind":"onoff-fluid","beta":1})")), "source/alpha");
  EXPECT_EQ(field_of(Json::parse(R"({"kind":"wobble"})")), "source/kind");
  EXPECT_EQ(field_of(Json::parse(R"({"lambda":1})")), "source/kind");
  EXPECT_EQ(field_of(Json::parse(R"({"kind":"constant","lambda":"x"})")), "source/lambda");
  EXPECT_EQ(field_of(Json::parse("[1]")), "source");
}

TEST(SourceJson, ChainDefectsBecomeValidationErrors) {
  // reducible: two closed classes
  EXPECT_EQ(field_of(Json::parse(R"({"kind":"discrete","transition":[[1,0],[0,1]],"rates":[0,1]})")),
            "source/transition");
  // periodic
  EXPECT_EQ(field_of(Json::parse(R"({"kind":"discrete","transition":[[0,1],[1,0]],"rates":[0,1]})")),
            "source/transition");
}

TEST(ChannelJson, DefaultsAndErrors) {
  const auto spec = channel_from_json(Json::parse(R"({"m":10})"));
  EXPECT_EQ(spec.m, 10);
  EXPECT_EQ(spec.rho, 0.0);
  EXPECT_EQ(spec.sigma_h_sq, 1.0);
  try {
    channel_from_json(Json::parse(R"({"m":10,"rho":1.5})"));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "channel/rho");
    EXPECT_EQ(e.detail(), "must lie in [0, 1]");
  }
  EXPECT_THROW(channel_from_json(Json::parse(R"({"m":10,"distribution":"nakagami"})")),
               ValidationError);
  EXPECT_THROW(channel_from_json(Json::parse(R"({"rho":0.5})")), ValidationError);
}

TEST(ReportJson, NanBecomesNull) {
  QueueSimReport r;
  const Json j = to_json(r);
  EXPECT_TRUE(j.at("theta_sim").is_null());
  EXPECT_TRUE(j.at("delay_slope_sim").is_null());
}

TEST(ReportJson, ChannelRoundTrip) {
  const ChannelSpec spec{7, 0.25, 2.0};
  const auto back = channel_from_json(to_json(spec));
  EXPECT_EQ(back.m, 7);
  EXPECT_EQ(back.rho, 0.25);
  EXPECT_EQ(back.sigma_h_sq, 2.0);
}

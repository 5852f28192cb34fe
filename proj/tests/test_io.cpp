#include "cylgeo/error.hpp"
#include "cylgeo/io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace cylgeo;

TEST(Io, FormatReal) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(2.0), "2");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Io, FormRoundTrip) {
  PerturbationForm form(2);
  Mat b = Mat::Identity(4, 4);
  b(0, 3) = b(3, 0) = 0.25;
  form.add_term(Profile::gaussian(0.5, 2.0), b);
  form.add_term(Profile::poly_gaussian({1.0, -0.5}, 0.1, 1.5), 2.0 * Mat::Identity(4, 4));
  form.add_term(Profile::bump_pair(1.0, 0.5), Mat::Identity(4, 4));
  form.add_term(Profile::odd_decay(), Mat::Identity(4, 4));
  form.add_term(Profile::constant(0.3), Mat::Identity(4, 4));
  form.claims.h1 = true;

  const auto back = form_from_json(Json::parse(form_to_json(form).dump()));
  EXPECT_EQ(back.n(), 2);
  ASSERT_EQ(back.terms().size(), form.terms().size());
  EXPECT_TRUE(back.claims.h1);
  for (double s : {-2.0, 0.0, 0.7, 3.0}) {
    EXPECT_EQ(back.field(s), form.field(s));
  }
}

TEST(Io, FormBuiltins) {
  const auto j = Json::parse(R"({"builtin": "odd_decay_anisotropic"})");
  const auto form = form_from_json(j, 2);
  EXPECT_EQ(form.field(1.0), builtin::odd_decay_anisotropic(2).field(1.0));
  const auto iso = form_from_json(
      Json::parse(R"({"builtin": "isotropic", "profile": {"kind": "gaussian", "params": {"center": 0, "width": 2}}})"), 1);
  EXPECT_EQ(iso.field(0.3), builtin::isotropic(1, Profile::gaussian(0.0, 2.0)).field(0.3));
  EXPECT_TRUE(form_from_json(Json::parse(R"({"builtin": "zero"})"), 3).empty());
}

TEST(Io, FormErrorsNameTheField) {
  try {
    form_from_json(Json::parse(R"({"terms": [{"profile": {"kind": "nope"}, "block": [[1,0,0],[0,1,0],[0,0,1]]}]})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("perturbation.terms[0].profile.kind"), std::string::npos);
  }
  try {
    form_from_json(Json::parse(R"({"terms": [{"profile": {"kind": "odd_decay"}, "block": [[1,2,0],[0,1,0],[0,0,1]]}]})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("perturbation.terms[0].block"), std::string::npos);
  }
  EXPECT_THROW(form_from_json(Json::parse(R"({"builtin": "odd_decay_anisotropic"})")), ConfigError);
  EXPECT_THROW(form_from_json(Json::parse(R"({"builtin": "mystery"})"), 2), ConfigError);
  EXPECT_THROW(form_from_json(Json::parse(R"({"builtin": "zero", "n": 3})"), 2), ConfigError);
}

TEST(Io, LoopRoundTripAndCsv) {
  const auto loop = great_circle(standard_circle(2, 0.25), 8);
  const auto back = loop_from_json(Json::parse(loop_to_json(loop).dump()));
  EXPECT_EQ(back.coords(), loop.coords());

  std::ostringstream os;
  write_loop_csv(os, loop);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "k,t,r,x0,x1,x2");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 8);

  EXPECT_THROW(loop_from_json(Json::parse(R"({"r": [0, 0], "x": [[1, 0]]})")), ConfigError);
}

TEST(Io, CircleParamRoundTrip) {
  const auto c = sample_circle_params(3, 1, 2.0, 4).front();
  const auto back = circle_param_from_json(Json::parse(circle_param_to_json(c).dump()));
  EXPECT_EQ(back.r, c.r);
  EXPECT_EQ(back.p, c.p);
  EXPECT_EQ(back.q, c.q);
}

TEST(Io, SpectrumCsv) {
  const auto s = summarize_spectrum((Vec(3) << 2.0, -1.0, 0.0).finished());
  std::ostringstream os;
  write_spectrum_csv(os, s);
  EXPECT_EQ(os.str(), "index,eigenvalue\n0,-1\n1,0\n2,2\n");
  const auto j = spectrum_to_json(s, true);
  EXPECT_EQ(j["kernel_dim"], 1);
  EXPECT_EQ(j["eigenvalues"].size(), 3u);
}

TEST(Io, ReportSerializationIsDeterministic) {
  MultiplicityConfig cfg;
  cfg.nodes = 16;
  cfg.search.starts = 8;
  const auto a = experiment_report_to_json(
      multiplicity_experiment(builtin::odd_decay_anisotropic(2), 0.02, cfg));
  const auto b = experiment_report_to_json(
      multiplicity_experiment(builtin::odd_decay_anisotropic(2), 0.02, cfg));
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_TRUE(a.contains("reduction"));
  EXPECT_EQ(a["candidates"].size(), a["reduction"]["critical_points"].size());
}

TEST(Io, GammaCsv) {
  std::ostringstream os;
  write_gamma_csv(os, {{-1.0, 0.5, 0.75}, {1.0, -0.25, 0.0}});
  EXPECT_EQ(os.str(), "r,gamma_min,gamma_max\n-1,0.5,0.75\n1,-0.25,0\n");
}

#include <sstream>
#include <string>

#include "doctest.h"
#include "metagfn/config.hpp"

using namespace metagfn;

namespace {

RunConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

void check_same(const RunConfig& a, const RunConfig& b) {
  CHECK(a.mode == b.mode);
  CHECK(a.out_dir == b.out_dir);
  CHECK(a.repeats == b.repeats);
  CHECK(a.seed == b.seed);
  CHECK(a.am_iterations == b.am_iterations);

  CHECK(a.train.env_name == b.train.env_name);
  CHECK(a.train.torus_potential_file == b.train.torus_potential_file);
  CHECK(a.train.batch_size == b.train.batch_size);
  CHECK(a.train.total_batches == b.train.total_batches);
  CHECK(a.train.lr0 == b.train.lr0);
  CHECK(a.train.logz_lr0 == b.train.logz_lr0);
  CHECK(a.train.clip_norm == b.train.clip_norm);
  CHECK(a.train.eval_every == b.train.eval_every);
  CHECK(a.train.eval_samples == b.train.eval_samples);
  CHECK(a.train.checkpoint_every == b.train.checkpoint_every);
  CHECK(a.train.loss.kind == b.train.loss.kind);
  CHECK(a.train.loss.lambda == b.train.loss.lambda);

  const StrategyConfig& sa = a.train.strategy;
  const StrategyConfig& sb = b.train.strategy;
  CHECK(sa.kind == sb.kind);
  CHECK(sa.sigma0 == sb.sigma0);
  CHECK(sa.n_heads == sb.n_heads);
  CHECK(sa.include_prob == sb.include_prob);
  CHECK(sa.freq_md == sb.freq_md);
  CHECK(sa.freq_rb == sb.freq_rb);
  CHECK(sa.variant == sb.variant);
  CHECK(sa.backward_noise_sigma0.has_value() ==
        sb.backward_noise_sigma0.has_value());
  if (sa.backward_noise_sigma0 && sb.backward_noise_sigma0)
    CHECK(*sa.backward_noise_sigma0 == *sb.backward_noise_sigma0);

  REQUIRE(a.metad.has_value());
  REQUIRE(b.metad.has_value());
  CHECK(a.metad->langevin.dt == b.metad->langevin.dt);
  CHECK(a.metad->langevin.gamma == b.metad->langevin.gamma);
  CHECK(a.metad->langevin.beta == b.metad->langevin.beta);
  CHECK(a.metad->stride == b.metad->stride);
  CHECK(a.metad->bias_height == b.metad->bias_height);
  CHECK(a.metad->epsilon == b.metad->epsilon);
  CHECK(a.metad->kernel_width == b.metad->kernel_width);
  CHECK(a.metad->grid_spacing == b.metad->grid_spacing);
}

}  // namespace

TEST_CASE("reference configs carry the per-environment setup") {
  const RunConfig line = default_run_config("line");
  CHECK(line.mode == RunMode::Train);
  CHECK(line.train.strategy.kind == StrategyKind::MetaGfn);
  CHECK(line.train.loss.kind == LossKind::TB);
  CHECK(line.train.batch_size == 64);
  CHECK(line.train.total_batches == 100000);
  CHECK(line.train.lr0 == 1e-3);
  CHECK(line.train.logz_lr0 == 0.1);
  CHECK(line.repeats == 1);
  REQUIRE(line.metad.has_value());
  CHECK(line.metad->langevin.dt == 0.05);
  CHECK(line.metad->stride == 2);
  CHECK(line.metad->bias_height == 0.15);
  CHECK(line.metad->kernel_width == 0.1);
  CHECK(line.metad->grid_spacing == 0.01);

  const RunConfig torus = default_run_config("torus");
  REQUIRE(torus.metad.has_value());
  CHECK(torus.metad->langevin.gamma == 0.1);
  CHECK(torus.metad->langevin.beta == 0.4009);
  CHECK(torus.metad->kernel_width == 10.0);

  CHECK_THROWS_WITH_AS(default_run_config("mountains"),
                       doctest::Contains("line, grid, torus"),
                       std::invalid_argument);
}

TEST_CASE("a config file overlays the reference setup") {
  const RunConfig cfg = parse_text(
      "# campaign\n"
      "[run]\n"
      "seed = 7   ; trailing comment\n"
      "repeats = 3\n"
      "\n"
      "[trainer]\n"
      "total_batches = 5000\n"
      "[strategy]\n"
      "kind = noisy\n"
      "sigma0 = 1.5\n");

  CHECK(cfg.seed == 7);
  CHECK(cfg.repeats == 3);
  CHECK(cfg.train.total_batches == 5000);
  CHECK(cfg.train.strategy.kind == StrategyKind::Noisy);
  CHECK(cfg.train.strategy.sigma0 == 1.5);
  // untouched settings keep the reference values
  CHECK(cfg.train.batch_size == 64);
  CHECK(cfg.train.loss.kind == LossKind::TB);
  CHECK(cfg.metad->bias_height == 0.15);
}

TEST_CASE("environment choice decides the defaults wherever it appears") {
  const RunConfig cfg = parse_text(
      "[metadynamics]\n"
      "w = 0.5\n"
      "[trainer]\n"
      "env = grid\n");
  CHECK(cfg.train.env_name == "grid");
  // grid defaults, with only the explicitly set key replaced
  CHECK(cfg.metad->bias_height == 0.5);
  CHECK(cfg.metad->langevin.dt == 0.35);
  CHECK(cfg.metad->stride == 3);
  CHECK(cfg.metad->kernel_width == 2.0);
  CHECK(cfg.metad->grid_spacing == 0.075);
}

TEST_CASE("the effective config echo re-parses to the same run") {
  RunConfig cfg = default_run_config("line");
  cfg.mode = RunMode::SampleAm;
  cfg.out_dir = "artifacts/run_01";
  cfg.repeats = 10;
  cfg.seed = 123456789012345ull;
  cfg.am_iterations = 4000;
  cfg.train.batch_size = 32;
  cfg.train.total_batches = 777;
  cfg.train.lr0 = 3.3333333333333331e-4;
  cfg.train.logz_lr0 = 0.25;
  cfg.train.clip_norm = 5.0;
  cfg.train.eval_every = 13;
  cfg.train.eval_samples = 99;
  cfg.train.checkpoint_every = 111;
  cfg.train.loss.kind = LossKind::SubTB;
  cfg.train.loss.lambda = 1.0 / 3.0;
  cfg.train.strategy.kind = StrategyKind::MetaGfn;
  cfg.train.strategy.variant = ReplayVariant::ReuseInitial;
  cfg.train.strategy.backward_noise_sigma0 = 0.7071067811865476;
  cfg.train.strategy.freq_md = 7;
  cfg.train.strategy.freq_rb = 3;
  cfg.metad->bias_height = 0.123456789012345678;
  cfg.metad->langevin.dt = 0.04999999999999999;

  std::ostringstream echo;
  write_run_config(echo, cfg);
  check_same(parse_text(echo.str()), cfg);

  SUBCASE("absent optional settings stay absent") {
    cfg.train.strategy.backward_noise_sigma0.reset();
    std::ostringstream echo2;
    write_run_config(echo2, cfg);
    const RunConfig back = parse_text(echo2.str());
    CHECK_FALSE(back.train.strategy.backward_noise_sigma0.has_value());
  }

  SUBCASE("non-default modes and losses survive the trip") {
    const RunConfig back = parse_text(echo.str());
    CHECK(back.mode == RunMode::SampleAm);
    CHECK(back.train.loss.kind == LossKind::SubTB);
    CHECK(back.train.strategy.variant == ReplayVariant::ReuseInitial);
  }
}

TEST_CASE("syntax problems are parse errors with the offending line") {
  CHECK_THROWS_WITH_AS(parse_text("[rocket]\n"),
                       doctest::Contains("unknown section"), ConfigParseError);
  CHECK_THROWS_WITH_AS(parse_text("[run]\nwarp = 9\n"),
                       doctest::Contains("unknown key"), ConfigParseError);
  CHECK_THROWS_WITH_AS(parse_text("[run]\nseed\n"),
                       doctest::Contains("expected key = value"),
                       ConfigParseError);
  CHECK_THROWS_WITH_AS(parse_text("seed = 1\n"),
                       doctest::Contains("outside any section"),
                       ConfigParseError);
  CHECK_THROWS_WITH_AS(parse_text("[run\nseed = 1\n"),
                       doctest::Contains("unterminated"), ConfigParseError);
  CHECK_THROWS_WITH_AS(parse_text("[run]\nseed = banana\n"),
                       doctest::Contains("line 2"), ConfigParseError);
  CHECK_THROWS_WITH_AS(parse_text("[trainer]\nlr0 = 1e-3x\n"),
                       doctest::Contains("expected a number"),
                       ConfigParseError);
  CHECK_THROWS_WITH_AS(parse_text("[run]\n = 5\n"),
                       doctest::Contains("empty key"), ConfigParseError);
}

TEST_CASE("bad names raise invalid-argument, not parse errors") {
  CHECK_THROWS_AS(parse_text("[trainer]\nenv = mountains\n"),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_text("[run]\nmode = resume\n"),
                       doctest::Contains("train, sample-am, eval"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_text("[loss]\nkind = mse\n"),
                       doctest::Contains("tb, db, subtb"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_text("[strategy]\nkind = greedy\n"),
                       doctest::Contains("on_policy, noisy"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_text("[strategy]\nvariant = sometimes\n"),
                  std::invalid_argument);
}

TEST_CASE("run validation rejects unusable campaigns") {
  RunConfig cfg = default_run_config("line");
  CHECK_NOTHROW(cfg.validate());

  RunConfig bad = cfg;
  bad.repeats = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.out_dir.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.am_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.train.batch_size = 0;  // trainer checks ride along
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.metad->stride = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.metad->langevin.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.metad->epsilon = -1e-3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("mode names round-trip") {
  for (RunMode m : {RunMode::Train, RunMode::SampleAm, RunMode::Eval}) {
    std::ostringstream os;
    RunConfig cfg = default_run_config("line");
    cfg.mode = m;
    write_run_config(os, cfg);
    CHECK(parse_text(os.str()).mode == m);
  }
  CHECK(std::string(run_mode_name(RunMode::SampleAm)) == "sample-am");
}

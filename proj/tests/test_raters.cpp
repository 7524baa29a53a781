#include "fluentrx/raters.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fluentrx/errors.hpp"
#include "fluentrx/rng.hpp"
#include "oracles.hpp"

using namespace fluentrx;

namespace {

RatingsTable two_by_two(double r1c1, double r1c2, double r2c1, double r2c2) {
  return RatingsTable({{"r1", "c1", r1c1},
                       {"r1", "c2", r1c2},
                       {"r2", "c1", r2c1},
                       {"r2", "c2", r2c2}});
}

std::vector<oracle::Observation> to_oracle(const RatingsTable& t) {
  std::vector<oracle::Observation> obs;
  for (const auto& r : t.rows()) obs.push_back({r.rater_id, r.clip_id, r.value});
  return obs;
}

}  // namespace

TEST(RatingsTable, AddValidatesRows) {
  RatingsTable t;
  t.add({"r1", "c1", 3.5});
  EXPECT_EQ(t.size(), 1u);
  EXPECT_THROW(t.add({"", "c2", 3.0}), std::invalid_argument);
  EXPECT_THROW(t.add({"r1", "", 3.0}), std::invalid_argument);
  EXPECT_THROW(t.add({"r1", "c2", 0.5}), std::invalid_argument);
  EXPECT_THROW(t.add({"r1", "c2", 7.5}), std::invalid_argument);
  EXPECT_THROW(t.add({"r1", "c1", 4.0}), std::invalid_argument);  // duplicate pair
  t.add({"r1", "c2", 1.0});
  t.add({"r2", "c1", 7.0});  // both scale endpoints are legal
  EXPECT_EQ(t.size(), 3u);
}

TEST(RatingsTable, UncheckedSkipsOnlyTheRangeCheck) {
  EXPECT_NO_THROW(RatingsTable::unchecked({{"r1", "c1", -2.3}}));
  EXPECT_THROW(RatingsTable::unchecked({{"r1", "c1", 3.0}, {"r1", "c1", 4.0}}),
               std::invalid_argument);
  EXPECT_THROW(RatingsTable::unchecked({{"", "c1", 3.0}}), std::invalid_argument);
}

TEST(RatingsTable, IdListsAreSortedAndUnique) {
  const RatingsTable t({{"zeta", "c2", 3}, {"alpha", "c1", 4}, {"zeta", "c1", 5}});
  EXPECT_EQ(t.rater_ids(), (std::vector<std::string>{"alpha", "zeta"}));
  EXPECT_EQ(t.clip_ids(), (std::vector<std::string>{"c1", "c2"}));
}

TEST(RatingsTable, CsvRoundTrip) {
  const RatingsTable t({{"r,odd", "clip \"q\"", 3.5}, {"r2", "c1", 7.0}});
  const RatingsTable back = RatingsTable::from_csv(t.to_csv());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.rows()[0].rater_id, "r,odd");
  EXPECT_EQ(back.rows()[0].clip_id, "clip \"q\"");
  EXPECT_EQ(back.rows()[0].value, 3.5);
  EXPECT_EQ(back.rows()[1].value, 7.0);
  EXPECT_EQ(back.to_csv(), t.to_csv());
}

TEST(RatingsTable, FromCsvRejectsBadInput) {
  EXPECT_THROW(RatingsTable::from_csv(""), ParseError);
  EXPECT_THROW(RatingsTable::from_csv("rater,clip,rating\n"), ParseError);
  EXPECT_THROW(RatingsTable::from_csv("rater_id,clip_id\n"), ParseError);
  try {
    RatingsTable::from_csv("rater_id,clip_id,rating\nr1,c1,9.5\n");
    FAIL() << "out-of-scale rating accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("outside [1, 7]"), std::string::npos);
  }
  EXPECT_THROW(RatingsTable::from_csv("rater_id,clip_id,rating\nr1,c1,abc\n"), ParseError);
  EXPECT_THROW(RatingsTable::from_csv("rater_id,clip_id,rating\nr1,c1,3\nr1,c1,4\n"),
               ParseError);
  EXPECT_THROW(RatingsTable::from_csv("rater_id,clip_id,rating\nr1,c1\n"), ParseError);
}

TEST(RatingsTable, FromCsvSkipsBlankLines) {
  const RatingsTable t =
      RatingsTable::from_csv("rater_id,clip_id,rating\nr1,c1,3\n,,\nr2,c1,4\n");
  EXPECT_EQ(t.size(), 2u);
}

TEST(RaterFit, FullCrossWorkedExample) {
  const RaterModel m = fit_rater_model(two_by_two(3, 5, 4, 6));
  EXPECT_NEAR(m.rater_bias.at("r1"), -0.5, 1e-12);
  EXPECT_NEAR(m.rater_bias.at("r2"), 0.5, 1e-12);
  EXPECT_NEAR(m.clip_effect.at("c1"), 3.5, 1e-12);
  EXPECT_NEAR(m.clip_effect.at("c2"), 5.5, 1e-12);
  EXPECT_NEAR(m.grand_mean, 4.5, 1e-12);
  EXPECT_NEAR(m.residual_variance, 0.0, 1e-18);
  EXPECT_NEAR(m.predict("r1", "c2"), 5.0, 1e-12);
  // Fallbacks: unknown rater uses zero bias, unknown clip the grand mean.
  EXPECT_NEAR(m.predict("stranger", "c1"), 3.5, 1e-12);
  EXPECT_NEAR(m.predict("r2", "unseen"), 5.0, 1e-12);
  EXPECT_NEAR(m.predict("stranger", "unseen"), 4.5, 1e-12);
}

TEST(RaterFit, PureInteractionLandsInTheResidual) {
  // A perfectly anti-additive table: biases and effects flatten out and all
  // structure becomes residual variance.
  const RaterModel m = fit_rater_model(two_by_two(3, 5, 5, 3));
  EXPECT_NEAR(m.rater_bias.at("r1"), 0.0, 1e-12);
  EXPECT_NEAR(m.rater_bias.at("r2"), 0.0, 1e-12);
  EXPECT_NEAR(m.clip_effect.at("c1"), 4.0, 1e-12);
  EXPECT_NEAR(m.clip_effect.at("c2"), 4.0, 1e-12);
  EXPECT_NEAR(m.residual_variance, 1.0, 1e-12);
}

TEST(RaterFit, SingleRaterPinsToZeroBias) {
  const RatingsTable t({{"r1", "c1", 2}, {"r1", "c2", 4}, {"r1", "c3", 6}});
  const RaterModel m = fit_rater_model(t);
  EXPECT_NEAR(m.rater_bias.at("r1"), 0.0, 1e-12);
  EXPECT_NEAR(m.clip_effect.at("c1"), 2.0, 1e-12);
  EXPECT_NEAR(m.clip_effect.at("c3"), 6.0, 1e-12);
  EXPECT_NEAR(m.grand_mean, 4.0, 1e-12);
}

TEST(RaterFit, EmptyTableIsADomainError) {
  EXPECT_THROW(fit_rater_model(RatingsTable{}), std::domain_error);
}

TEST(RaterFit, DisconnectedGraphListsComponents) {
  const RatingsTable t({{"rA", "c1", 3}, {"rB", "c2", 4}});
  try {
    fit_rater_model(t);
    FAIL() << "disconnected table fitted";
  } catch (const IdentifiabilityError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2 components"), std::string::npos) << msg;
    EXPECT_NE(msg.find("component 1 {rA, c1}"), std::string::npos) << msg;
    EXPECT_NE(msg.find("component 2 {rB, c2}"), std::string::npos) << msg;
  }
}

TEST(RaterFit, LargeComponentListingIsCapped) {
  // 12 raters on one clip form a 13-member component; the listing stops
  // after 8 names. Raters print before clips within a component.
  std::vector<Rating> rows;
  for (int i = 0; i < 12; ++i) rows.push_back({"a" + std::to_string(i), "c0", 3.0});
  rows.push_back({"lone", "island", 4.0});
  try {
    fit_rater_model(RatingsTable(std::move(rows)));
    FAIL() << "disconnected table fitted";
  } catch (const IdentifiabilityError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("... 5 more"), std::string::npos) << msg;
    EXPECT_NE(msg.find("component 2 {lone, island}"), std::string::npos) << msg;
  }
}

TEST(RaterFit, MatchesReducedGaugeReference) {
  RandomStream rng(60601);
  for (int instance = 0; instance < 50; ++instance) {
    GridRatingsConfig cfg;
    cfg.n_raters = 2 + static_cast<int>(rng.uniform01() * 7.0);
    cfg.n_clips = 2 + static_cast<int>(rng.uniform01() * 9.0);
    cfg.observed_fraction = 0.7;
    cfg.noise_std = 0.3;
    const SyntheticRatings data = make_grid_ratings(cfg, rng);
    const RaterModel fit = fit_rater_model(data.table);
    const oracle::TwoWayFit ref = oracle::fit_two_way(to_oracle(data.table));

    ASSERT_EQ(fit.rater_bias.size(), ref.alpha.size());
    ASSERT_EQ(fit.clip_effect.size(), ref.beta.size());
    for (const auto& [name, value] : ref.alpha)
      ASSERT_NEAR(fit.rater_bias.at(name), value, 1e-9) << "instance " << instance;
    for (const auto& [name, value] : ref.beta)
      ASSERT_NEAR(fit.clip_effect.at(name), value, 1e-9) << "instance " << instance;
    ASSERT_NEAR(fit.residual_variance, ref.residual_variance, 1e-9);
    ASSERT_NEAR(fit.grand_mean, ref.grand_mean, 1e-12);
  }
}

TEST(RaterFit, ResidualsAreOrthogonalToTheDesign) {
  RandomStream rng(2405);
  GridRatingsConfig cfg;
  cfg.n_raters = 10;
  cfg.n_clips = 25;
  cfg.noise_std = 0.5;
  const SyntheticRatings data = make_grid_ratings(cfg, rng);
  const RaterModel m = fit_rater_model(data.table);

  std::map<std::string, double> by_rater, by_clip;
  double bias_sum = 0.0;
  for (const auto& [name, b] : m.rater_bias) bias_sum += b;
  EXPECT_NEAR(bias_sum, 0.0, 1e-9);
  for (const auto& r : data.table.rows()) {
    const double e = r.value - m.predict(r.rater_id, r.clip_id);
    by_rater[r.rater_id] += e;
    by_clip[r.clip_id] += e;
  }
  for (const auto& [name, s] : by_rater) EXPECT_NEAR(s, 0.0, 1e-8) << "rater " << name;
  for (const auto& [name, s] : by_clip) EXPECT_NEAR(s, 0.0, 1e-8) << "clip " << name;
}

TEST(RaterFit, GaugeShiftLeavesPredictionsAlone) {
  RandomStream rng(515);
  GridRatingsConfig cfg;
  cfg.n_raters = 6;
  cfg.n_clips = 8;
  const SyntheticRatings data = make_grid_ratings(cfg, rng);
  const RaterModel m = fit_rater_model(data.table);
  RaterModel shifted = m;
  const double c = 1.75;
  for (auto& [name, b] : shifted.rater_bias) b -= c;
  for (auto& [name, e] : shifted.clip_effect) e += c;
  for (const auto& r : data.table.rows())
    EXPECT_NEAR(shifted.predict(r.rater_id, r.clip_id), m.predict(r.rater_id, r.clip_id),
                1e-12);
  const RaterMetrics a = evaluate(m, data.table);
  const RaterMetrics b = evaluate(shifted, data.table);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-12);
  ASSERT_TRUE(a.r_squared && b.r_squared);
  EXPECT_NEAR(*a.r_squared, *b.r_squared, 1e-12);
}

TEST(Standardize, SubtractsFittedBiasPerRater) {
  const RatingsTable t = two_by_two(3, 5, 4, 6);
  const RaterModel m = fit_rater_model(t);
  const RatingsTable out = standardize(t, m);
  ASSERT_EQ(out.size(), 4u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Rating& raw = t.rows()[i];
    const Rating& adj = out.rows()[i];
    EXPECT_EQ(adj.rater_id, raw.rater_id);
    EXPECT_EQ(adj.clip_id, raw.clip_id);
    EXPECT_EQ(adj.value, raw.value - m.rater_bias.at(raw.rater_id));
  }
  // After correction the two raters agree on each clip.
  EXPECT_NEAR(out.rows()[0].value, out.rows()[2].value, 1e-12);
  EXPECT_NEAR(out.rows()[1].value, out.rows()[3].value, 1e-12);
}

TEST(Standardize, IsIdempotentUpToRounding) {
  RandomStream rng(99);
  GridRatingsConfig cfg;
  cfg.n_raters = 8;
  cfg.n_clips = 12;
  const SyntheticRatings data = make_grid_ratings(cfg, rng);
  const RatingsTable once = standardize(data.table, fit_rater_model(data.table));
  const RaterModel refit = fit_rater_model(once);
  for (const auto& [name, b] : refit.rater_bias) EXPECT_NEAR(b, 0.0, 1e-9) << name;
}

TEST(Standardize, UnknownRaterIsRejected) {
  const RaterModel m = fit_rater_model(two_by_two(3, 5, 4, 6));
  const RatingsTable other({{"r9", "c1", 4.0}});
  EXPECT_THROW(standardize(other, m), std::invalid_argument);
}

TEST(Metrics, PerfectFitAndDegenerateCases) {
  const RatingsTable t = two_by_two(3, 5, 4, 6);
  const RaterModel m = fit_rater_model(t);
  const RaterMetrics metrics = evaluate(m, t);
  EXPECT_NEAR(metrics.rmse, 0.0, 1e-12);
  ASSERT_TRUE(metrics.r_squared.has_value());
  EXPECT_NEAR(*metrics.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(metrics.baseline_rmse, 1.118033988749895, 1e-12);
  ASSERT_TRUE(metrics.median_per_clip_std.has_value());
  EXPECT_NEAR(*metrics.median_per_clip_std, 0.7071067811865476, 1e-12);

  // Constant ratings carry no variance to explain.
  const RatingsTable flat({{"r1", "c1", 4}, {"r1", "c2", 4}, {"r2", "c1", 4}});
  const RaterMetrics fm = evaluate(fit_rater_model(flat), flat);
  EXPECT_FALSE(fm.r_squared.has_value());
  EXPECT_NEAR(fm.rmse, 0.0, 1e-12);

  // No clip rated twice: the scatter statistic is undefined.
  const RatingsTable thin({{"r1", "c1", 3}, {"r1", "c2", 5}});
  const RaterMetrics tm = evaluate(fit_rater_model(thin), thin);
  EXPECT_FALSE(tm.median_per_clip_std.has_value());

  EXPECT_THROW(evaluate(m, RatingsTable{}), std::invalid_argument);
}

TEST(Split, ObservationModeSizesAndDeterminism) {
  std::vector<Rating> rows;
  for (int i = 0; i < 195; ++i)
    rows.push_back({"r" + std::to_string(i % 13), "c" + std::to_string(i), 4.0});
  const RatingsTable t(std::move(rows));

  RandomStream rng(42);
  const auto [train, val] = split_ratings(t, 0.7, rng);
  EXPECT_EQ(train.size(), 136u);  // floor(0.7 * 195)
  EXPECT_EQ(val.size(), 59u);

  // Same seed, same split; the two sides partition the table exactly.
  RandomStream rng2(42);
  const auto [train2, val2] = split_ratings(t, 0.7, rng2);
  EXPECT_EQ(train.to_csv(), train2.to_csv());
  EXPECT_EQ(val.to_csv(), val2.to_csv());

  std::set<std::string> seen;
  for (const auto& r : train.rows()) seen.insert(r.clip_id);
  for (const auto& r : val.rows()) EXPECT_EQ(seen.count(r.clip_id), 0u);
  EXPECT_EQ(train.size() + val.size(), t.size());

  RandomStream rng3(43);
  const auto [train3, val3] = split_ratings(t, 0.7, rng3);
  EXPECT_NE(train.to_csv(), train3.to_csv());
}

TEST(Split, BothSidesStayNonEmpty) {
  std::vector<Rating> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({"r1", "c" + std::to_string(i), 4.0});
  const RatingsTable t(std::move(rows));
  RandomStream rng(7);
  const auto [hi_train, hi_val] = split_ratings(t, 0.999, rng);
  EXPECT_EQ(hi_train.size(), 9u);
  EXPECT_EQ(hi_val.size(), 1u);
  const auto [lo_train, lo_val] = split_ratings(t, 0.0001, rng);
  EXPECT_EQ(lo_train.size(), 1u);
  EXPECT_EQ(lo_val.size(), 9u);
}

TEST(Split, RejectsDegenerateRequests) {
  const RatingsTable t({{"r1", "c1", 4}, {"r1", "c2", 5}});
  RandomStream rng(7);
  EXPECT_THROW(split_ratings(t, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(split_ratings(t, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(split_ratings(RatingsTable({{"r1", "c1", 4}}), 0.5, rng),
               std::invalid_argument);
}

TEST(Split, ChannelModeKeepsChannelsWhole) {
  std::vector<Rating> rows;
  for (int ch = 0; ch < 6; ++ch)
    for (int c = 0; c < 4; ++c)
      for (int r = 0; r < 2; ++r)
        rows.push_back({"r" + std::to_string(r),
                        "ch" + std::to_string(ch) + "_clip" + std::to_string(c), 4.0});
  const RatingsTable t(std::move(rows));
  RandomStream rng(11);
  const auto [train, val] = split_ratings(t, 0.5, rng, SplitMode::channel);
  auto channels = [](const RatingsTable& side) {
    std::set<std::string> out;
    for (const auto& r : side.rows())
      out.insert(r.clip_id.substr(0, r.clip_id.find('_')));
    return out;
  };
  const auto train_ch = channels(train);
  const auto val_ch = channels(val);
  EXPECT_EQ(train_ch.size(), 3u);  // floor(0.5 * 6)
  EXPECT_EQ(val_ch.size(), 3u);
  for (const auto& ch : train_ch) EXPECT_EQ(val_ch.count(ch), 0u);
  EXPECT_EQ(train.size() + val.size(), t.size());

  // One channel cannot be split across sides.
  const RatingsTable single({{"r1", "solo_c1", 4}, {"r2", "solo_c2", 5}});
  RandomStream rng2(1);
  EXPECT_THROW(split_ratings(single, 0.5, rng2, SplitMode::channel), std::invalid_argument);
}

TEST(Generators, SyntheticRatingsRespectTheShape) {
  SyntheticRatingsConfig cfg;  // 12 raters, 19 channels, 9..11 clips, panels of 3
  RandomStream rng(42);
  const SyntheticRatings data = make_synthetic_ratings(cfg, rng);

  EXPECT_EQ(data.true_rater_bias.size(), 12u);
  double bias_sum = 0.0;
  for (const auto& [name, b] : data.true_rater_bias) bias_sum += b;
  EXPECT_NEAR(bias_sum, 0.0, 1e-12);

  std::map<std::string, std::set<std::string>> clips_by_channel;
  std::map<std::string, int> ratings_per_clip;
  for (const auto& r : data.table.rows()) {
    EXPECT_GE(r.value, 1.0);
    EXPECT_LE(r.value, 7.0);
    const std::string channel = r.clip_id.substr(0, r.clip_id.find('_'));
    clips_by_channel[channel].insert(r.clip_id);
    ratings_per_clip[r.clip_id] += 1;
  }
  EXPECT_EQ(clips_by_channel.size(), 19u);
  for (const auto& [channel, clips] : clips_by_channel) {
    EXPECT_GE(clips.size(), 9u) << channel;
    EXPECT_LE(clips.size(), 11u) << channel;
  }
  for (const auto& [clip, n] : ratings_per_clip) EXPECT_EQ(n, 3) << clip;
  EXPECT_EQ(data.true_clip_effect.size(), ratings_per_clip.size());

  // Connected by construction: the fit must go through.
  EXPECT_NO_THROW(fit_rater_model(data.table));

  RandomStream again(42);
  EXPECT_EQ(make_synthetic_ratings(cfg, again).table.to_csv(), data.table.to_csv());
  RandomStream other(43);
  EXPECT_NE(make_synthetic_ratings(cfg, other).table.to_csv(), data.table.to_csv());
}

TEST(Generators, GridRatingsCoverEveryoneAndRecoverTruth) {
  GridRatingsConfig cfg;  // 20 raters, 50 clips, 60% fill, noise 0.1
  RandomStream rng(1729);
  const SyntheticRatings data = make_grid_ratings(cfg, rng);
  EXPECT_EQ(data.table.rater_ids().size(), 20u);
  EXPECT_EQ(data.table.clip_ids().size(), 50u);

  const RaterModel m = fit_rater_model(data.table);
  double acc = 0.0;
  for (const auto& [name, truth] : data.true_rater_bias) {
    const double err = m.rater_bias.at(name) - truth;
    acc += err * err;
  }
  const double rms_alpha = std::sqrt(acc / static_cast<double>(data.true_rater_bias.size()));
  EXPECT_LE(rms_alpha, 0.05);

  acc = 0.0;
  for (const auto& [name, truth] : data.true_clip_effect) {
    const double err = m.clip_effect.at(name) - truth;
    acc += err * err;
  }
  const double rms_beta = std::sqrt(acc / static_cast<double>(data.true_clip_effect.size()));
  EXPECT_LE(rms_beta, 0.05);

  EXPECT_THROW(make_grid_ratings(GridRatingsConfig{.n_raters = 0}, rng),
               std::invalid_argument);
  EXPECT_THROW(make_grid_ratings(GridRatingsConfig{.observed_fraction = 0.0}, rng),
               std::invalid_argument);
}

TEST(Generators, SyntheticConfigValidation) {
  RandomStream rng(5);
  SyntheticRatingsConfig bad;
  bad.raters_per_clip = 0;
  EXPECT_THROW(make_synthetic_ratings(bad, rng), std::invalid_argument);
  bad = {};
  bad.max_clips_per_channel = 2;  // below the minimum of 9
  EXPECT_THROW(make_synthetic_ratings(bad, rng), std::invalid_argument);
  bad = {};
  bad.noise_std = -0.1;
  EXPECT_THROW(make_synthetic_ratings(bad, rng), std::invalid_argument);
}

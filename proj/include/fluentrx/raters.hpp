#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fluentrx/rng.hpp"

namespace fluentrx {

struct Rating {
  std::string rater_id;
  std::string clip_id;
  double value = 0.0;  // raw scale 1..7 inclusive
};

// Observation list keyed by (rater, clip); duplicates are rejected. Rows
// built through add()/from_csv() must sit on the raw 1..7 scale; the
// unchecked() factory skips only that range check (bias-corrected values
// legitimately leave the raw scale) while still enforcing uniqueness.
class RatingsTable {
 public:
  RatingsTable() = default;
  explicit RatingsTable(std::vector<Rating> rows);
  static RatingsTable unchecked(std::vector<Rating> rows);

  // std::invalid_argument on empty ids, out-of-range value, or duplicate
  // (rater, clip).
  void add(Rating row);

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::span<const Rating> rows() const { return rows_; }
  std::vector<std::string> rater_ids() const;  // sorted, unique
  std::vector<std::string> clip_ids() const;   // sorted, unique

  // Header must be exactly rater_id,clip_id,rating. Throws ParseError.
  static RatingsTable from_csv(std::string_view text);
  std::string to_csv() const;

 private:
  std::vector<Rating> rows_;
  std::set<std::pair<std::string, std::string>> seen_;
};

// Additive two-way model rating ~ rater_bias + clip_effect + noise, with
// rater biases constrained to sum to zero.
struct RaterModel {
  std::map<std::string, double> rater_bias;
  std::map<std::string, double> clip_effect;
  double residual_variance = 0.0;  // SSE / n_obs on the fitted data
  double grand_mean = 0.0;         // mean of the fitted ratings

  // Unseen rater predicts with bias 0 (biases are mean-zero); unseen clip
  // falls back to grand_mean.
  double predict(std::string_view rater, std::string_view clip) const;
};

// Least squares under the sum-zero gauge. Throws std::domain_error on an
// empty table and IdentifiabilityError (listing the components) when the
// rater/clip graph is disconnected.
RaterModel fit_rater_model(const RatingsTable& table);

// Subtracts each rater's fitted bias. A rater missing from the model
// throws std::invalid_argument.
RatingsTable standardize(const RatingsTable& table, const RaterModel& model);

struct RaterMetrics {
  double rmse = 0.0;
  std::optional<double> r_squared;            // absent when ratings have no variance
  std::optional<double> median_per_clip_std;  // absent when no clip has >= 2 ratings
  double baseline_rmse = 0.0;                 // grand-mean predictor (training mean)
};

RaterMetrics evaluate(const RaterModel& model, const RatingsTable& table);

enum class SplitMode { observation, channel };

// Deterministic shuffle split. The train side gets floor(fraction * n)
// units, clamped so both sides stay non-empty; channel mode splits whole
// channels, a channel being the clip id prefix before the first '_'.
std::pair<RatingsTable, RatingsTable> split_ratings(const RatingsTable& table,
                                                    double train_fraction,
                                                    RandomStream& rng,
                                                    SplitMode mode = SplitMode::observation);

// Channel-shaped synthetic data: n_channels channels of 9..11 clips, each
// channel rated by up to raters_per_clip raters from a shared pool, clip
// quality drawn per channel with per-clip scatter. Values are clamped to
// the raw 1..7 scale.
struct SyntheticRatingsConfig {
  int n_raters = 12;
  int n_channels = 19;
  int min_clips_per_channel = 9;
  int max_clips_per_channel = 11;
  int raters_per_clip = 3;
  double rater_bias_std = 0.5;
  double channel_effect_min = 2.5;
  double channel_effect_max = 5.5;
  double clip_scatter_std = 0.25;
  double noise_std = 0.3;
};

// Flat design: every (rater, clip) pair observed independently with
// probability observed_fraction.
struct GridRatingsConfig {
  int n_raters = 20;
  int n_clips = 50;
  double observed_fraction = 0.6;
  double rater_bias_std = 0.5;
  double clip_effect_min = 2.5;
  double clip_effect_max = 5.5;
  double noise_std = 0.1;
};

struct SyntheticRatings {
  RatingsTable table;
  std::map<std::string, double> true_rater_bias;  // centered, sums to zero
  std::map<std::string, double> true_clip_effect;
};

// Both generators redraw (bounded retries) until every rater and clip is
// observed and the incidence graph is connected, so fitting cannot hit an
// identifiability failure on their output.
SyntheticRatings make_synthetic_ratings(const SyntheticRatingsConfig& cfg, RandomStream& rng);
SyntheticRatings make_grid_ratings(const GridRatingsConfig& cfg, RandomStream& rng);

}  // namespace fluentrx

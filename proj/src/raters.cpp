#include "fluentrx/raters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Dense>

#include "fluentrx/csv.hpp"
#include "fluentrx/errors.hpp"

namespace fluentrx {

namespace {

constexpr std::string_view kRatingsHeader[] = {"rater_id", "clip_id", "rating"};

std::string channel_of(std::string_view clip_id) {
  const auto us = clip_id.find('_');
  return std::string(us == std::string_view::npos ? clip_id : clip_id.substr(0, us));
}

// Union-find over rater and clip nodes, for connectivity checks.
class Dsu {
 public:
  explicit Dsu(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

std::string zero_padded(std::string_view prefix, int index, int count) {
  int width = 2;
  for (int v = count; v >= 100; v /= 10) ++width;
  std::string digits = std::to_string(index);
  std::string out(prefix);
  out.append(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))),
             '0');
  out += digits;
  return out;
}

double clamp_rating(double v) { return std::clamp(v, 1.0, 7.0); }

// Shared tail of the generators: index maps, connectivity, truth packaging.
bool connected_and_covered(const std::vector<Rating>& rows, int n_raters, int n_clips,
                           const std::vector<std::string>& rater_ids,
                           const std::vector<std::string>& clip_ids) {
  if (rows.empty()) return false;
  std::unordered_map<std::string_view, std::size_t> rater_index, clip_index;
  for (std::size_t i = 0; i < rater_ids.size(); ++i) rater_index[rater_ids[i]] = i;
  for (std::size_t j = 0; j < clip_ids.size(); ++j) clip_index[clip_ids[j]] = j;
  std::vector<bool> rater_seen(rater_ids.size(), false), clip_seen(clip_ids.size(), false);
  Dsu dsu(rater_ids.size() + clip_ids.size());
  for (const auto& r : rows) {
    const auto ri = rater_index.at(r.rater_id);
    const auto ci = clip_index.at(r.clip_id);
    rater_seen[ri] = true;
    clip_seen[ci] = true;
    dsu.unite(ri, rater_ids.size() + ci);
  }
  if (std::count(rater_seen.begin(), rater_seen.end(), true) != n_raters) return false;
  if (std::count(clip_seen.begin(), clip_seen.end(), true) != n_clips) return false;
  const std::size_t root = dsu.find(0);
  for (std::size_t k = 0; k < rater_ids.size() + clip_ids.size(); ++k)
    if (dsu.find(k) != root) return false;
  return true;
}

std::vector<double> centered_biases(int n, double std, RandomStream& rng) {
  std::vector<double> alpha(static_cast<std::size_t>(n));
  for (auto& a : alpha) a = rng.normal(0.0, std);
  const double mean = std::accumulate(alpha.begin(), alpha.end(), 0.0) / n;
  for (auto& a : alpha) a -= mean;
  return alpha;
}

}  // namespace

RatingsTable::RatingsTable(std::vector<Rating> rows) {
  for (auto& r : rows) add(std::move(r));
}

RatingsTable RatingsTable::unchecked(std::vector<Rating> rows) {
  RatingsTable t;
  for (auto& r : rows) {
    if (r.rater_id.empty() || r.clip_id.empty())
      throw std::invalid_argument("rating with an empty id");
    if (!t.seen_.insert({r.rater_id, r.clip_id}).second)
      throw std::invalid_argument("duplicate rating for (" + r.rater_id + ", " + r.clip_id +
                                  ")");
    t.rows_.push_back(std::move(r));
  }
  return t;
}

void RatingsTable::add(Rating row) {
  if (row.rater_id.empty() || row.clip_id.empty())
    throw std::invalid_argument("rating with an empty id");
  if (!(row.value >= 1.0 && row.value <= 7.0))
    throw std::invalid_argument("rating " + format_double(row.value) + " for (" +
                                row.rater_id + ", " + row.clip_id + ") outside [1, 7]");
  if (!seen_.insert({row.rater_id, row.clip_id}).second)
    throw std::invalid_argument("duplicate rating for (" + row.rater_id + ", " + row.clip_id +
                                ")");
  rows_.push_back(std::move(row));
}

std::vector<std::string> RatingsTable::rater_ids() const {
  std::set<std::string> ids;
  for (const auto& r : rows_) ids.insert(r.rater_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> RatingsTable::clip_ids() const {
  std::set<std::string> ids;
  for (const auto& r : rows_) ids.insert(r.clip_id);
  return {ids.begin(), ids.end()};
}

RatingsTable RatingsTable::from_csv(std::string_view text) {
  CsvReader reader(text);
  const auto header = reader.next_row();
  if (!header) throw ParseError("ratings file is empty", 1);
  if (header->size() != 3)
    throw ParseError("line 1: ratings header has " + std::to_string(header->size()) +
                         " columns, expected 3",
                     1);
  for (std::size_t i = 0; i < 3; ++i) {
    if ((*header)[i] != kRatingsHeader[i])
      throw ParseError("line 1, column " + std::to_string(i + 1) + ": header '" +
                           (*header)[i] + "', expected '" + std::string(kRatingsHeader[i]) +
                           "'",
                       1, static_cast<int>(i + 1));
  }
  RatingsTable t;
  while (auto row = reader.next_row()) {
    const int line = reader.row_line();
    const bool blank =
        std::all_of(row->begin(), row->end(), [](const std::string& f) { return f.empty(); });
    if (blank) continue;
    if (row->size() != 3)
      throw ParseError("line " + std::to_string(line) + ": expected 3 fields, got " +
                           std::to_string(row->size()),
                       line);
    Rating r{(*row)[0], (*row)[1], parse_csv_double((*row)[2], line, 3)};
    try {
      t.add(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
    }
  }
  return t;
}

std::string RatingsTable::to_csv() const {
  std::ostringstream out;
  out << "rater_id,clip_id,rating\n";
  for (const auto& r : rows_)
    out << csv_quote(r.rater_id) << ',' << csv_quote(r.clip_id) << ','
        << format_double(r.value) << '\n';
  return out.str();
}

double RaterModel::predict(std::string_view rater, std::string_view clip) const {
  const auto ra = rater_bias.find(std::string(rater));
  const auto cl = clip_effect.find(std::string(clip));
  const double bias = ra == rater_bias.end() ? 0.0 : ra->second;
  const double effect = cl == clip_effect.end() ? grand_mean : cl->second;
  return bias + effect;
}

RaterModel fit_rater_model(const RatingsTable& table) {
  if (table.empty()) throw std::domain_error("cannot fit an empty ratings table");
  const auto raters = table.rater_ids();
  const auto clips = table.clip_ids();
  const std::size_t R = raters.size();
  const std::size_t C = clips.size();
  std::unordered_map<std::string_view, std::size_t> rater_index, clip_index;
  for (std::size_t i = 0; i < R; ++i) rater_index[raters[i]] = i;
  for (std::size_t j = 0; j < C; ++j) clip_index[clips[j]] = j;

  // Connectivity first: a split graph has a one-parameter family of
  // per-component level shifts, so the gauge cannot pin the solution.
  Dsu dsu(R + C);
  for (const auto& r : table.rows())
    dsu.unite(rater_index.at(r.rater_id), R + clip_index.at(r.clip_id));
  std::map<std::size_t, std::vector<std::string>> components;
  for (std::size_t i = 0; i < R; ++i) components[dsu.find(i)].push_back(raters[i]);
  for (std::size_t j = 0; j < C; ++j) components[dsu.find(R + j)].push_back(clips[j]);
  if (components.size() > 1) {
    std::ostringstream msg;
    msg << "rating graph splits into " << components.size() << " components:";
    int idx = 0;
    for (const auto& [root, members] : components) {
      ++idx;
      msg << (idx > 1 ? ";" : "") << " component " << idx << " {";
      for (std::size_t k = 0; k < members.size(); ++k) {
        if (k) msg << ", ";
        if (k == 8 && members.size() > 9) {
          msg << "... " << members.size() - k << " more";
          break;
        }
        msg << members[k];
      }
      msg << "}";
    }
    throw IdentifiabilityError(msg.str());
  }

  // Normal equations bordered with the sum-zero constraint on rater biases.
  const std::size_t dim = R + C + 1;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& r : table.rows()) {
    const auto i = static_cast<Eigen::Index>(rater_index.at(r.rater_id));
    const auto j = static_cast<Eigen::Index>(R + clip_index.at(r.clip_id));
    K(i, i) += 1.0;
    K(j, j) += 1.0;
    K(i, j) += 1.0;
    K(j, i) += 1.0;
    rhs(i) += r.value;
    rhs(j) += r.value;
  }
  for (std::size_t i = 0; i < R; ++i) {
    K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(R + C)) = 1.0;
    K(static_cast<Eigen::Index>(R + C), static_cast<Eigen::Index>(i)) = 1.0;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible())
    throw IdentifiabilityError("rating design is numerically singular");
  const Eigen::VectorXd sol = lu.solve(rhs);

  RaterModel model;
  for (std::size_t i = 0; i < R; ++i)
    model.rater_bias[raters[i]] = sol(static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < C; ++j)
    model.clip_effect[clips[j]] = sol(static_cast<Eigen::Index>(R + j));
  double sse = 0.0;
  double sum = 0.0;
  for (const auto& r : table.rows()) {
    const double e = r.value - model.predict(r.rater_id, r.clip_id);
    sse += e * e;
    sum += r.value;
  }
  model.residual_variance = sse / static_cast<double>(table.size());
  model.grand_mean = sum / static_cast<double>(table.size());
  return model;
}

RatingsTable standardize(const RatingsTable& table, const RaterModel& model) {
  std::vector<Rating> out;
  out.reserve(table.size());
  for (const auto& r : table.rows()) {
    const auto it = model.rater_bias.find(r.rater_id);
    if (it == model.rater_bias.end())
      throw std::invalid_argument("unknown rater '" + r.rater_id + "'");
    out.push_back(Rating{r.rater_id, r.clip_id, r.value - it->second});
  }
  return RatingsTable::unchecked(std::move(out));
}

RaterMetrics evaluate(const RaterModel& model, const RatingsTable& table) {
  if (table.empty()) throw std::invalid_argument("cannot evaluate on an empty table");
  const double n = static_cast<double>(table.size());
  double sse = 0.0, sse_baseline = 0.0, sum = 0.0;
  for (const auto& r : table.rows()) {
    const double e = r.value - model.predict(r.rater_id, r.clip_id);
    sse += e * e;
    const double eb = r.value - model.grand_mean;
    sse_baseline += eb * eb;
    sum += r.value;
  }
  const double mean = sum / n;
  double sst = 0.0;
  std::map<std::string, std::vector<double>> by_clip;
  for (const auto& r : table.rows()) {
    sst += (r.value - mean) * (r.value - mean);
    by_clip[r.clip_id].push_back(r.value);
  }

  RaterMetrics m;
  m.rmse = std::sqrt(sse / n);
  m.baseline_rmse = std::sqrt(sse_baseline / n);
  if (sst > 0.0) m.r_squared = 1.0 - sse / sst;
  std::vector<double> stds;
  for (const auto& [clip, values] : by_clip) {
    if (values.size() < 2) continue;
    const double cm = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double acc = 0.0;
    for (double v : values) acc += (v - cm) * (v - cm);
    stds.push_back(std::sqrt(acc / (static_cast<double>(values.size()) - 1.0)));
  }
  if (!stds.empty()) {
    std::sort(stds.begin(), stds.end());
    const std::size_t h = stds.size() / 2;
    m.median_per_clip_std =
        stds.size() % 2 ? stds[h] : 0.5 * (stds[h - 1] + stds[h]);
  }
  return m;
}

std::pair<RatingsTable, RatingsTable> split_ratings(const RatingsTable& table,
                                                    double train_fraction, RandomStream& rng,
                                                    SplitMode mode) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train fraction must lie strictly between 0 and 1");

  auto shuffled = [&rng](std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      auto j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
      if (j >= i) j = i - 1;
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  };

  std::vector<Rating> train, val;
  if (mode == SplitMode::observation) {
    const std::size_t n = table.size();
    if (n < 2) throw std::invalid_argument("need at least 2 observations to split");
    const auto idx = shuffled(n);
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<bool> in_train(n, false);
    for (std::size_t k = 0; k < n_train; ++k) in_train[idx[k]] = true;
    for (std::size_t k = 0; k < n; ++k)
      (in_train[k] ? train : val).push_back(table.rows()[k]);
  } else {
    std::set<std::string> channel_set;
    for (const auto& r : table.rows()) channel_set.insert(channel_of(r.clip_id));
    const std::vector<std::string> channels(channel_set.begin(), channel_set.end());
    if (channels.size() < 2)
      throw std::invalid_argument("need at least 2 channels for a channel split");
    const auto idx = shuffled(channels.size());
    auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(channels.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, channels.size() - 1);
    std::set<std::string> train_channels;
    for (std::size_t k = 0; k < n_train; ++k) train_channels.insert(channels[idx[k]]);
    for (const auto& r : table.rows())
      (train_channels.count(channel_of(r.clip_id)) ? train : val).push_back(r);
    if (train.empty() || val.empty())
      throw std::invalid_argument("channel split left one side empty");
  }
  return {RatingsTable::unchecked(std::move(train)), RatingsTable::unchecked(std::move(val))};
}

SyntheticRatings make_synthetic_ratings(const SyntheticRatingsConfig& cfg, RandomStream& rng) {
  if (cfg.n_raters < 1 || cfg.n_channels < 1 || cfg.min_clips_per_channel < 1 ||
      cfg.max_clips_per_channel < cfg.min_clips_per_channel || cfg.raters_per_clip < 1 ||
      !(cfg.rater_bias_std >= 0.0) || !(cfg.clip_scatter_std >= 0.0) ||
      !(cfg.noise_std >= 0.0) || cfg.channel_effect_min > cfg.channel_effect_max)
    throw std::invalid_argument("bad synthetic ratings configuration");

  std::vector<std::string> rater_ids;
  for (int i = 0; i < cfg.n_raters; ++i)
    rater_ids.push_back(zero_padded("r", i + 1, cfg.n_raters));

  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto alpha = centered_biases(cfg.n_raters, cfg.rater_bias_std, rng);
    std::vector<Rating> rows;
    std::vector<std::string> clip_ids;
    std::map<std::string, double> beta;
    const int panel = std::min(cfg.raters_per_clip, cfg.n_raters);
    for (int ch = 0; ch < cfg.n_channels; ++ch) {
      const std::string channel = zero_padded("ch", ch + 1, cfg.n_channels);
      const int span = cfg.max_clips_per_channel - cfg.min_clips_per_channel + 1;
      int n_clips = cfg.min_clips_per_channel +
                    static_cast<int>(rng.uniform01() * static_cast<double>(span));
      n_clips = std::min(n_clips, cfg.max_clips_per_channel);
      const double channel_effect =
          rng.uniform(cfg.channel_effect_min, cfg.channel_effect_max);
      // The channel's panel: first `panel` entries of a shuffled rater list.
      std::vector<std::size_t> order(static_cast<std::size_t>(cfg.n_raters));
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
        if (j >= i) j = i - 1;
        std::swap(order[i - 1], order[j]);
      }
      for (int c = 0; c < n_clips; ++c) {
        const std::string clip = channel + "_" + zero_padded("clip", c + 1, n_clips);
        clip_ids.push_back(clip);
        const double effect = channel_effect + rng.normal(0.0, cfg.clip_scatter_std);
        beta[clip] = effect;
        for (int k = 0; k < panel; ++k) {
          const auto rater = order[static_cast<std::size_t>(k)];
          const double value =
              clamp_rating(alpha[rater] + effect + rng.normal(0.0, cfg.noise_std));
          rows.push_back(Rating{rater_ids[rater], clip, value});
        }
      }
    }
    if (!connected_and_covered(rows, cfg.n_raters, static_cast<int>(clip_ids.size()),
                               rater_ids, clip_ids))
      continue;
    SyntheticRatings out;
    out.table = RatingsTable(std::move(rows));
    for (int i = 0; i < cfg.n_raters; ++i)
      out.true_rater_bias[rater_ids[static_cast<std::size_t>(i)]] =
          alpha[static_cast<std::size_t>(i)];
    out.true_clip_effect = std::move(beta);
    return out;
  }
  throw std::runtime_error("could not draw a connected synthetic ratings table");
}

SyntheticRatings make_grid_ratings(const GridRatingsConfig& cfg, RandomStream& rng) {
  if (cfg.n_raters < 1 || cfg.n_clips < 1 ||
      !(cfg.observed_fraction > 0.0 && cfg.observed_fraction <= 1.0) ||
      !(cfg.rater_bias_std >= 0.0) || !(cfg.noise_std >= 0.0) ||
      cfg.clip_effect_min > cfg.clip_effect_max)
    throw std::invalid_argument("bad grid ratings configuration");

  std::vector<std::string> rater_ids, clip_ids;
  for (int i = 0; i < cfg.n_raters; ++i)
    rater_ids.push_back(zero_padded("r", i + 1, cfg.n_raters));
  for (int j = 0; j < cfg.n_clips; ++j)
    clip_ids.push_back(zero_padded("clip", j + 1, cfg.n_clips));

  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto alpha = centered_biases(cfg.n_raters, cfg.rater_bias_std, rng);
    std::vector<double> beta(static_cast<std::size_t>(cfg.n_clips));
    for (auto& b : beta) b = rng.uniform(cfg.clip_effect_min, cfg.clip_effect_max);
    std::vector<Rating> rows;
    for (int i = 0; i < cfg.n_raters; ++i) {
      for (int j = 0; j < cfg.n_clips; ++j) {
        if (rng.uniform01() >= cfg.observed_fraction) continue;
        const double value = clamp_rating(alpha[static_cast<std::size_t>(i)] +
                                          beta[static_cast<std::size_t>(j)] +
                                          rng.normal(0.0, cfg.noise_std));
        rows.push_back(Rating{rater_ids[static_cast<std::size_t>(i)],
                              clip_ids[static_cast<std::size_t>(j)], value});
      }
    }
    if (!connected_and_covered(rows, cfg.n_raters, cfg.n_clips, rater_ids, clip_ids))
      continue;
    SyntheticRatings out;
    out.table = RatingsTable(std::move(rows));
    for (int i = 0; i < cfg.n_raters; ++i)
      out.true_rater_bias[rater_ids[static_cast<std::size_t>(i)]] =
          alpha[static_cast<std::size_t>(i)];
    for (int j = 0; j < cfg.n_clips; ++j)
      out.true_clip_effect[clip_ids[static_cast<std::size_t>(j)]] =
          beta[static_cast<std::size_t>(j)];
    return out;
  }
  throw std::runtime_error("could not draw a connected synthetic ratings table");
}

}  // namespace fluentrx

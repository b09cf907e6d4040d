#include "nearrat/harness/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "nearrat/counting.hpp"
#include "nearrat/errors.hpp"
#include "nearrat/genericity.hpp"
#include "nearrat/harness/calibration.hpp"
#include "nearrat/harness/output.hpp"
#include "nearrat/harness/stats.hpp"
#include "nearrat/khintchine.hpp"
#include "nearrat/lattice.hpp"
#include "nearrat/manifold.hpp"
#include "nearrat/minima.hpp"
#include "nearrat/nondivergence.hpp"
#include "nearrat/parallel.hpp"
#include "nearrat/sampling.hpp"

namespace nearrat::harness {

namespace {

using nlohmann::json;

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

// Everything a subcommand needs, resolved once from the config.
class Run {
 public:
  Run(std::string name, const RunConfig& cfg, std::ostream& log)
      : name_(std::move(name)), cfg_(cfg), log_(log), map_(map_from_descriptor(cfg.get_text("map"))) {
    theta_ = cfg.get_list("theta");
    if (theta_.empty()) theta_.assign(map_.n(), 0.0);
    if (static_cast<int>(theta_.size()) != map_.n())
      throw ConfigError(fmt::format("theta has {} entries, the map needs {}", theta_.size(), map_.n()));
    auto center = cfg.get_list("ball_center");
    if (center.empty()) center = map_.domain().center;
    if (static_cast<int>(center.size()) != map_.d())
      throw ConfigError(fmt::format("ball_center has {} entries, the map needs {}", center.size(), map_.d()));
    const double r = cfg.get_real("ball_radius");
    ball_ = Ball(center, r < 0 ? map_.domain().radius : r);
    if (!map_.domain().contains(ball_)) throw ConfigError("ball is not inside the map's domain");
    rule_.rho = cfg.get_real("eps_rho");
    rule_.scale = rule_.rho > 0 ? cfg.get_real("eps_scale") : cfg.get_real("eps");
    count_opt_.budget = cfg.get_int("budget");
    count_opt_.workers = static_cast<int>(cfg.get_int("workers"));
    stamp_.subcommand = name_;
    stamp_.config_hash = cfg.hash();
    stamp_.calibration_hash = calibration_hash(cfg.get_text("calibration"));
    if (!cfg.get_text("seed").empty()) stamp_.seed = cfg.get_text("seed");
    stamp_.workers = count_opt_.workers;
    if (!cfg.get_text("calibration").empty()) calibration_ = load_calibration(cfg.get_text("calibration"));
  }

  const RunConfig& cfg() const { return cfg_; }
  const ManifoldMap& map() const { return map_; }
  const std::vector<double>& theta() const { return theta_; }
  const Ball& ball() const { return ball_; }
  const EpsRule& rule() const { return rule_; }
  const CountOptions& count_opt() const { return count_opt_; }
  int workers() const { return count_opt_.workers; }
  std::ostream& log() { return log_; }

  std::uint64_t seed() const {
    if (cfg_.get_text("seed").empty()) throw ConfigError(fmt::format("{} draws random samples and needs a seed", name_));
    return static_cast<std::uint64_t>(cfg_.get_int("seed"));
  }

  int order_l() const {
    int l = static_cast<int>(cfg_.get_int("l"));
    if (l > 0) return l;
    auto o = nondegeneracy_order(map_, ball_.center, map_.l_max());
    if (!o) throw PreconditionError("map is degenerate at the ball center");
    return *o;
  }

  const CalibrationEntry* calibration_entry() const {
    return calibration_ ? calibration_->find(map_.name(), theta_) : nullptr;
  }
  const std::optional<CalibrationManifest>& calibration() const { return calibration_; }

  void check(std::string name, bool pass, std::string detail) {
    log_ << fmt::format("{} {}: {}\n", pass ? "ok  " : "FAIL", name, detail);
    checks_.push_back({std::move(name), pass, std::move(detail)});
  }

  // Writes the CSV and the run manifest; exit code from the checks.
  int finish(const CsvTable& table, json summary = json::object()) {
    const std::string dir = cfg_.get_text("out");
    const std::string csv = fmt::format("{}.csv", name_);
    write_file((std::filesystem::path(dir) / csv).string(), table.render(stamp_));
    json config = json::object();
    for (const auto& [k, v] : cfg_.values()) config[k] = v;
    json m = run_manifest(stamp_, config, csv);
    m["summary"] = std::move(summary);
    m["checks"] = json::array();
    bool ok = true;
    for (const auto& c : checks_) {
      m["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
      ok = ok && c.pass;
    }
    m["exit_code"] = ok ? 0 : 1;
    write_file((std::filesystem::path(dir) / fmt::format("{}.json", name_)).string(), dump_json(m));
    log_ << fmt::format("wrote {}/{}\n", dir, csv);
    return ok ? 0 : 1;
  }

  const RunStamp& stamp() const { return stamp_; }
  void note_seed(std::uint64_t seed) { stamp_.seed = std::to_string(seed); }

 private:
  std::string name_;
  const RunConfig& cfg_;
  std::ostream& log_;
  ManifoldMap map_;
  std::vector<double> theta_;
  Ball ball_;
  EpsRule rule_;
  CountOptions count_opt_;
  RunStamp stamp_;
  std::optional<CalibrationManifest> calibration_;
  std::vector<Check> checks_;
};

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  std::string elapsed() const {
    if (!on_) return "NA";
    return fmt_real(std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

std::string fi(std::int64_t v) { return std::to_string(v); }
std::string fb(bool v) { return v ? "1" : "0"; }

json fit_json(const LineFit& f) {
  return {{"slope", f.slope},       {"intercept", f.intercept}, {"slope_lo", f.slope_lo},
          {"slope_hi", f.slope_hi}, {"points", f.points}};
}

Sampler sampler_of(Run& run) {
  const auto n = run.cfg().get_int("n_pts");
  if (run.cfg().get_text("sampler") == "mc") return Sampler::mc(n, run.seed());
  return Sampler::grid(n);
}

// The special-set prediction vol(B) (eps^(n-1/2) e^(3t/2))^(-alpha).
double special_prediction(const Run& run, double eps, double t, double a) {
  const int n = run.map().n();
  return run.ball().volume() * std::pow(std::pow(eps, n - 0.5) * std::exp(1.5 * t), -a);
}

// ---------------------------------------------------------------------------

int cmd_count_sweep(Run& run) {
  const auto& cfg = run.cfg();
  SweepOptions so;
  so.count = run.count_opt();
  so.l = static_cast<int>(cfg.get_int("l"));
  const auto t_list = cfg.get_list("t_list");
  const bool timing = cfg.get_flag("timing");
  CsvTable table({"map", "t", "eps", "count", "pred_main", "pred_error_term", "ratio", "range_warning", "elapsed_s"});
  std::vector<double> ts, logs, ratios;
  for (double t : t_list) {
    Stopwatch sw(timing);
    auto r = scaling_sweep(run.map(), run.theta(), run.ball(), {t}, run.rule(), so).front();
    table.add({run.map().name(), fmt_real(r.t), fmt_real(r.eps), fi(r.count), fmt_real(r.pred_main),
               fmt_real(r.pred_error_term), fmt_real(r.ratio), fb(r.range_warning), sw.elapsed()});
    run.log() << fmt::format("t = {} count = {} ratio = {}\n", t, r.count, r.ratio);
    ratios.push_back(r.ratio);
    if (r.count > 0) {
      ts.push_back(t);
      logs.push_back(std::log(static_cast<double>(r.count)));
    }
  }
  json summary = json::object();
  const int d = run.map().d();
  if (run.rule().rho == 0 && t_list.size() >= 2) {
    if (ts.size() != t_list.size()) {
      run.check("slope", false, "some counts are zero");
    } else {
      auto f = fit_line(ts, logs);
      summary["fit"] = fit_json(f);
      const double tol = cfg.get_real("slope_tol");
      run.check("slope", std::fabs(f.slope - (d + 1)) <= tol,
                fmt::format("fitted {} against {} +- {}", fmt_real(f.slope), d + 1, fmt_real(tol)));
    }
  }
  if (run.rule().rho > 0) {
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    const double band = lo > 0 ? hi / lo : INFINITY;
    summary["ratio_band"] = {{"min", lo}, {"max", hi}, {"max_over_min", band}};
    run.check("ratio band", band <= cfg.get_real("band_max"),
              fmt::format("max/min = {} (limit {})", fmt_real(band), fmt_real(cfg.get_real("band_max"))));
    const double eta_v = to_double(eta(run.map().n(), d));
    if (run.rule().rho >= eta_v)
      run.log() << fmt::format("note: rho = {} is outside the admissible range rho < {}\n", run.rule().rho, eta_v);
  }
  return run.finish(table, summary);
}

Polynomial parse_s1_poly(const std::string& text) {
  Polynomial p(1);
  std::stringstream ss(text);
  std::string term;
  while (ss >> term) {
    auto colon = term.find(':');
    if (colon == std::string::npos) throw ConfigError(fmt::format("s1_poly: bad term '{}'", term));
    try {
      p.add_term({std::stoi(term.substr(0, colon))}, parse_rational(term.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("s1_poly: bad term '{}'", term));
    }
  }
  return p;
}

int cmd_qnd_measure(Run& run) {
  const auto& cfg = run.cfg();
  const bool timing = cfg.get_flag("timing");
  const std::string family = cfg.get_text("family");
  if (family == "s1") {
    const auto iv = cfg.get_list("interval");
    const Ball I = Ball::interval(iv[0], iv[1]);
    const auto F = parse_s1_poly(cfg.get_text("s1_poly"));
    const int k = static_cast<int>(cfg.get_int("s1_k"));
    const double delta = cfg.get_real("s1_delta"), Theta = cfg.get_real("s1_theta");
    Stopwatch sw(timing);
    auto r = measure_S1_1d(F, k, delta, Theta, I, cfg.get_int("grid_n"), run.workers());
    CsvTable table({"poly", "k", "delta", "theta", "interval_lo", "interval_hi", "estimate", "half_width", "samples",
                    "hits", "bound", "elapsed_s"});
    table.add({cfg.get_text("s1_poly"), fi(k), fmt_real(delta), fmt_real(Theta), fmt_real(iv[0]), fmt_real(iv[1]),
               fmt_real(r.estimate.value), fmt_real(r.estimate.half_width), fi(r.estimate.samples),
               fi(r.estimate.hits), fmt_real(r.bound), sw.elapsed()});
    run.check("one-dimensional bound", r.estimate.value <= r.bound * (1 + 1e-3),
              fmt::format("estimate {} bound {}", fmt_real(r.estimate.value), fmt_real(r.bound)));
    return run.finish(table);
  }
  const int n = run.map().n(), m = run.map().m(), d = run.map().d();
  const double c = cfg.get_real("c");
  const int l = static_cast<int>(cfg.get_int("l"));
  const Sampler sampler = sampler_of(run);
  WitnessOptions wo;
  wo.budget = cfg.get_int("budget");
  CsvTable table({"map", "family", "t", "eps", "delta", "K", "T", "admissible", "estimate", "half_width", "samples",
                  "hits", "alpha", "rhs_sharp_main", "rhs_sharp_tail", "rhs_km", "elapsed_s"});
  std::vector<double> ts, log_est, log_rhs;
  bool resolved = true;
  for (double t : cfg.get_list("t_list")) {
    const double eps = run.rule().eps_at(t);
    const SBoxParams p = family == "inclusion" ? inclusion_family(n, eps, t, c) : lower_bound_family(n, m, d, eps, t, c);
    Stopwatch sw(timing);
    auto r = measure_S(run.map(), run.ball(), p, sampler, run.workers(), wo, l);
    table.add({run.map().name(), family, fmt_real(t), fmt_real(eps), fmt_real(p.delta), fmt_real(p.K),
               fmt_real(p.T.front()), fb(p.admissible()), fmt_real(r.estimate.value), fmt_real(r.estimate.half_width),
               fi(r.estimate.samples), fi(r.estimate.hits), fmt_real(r.alpha), fmt_real(r.rhs_sharp_main),
               fmt_real(r.rhs_sharp_tail), fmt_real(r.rhs_km), sw.elapsed()});
    run.log() << fmt::format("t = {} estimate = {} rhs = {}\n", t, r.estimate.value, r.rhs_km);
    if (r.estimate.value <= 0) resolved = false;
    ts.push_back(t);
    log_est.push_back(std::log(r.estimate.value));
    log_rhs.push_back(std::log(r.rhs_km));
  }
  json summary = json::object();
  if (ts.size() >= 2) {
    if (!resolved) {
      run.check("decay", false, "zero estimate; the grid does not resolve the set");
    } else {
      auto fe = fit_line(ts, log_est), fr = fit_line(ts, log_rhs);
      summary["fit"] = fit_json(fe);
      summary["predicted_slope"] = fr.slope;
      const double tol = cfg.get_real("decay_tol");
      run.check("decay", -fe.slope >= -fr.slope - tol,
                fmt::format("decay exponent {} against predicted {} - {}", fmt_real(-fe.slope), fmt_real(-fr.slope),
                            fmt_real(tol)));
    }
  }
  return run.finish(table, summary);
}

int cmd_generic_split(Run& run) {
  const auto& cfg = run.cfg();
  const bool timing = cfg.get_flag("timing");
  const double a = to_double(alpha(run.map().n(), run.map().d(), run.order_l()));
  const auto c_grid = dyadic_c_grid();
  const CalibrationEntry* cal = run.calibration_entry();
  CsvTable table({"map", "t", "eps", "grid_points", "special_points", "special_measure", "special_pred",
                  "inclusion_included", "c_median", "c_p95", "c_max", "total", "generic", "prediction", "ratio",
                  "tile_max", "tile_bound", "elapsed_s"});
  std::vector<double> ts, log_meas, log_pred;
  bool all_included = true, positive = true;
  double ratio_max = 0, tile_max = 0;
  for (double t : cfg.get_list("t_list")) {
    const double eps = run.rule().eps_at(t);
    Stopwatch sw(timing);
    auto cover =
        special_cover(run.map(), run.ball(), eps, t, cover_grid_per_axis(run.ball(), eps, t), run.workers());
    auto inc = summarize_inclusion(run.map(), cover, eps, t, c_grid, run.workers());
    auto g = count_generic(run.map(), run.theta(), run.ball(), eps, t, cover, run.count_opt());
    const double pred = special_prediction(run, eps, t, a);
    table.add({run.map().name(), fmt_real(t), fmt_real(eps), fi(cover.grid_points()), fi(cover.special_count()),
               fmt_real(cover.measure()), fmt_real(pred), fi(inc.included), fmt_real(inc.c_median),
               fmt_real(inc.c_p95), fmt_real(inc.c_max), fi(g.total), fi(g.generic), fmt_real(g.prediction),
               fmt_real(g.ratio), fi(g.tile_max), fmt_real(g.tile_bound), sw.elapsed()});
    run.log() << fmt::format("t = {} special = {}/{} generic ratio = {}\n", t, cover.special_count(),
                             cover.grid_points(), g.ratio);
    all_included = all_included && inc.included == inc.special_points;
    ratio_max = std::max(ratio_max, g.ratio);
    tile_max = std::max(tile_max, g.tile_bound > 0 ? g.tile_max / g.tile_bound : 0.0);
    if (cover.measure() <= 0) positive = false;
    ts.push_back(t);
    log_meas.push_back(std::log(cover.measure()));
    log_pred.push_back(std::log(pred));
  }
  run.check("inclusion", all_included, all_included ? "every special point has a finite c" : "some special point has none");
  json summary = json::object();
  if (ts.size() >= 2) {
    if (!positive) {
      run.check("special decay", false, "empty special set at some t");
    } else {
      auto fm = fit_line(ts, log_meas), fp = fit_line(ts, log_pred);
      summary["special_fit"] = fit_json(fm);
      summary["predicted_slope"] = fp.slope;
      const double tol = cfg.get_real("special_tol");
      run.check("special decay", std::fabs(fm.slope - fp.slope) <= tol,
                fmt::format("slope {} against {} +- {}", fmt_real(fm.slope), fmt_real(fp.slope), fmt_real(tol)));
    }
  }
  if (cal) {
    const double bound = cal->at("generic_ratio") * kCalibrationSlack;
    run.check("generic ratio", ratio_max <= bound,
              fmt::format("max {} against frozen {}", fmt_real(ratio_max), fmt_real(bound)));
    const double tb = cal->at("tile_ratio") * kCalibrationSlack;
    run.check("tile ratio", tile_max <= tb, fmt::format("max {} against frozen {}", fmt_real(tile_max), fmt_real(tb)));
  }
  return run.finish(table, summary);
}

double outside_G_fraction(Run& run, double v, double t, double eps, std::int64_t n_pts) {
  const Ball& B = run.ball();
  const int per_axis = grid_per_axis(n_pts, B.dim());
  std::int64_t total = 1;
  for (int i = 0; i < B.dim(); ++i) total *= per_axis;
  std::vector<std::uint8_t> out(total, 0);
  parallel_for((total + kSampleChunk - 1) / kSampleChunk, run.workers(), [&](std::int64_t chunk) {
    std::vector<double> x;
    const std::int64_t hi = std::min(total, (chunk + 1) * kSampleChunk);
    for (std::int64_t i = chunk * kSampleChunk; i < hi; ++i) {
      grid_point(B, per_axis, i, x);
      out[i] = classify_G(run.map(), x, v, t, eps).in_G ? 0 : 1;
    }
  });
  std::int64_t bad = 0;
  for (auto b : out) bad += b;
  return static_cast<double>(bad) / static_cast<double>(total);
}

double resolve_c0(const Run& run) {
  const double c0 = run.cfg().get_real("c0");
  if (c0 > 0) return c0;
  const CalibrationEntry* cal = run.calibration_entry();
  if (!cal) throw ConfigError("c0 is 0 and the calibration manifest has no entry for this map and theta");
  return cal->at("C0");
}

int cmd_lower_bound(Run& run) {
  const auto& cfg = run.cfg();
  const bool timing = cfg.get_flag("timing");
  const double C0 = resolve_c0(run), v = cfg.get_real("v");
  const double cmin = cfg.get_real("coverage_min");
  const int m = run.map().m(), d = run.map().d();
  CsvTable table({"map", "t", "eps", "c0", "rho", "centers", "cover_fraction", "exact", "v", "outside_G_fraction",
                  "elapsed_s"});
  double worst = 1.0, worst_g = 0.0;
  for (double t : cfg.get_list("t_list")) {
    const double eps = run.rule().eps_at(t);
    Stopwatch sw(timing);
    const double rho = lower_bound_rho(eps, t, m, d, C0);
    auto cf = delta_cover_fraction(run.map(), run.theta(), run.ball(), eps, t, rho, cfg.get_int("grid_n"),
                                   run.count_opt());
    const double og = outside_G_fraction(run, v, t, eps, cfg.get_int("n_pts"));
    table.add({run.map().name(), fmt_real(t), fmt_real(eps), fmt_real(C0), fmt_real(rho), fi(cf.centers),
               fmt_real(cf.fraction), fb(cf.exact), fmt_real(v), fmt_real(og), sw.elapsed()});
    run.log() << fmt::format("t = {} coverage = {} outside G = {}\n", t, cf.fraction, og);
    worst = std::min(worst, cf.fraction);
    worst_g = std::max(worst_g, og);
  }
  run.check("coverage", worst >= cmin, fmt::format("min fraction {} against {}", fmt_real(worst), fmt_real(cmin)));
  run.check("outside G", worst_g <= 1.0 / 3.0, fmt::format("max fraction {} against 1/3", fmt_real(worst_g)));
  return run.finish(table, {{"c0", C0}, {"min_fraction", worst}, {"max_outside_G", worst_g}});
}

std::vector<std::string> x_columns(int d) {
  if (d == 1) return {"x"};
  std::vector<std::string> out;
  for (int i = 1; i <= d; ++i) out.push_back(fmt::format("x{}", i));
  return out;
}

int cmd_khintchine_mc(Run& run) {
  const auto& cfg = run.cfg();
  const double tau = cfg.get_real("tau");
  const auto psi = ApproxFunction::power(tau);
  const std::int64_t n_samples = cfg.get_int("n_samples"), q_max = cfg.get_int("q_max");
  KhintchineOptions ko;
  ko.tail_threshold = cfg.get_int("tail_threshold");
  ko.workers = run.workers();
  ko.budget = cfg.get_int("budget");
  const std::uint64_t seed = run.seed();
  auto s = mc_khintchine(run.map(), run.theta(), psi, n_samples, q_max, seed, ko);
  std::vector<double> lambda(s.samples.size());
  parallel_for(static_cast<std::int64_t>(s.samples.size()), run.workers(), [&](std::int64_t i) {
    lambda[i] = exponent_estimate(run.map(), run.theta(), s.samples[i].x, q_max, cfg.get_int("window_lo")).value;
  });
  std::vector<std::string> cols{"sample_id"};
  for (auto& c : x_columns(run.map().d())) cols.push_back(c);
  for (const char* c : {"hits_total", "hits_ambiguous", "last_block_hit", "tail_hit", "last_hit_q", "exponent_estimate"})
    cols.push_back(c);
  CsvTable table(cols);
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    const auto& r = s.samples[i];
    std::vector<std::string> row{fi(r.id)};
    for (double x : r.x) row.push_back(fmt_real(x));
    row.insert(row.end(), {fi(r.hits_total), fi(r.hits_ambiguous), fb(r.last_block_hit), fb(r.tail_hit),
                           fi(r.last_hit_q), fmt_real(lambda[i])});
    table.add(row);
  }
  const int n = run.map().n();
  const bool divergent = tau * n <= 1.0;
  json summary = {{"tau", tau},
                  {"divergent", divergent},
                  {"last_block_fraction", s.last_block_fraction},
                  {"tail_fraction", s.tail_fraction},
                  {"mean_hits", s.mean_hits},
                  {"first_moment", s.first_moment},
                  {"beyond_fraction", s.beyond_fraction}};
  if (divergent) {
    const double lim = cfg.get_real("divergent_min");
    run.check("last block hits", s.last_block_fraction >= lim,
              fmt::format("fraction {} against >= {}", fmt_real(s.last_block_fraction), fmt_real(lim)));
  } else {
    const double lim = cfg.get_real("convergent_max");
    run.check("tail hits", s.tail_fraction <= lim,
              fmt::format("fraction {} against <= {}", fmt_real(s.tail_fraction), fmt_real(lim)));
  }
  return run.finish(table, summary);
}

int cmd_exponent_spectrum(Run& run) {
  const auto& cfg = run.cfg();
  const double lo = cfg.get_real("spectrum_lo"), hi = cfg.get_real("spectrum_hi");
  const std::int64_t n_samples = cfg.get_int("n_samples"), q_max = cfg.get_int("q_max");
  const std::uint64_t seed = run.seed();
  auto s = exponent_spectrum(run.map(), run.theta(), n_samples, q_max, seed, lo, hi, run.workers(),
                             cfg.get_int("window_lo"));
  std::vector<std::string> cols{"sample_id"};
  for (auto& c : x_columns(run.map().d())) cols.push_back(c);
  cols.push_back("exponent_estimate");
  cols.push_back("inside");
  CsvTable table(cols);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    std::vector<std::string> row{fi(i)};
    for (double x : sample_point(run.map(), seed, i)) row.push_back(fmt_real(x));
    const double e = s.estimates[i];
    row.push_back(fmt_real(e));
    row.push_back(fb(e >= lo && e <= hi));
    table.add(row);
  }
  auto [ilo, ihi] = spectrum_interval(run.map().n());
  json hist = {{"edges", s.edges}, {"counts", s.histogram}, {"lo", lo}, {"hi", hi},
               {"spectrum_interval", {ilo, ihi}}};
  write_file((std::filesystem::path(cfg.get_text("out")) / "exponent-spectrum_histogram.json").string(),
             dump_json(hist));
  const double lim = cfg.get_real("spectrum_min_share");
  run.check("share inside", s.share_inside >= lim,
            fmt::format("share {} in [{}, {}] against >= {}", fmt_real(s.share_inside), fmt_real(lo), fmt_real(hi),
                        fmt_real(lim)));
  return run.finish(table, {{"share_inside", s.share_inside}, {"histogram", hist}});
}

// ---------------------------------------------------------------------------

Matrix<Rational> random_rational_matrix(std::mt19937_64& rng, int k) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 5);
  for (;;) {
    Matrix<Rational> a(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        a(i, j) = Rational(num(rng), den(rng));
        a(i, j).canonicalize();
      }
    if (a.determinant() != 0) return a;
  }
}

double minkowski_ratio(const Matrix<double>& b, const std::vector<double>& minima) {
  double prod = 1.0;
  for (double v : minima) prod *= v;
  return prod * unit_ball_volume(b.rows()) / std::fabs(b.determinant());
}

int cmd_lattice_selftest(Run& run) {
  const auto& cfg = run.cfg();
  const std::uint64_t seed = cfg.get_text("seed").empty() ? 1 : run.seed();
  run.note_seed(seed);
  std::mt19937_64 rng(seed);
  CsvTable table({"check", "cases", "max_error", "pass"});
  auto record = [&](const std::string& name, std::int64_t cases, double err, bool pass) {
    table.add({name, fi(cases), fmt_real(err), fb(pass)});
    run.check(name, pass, fmt::format("{} cases, max error {}", cases, fmt_real(err)));
  };

  bool ok = true;
  for (int k = 1; k <= 8; ++k) ok = ok && weyl<Rational>(k) * weyl<Rational>(k) == Matrix<Rational>::identity(k);
  record("weyl involution", 8, 0, ok);

  ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 4;
    auto a = random_rational_matrix(rng, k), b = random_rational_matrix(rng, k);
    ok = ok && dual(dual(a)) == a && dual(a * b) == dual(a) * dual(b);
  }
  record("dual involution and multiplicativity", 50, 0, ok);

  const std::vector<ManifoldMap> maps = {veronese(2), veronese(3), paraboloid()};
  std::uniform_int_distribution<int> num(-30, 30);
  bool fact = true, det = true, closed = true;
  std::int64_t cases = 0;
  for (const auto& map : maps)
    for (int trial = 0; trial < 100; ++trial, ++cases) {
      std::vector<Rational> x(map.d());
      for (auto& xi : x) {
        xi = Rational(num(rng), 31);
        xi.canonicalize();
      }
      auto u1 = u1_matrix<Rational>(map, x);
      fact = fact && u1 == z_matrix<Rational>(map, x) * u_matrix<Rational>(map, x);
      det = det && u1.determinant() == 1;
      closed = closed && dual(u1) == dual_u1_closed_form<Rational>(map, x);
    }
  record("u1 factorization", cases, 0, fact);
  record("det u1 = 1", cases, 0, det);
  record("dual u1 block form", cases, 0, closed);

  std::uniform_real_distribution<double> ue(0.01, 1.0), ut(0.5, 12.0), u01(0.0, 1.0), upm(-1.0, 1.0);
  double err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& map = maps[trial % maps.size()];
    const double eps = ue(rng), t = ut(rng);
    std::vector<double> x(map.d());
    for (auto& xi : x) xi = map.d() == 1 ? u01(rng) : upm(rng);
    auto g = g_eps_t(eps, t, map.n());
    auto z = z_matrix<double>(map, x);
    err = std::max(err, max_abs_diff(g * z * g.inverse(), z));
  }
  record("conjugation fixes z", 100, err, err <= 1e-12);

  ok = true;
  for (int n = 2; n <= 6; ++n)
    for (int d = 1; d < n; ++d) {
      Rational sum = 0;
      for (const auto& e : b_t_exponents(n, n - d, d)) sum += e;
      ok = ok && sum == 0;
    }
  record("det b_t = 1", 15, 0, ok);

  const std::int64_t bases = cfg.get_int("lattice_bases");
  double mink_err = 0;
  ok = true;
  for (int k = 3; k <= 5; ++k) {
    const double lo = std::pow(2.0, k) / std::tgamma(k + 1.0), hi = std::pow(2.0, k);
    for (std::int64_t i = 0; i < bases; ++i) {
      auto b = random_integer_basis(rng, k, 20);
      const double r = minkowski_ratio(b, successive_minima(b).minima);
      const bool in = r >= lo * (1 - 1e-9) && r <= hi * (1 + 1e-9);
      ok = ok && in;
      mink_err = std::max(mink_err, std::max(lo - r, r - hi));
    }
  }
  record("minkowski band", 3 * bases, std::max(0.0, mink_err), ok);

  bool theorem = true, frozen = true;
  double terr = 0;
  for (int k = 3; k <= 5; ++k) {
    auto prods = transference_products(seed + 1000, k, bases, run.workers());
    for (double p : prods) {
      theorem = theorem && p >= 1 - 1e-9 && p <= k + 1e-9;
      terr = std::max(terr, std::max(1 - p, p - k));
    }
    if (run.calibration()) {
      auto it = run.calibration()->transference_band.find(k);
      if (it == run.calibration()->transference_band.end()) {
        frozen = false;
        continue;
      }
      for (double p : prods) frozen = frozen && p >= it->second.first && p <= it->second.second;
    }
  }
  record("transference theorem", 3 * bases, std::max(0.0, terr), theorem);
  if (run.calibration()) record("transference frozen band", 3 * bases, 0, frozen);
  return run.finish(table);
}

// ---------------------------------------------------------------------------

int cmd_calibrate(Run& run) {
  const auto& cfg = run.cfg();
  const std::uint64_t seed = run.seed();
  CalibrationManifest man;
  if (run.calibration()) man = *run.calibration();
  man.seed = std::to_string(seed);
  man.t_list = cfg.get_list("calib_t_list");
  man.eps_rho_list = cfg.get_list("calib_eps_rho_list");
  if (man.t_list.empty() || man.eps_rho_list.empty()) throw ConfigError("calibration grids must be nonempty");
  man.lattice_bases = cfg.get_int("lattice_bases");
  man.grids = {{"n_pts", cfg.get_int("n_pts")}, {"grid_n", cfg.get_int("grid_n")}, {"sampler", "grid"},
               {"c", cfg.get_real("c")}, {"eps_scale", cfg.get_real("eps_scale")}};

  man.transference_band.clear();
  for (int k = 3; k <= 5; ++k) {
    auto p = transference_products(seed, k, man.lattice_bases, run.workers());
    // Widened by the relative resolution of the minima computation.
    man.transference_band[k] = {*std::min_element(p.begin(), p.end()) * (1 - 1e-9),
                                *std::max_element(p.begin(), p.end()) * (1 + 1e-9)};
  }

  const auto& map = run.map();
  const int n = map.n(), m = map.m(), d = map.d();
  const Ball& B = run.ball();
  const double a = to_double(alpha(n, d, run.order_l()));
  const double c = cfg.get_real("c"), scale = cfg.get_real("eps_scale");
  const Sampler sampler = Sampler::grid(cfg.get_int("n_pts"));
  WitnessOptions wo;
  wo.budget = cfg.get_int("budget");
  const auto c_grid = dyadic_c_grid();

  std::map<std::string, double> k;
  k["C_lower"] = INFINITY;
  for (const char* name : {"count_ratio_hi", "E_S", "E_sharp", "K0", "c_inclusion", "generic_ratio", "tile_ratio"})
    k[name] = 0;
  struct Cell {
    double t, eps;
  };
  std::vector<Cell> cells;
  for (double rr : man.eps_rho_list)
    for (double t : man.t_list) cells.push_back({t, scale * std::exp(-rr * t)});

  for (const auto& [t, eps] : cells) {
    const auto cnt = count_N(map, run.theta(), B, eps, t, run.count_opt());
    const double pred = std::pow(eps, m) * std::exp((d + 1) * t) * B.volume();
    k["C_lower"] = std::min(k["C_lower"], cnt / pred);
    k["count_ratio_hi"] = std::max(k["count_ratio_hi"], cnt / pred);

    auto ms = measure_S(map, B, lower_bound_family(n, m, d, eps, t, c), sampler, run.workers(), wo,
                        static_cast<int>(cfg.get_int("l")));
    const double floor_val = B.volume() / static_cast<double>(ms.estimate.samples);
    const double upper = std::max(ms.estimate.value + ms.estimate.half_width, floor_val);
    k["E_S"] = std::max(k["E_S"], upper / ms.rhs_km);
    k["E_sharp"] = std::max(k["E_sharp"], upper / (ms.rhs_sharp_main + ms.rhs_sharp_tail));

    auto cover = special_cover(map, B, eps, t, cover_grid_per_axis(B, eps, t), run.workers());
    const double cell_floor = B.volume() / static_cast<double>(cover.grid_points());
    k["K0"] = std::max(k["K0"], std::max(cover.measure(), cell_floor) / special_prediction(run, eps, t, a));
    auto inc = summarize_inclusion(map, cover, eps, t, c_grid, run.workers());
    if (inc.included < inc.special_points)
      throw PreconditionError(fmt::format("calibrate: a special point at t = {} has no finite c", t));
    k["c_inclusion"] = std::max(k["c_inclusion"], std::max(1.0, inc.c_max));
    auto g = count_generic(map, run.theta(), B, eps, t, cover, run.count_opt());
    k["generic_ratio"] = std::max(k["generic_ratio"], g.ratio);
    if (g.tile_bound > 0) k["tile_ratio"] = std::max(k["tile_ratio"], g.tile_max / g.tile_bound);
    run.log() << fmt::format("t = {} eps = {} count ratio = {} generic ratio = {}\n", t, eps, cnt / pred, g.ratio);
  }

  // Smallest C0 = 2^(j/2) meeting the coverage target on every cell.
  const double cmin = cfg.get_real("coverage_min");
  auto covers_all = [&](int j) {
    const double C0 = std::pow(2.0, j / 2.0);
    for (const auto& [t, eps] : cells) {
      const double rho = lower_bound_rho(eps, t, m, d, C0);
      if (delta_cover_fraction(map, run.theta(), B, eps, t, rho, cfg.get_int("grid_n"), run.count_opt()).fraction <
          cmin)
        return false;
    }
    return true;
  };
  int lo = -16, hi = 16;
  if (!covers_all(hi)) throw PreconditionError("calibrate: no C0 up to 2^8 reaches the coverage target");
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (covers_all(mid) ? hi : lo) = mid;
  }
  k["C0"] = std::pow(2.0, hi / 2.0);

  CalibrationEntry e;
  e.map = map.name();
  e.theta = run.theta();
  e.ball_center = B.center;
  e.ball_radius = B.radius;
  e.constants = k;
  man.upsert(e);
  man.check();

  const std::string path = (std::filesystem::path(cfg.get_text("out")) / "calibration.json").string();
  write_file(path, man.serialize());
  CsvTable table({"map", "theta", "constant", "value"});
  for (const auto& entry : man.entries)
    for (const auto& [name, v] : entry.constants) {
      std::vector<std::string> th;
      for (double x : entry.theta) th.push_back(fmt_real(x));
      table.add({entry.map, fmt::format("{}", fmt::join(th, " ")), name, fmt_real(v)});
    }
  for (const auto& [kk, band] : man.transference_band) {
    table.add({"lattice", "", fmt::format("transference_lo_{}", kk), fmt_real(band.first)});
    table.add({"lattice", "", fmt::format("transference_hi_{}", kk), fmt_real(band.second)});
  }
  run.log() << fmt::format("wrote {}\n", path);
  return run.finish(table, {{"manifest", path}, {"manifest_hash", sha1_hex(read_file(path))}});
}

// ---------------------------------------------------------------------------

std::vector<std::string> split_inputs(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double num_field(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan" || s == "NA") return NAN;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw SchemaError(fmt::format("'{}' is not a number", s));
    return v;
  } catch (const std::logic_error&) {
    throw SchemaError(fmt::format("'{}' is not a number", s));
  }
}

int cmd_report(Run& run) {
  const auto& cfg = run.cfg();
  const CalibrationEntry* cal = nullptr;
  CsvTable table({"group", "metric", "value", "lo", "hi", "points", "flag"});
  struct Group {
    std::vector<double> t, log_count, ratio;
  };
  std::map<std::string, Group> groups;
  std::int64_t flagged = 0;
  for (const auto& path : split_inputs(cfg.get_text("inputs"))) {
    const auto csv = parse_csv(read_file(path));
    const std::string sub = csv.meta_value("subcommand");
    const int c_map = csv.column("map"), c_t = csv.column("t"), c_count = csv.column("count"),
              c_ratio = csv.column("ratio");
    const int c_est = csv.column("estimate"), c_rhs = csv.column("rhs_km");
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      const auto& row = csv.rows[r];
      const std::string map = c_map >= 0 ? row[c_map] : "-";
      const std::string key = fmt::format("{}/{}", sub, map);
      auto& g = groups[key];
      if (c_t >= 0) g.t.push_back(num_field(row[c_t]));
      if (c_count >= 0) g.log_count.push_back(std::log(num_field(row[c_count])));
      if (c_ratio >= 0) g.ratio.push_back(num_field(row[c_ratio]));
      cal = nullptr;
      if (run.calibration())
        for (const auto& e : run.calibration()->entries)
          if (e.map == map && !cal) cal = &e;
      if (!cal) continue;
      std::string name;
      double value = NAN, bound = NAN;
      if (sub == "count-sweep" && c_ratio >= 0) {
        name = "count_ratio_hi";
        value = num_field(row[c_ratio]);
      } else if (sub == "generic-split" && c_ratio >= 0) {
        name = "generic_ratio";
        value = num_field(row[c_ratio]);
      } else if (sub == "qnd-measure" && c_est >= 0 && c_rhs >= 0) {
        name = "E_S";
        value = num_field(row[c_est]) / num_field(row[c_rhs]);
      }
      if (name.empty()) continue;
      bound = cal->at(name) * kCalibrationSlack;
      if (value > bound) {
        ++flagged;
        table.add({key, fmt::format("{}_row_{}", name, r), fmt_real(value), "", fmt_real(bound), "1", "1"});
      }
    }
  }
  json summary = json::object();
  const std::string dir = cfg.get_text("out");
  for (auto& [key, g] : groups) {
    if (!g.ratio.empty()) {
      const double lo = *std::min_element(g.ratio.begin(), g.ratio.end());
      const double hi = *std::max_element(g.ratio.begin(), g.ratio.end());
      table.add({key, "ratio_band", fmt_real(lo > 0 ? hi / lo : INFINITY), fmt_real(lo), fmt_real(hi),
                 fi(static_cast<std::int64_t>(g.ratio.size())), "0"});
    }
    if (g.log_count.size() == g.t.size() && g.t.size() >= 2) {
      std::vector<std::size_t> idx(g.t.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return g.t[a] < g.t[b]; });
      std::vector<double> t, y;
      for (auto i : idx)
        if (std::isfinite(g.log_count[i])) {
          t.push_back(g.t[i]);
          y.push_back(g.log_count[i]);
        }
      std::string plot = "# t log_count\n";
      for (std::size_t i = 0; i < t.size(); ++i) plot += fmt::format("{} {}\n", fmt_real(t[i]), fmt_real(y[i]));
      std::string file = key;
      std::replace_if(file.begin(), file.end(), [](char ch) { return !std::isalnum(static_cast<unsigned char>(ch)); }, '_');
      write_file((std::filesystem::path(dir) / fmt::format("report_plot_{}.dat", file)).string(), plot);
      try {
        auto f = fit_line(t, y);
        table.add({key, "slope", fmt_real(f.slope), fmt_real(f.slope_lo), fmt_real(f.slope_hi), fi(f.points), "0"});
        summary[key] = fit_json(f);
      } catch (const InvalidArgument&) {
      }
    }
  }
  summary["flagged"] = flagged;
  return run.finish(table, summary);
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"count-sweep",       "qnd-measure", "generic-split",
                                              "lower-bound",       "khintchine-mc", "exponent-spectrum",
                                              "lattice-selftest", "calibrate",   "report"};
  return names;
}

std::string usage() {
  std::string s =
      "usage: nearrat <subcommand> [--config PATH] [--seed N] [--workers N] [--budget N] [--out DIR] "
      "[--calibration PATH]\n\nsubcommands:\n";
  for (const auto& n : subcommands()) s += "  " + n + "\n";
  s += "\nconfig keys (file lines 'key = value'; environment NEARRAT_<KEY>; flags win over environment, "
       "environment over file):\n";
  for (const auto& k : config_schema())
    s += fmt::format("  {:<20} default '{}'{}\n", k.key, k.default_value, k.help.empty() ? "" : "  " + k.help);
  return s;
}

int run_subcommand(const std::string& name, const RunConfig& cfg, std::ostream& log) {
  if (std::find(subcommands().begin(), subcommands().end(), name) == subcommands().end())
    throw ConfigError(fmt::format("unknown subcommand '{}'", name));
  Run run(name, cfg, log);
  if (name == "count-sweep") return cmd_count_sweep(run);
  if (name == "qnd-measure") return cmd_qnd_measure(run);
  if (name == "generic-split") return cmd_generic_split(run);
  if (name == "lower-bound") return cmd_lower_bound(run);
  if (name == "khintchine-mc") return cmd_khintchine_mc(run);
  if (name == "exponent-spectrum") return cmd_exponent_spectrum(run);
  if (name == "lattice-selftest") return cmd_lattice_selftest(run);
  if (name == "calibrate") return cmd_calibrate(run);
  return cmd_report(run);
}

int cli_main(int argc, char** argv, const EnvLookup& env, std::ostream& out, std::ostream& err) {
  CLI::App app{"near-rational point counting and nondivergence experiments"};
  app.set_help_flag();
  FlagValues flags;
  std::string sub;
  bool help = false;
  app.add_flag("-h,--help", help);
  app.add_option("subcommand", sub);
  auto opt = [&](const char* name, std::optional<std::string>& slot) {
    app.add_option_function<std::string>(name, [&slot](const std::string& v) { slot = v; });
  };
  opt("--config", flags.config);
  opt("--seed", flags.seed);
  opt("--workers", flags.workers);
  opt("--budget", flags.budget);
  opt("--out", flags.out);
  opt("--calibration", flags.calibration);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << usage();
    return 2;
  }
  if (help) {
    out << usage();
    return 0;
  }
  if (sub.empty() || std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end()) {
    err << (sub.empty() ? std::string("missing subcommand") : fmt::format("unknown subcommand '{}'", sub)) << "\n"
        << usage();
    return 2;
  }
  try {
    const RunConfig cfg = resolve_config(flags, env);
    return run_subcommand(sub, cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

Matrix<double> random_integer_basis(std::mt19937_64& rng, int k, int range) {
  std::uniform_int_distribution<int> e(-range, range);
  for (;;) {
    Matrix<double> a(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) a(i, j) = e(rng);
    if (std::fabs(a.determinant()) > 0.5) return a;
  }
}

std::vector<double> transference_products(std::uint64_t seed, int k, std::int64_t count, int workers) {
  std::vector<double> out(count);
  parallel_for(count, workers, [&](std::int64_t i) {
    auto rng = chunk_rng(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k));
    auto g = random_integer_basis(rng, k, 20);
    out[i] = delta1(g) * delta_last(dual(g));
  });
  return out;
}

}  // namespace nearrat::harness

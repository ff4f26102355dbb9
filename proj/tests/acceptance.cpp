// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status counts failing checks that are not listed as known gaps.

#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "commands.hpp"
#include "ffm/toolkit.hpp"
#include "oracles.hpp"
#include "shapes.hpp"

using namespace ffm;

namespace {

struct Check {
  std::string what;
  bool ok;
  bool known_gap = false;
};

int unexpected_failures = 0;

void report(const std::string& name, const std::vector<Check>& checks) {
  bool ok = true;
  for (const auto& c : checks) ok = ok && c.ok;
  std::printf("%s  %s\n", ok ? "PASS" : "FAIL", name.c_str());
  for (const auto& c : checks) {
    std::printf("      [%s] %s%s\n", c.ok ? "ok" : "FAILED", c.what.c_str(),
                !c.ok && c.known_gap ? "  (known gap, see README)" : "");
    if (!c.ok && !c.known_gap) ++unexpected_failures;
  }
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

FfmParams params(int w, int s) {
  FfmParams p;
  p.window = w;
  p.step = s;
  return p;
}

double median_ms(const GrayImage& img, const FfmParams& p, unsigned threads, int reps) {
  return cli::median(cli::time_ffm(img, p, threads, reps));
}

void performance() {
  const GrayImage img = cli::bench_image(256, 256);
  const unsigned cores = detail::resolve_threads(0);
  const double all = median_ms(img, params(5, 1), 0, 7);
  const double single = median_ms(img, params(5, 1), 1, 5);
  report("performance: 256x256, w=5, S=1",
         {{fmt("all cores (%u): median %.1f ms <= 150 ms", cores, all), all <= 150.0},
          {fmt("single thread: median %.1f ms <= 1200 ms", single), single <= 1200.0}});
}

// Alternates the two configurations so both medians see the same machine load.
std::pair<double, double> paired_medians(const GrayImage& img, const FfmParams& a, const FfmParams& b, int rounds) {
  std::vector<double> ta, tb;
  for (int r = 0; r < rounds; ++r) {
    ta.push_back(cli::time_ffm(img, a, 1, 1)[0]);
    tb.push_back(cli::time_ffm(img, b, 1, 1)[0]);
  }
  return {cli::median(ta), cli::median(tb)};
}

void complexity_scaling() {
  const GrayImage img = cli::bench_image(256, 256);
  const auto [s1, s4] = paired_medians(img, params(5, 1), params(5, 4), 31);
  const auto [w5, w11] = paired_medians(img, params(5, 1), params(11, 1), 9);
  report("complexity scaling",
         {{fmt("t(S=1)/t(S=4) = %.2f/%.2f = %.2f in [8, 16]", s1, s4, s1 / s4), s1 / s4 >= 8 && s1 / s4 <= 16},
          {fmt("t(w=11)/t(w=5) = %.2f/%.2f = %.2f in [3, 8]", w11, w5, w11 / w5), w11 / w5 >= 3 && w11 / w5 <= 8}});
}

void oracle_equivalence() {
  int cases = 0, identical = 0;
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    const GrayImage img = oracle::random_image(64, 64, 1000 + seed);
    for (int w : {5, 7, 9, 11})
      for (int s : {1, 2, 3, 4}) {
        const FloatMap fast = compute_ffm(img, params(w, s), 0);
        const FloatMap slow = normalize(oracle::ffm_raw(img, w, s, BoxMode::Standard));
        bool same = fast.same_shape(slow);
        for (std::size_t i = 0; same && i < fast.size(); ++i)
          same = std::bit_cast<std::uint32_t>(fast[i]) == std::bit_cast<std::uint32_t>(slow[i]);
        ++cases;
        identical += same;
      }
  }
  report("ffm oracle equivalence",
         {{fmt("%d/%d (image, w, S) cases bit-identical to the brute-force oracle", identical, cases),
           identical == cases}});
}

void fd_ground_truth() {
  double worst = 0;
  int sets = 0;
  for (std::size_t n : {16, 37, 64})
    for (std::uint16_t v : {0, 77, 255}) {
      const GrayImage img(n, n + 3, v);
      for (std::size_t lo = 2; lo < n / 2; lo += 3)
        for (std::size_t len = 2; lo + len - 1 <= n / 2; len += 2) {
          ScaleConfig cfg;
          for (std::size_t k = lo; k < lo + len; ++k) cfg.scales.push_back(static_cast<int>(k));
          worst = std::max(worst, std::abs(estimate_fd(img, cfg).fd - 2.0));
          ++sets;
        }
    }
  double sum = 0;
  std::string each;
  const int seeds = 3;
  for (int s = 0; s < seeds; ++s) {
    const double fd = estimate_fd(oracle::fbm_surface(256, 0.5, 11 + s), BoxMode::Standard).fd;
    sum += fd;
    each += fmt(" %.3f", fd);
  }
  const double mean = sum / seeds;
  report("fd ground truth",
         {{fmt("constant images: max |fd - 2| = %.2e over %d scale sets (<= 1e-9)", worst, sets), worst <= 1e-9},
          {fmt("fBm H=0.5, 256x256, default scales: mean fd %.3f (%s) in 2.5 +/- 0.15", mean, each.c_str() + 1),
           std::abs(mean - 2.5) <= 0.15, true}});
}

void loss_correctness() {
  std::mt19937 rng(42);
  std::bernoulli_distribution bit(0.4);
  std::uniform_real_distribution<double> prob(0.02, 0.98), weight(0.0, 1.0);
  double worst_iou = 0, worst_grad = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t w = 1 + rng() % 12, h = 1 + rng() % 12;
    DoubleMap y(w, h), p(w, h), wt(w, h);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = bit(rng);
      p[i] = prob(rng);
      wt[i] = weight(rng);
    }
    double inter = 0, uni = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      inter += y[i] * p[i];
      uni += y[i] + p[i] - y[i] * p[i];
    }
    const double direct = 1.0 - inter / (uni + 1.0);
    worst_iou = std::max(worst_iou, std::abs(soft_iou_loss(PredictionPair{y, p}, 1.0, DoubleMap(w, h, 1.0)) - direct));

    if (t >= 30) continue;
    const auto check = [&](const DoubleMap& analytic, const std::function<double(const DoubleMap&)>& f) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        DoubleMap up = p, down = p;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        const double numeric = (f(up) - f(down)) / 2e-6;
        const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
        if (scale > 1e-12) worst_grad = std::max(worst_grad, std::abs(numeric - analytic[i]) / scale);
      }
    };
    check(grad_soft_iou(PredictionPair{y, p}, 1.0, wt),
          [&](const DoubleMap& q) { return soft_iou_loss(PredictionPair{y, q}, 1.0, wt); });
    check(grad_bce(PredictionPair{y, p}), [&](const DoubleMap& q) { return bce_loss(PredictionPair{y, q}); });
  }

  const double composite = global_loss(0.2, 0.4, 0.6);
  DoubleMap y(8, 8, 0.0), p(8, 8, 0.3);
  for (std::size_t i = 0; i < 64; i += 3) y[i] = 1.0;
  const PredictionPair pair{y, p};
  const double expected = soft_iou_loss(pair, 1.0) + 0.5 * bce_loss(pair) + 0.5 * bce_loss(pair);
  const double constrained = constrained_loss(pair, pair, pair, DoubleMap(8, 8, 1.0));
  report("loss correctness",
         {{fmt("unit-weight soft IoU vs direct formula, 100 pairs: max error %.2e <= 1e-12", worst_iou),
           worst_iou <= 1e-12},
          {fmt("analytic gradients vs central differences: max relative error %.2e <= 1e-4", worst_grad),
           worst_grad <= 1e-4},
          {fmt("defaults (1, 0.5, 0.5): global(0.2, 0.4, 0.6) = %.15g == 0.7", composite),
           std::abs(composite - 0.7) <= 1e-15},
          {fmt("unit label weights: constrained %.15g == global %.15g", constrained, expected),
           std::abs(constrained - expected) <= 1e-15}});
}

void topology_fixtures() {
  const auto ring = shapes::ring_mask(), broken = shapes::broken_ring_mask(), disks = shapes::two_disks();
  const auto rb = betti_numbers(ring), db = betti_numbers(disks);
  const auto err = betti_error(broken, ring, BettiMode::Sum);
  const auto rep = evaluate(FloatMap(ring.width(), ring.height(), std::vector<float>(ring.begin(), ring.end())), ring);
  int fixtures = 0, exact = 0;
  for (std::uint32_t s = 0; s < 200; ++s) {
    const std::size_t w = 1 + s % 32, h = 1 + (s * 13) % 32;
    const auto m = oracle::random_mask(w, h, s, 0.005 + 0.02 * (s % 12));
    const auto fast = distance_transform(m), slow = oracle::distance_brute(m);
    bool same = true;
    for (std::size_t i = 0; i < m.size(); ++i) same = same && fast[i] == slow[i];
    ++fixtures;
    exact += same;
  }
  report("topology fixtures",
         {{fmt("ring betti (%zu, %zu) == (1, 1)", rb.b0, rb.b1), rb == BettiPair{1, 1}},
          {fmt("two disks betti (%zu, %zu) == (2, 0)", db.b0, db.b1), db == BettiPair{2, 0}},
          {fmt("broken ring vs ring betti error (sum) %zu == 1", err), err == 1},
          {fmt("identical masks: clDice %.2f, HD %.2f, IoU %.2f", rep.cl_dice.value_or(-1), rep.hd.value_or(-1),
               rep.iou.value_or(-1)),
           rep.cl_dice == 100.0 && rep.hd == 0.0 && rep.iou == 100.0},
          {fmt("distance transform exact on %d/%d random fixtures up to 32x32", exact, fixtures), exact == fixtures}});
}

void format_round_trip() {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> u(-1e3f, 1e3f);
  int exact = 0;
  const auto dir = std::filesystem::temp_directory_path() / ("ffm_accept_" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  for (int t = 0; t < 1000; ++t) {
    FloatMap m(1 + rng() % 48, 1 + rng() % 48);
    for (auto& v : m) v = u(rng);
    const auto path = dir / "m.ffm";
    io::write_ffm(m, path);
    const auto back = io::read_ffm(path);
    bool same = back.same_shape(m);
    for (std::size_t i = 0; same && i < m.size(); ++i)
      same = std::bit_cast<std::uint32_t>(back[i]) == std::bit_cast<std::uint32_t>(m[i]);
    exact += same;
  }
  std::filesystem::remove_all(dir);

  const auto good = io::encode_ffm(FloatMap(3, 2, 0.25f));
  std::vector<std::vector<std::uint8_t>> bad;
  bad.push_back({});
  bad.push_back({'F', 'F', 'M', '1', 3, 0, 0});
  bad.push_back(good);
  bad.back()[0] = 'G';
  bad.push_back(good);
  bad.back()[4] = 0;
  bad.push_back(good);
  bad.back()[8] = 9;
  bad.push_back(good);
  bad.back().pop_back();
  bad.push_back(good);
  bad.back().push_back(1);
  int rejected = 0;
  for (const auto& b : bad) {
    try {
      io::decode_ffm(b);
    } catch (const Error& e) {
      rejected += e.code() == ErrorCode::CorruptFile;
    }
  }
  report("format round-trip",
         {{fmt("%d/1000 random maps bit-identical after write/read", exact), exact == 1000},
          {fmt("%d/%zu malformed headers rejected as corrupt", rejected, bad.size()),
           rejected == static_cast<int>(bad.size())}});
}

}  // namespace

int main() {
  std::printf("hardware threads: %u\n", std::thread::hardware_concurrency());
  performance();
  complexity_scaling();
  oracle_equivalence();
  fd_ground_truth();
  loss_correctness();
  topology_fixtures();
  format_round_trip();
  return unexpected_failures;
}

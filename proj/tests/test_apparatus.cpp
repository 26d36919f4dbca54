#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bellsim/apparatus.hpp"
#include "bellsim/errors.hpp"
#include "bellsim/scenario.hpp"

using namespace bellsim;
using std::numbers::pi;

namespace {

DetectorConfig ideal_detector() {
  DetectorConfig d;
  d.efficiency = 1.0;
  d.dark_rate = 0.0;
  d.jitter_sigma = 0.0;
  return d;
}

Arrival arrival_at(std::int64_t gate, double offset, std::uint64_t id = 1) {
  return Arrival{Station::A, gate, offset, Arm::Short, id};
}

DetectionEvent click(Station s, std::int64_t gate, double offset, Origin o, std::uint64_t id) {
  return DetectionEvent{s, gate, offset, o, id};
}

}  // namespace

TEST(Source, PairCountMatchesPoissonMean) {
  SourceConfig src;
  const GateRange gates{0, 200000, 100e-9, 1e6};
  const auto pairs = generate_pair_events(3, src, gates);
  const double expected = 0.07 * (100e-9 / 600e-12) * 200000;
  EXPECT_NEAR(static_cast<double>(pairs.size()), expected, 5.0 * std::sqrt(expected));
  for (const auto& p : pairs) {
    ASSERT_GE(p.offset, 0.0);
    ASSERT_LT(p.offset, 100e-9);
  }
}

TEST(Source, DeterministicPerSeedOverRandomSeeds) {
  std::mt19937_64 rng(31);
  SourceConfig src;
  src.pairs_per_window = 0.01;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t seed = rng();
    const GateRange gates{static_cast<std::int64_t>(rng() % 1000), 20, 100e-9, 1e6};
    const auto a = generate_pair_events(seed, src, gates);
    const auto b = generate_pair_events(seed, src, gates);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      ASSERT_EQ(a[k].gate_index, b[k].gate_index);
      ASSERT_EQ(a[k].offset, b[k].offset);
    }
  }
}

TEST(Interferometer, SamePortFrequencyFollowsProbability) {
  Rng rng = make_rng(5, 1);
  const double p = 0.8;
  int equal = 0, same = 0, unequal = 0, unequal_same = 0;
  for (int i = 0; i < 200000; ++i) {
    const auto d = draw_interferometers(p, rng);
    if (d.arm_a == d.arm_b) {
      ++equal;
      same += d.plus_a == d.plus_b;
    } else {
      ++unequal;
      unequal_same += d.plus_a == d.plus_b;
    }
  }
  EXPECT_NEAR(equal / 200000.0, 0.5, 0.01);
  const double sd = std::sqrt(p * (1 - p) / equal);
  EXPECT_NEAR(static_cast<double>(same) / equal, p, 4 * sd);
  EXPECT_NEAR(static_cast<double>(unequal_same) / unequal, 0.5, 4 * std::sqrt(0.25 / unequal));
}

TEST(Interferometer, SinglesAreFlatInPhase) {
  // Chi-square of monitored-port counts over 1000 random phase settings.
  ApparatusConfig c;
  c.link_a.length = c.link_b.length = 1.0;
  c.link_a.loss_db = c.link_b.loss_db = 0.0;
  std::mt19937_64 pick(32);
  std::uniform_real_distribution<double> phase(-pi, pi);
  const int cases = 1000, draws = 400;
  double chi2_a = 0.0, chi2_b = 0.0;
  for (int i = 0; i < cases; ++i) {
    Rng rng = make_rng(77, i);
    const double pa = phase(pick), pb = phase(pick);
    int na = 0, nb = 0;
    for (int k = 0; k < draws; ++k) {
      const auto o = propagate_and_analyze(PairEmission{0, 1e-9, 1}, c, pa, pb, rng);
      na += o.arrival_a.has_value();
      nb += o.arrival_b.has_value();
    }
    chi2_a += std::pow(na - draws / 2.0, 2) / (draws / 4.0);
    chi2_b += std::pow(nb - draws / 2.0, 2) / (draws / 4.0);
  }
  // chi2 with 1000 dof has sd ~ 45.
  EXPECT_LT(std::abs(chi2_a - cases), 200.0);
  EXPECT_LT(std::abs(chi2_b - cases), 200.0);
  const ApparatusConfig p = preset("paper-2008").apparatus;
  const auto base = expected_rates(p, 0.0);
  for (int i = 0; i < cases; ++i) {
    const auto r = expected_rates(p, phase(pick));
    ASSERT_DOUBLE_EQ(r.singles_a, base.singles_a);
    ASSERT_DOUBLE_EQ(r.singles_b, base.singles_b);
  }
}

TEST(Interferometer, LongArmDelaysArrival) {
  ApparatusConfig c;
  c.link_a.loss_db = c.link_b.loss_db = 0.0;
  c.link_a.length = c.link_b.length = 1.0;
  Rng rng = make_rng(1, 2);
  for (int i = 0; i < 1000; ++i) {
    const auto o = propagate_and_analyze(PairEmission{3, 10e-9, 9}, c, 0.0, 0.0, rng);
    if (!o.arrival_a) continue;
    ASSERT_DOUBLE_EQ(o.arrival_a->offset, o.arm_a == Arm::Long ? 10e-9 + 1.3e-9 : 10e-9);
  }
}

TEST(Detector, ArrivalsFiveMicrosecondsApartGiveOneClick) {
  Rng rng = make_rng(1, 1);
  const GateRange gates{0, 100, 100e-9, 1e6};
  std::vector<Arrival> two{arrival_at(10, 50e-9, 1), arrival_at(15, 50e-9, 2)};
  EXPECT_EQ(detect(two, ideal_detector(), gates, Station::A, rng).size(), 1u);
  two[1].gate_index = 21;
  EXPECT_EQ(detect(two, ideal_detector(), gates, Station::A, rng).size(), 2u);
}

TEST(Detector, DeadTimeIsExactOverRandomArrivals) {
  // Oracle: greedy acceptance of arrivals separated by at least dead_time.
  std::mt19937_64 gen(33);
  std::uniform_int_distribution<int> gate(0, 400), n(1, 30);
  std::uniform_real_distribution<double> off(0.0, 100e-9);
  const GateRange gates{0, 401, 100e-9, 1e6};
  const DetectorConfig det = ideal_detector();
  for (int c = 0; c < 1000; ++c) {
    std::vector<Arrival> arr;
    const int k = n(gen);
    for (int i = 0; i < k; ++i) arr.push_back(arrival_at(gate(gen), off(gen), i + 1));
    std::sort(arr.begin(), arr.end(), [](const Arrival& a, const Arrival& b) {
      return a.gate_index != b.gate_index ? a.gate_index < b.gate_index : a.offset < b.offset;
    });
    std::vector<double> expected;
    for (const auto& a : arr) {
      const double t = a.gate_index * 1e-6 + a.offset;
      if (expected.empty() || t - expected.back() >= det.dead_time) expected.push_back(t);
    }
    Rng rng = make_rng(c, 0);
    const auto clicks = detect(arr, det, gates, Station::A, rng);
    ASSERT_EQ(clicks.size(), expected.size()) << "case " << c;
    for (std::size_t i = 0; i < clicks.size(); ++i)
      ASSERT_NEAR(clicks[i].time(1e6), expected[i], 1e-15);
  }
}

TEST(Detector, DarkRateIsRecovered) {
  DetectorConfig det = ideal_detector();
  det.dark_rate = 20e3;
  Rng rng = make_rng(4, 4);
  const GateRange gates{0, 5000000, 100e-9, 1e6};
  const auto clicks = detect({}, det, gates, Station::B, rng);
  // Poisson clicks thinned by a non-paralysable dead time: r / (1 + r tau).
  const double expected = 20e3 * 5.0 / (1.0 + 20e3 * 10e-6);
  EXPECT_NEAR(static_cast<double>(clicks.size()), expected, 5 * std::sqrt(expected));
  for (const auto& c : clicks) {
    ASSERT_EQ(c.origin, Origin::Dark);
    ASSERT_LT(c.offset, 100e-9);
  }
}

TEST(Detector, JitterPushedOutsideTheGateIsLost) {
  DetectorConfig det = ideal_detector();
  det.jitter_sigma = 1e-9;
  det.dead_time = 0.0;
  Rng rng = make_rng(8, 8);
  std::vector<Arrival> arr;
  for (int g = 0; g < 20000; ++g) arr.push_back(arrival_at(g, 0.0, g + 1));
  const auto clicks = detect(arr, det, GateRange{0, 20000, 100e-9, 1e6}, Station::A, rng);
  EXPECT_NEAR(clicks.size() / 20000.0, 0.5, 0.02);
}

TEST(Coincidence, TacClassifiesPeaks) {
  CoincidenceSettings s;
  std::vector<DetectionEvent> a{click(Station::A, 5, 10e-9, Origin::PhotonShort, 1),
                                click(Station::A, 20, 10e-9, Origin::PhotonShort, 2),
                                click(Station::A, 40, 10e-9, Origin::Dark, 0),
                                click(Station::A, 60, 10e-9, Origin::PhotonLong, 4)};
  std::vector<DetectionEvent> b{click(Station::B, 5, 10.1e-9, Origin::PhotonShort, 1),
                                click(Station::B, 20, 11.3e-9, Origin::PhotonLong, 2),
                                click(Station::B, 40, 10e-9, Origin::PhotonShort, 3),
                                click(Station::B, 60, 10e-9, Origin::PhotonLong, 5)};
  const auto r = coincide(a, b, s);
  ASSERT_EQ(r.records.size(), 4u);
  EXPECT_EQ(r.records[0].classification, CoincidenceClass::Interfering);
  EXPECT_NEAR(r.records[0].delta_t, 5.1e-9, 1e-15);
  EXPECT_EQ(r.records[1].classification, CoincidenceClass::Sidepeak);
  EXPECT_EQ(r.records[2].classification, CoincidenceClass::AccidentalTruth);
  EXPECT_EQ(r.records[3].classification, CoincidenceClass::MultiPair);
  EXPECT_EQ(r.counts.coincidences, 3u);  // sidepeak at +1.3 ns is outside the window
  EXPECT_EQ(r.counts.interfering, 1u);
  EXPECT_EQ(r.counts.sidepeak, 0u);
  EXPECT_EQ(r.counts.accidental, 1u);
  EXPECT_EQ(r.counts.multi_pair, 1u);
}

TEST(Coincidence, StopBeforeDelayedStartIsIgnored) {
  CoincidenceSettings s;
  std::vector<DetectionEvent> a{click(Station::A, 5, 20e-9, Origin::Dark, 0)};
  std::vector<DetectionEvent> b{click(Station::B, 5, 10e-9, Origin::Dark, 0)};
  EXPECT_EQ(coincide(a, b, s).counts.records, 0u);
  s.start = Station::B;
  EXPECT_EQ(coincide(a, b, s).counts.records, 1u);
}

TEST(Coincidence, FlatBackgroundEstimateMatchesUniformClicks) {
  // One click per station, uniform in the same gate: the off-peak estimate
  // must predict the in-window count.
  CoincidenceSettings s;
  Rng rng = make_rng(9, 9);
  std::uniform_real_distribution<double> u(0.0, 100e-9);
  std::vector<DetectionEvent> a, b;
  const int n = 400000;
  for (int g = 0; g < n; ++g) {
    a.push_back(click(Station::A, g * 20, u(rng), Origin::Dark, 0));
    b.push_back(click(Station::B, g * 20, u(rng), Origin::Dark, 0));
  }
  const auto r = coincide(a, b, s, false);
  const double est = estimate_flat_background(r.counts.background, s, 100e-9);
  EXPECT_NEAR(est, static_cast<double>(r.counts.coincidences),
              5 * std::sqrt(static_cast<double>(r.counts.coincidences)));
}

TEST(Simulation, DeterministicAndWorkerIndependent) {
  Scenario s = preset("paper-2008");
  const auto sched = constant_phase_schedule(6.0, 1.0, 0.4);
  const auto one = simulate(99, s.apparatus, sched, 1.0);
  const auto again = simulate(99, s.apparatus, sched, 1.0);
  RunOptions three;
  three.workers = 3;
  const auto par = simulate(99, s.apparatus, sched, 1.0, three);
  EXPECT_EQ(one.scan, again.scan);
  EXPECT_EQ(one.scan, par.scan);
  EXPECT_NE(one.scan, simulate(100, s.apparatus, sched, 1.0).scan);
}

TEST(Simulation, EmptyDurationGivesEmptyScan) {
  Scenario s = preset("paper-2008");
  const auto r = simulate(1, s.apparatus, constant_phase_schedule(0.0, 60.0, 0.0), 60.0);
  EXPECT_TRUE(r.scan.bins.empty());
}

TEST(Simulation, MatchesClosedFormRates) {
  const Scenario s = preset("paper-2008");
  for (double phase : {0.0, pi}) {
    const auto r = simulate(7, s.apparatus, constant_phase_schedule(120.0, 60.0, phase), 60.0);
    const auto e = expected_rates(s.apparatus, phase);
    double sa = 0, sb = 0, cc = 0;
    for (const auto& b : r.scan.bins) {
      sa += b.singles_a;
      sb += b.singles_b;
      cc += b.coincidences;
    }
    EXPECT_NEAR(sa / 120.0, e.singles_a, 0.01 * e.singles_a);
    EXPECT_NEAR(sb / 120.0, e.singles_b, 0.01 * e.singles_b);
    const double expected = 2.0 * e.total();
    EXPECT_NEAR(cc, expected, 4 * std::sqrt(expected) + 1) << "phase " << phase;
  }
}

TEST(Simulation, IdealDetectorsFollowTheCorrelation) {
  // Interfering pairs detected on the monitored ports: N(+,+) ~ (1+E)/4 of
  // equal-arm pairs, so the coincidence fringe tracks coincidence_probability.
  Scenario s = preset("ideal-detectors");
  const auto& c = s.apparatus;
  std::vector<double> rate;
  for (double phase : {0.0, pi / 2, pi}) {
    const auto r = simulate(3, c, constant_phase_schedule(2.0, 2.0, phase), 2.0);
    rate.push_back(static_cast<double>(r.truth.total.interfering));
  }
  const double mean = (rate[0] + rate[2]) / 2.0;
  EXPECT_NEAR(rate[1], mean, 5 * std::sqrt(mean));
  EXPECT_LT(rate[2], 0.01 * rate[0] + 10);
}

TEST(Calibration, ReproducesTargets) {
  const Scenario s = preset("paper-2008");
  const auto& c = s.apparatus;
  EXPECT_NEAR(expected_rates(c, 0.0).singles_a, 5000.0, 1.0);
  EXPECT_NEAR(expected_rates(c, 0.0).singles_b, 4100.0, 1.0);
  const double mean = (expected_rates(c, 0.0).total() + expected_rates(c, pi).total()) / 2.0;
  EXPECT_NEAR(mean, 33.0, 0.05);
  EXPECT_GT(c.detector_a.jitter_sigma, 50e-12);
  EXPECT_LT(c.detector_a.jitter_sigma, 400e-12);
}

TEST(Config, ValidationRejectsBadValues) {
  ApparatusConfig c;
  c.link_a.length = c.link_b.length = 1.0;
  EXPECT_NO_THROW(validate(c));
  auto bad = c;
  bad.detector_a.efficiency = 1.5;
  EXPECT_THROW(validate(bad), ConfigError);
  bad = c;
  bad.interferometer_b.path_delay = 2e-9;  // inconsistent with 267 mm
  EXPECT_THROW(validate(bad), ConfigError);
  bad = c;
  bad.source.pairs_per_window = -0.1;
  EXPECT_THROW(validate(bad), ConfigError);
}

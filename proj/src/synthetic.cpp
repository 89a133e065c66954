#include "vacal/synthetic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "vacal/rng.hpp"

namespace vacal {

namespace {

// Speed/torque relation: speed = kSpeedScale * (40 / torque)^kSpeedExponent * exp(noise).
constexpr double kSpeedScale = 1515.0;
constexpr double kSpeedExponent = 0.38;
constexpr double kSpeedNoise = 0.03;

std::vector<double> normalised_walk(Rng& rng, std::size_t n) {
  std::vector<double> walk(n);
  double position = 0.0;
  for (auto& w : walk) {
    position += rng.normal();
    w = position;
  }
  double mean = 0.0;
  for (double w : walk) mean += w;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double w : walk) var += (w - mean) * (w - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (auto& w : walk) w = sd > 0.0 ? (w - mean) / sd : 0.0;
  return walk;
}

double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace

Ai4iTable generate_ai4i(const Ai4iOptions& options) {
  const std::size_t n = options.rows;
  Rng rng(options.seed);

  std::vector<int> quality(n);
  for (auto& q : quality) {
    const double u = rng.uniform();
    q = u < 0.5 ? 0 : (u < 0.8 ? 1 : 2);
  }
  const auto air_walk = normalised_walk(rng, n);
  const auto process_walk = normalised_walk(rng, n);

  constexpr std::array<char, 3> kQualityCode{'L', 'M', 'H'};
  constexpr std::array<int, 3> kWearStep{2, 3, 5};
  constexpr std::array<double, 3> kStrainLimit{11000.0, 12000.0, 13000.0};

  Ai4iTable table;
  std::string& out = table.csv;
  out.reserve(n * 80);
  out +=
      "UDI,Product ID,Type,Air temperature [K],Process temperature [K],Rotational speed [rpm],"
      "Torque [Nm],Tool wear [min],Machine failure,TWF,HDF,PWF,OSF,RNF\n";

  int wear = 0;
  int replace_at = 200 + static_cast<int>(rng.index(41));
  for (std::size_t i = 0; i < n; ++i) {
    const int q = quality[i];
    const double air = round_to(300.0 + 2.0 * air_walk[i], 0.1);
    const double process = round_to(air + 10.0 + process_walk[i], 0.1);
    double torque = 40.0 + 10.0 * rng.normal();
    while (torque <= 0.0) torque = 40.0 + 10.0 * rng.normal();
    torque = round_to(torque, 0.1);
    const double speed =
        std::round(kSpeedScale * std::pow(40.0 / torque, kSpeedExponent) * std::exp(kSpeedNoise * rng.normal()));

    wear += kWearStep[q];
    bool twf = false;
    if (wear >= replace_at) {
      ++table.counts.tool_changes;
      twf = rng.uniform() < 51.0 / 120.0;
    }
    const int recorded_wear = wear;
    if (wear >= replace_at) {
      wear = 0;
      replace_at = 200 + static_cast<int>(rng.index(41));
    }

    const bool hdf = (process - air) < 8.6 && speed < 1380.0;
    const double power = torque * speed * 2.0 * std::numbers::pi / 60.0;
    const bool pwf = power < 3500.0 || power > 9000.0;
    const bool osf = recorded_wear * torque > kStrainLimit[q];
    const bool rnf = rng.uniform() < 0.001;
    const bool failure = twf || hdf || pwf || osf || rnf;

    table.counts.machine_failure += failure;
    table.counts.twf += twf;
    table.counts.hdf += hdf;
    table.counts.pwf += pwf;
    table.counts.osf += osf;
    table.counts.rnf += rnf;

    const auto serial = 10000 + rng.index(90000);
    out += fmt::format("{},{}{},{},{:.1f},{:.1f},{:.0f},{:.1f},{},{:d},{:d},{:d},{:d},{:d},{:d}\n", i + 1,
                       kQualityCode[q], serial, kQualityCode[q], air, process, speed, torque, recorded_wear,
                       failure, twf, hdf, pwf, osf, rnf);
  }
  return table;
}

Dataset reference_ai4i_dataset() {
  return parse_csv(generate_ai4i({.rows = 10000, .seed = kReferenceAi4iSeed}).csv);
}

}  // namespace vacal

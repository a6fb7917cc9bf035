#include "hargnn/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "hargnn/error.hpp"

namespace hargnn {

void SynthConfig::validate() const {
  if (n_subjects < 1) throw ConfigError("synth: n_subjects must be >= 1");
  if (n_classes < 1) throw ConfigError("synth: n_classes must be >= 1");
  if (n_sensors < 1) throw ConfigError("synth: n_sensors must be >= 1");
  if (channels_per_sensor < 1) throw ConfigError("synth: channels_per_sensor must be >= 1");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("synth: sample rate must be positive");
  if (!(duration_s > 0.0)) throw ConfigError("synth: duration must be positive");
  if (!(noise_std >= 0.0)) throw ConfigError("synth: noise_std must be >= 0");
  if (sensor_informativeness.size() != static_cast<std::size_t>(n_sensors)) {
    throw ConfigError("synth: informativeness needs one entry per sensor (" + std::to_string(n_sensors) + ")");
  }
  for (double v : sensor_informativeness)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("synth: informativeness entries must be finite and >= 0");
  if (!(bout_min_s > 0.0) || bout_max_s < bout_min_s) throw ConfigError("synth: need 0 < bout_min_s <= bout_max_s");
  if (!(subject_variability >= 0.0 && subject_variability < 1.0)) {
    throw ConfigError("synth: subject_variability must be in [0, 1)");
  }
}

std::vector<std::string> synth_class_names(int n_classes) {
  if (n_classes == 7) {
    return {"lying", "lying_down", "standing_up", "sitting", "sitting_down", "walking", "getting_up"};
  }
  std::vector<std::string> names;
  for (int c = 0; c < n_classes; ++c) names.push_back("class_" + std::to_string(c));
  return names;
}

DatasetMeta synth_meta(const SynthConfig& config) {
  return {synth_class_names(config.n_classes), config.sample_rate_hz};
}

double synth_waveform(int class_id, int sensor, int channel, double bout_time, int n_classes) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double c = class_id, s = sensor, k = channel;
  const double freq = 0.3 + 0.3 * c + 0.1 * k;
  const double phase = two_pi * std::fmod(0.37 * c + 0.23 * k + 0.11 * s, 1.0);
  const double offset = 0.8 * std::cos(two_pi * (c + 1.0) * (k + 1.0 + s) / (n_classes + 1.0));
  return offset + std::sin(two_pi * freq * bout_time + phase);
}

std::vector<SensorRecording> synthesize(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const auto d = static_cast<std::size_t>(config.n_sensors * config.channels_per_sensor);
  const auto length = static_cast<std::size_t>(std::llround(config.duration_s * config.sample_rate_hz));
  ChannelLayout layout;
  static const char* axes[] = {"x", "y", "z"};
  for (int s = 0; s < config.n_sensors; ++s)
    for (int k = 0; k < config.channels_per_sensor; ++k) {
      const std::string axis = k < 3 ? axes[k] : "c" + std::to_string(k);
      layout.push_back({s + 1, "s" + std::to_string(s + 1) + "_" + axis});
    }

  std::vector<SensorRecording> recs;
  for (int subject = 1; subject <= config.n_subjects; ++subject) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(subject)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    const double gain = 1.0 + config.subject_variability * (2.0 * unit(rng) - 1.0);

    SensorRecording rec;
    rec.subject_id = subject;
    rec.run_id = 1;
    rec.sample_rate_hz = config.sample_rate_hz;
    rec.layout = layout;
    rec.timestamps.reserve(length);
    rec.labels.reserve(length);
    rec.channels.reserve(length * d);

    int current = -1;
    std::size_t bout_start = 0, bout_end = 0;
    for (std::size_t i = 0; i < length; ++i) {
      if (i >= bout_end) {
        int next = static_cast<int>(unit(rng) * config.n_classes);
        if (next >= config.n_classes) next = config.n_classes - 1;
        if (config.n_classes > 1 && next == current) next = (next + 1) % config.n_classes;
        current = next;
        const double seconds = config.bout_min_s + (config.bout_max_s - config.bout_min_s) * unit(rng);
        bout_start = i;
        bout_end = i + std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seconds * config.sample_rate_hz)));
      }
      const double bout_time = static_cast<double>(i - bout_start) / config.sample_rate_hz;
      for (int s = 0; s < config.n_sensors; ++s) {
        const double inform = config.sensor_informativeness[static_cast<std::size_t>(s)];
        for (int k = 0; k < config.channels_per_sensor; ++k) {
          const double clean = inform * gain * synth_waveform(current, s, k, bout_time, config.n_classes);
          rec.channels.push_back(clean + config.noise_std * noise(rng));
        }
      }
      rec.labels.push_back(current);
      rec.timestamps.push_back(static_cast<double>(i) / config.sample_rate_hz);
    }
    recs.push_back(std::move(rec));
  }
  return recs;
}

}  // namespace hargnn

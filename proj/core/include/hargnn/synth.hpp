#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hargnn/recording.hpp"

namespace hargnn {

/// Controllable synthetic activity dataset. Every class has a fixed waveform
/// family (per-channel sinusoid with class-specific frequency, phase and
/// offset) that does not depend on the seed; the seed drives bout order and
/// lengths, per-subject gain and the additive Gaussian noise.
struct SynthConfig {
  int n_subjects = 12;
  int n_classes = 7;
  int n_sensors = 2;
  int channels_per_sensor = 3;
  double sample_rate_hz = 10.0;
  double duration_s = 240.0;
  double noise_std = 0.3;
  std::vector<double> sensor_informativeness{1.0, 1.0};
  double bout_min_s = 3.0;
  double bout_max_s = 10.0;
  double subject_variability = 0.1;  // per-subject gain drawn from [1 - v, 1 + v]

  void validate() const;  // throws ConfigError
};

/// Class names: the seven ward activities when n_classes == 7, else class_<k>.
std::vector<std::string> synth_class_names(int n_classes);

DatasetMeta synth_meta(const SynthConfig& config);

/// Noise-free amplitude of (class, sensor, channel) at `bout_time` seconds
/// into a bout, before informativeness and subject gain.
double synth_waveform(int class_id, int sensor, int channel, double bout_time, int n_classes);

/// One recording (run 1) per subject, subjects numbered 1..n_subjects.
std::vector<SensorRecording> synthesize(const SynthConfig& config, std::uint64_t seed);

}  // namespace hargnn

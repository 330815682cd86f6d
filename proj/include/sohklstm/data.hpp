#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sohklstm/linalg.hpp"

namespace sohklstm {

/// One charge/discharge cycle's per-cycle aggregates.
struct CycleRecord {
  long cycle_index = 0;       // >= 1, strictly increasing within a file
  double capacity_ah = 0.0;   // > 0
  double voltage_v = 0.0;     // mean discharge voltage
  double current_a = 0.0;     // mean discharge current
  double temperature_c = 0.0; // mean cell temperature
  double soh = 0.0;           // fraction; capacity/nominal when not supplied
};

struct CycleData {
  std::vector<CycleRecord> records;
  double nominal_capacity = 0.0;  // 0 when neither file header nor caller supplied one
};

/// Canonical CSV: header `cycle_index,capacity_ah,voltage_v,current_a,temperature_c[,soh]`,
/// optional comment line `# nominal_capacity_ah=<float>`. A positive
/// `nominal_capacity_override` takes precedence over the file header.
CycleData load_csv(const std::string& path, double nominal_capacity_override = 0.0);

/// Writes the canonical CSV with the soh column and a nominal-capacity header
/// comment when nominal_capacity > 0. Output is byte-deterministic.
void write_csv(const std::string& path, const std::vector<CycleRecord>& records,
               double nominal_capacity);

/// Feature column order used throughout: the scaler, windows, and targets.
namespace col {
inline constexpr int kCapacity = 0;
inline constexpr int kVoltage = 1;
inline constexpr int kCurrent = 2;
inline constexpr int kTemperature = 3;
inline constexpr int kSoh = 4;
inline constexpr int kCount = 5;
}  // namespace col

/// Per-column affine map onto [0,1], fitted on the training partition only.
/// Out-of-range inputs transform to values outside [0,1]; no clipping here.
struct MinMaxScaler {
  Vector min_v, max_v;  // col::kCount entries each
  bool fitted = false;

  void fit(const std::vector<CycleRecord>& records);
  double transform(int column, double x) const;
  double inverse(int column, double x) const;
};

/// One training sample: window of normalized feature vectors and the
/// normalized targets of the cycle the window ends on.
struct Sample {
  std::vector<Vector> window;  // L vectors [capacity_prev, voltage, current, temperature]
  double target_soh = 0.0;     // normalized
  double target_cap = 0.0;     // normalized
  long cycle_index = 0;        // target cycle
};

struct SequenceDataset {
  std::vector<Sample> samples;
  std::string partition;  // train, val, or test
};

struct SplitDatasets {
  SequenceDataset train, val, test;
};

/// Chronological 70/20/10 split, scaler fit on the training slice only, all
/// slices transformed with it, windows of length `window` built inside each
/// slice (no window crosses a boundary).
SplitDatasets fit_transform(MinMaxScaler& scaler, const std::vector<CycleRecord>& records,
                            int window);

/// Same split and window construction with an already fitted scaler.
SplitDatasets transform_split(const MinMaxScaler& scaler, const std::vector<CycleRecord>& records,
                              int window);

enum class Profile { GroupA, GroupB, GroupC };

/// Accepts groupA/groupB/groupC (case-sensitive).
Profile parse_profile(const std::string& name);
std::string profile_name(Profile p);

/// Synthetic degradation series: exponential capacity fade from c0 to 0.7*c0
/// across n_cycles, small regeneration bumps, Gaussian measurement noise, and
/// profile-dependent operating conditions. Deterministic per seed.
std::vector<CycleRecord> synth_generate(std::uint64_t seed, int n_cycles, Profile profile,
                                        double c0 = 2.0);

}  // namespace sohklstm

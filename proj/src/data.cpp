#include "sohklstm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "sohklstm/errors.hpp"

namespace sohklstm {
namespace {

const char* kColumnNames[col::kCount] = {"capacity_ah", "voltage_v", "current_a",
                                         "temperature_c", "soh"};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw, const char* column, long line) {
  const std::string s = trim(raw);
  double value = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError(std::string("non-numeric field '") + raw + "' in column " + column, line);
  }
  return value;
}

long parse_index(const std::string& raw, long line) {
  const std::string s = trim(raw);
  long value = 0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError("non-numeric field '" + raw + "' in column cycle_index", line);
  }
  return value;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void check_header(const std::vector<std::string>& fields, long line) {
  const char* expected[6] = {"cycle_index", "capacity_ah", "voltage_v",
                             "current_a",   "temperature_c", "soh"};
  if (fields.size() > 6) throw ParseError("unexpected extra column '" + fields[6] + "'", line);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (trim(fields[i]) != expected[i]) {
      throw ParseError("unexpected column '" + fields[i] + "' (expected '" + expected[i] + "')",
                       line);
    }
  }
  if (fields.size() < 5) {
    throw ParseError(std::string("missing column '") + expected[fields.size()] + "'", line);
  }
}

}  // namespace

CycleData load_csv(const std::string& path, double nominal_capacity_override) {
  std::ifstream file(path);
  if (!file) throw ParseError("cannot open '" + path + "'");

  CycleData out;
  double header_nominal = 0.0;
  bool saw_header = false;
  bool has_soh_column = false;
  std::string line;
  long line_no = 0;

  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped[0] == '#') {
      const std::string body = trim(stripped.substr(1));
      const std::string key = "nominal_capacity_ah=";
      if (body.rfind(key, 0) == 0) {
        header_nominal = parse_double(body.substr(key.size()), "nominal_capacity_ah", line_no);
        if (header_nominal <= 0.0) {
          throw ParseError("nominal_capacity_ah must be positive", line_no);
        }
      }
      continue;
    }
    const std::vector<std::string> fields = split_fields(stripped);
    if (!saw_header) {
      check_header(fields, line_no);
      has_soh_column = fields.size() == 6;
      saw_header = true;
      continue;
    }
    const std::size_t expected = has_soh_column ? 6 : 5;
    if (fields.size() != expected) {
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(expected), line_no);
    }
    CycleRecord r;
    r.cycle_index = parse_index(fields[0], line_no);
    if (r.cycle_index < 1) throw ParseError("cycle_index must be >= 1", line_no);
    if (!out.records.empty() && r.cycle_index <= out.records.back().cycle_index) {
      throw ParseError("non-increasing cycle_index " + std::to_string(r.cycle_index) + " after " +
                       std::to_string(out.records.back().cycle_index), line_no);
    }
    r.capacity_ah = parse_double(fields[1], "capacity_ah", line_no);
    if (r.capacity_ah <= 0.0) throw ParseError("capacity must be positive", line_no);
    r.voltage_v = parse_double(fields[2], "voltage_v", line_no);
    r.current_a = parse_double(fields[3], "current_a", line_no);
    r.temperature_c = parse_double(fields[4], "temperature_c", line_no);
    const double nominal =
        nominal_capacity_override > 0.0 ? nominal_capacity_override : header_nominal;
    if (has_soh_column) {
      r.soh = parse_double(fields[5], "soh", line_no);
      if (!(r.soh > 0.0) || !std::isfinite(r.soh)) {
        throw ParseError("soh must be a positive fraction", line_no);
      }
    } else {
      if (nominal <= 0.0) {
        throw ParseError(
            "soh column absent and nominal capacity unknown; add '# nominal_capacity_ah=<float>' "
            "or supply it in configuration",
            line_no);
      }
      r.soh = r.capacity_ah / nominal;
    }
    out.records.push_back(r);
  }
  if (!saw_header) throw ParseError("missing header in '" + path + "'");
  if (out.records.empty()) throw ParseError("no data rows in '" + path + "'");
  out.nominal_capacity =
      nominal_capacity_override > 0.0 ? nominal_capacity_override : header_nominal;
  return out;
}

void write_csv(const std::string& path, const std::vector<CycleRecord>& records,
               double nominal_capacity) {
  std::ofstream file(path);
  if (!file) throw ParseError("cannot open '" + path + "' for writing");
  if (nominal_capacity > 0.0) {
    file << "# nominal_capacity_ah=" << fmt_double(nominal_capacity) << "\n";
  }
  file << "cycle_index,capacity_ah,voltage_v,current_a,temperature_c,soh\n";
  for (const CycleRecord& r : records) {
    file << r.cycle_index << ',' << fmt_double(r.capacity_ah) << ',' << fmt_double(r.voltage_v)
         << ',' << fmt_double(r.current_a) << ',' << fmt_double(r.temperature_c) << ','
         << fmt_double(r.soh) << "\n";
  }
  if (!file.good()) throw ParseError("write failed for '" + path + "'");
}

void MinMaxScaler::fit(const std::vector<CycleRecord>& records) {
  if (records.empty()) throw ShapeError("MinMaxScaler: fit on empty data");
  min_v.assign(col::kCount, std::numeric_limits<double>::infinity());
  max_v.assign(col::kCount, -std::numeric_limits<double>::infinity());
  for (const CycleRecord& r : records) {
    const double values[col::kCount] = {r.capacity_ah, r.voltage_v, r.current_a, r.temperature_c,
                                        r.soh};
    for (int c = 0; c < col::kCount; ++c) {
      min_v[c] = std::min(min_v[c], values[c]);
      max_v[c] = std::max(max_v[c], values[c]);
    }
  }
  for (int c = 0; c < col::kCount; ++c) {
    if (!(max_v[c] > min_v[c])) {
      throw DomainError(std::string("degenerate feature '") + kColumnNames[c] +
                        "': min equals max on the training partition");
    }
  }
  fitted = true;
}

double MinMaxScaler::transform(int column, double x) const {
  if (!fitted) throw std::logic_error("MinMaxScaler: transform before fit");
  if (column < 0 || column >= col::kCount) throw ShapeError("MinMaxScaler: bad column index");
  return (x - min_v[column]) / (max_v[column] - min_v[column]);
}

double MinMaxScaler::inverse(int column, double x) const {
  if (!fitted) throw std::logic_error("MinMaxScaler: inverse before fit");
  if (column < 0 || column >= col::kCount) throw ShapeError("MinMaxScaler: bad column index");
  return min_v[column] + x * (max_v[column] - min_v[column]);
}

namespace {

SequenceDataset build_windows(const std::vector<CycleRecord>& records, std::size_t begin,
                              std::size_t end, int window, const MinMaxScaler& scaler,
                              const char* tag) {
  SequenceDataset ds;
  ds.partition = tag;
  const std::size_t w = static_cast<std::size_t>(window);
  for (std::size_t j = begin + w; j < end; ++j) {
    Sample s;
    s.window.reserve(w);
    // feature at step t pairs cycle t's conditions with cycle t-1's capacity
    for (std::size_t t = j - w + 1; t <= j; ++t) {
      s.window.push_back({scaler.transform(col::kCapacity, records[t - 1].capacity_ah),
                          scaler.transform(col::kVoltage, records[t].voltage_v),
                          scaler.transform(col::kCurrent, records[t].current_a),
                          scaler.transform(col::kTemperature, records[t].temperature_c)});
    }
    s.target_soh = scaler.transform(col::kSoh, records[j].soh);
    s.target_cap = scaler.transform(col::kCapacity, records[j].capacity_ah);
    s.cycle_index = records[j].cycle_index;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

namespace {

struct SplitSizes {
  std::size_t train, val, test;
};

SplitSizes split_sizes(std::size_t n, int window) {
  if (window < 1) throw ConfigError("window must be at least 1");
  SplitSizes s{n * 7 / 10, n * 2 / 10, 0};
  s.test = n - s.train - s.val;
  const std::size_t need = static_cast<std::size_t>(window) + 1;
  const struct { const char* name; std::size_t size; } parts[] = {
      {"train", s.train}, {"val", s.val}, {"test", s.test}};
  for (const auto& part : parts) {
    if (part.size < need) {
      throw ConfigError("too few records: partition '" + std::string(part.name) + "' has " +
                        std::to_string(part.size) + " cycles but one window of length " +
                        std::to_string(window) + " needs " + std::to_string(need));
    }
  }
  return s;
}

}  // namespace

SplitDatasets transform_split(const MinMaxScaler& scaler, const std::vector<CycleRecord>& records,
                              int window) {
  const SplitSizes s = split_sizes(records.size(), window);
  SplitDatasets out;
  out.train = build_windows(records, 0, s.train, window, scaler, "train");
  out.val = build_windows(records, s.train, s.train + s.val, window, scaler, "val");
  out.test = build_windows(records, s.train + s.val, records.size(), window, scaler, "test");
  return out;
}

SplitDatasets fit_transform(MinMaxScaler& scaler, const std::vector<CycleRecord>& records,
                            int window) {
  const SplitSizes s = split_sizes(records.size(), window);
  scaler.fit({records.begin(), records.begin() + static_cast<long>(s.train)});
  return transform_split(scaler, records, window);
}

Profile parse_profile(const std::string& name) {
  if (name == "groupA") return Profile::GroupA;
  if (name == "groupB") return Profile::GroupB;
  if (name == "groupC") return Profile::GroupC;
  throw ConfigError("unknown profile '" + name + "' (valid: groupA, groupB, groupC)");
}

std::string profile_name(Profile p) {
  switch (p) {
    case Profile::GroupA: return "groupA";
    case Profile::GroupB: return "groupB";
    case Profile::GroupC: return "groupC";
  }
  throw ConfigError("invalid profile value");
}

std::vector<CycleRecord> synth_generate(std::uint64_t seed, int n_cycles, Profile profile,
                                        double c0) {
  if (n_cycles < 20) throw ConfigError("n_cycles must be at least 20");
  if (!(c0 > 0.0)) throw ConfigError("nominal capacity must be positive");

  double temp_nominal = 24.0, current_nominal = 2.0;
  switch (profile) {
    case Profile::GroupA: temp_nominal = 24.0; current_nominal = 2.0; break;
    case Profile::GroupB: temp_nominal = 4.0; current_nominal = 4.0; break;
    case Profile::GroupC: temp_nominal = 4.0; current_nominal = 1.0; break;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> bump_trigger(0.0, 1.0);
  std::uniform_real_distribution<double> bump_size(0.002, 0.006);
  std::normal_distribution<double> cap_noise(0.0, 0.002);
  std::normal_distribution<double> volt_noise(0.0, 0.01);
  std::normal_distribution<double> curr_noise(0.0, 0.02);
  std::normal_distribution<double> temp_noise(0.0, 0.5);

  // a*exp(-b*t) + (1-a) runs from 1 at t=0 to 0.7 at t=n-1
  const double a = 0.5;
  const double b = std::log(2.5) / static_cast<double>(n_cycles - 1);

  std::vector<CycleRecord> out;
  out.reserve(n_cycles);
  double regen = 0.0;
  for (int t = 0; t < n_cycles; ++t) {
    const double base = c0 * (a * std::exp(-b * t) + (1.0 - a));
    double cap;
    if (t == 0) {
      cap = c0;
    } else {
      regen *= 0.5;
      if (bump_trigger(rng) < 0.05) regen += bump_size(rng);
      cap = base + regen + cap_noise(rng);
      cap = std::max(cap, 0.01);
    }
    CycleRecord r;
    r.cycle_index = t + 1;
    r.capacity_ah = cap;
    r.voltage_v = 3.6 - 0.25 * (1.0 - base / c0) + volt_noise(rng);
    r.current_a = current_nominal + curr_noise(rng);
    r.temperature_c = temp_nominal + temp_noise(rng);
    r.soh = cap / c0;
    out.push_back(r);
  }
  return out;
}

}  // namespace sohklstm

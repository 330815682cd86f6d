#include "sohklstm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "sohklstm/errors.hpp"

namespace sohklstm {
namespace {

int base_hidden(const LSTMCellParams& p) { return p.hidden_size; }
int base_hidden(const KLSTMCellParams& p) { return p.base.hidden_size; }
int base_input(const LSTMCellParams& p) { return p.input_size; }
int base_input(const KLSTMCellParams& p) { return p.base.input_size; }

}  // namespace

int SOHModel::hidden_size() const {
  return std::visit([](const auto& c) { return base_hidden(c); }, cell);
}

int SOHModel::input_size() const {
  return std::visit([](const auto& c) { return base_input(c); }, cell);
}

std::vector<TensorRef> SOHModel::tensors() {
  std::vector<TensorRef> out =
      std::visit([](auto& c) { return c.tensors(); }, cell);
  out.push_back({"w_out", w_out.data.data(), {w_out.rows, w_out.cols}});
  out.push_back({"b_out", b_out.data(), {b_out.size()}});
  return out;
}

Vector SOHModel::hidden_final(const std::vector<Vector>& window, ForwardTape* tape) const {
  if (window.empty()) throw ShapeError("predict: empty window");
  SequenceResult r = std::visit(
      [&](const auto& c) { return forward_sequence(c, window, CellState::zeros(base_hidden(c))); },
      cell);
  if (tape != nullptr) *tape = std::move(r.tape);
  return r.states.back().h;
}

Vector SOHModel::output(const std::vector<Vector>& window, ForwardTape* tape) const {
  return add(matvec(w_out, hidden_final(window, tape)), b_out);
}

Prediction SOHModel::predict(const std::vector<Vector>& window) const {
  if (!scaler.fitted) throw std::logic_error("predict: scaler not fitted");
  const Vector y = output(window);
  Prediction p;
  p.soh_hat = std::clamp(scaler.inverse(col::kSoh, y[0]), 0.0, 1.2);
  p.cap_hat = std::max(scaler.inverse(col::kCapacity, y[1]), 0.0);
  return p;
}

SOHModel build_model_zeros(const ModelShape& s) {
  SOHModel m;
  if (s.klstm) {
    m.cell = KLSTMCellParams::zeros(s.hidden, s.input, s.grid_inner, s.grid_outer, s.degree,
                                    s.channels);
  } else {
    m.cell = LSTMCellParams::zeros(s.hidden, s.input);
  }
  m.w_out = Matrix(2, static_cast<std::size_t>(s.hidden));
  m.b_out.assign(2, 0.0);
  return m;
}

SOHModel build_model(const ModelShape& s, std::mt19937_64& rng) {
  SOHModel m = build_model_zeros(s);
  if (s.klstm) {
    m.cell = KLSTMCellParams::init(s.hidden, s.input, s.grid_inner, s.grid_outer, s.degree,
                                   s.channels, rng);
  } else {
    m.cell = LSTMCellParams::init(s.hidden, s.input, rng);
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(s.hidden));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& e : m.w_out.data) e = dist(rng);
  return m;
}

BatchLoss batch_loss(const SOHModel& m, const std::vector<Sample>& samples,
                     const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ShapeError("batch_loss: empty batch");
  const std::size_t hidden = static_cast<std::size_t>(m.hidden_size());
  BatchLoss out;
  out.grad_w_out = Matrix(2, hidden);
  out.grad_b_out.assign(2, 0.0);
  out.grad_h_final.reserve(indices.size());
  out.tapes.resize(indices.size());
  const double inv_b = 1.0 / static_cast<double>(indices.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Sample& s = samples.at(indices[k]);
    ForwardTape& tape = out.tapes[k];
    const Vector h = m.hidden_final(s.window, &tape);
    const Vector y = add(matvec(m.w_out, h), m.b_out);
    const Vector dy = {(y[0] - s.target_soh) * inv_b, (y[1] - s.target_cap) * inv_b};
    acc += (y[0] - s.target_soh) * (y[0] - s.target_soh) +
           (y[1] - s.target_cap) * (y[1] - s.target_cap);
    add_outer(out.grad_w_out, dy, h);
    axpy(1.0, dy, out.grad_b_out);
    out.grad_h_final.push_back(matvec_transposed(m.w_out, dy));
  }
  out.value = acc * inv_b * 0.5;
  return out;
}

double dataset_loss(const SOHModel& m, const std::vector<Sample>& samples) {
  if (samples.empty()) throw ShapeError("dataset_loss: empty dataset");
  double acc = 0.0;
  for (const Sample& s : samples) {
    const Vector y = m.output(s.window);
    acc += (y[0] - s.target_soh) * (y[0] - s.target_soh) +
           (y[1] - s.target_cap) * (y[1] - s.target_cap);
  }
  return acc / (2.0 * static_cast<double>(samples.size()));
}

namespace {

constexpr char kMagic[8] = {'S', 'O', 'H', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(v))) throw ParseError("truncated checkpoint");
  return v;
}

std::uint64_t read_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(v))) throw ParseError("truncated checkpoint");
  return v;
}

struct StoredTensor {
  std::vector<std::size_t> shape;
  Vector data;
};

void write_tensor(std::ofstream& f, const std::string& name,
                  const std::vector<std::size_t>& shape, const double* data, std::size_t size) {
  write_u32(f, static_cast<std::uint32_t>(name.size()));
  f.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(f, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) write_u64(f, d);
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size * sizeof(double)));
}

}  // namespace

void save_model(const SOHModel& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path + "' for writing");

  // trainable tensors + scaler state, all under one format
  std::vector<TensorRef> refs = const_cast<SOHModel&>(m).tensors();
  const double fitted_flag = m.scaler.fitted ? 1.0 : 0.0;
  const Vector zeros5(5, 0.0);
  const Vector& smin = m.scaler.fitted ? m.scaler.min_v : zeros5;
  const Vector& smax = m.scaler.fitted ? m.scaler.max_v : zeros5;

  f.write(kMagic, sizeof(kMagic));
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(refs.size() + 4));
  for (const TensorRef& r : refs) write_tensor(f, r.name, r.shape, r.data, r.size());
  write_tensor(f, "scaler_fitted", {1}, &fitted_flag, 1);
  write_tensor(f, "scaler_min", {5}, smin.data(), 5);
  write_tensor(f, "scaler_max", {5}, smax.data(), 5);
  write_tensor(f, "nominal_capacity", {1}, &m.nominal_capacity, 1);
  if (!f.good()) throw ParseError("write failed for '" + path + "'");
}

SOHModel load_model(const std::string& path, const ModelShape& shape) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path + "'");

  char magic[8];
  if (!f.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("'" + path + "' is not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = read_u32(f);
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = read_u32(f);

  std::map<std::string, StoredTensor> stored;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(f);
    if (name_len > 4096) throw ParseError("corrupt checkpoint: tensor name too long");
    std::string name(name_len, '\0');
    if (!f.read(name.data(), name_len)) throw ParseError("truncated checkpoint");
    StoredTensor t;
    const std::uint32_t ndim = read_u32(f);
    if (ndim > 8) throw ParseError("corrupt checkpoint: tensor '" + name + "' has rank " +
                                   std::to_string(ndim));
    std::size_t size = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.shape.push_back(static_cast<std::size_t>(read_u64(f)));
      size *= t.shape.back();
    }
    if (size > (1u << 28)) throw ParseError("corrupt checkpoint: tensor '" + name + "' too large");
    t.data.resize(size);
    if (!f.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(size * sizeof(double)))) {
      throw ParseError("truncated checkpoint reading tensor '" + name + "'");
    }
    if (!stored.emplace(name, std::move(t)).second) {
      throw ParseError("corrupt checkpoint: duplicate tensor '" + name + "'");
    }
  }

  SOHModel m = build_model_zeros(shape);
  auto take = [&stored](const std::string& name) -> StoredTensor& {
    auto it = stored.find(name);
    if (it == stored.end()) throw ParseError("checkpoint missing tensor '" + name + "'");
    return it->second;
  };
  for (TensorRef r : m.tensors()) {
    StoredTensor& t = take(r.name);
    if (t.shape != r.shape) {
      std::string want, got;
      for (std::size_t d : r.shape) want += std::to_string(d) + " ";
      for (std::size_t d : t.shape) got += std::to_string(d) + " ";
      throw ShapeError("tensor '" + r.name + "' has shape [ " + got +
                       "] but the configured model expects [ " + want + "]");
    }
    std::copy(t.data.begin(), t.data.end(), r.data);
    stored.erase(r.name);
  }
  auto take_sized = [&take](const std::string& name, std::size_t n) -> StoredTensor& {
    StoredTensor& t = take(name);
    if (t.data.size() != n) {
      throw ShapeError("tensor '" + name + "' has " + std::to_string(t.data.size()) +
                       " elements, expected " + std::to_string(n));
    }
    return t;
  };
  m.scaler.fitted = take_sized("scaler_fitted", 1).data[0] != 0.0;
  m.scaler.min_v = take_sized("scaler_min", 5).data;
  m.scaler.max_v = take_sized("scaler_max", 5).data;
  m.nominal_capacity = take_sized("nominal_capacity", 1).data[0];
  stored.erase("scaler_fitted");
  stored.erase("scaler_min");
  stored.erase("scaler_max");
  stored.erase("nominal_capacity");
  if (!stored.empty()) {
    throw ParseError("unexpected tensor '" + stored.begin()->first + "' in checkpoint");
  }
  return m;
}

}  // namespace sohklstm

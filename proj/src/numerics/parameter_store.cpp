// SPDX-License-Identifier: Apache-2.0
#include "wakavt/numerics/parameter_store.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace wakavt::numerics {

std::string_view partition_name(Partition p) {
  switch (p) {
    case Partition::Theta: return "theta";
    case Partition::PhiR: return "phi_r";
    case Partition::PhiP: return "phi_p";
    case Partition::Xi: return "xi";
  }
  return "theta";
}

Partition parse_partition(std::string_view name) {
  if (name == "theta") return Partition::Theta;
  if (name == "phi_r") return Partition::PhiR;
  if (name == "phi_p") return Partition::PhiP;
  if (name == "xi") return Partition::Xi;
  throw std::invalid_argument("unknown partition label '" + std::string(name) + "'");
}

Var ParameterStore::add(const std::string& name, Tensor init, Partition partition) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter path '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({name, partition, leaf(std::move(init))});
  return entries_.back().var;
}

const Var& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return entries_[it->second].var;
}

Tensor& ParameterStore::value(const std::string& name) { return get(name).node()->value; }

const Tensor& ParameterStore::grad(const std::string& name) const {
  return get(name).node()->grad;
}

std::size_t ParameterStore::num_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var.value().size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.var.node()->grad.fill(0.0);
}

double ParameterStore::grad_norm() const {
  double s = 0.0;
  for (const auto& e : entries_)
    for (double g : e.var.node()->grad.values()) s += g * g;
  return std::sqrt(s);
}

void backward(const Var& loss, ParameterStore& store) {
  store.zero_grad();
  backward(loss);
}

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_tensor({fan_in, fan_out}, bound, rng);
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

// ---- checkpoint -----------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "WAKAVT-CHECKPOINT 1";

void check_field(const std::string& s, const char* what) {
  if (s.find_first_of("\t\n") != std::string::npos) {
    throw std::invalid_argument(std::string("checkpoint ") + what + " contains a tab or newline");
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

void put_le(std::string& buf, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

const Checkpoint::Record* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ostringstream head;
  head << kMagic << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    check_field(k, "meta key");
    check_field(v, "meta value");
    head << "meta\t" << k << '\t' << v << '\n';
  }
  std::string payload;
  for (const auto& r : ckpt.records) {
    check_field(r.name, "tensor name");
    check_field(r.label, "tensor label");
    head << "tensor\t" << r.name << '\t' << r.label << '\t';
    const auto& shape = r.value.shape();
    for (std::size_t i = 0; i < shape.size(); ++i) head << (i ? "," : "") << shape[i];
    head << '\t' << payload.size() << '\n';
    for (double v : r.value.values()) put_le(payload, v);
  }
  head << "payload\t" << payload.size() << '\n';

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  const std::string h = head.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw std::runtime_error("not a checkpoint archive: " + path);
  }
  struct Pending {
    std::string name, label;
    Shape shape;
    std::size_t offset;
  };
  std::vector<Pending> pending;
  Checkpoint ckpt;
  std::size_t payload_bytes = 0;
  bool have_payload = false;
  std::size_t line_no = 1;
  while (!have_payload && std::getline(in, line)) {
    ++line_no;
    auto f = split_tabs(line);
    auto bad = [&](const char* why) {
      return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + why);
    };
    if (f[0] == "meta" && f.size() == 3) {
      ckpt.meta[f[1]] = f[2];
    } else if (f[0] == "tensor" && f.size() == 5) {
      Shape shape;
      std::stringstream ss(f[3]);
      std::string dim;
      while (std::getline(ss, dim, ',')) shape.push_back(std::stoull(dim));
      if (shape.empty()) throw bad("tensor without shape");
      pending.push_back({f[1], f[2], std::move(shape), std::stoull(f[4])});
    } else if (f[0] == "payload" && f.size() == 2) {
      payload_bytes = std::stoull(f[1]);
      have_payload = true;
    } else {
      throw bad("malformed manifest line");
    }
  }
  if (!have_payload) throw std::runtime_error("checkpoint manifest is truncated: " + path);
  std::string payload(payload_bytes, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload_bytes));
  if (static_cast<std::size_t>(in.gcount()) != payload_bytes) {
    throw std::runtime_error("checkpoint payload is truncated: " + path);
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  for (auto& p : pending) {
    const std::size_t n = shape_numel(p.shape);
    if (p.offset + 8 * n > payload_bytes) {
      throw std::runtime_error("tensor '" + p.name + "' runs past the payload");
    }
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = get_le(bytes + p.offset + 8 * i);
    ckpt.records.push_back({p.name, p.label, Tensor(std::move(p.shape), std::move(vals))});
  }
  return ckpt;
}

void export_parameters(const ParameterStore& store, Checkpoint& ckpt) {
  for (const auto& e : store.entries()) {
    ckpt.records.push_back({e.name, std::string(partition_name(e.partition)), e.var.value()});
  }
}

void import_parameters(const Checkpoint& ckpt, ParameterStore& store) {
  for (const auto& e : store.entries()) {
    const auto* r = ckpt.find(e.name);
    if (!r) throw std::runtime_error("checkpoint lacks parameter '" + e.name + "'");
    if (r->value.shape() != e.var.shape()) {
      throw ShapeError("checkpoint shape " + shape_to_string(r->value.shape()) +
                       " for '" + e.name + "' does not match " + shape_to_string(e.var.shape()));
    }
    e.var.node()->value = r->value;
  }
}

}  // namespace wakavt::numerics

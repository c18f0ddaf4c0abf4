// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/weights_io.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "jscope/error.hpp"

namespace jscope {
namespace {

constexpr char kMagic[8] = {'J', 'S', 'C', 'O', 'P', 'E', 'W', '\0'};

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw ValidationError("weights file truncated while reading " + std::string(what) + " at byte " +
                            std::to_string(pos_));
    }
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const char* what) { return le(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const auto n = u32(what);
    return std::string(bytes(n, what));
  }
  bool done() const { return pos_ == in_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  std::uint64_t le(int n, const char* what) {
    const auto s = bytes(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::map<std::string, std::string> config_entries(const ModelConfig& c) {
  return {
      {"d_model", std::to_string(c.d_model)},
      {"n_layers", std::to_string(c.n_layers)},
      {"n_heads", std::to_string(c.n_heads)},
      {"d_ff", std::to_string(c.d_ff)},
      {"vocab_size", std::to_string(c.vocab_size)},
      {"max_seq_len", std::to_string(c.max_seq_len)},
      {"seed", std::to_string(c.seed)},
      {"rope_base", format_double(c.rope_base)},
      {"norm_eps", format_double(c.norm_eps)},
  };
}

template <typename T>
T parse_field(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("weights file: config key '" + key + "' missing");
  const std::string& s = it->second;
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    std::istringstream in(s);
    in >> value;
    if (!in || !in.eof()) throw ValidationError("weights file: bad value '" + s + "' for " + key);
  } else {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ValidationError("weights file: bad value '" + s + "' for " + key);
    }
  }
  return value;
}

}  // namespace

std::string serialize_weights(const ModelConfig& config, const Weights& weights) {
  validate_weights(config, weights);
  Writer w;
  w.bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.u32(kWeightFormatVersion);
  const auto kv = config_entries(config);
  w.u32(static_cast<std::uint32_t>(kv.size()));
  for (const auto& [k, v] : kv) {
    w.str(k);
    w.str(v);
  }
  std::uint32_t count = 0;
  weights.for_each([&](const std::string&, const Tensor&) { ++count; });
  w.u32(count);
  weights.for_each([&](const std::string& name, const Tensor& t) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) w.u64(e);
    for (double v : t.data()) w.f64(v);
  });
  return w.take();
}

Checkpoint deserialize_weights(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof(kMagic), "magic") != std::string_view(kMagic, sizeof(kMagic))) {
    throw ValidationError("weights file: bad magic (not a jscope weight file)");
  }
  const auto version = r.u32("version");
  if (version != kWeightFormatVersion) {
    throw ValidationError("weights file: format version " + std::to_string(version) + ", this build reads version " +
                          std::to_string(kWeightFormatVersion));
  }
  std::map<std::string, std::string> kv;
  const auto n_keys = r.u32("config count");
  for (std::uint32_t i = 0; i < n_keys; ++i) {
    auto k = r.str("config key");
    kv[k] = r.str("config value");
  }
  Checkpoint ck;
  ck.config.d_model = parse_field<std::size_t>(kv, "d_model");
  ck.config.n_layers = parse_field<std::size_t>(kv, "n_layers");
  ck.config.n_heads = parse_field<std::size_t>(kv, "n_heads");
  ck.config.d_ff = parse_field<std::size_t>(kv, "d_ff");
  ck.config.vocab_size = parse_field<std::size_t>(kv, "vocab_size");
  ck.config.max_seq_len = parse_field<std::size_t>(kv, "max_seq_len");
  ck.config.seed = parse_field<std::uint64_t>(kv, "seed");
  ck.config.rope_base = parse_field<double>(kv, "rope_base");
  ck.config.norm_eps = parse_field<double>(kv, "norm_eps");
  ck.config.validate();

  std::map<std::string, Tensor> tensors;
  const auto n_tensors = r.u32("tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    auto name = r.str("tensor name");
    const auto rank = r.u32("tensor rank");
    if (rank > 4) throw ValidationError("weights file: tensor " + name + " has rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& e : shape) {
      e = r.u64("tensor shape");
      n *= e;
    }
    if (n * 8 > bytes.size()) {
      throw ValidationError("weights file truncated: tensor " + name + " " + shape_string(shape) +
                            " larger than file");
    }
    std::vector<double> data(n);
    for (auto& v : data) v = r.f64("tensor data");
    tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) {
    throw ValidationError("weights file: " + std::to_string(bytes.size() - r.pos()) + " trailing bytes");
  }

  ck.weights.layers.resize(ck.config.n_layers);
  ck.weights.for_each([&](const std::string& name, Tensor& t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ValidationError("weights file: tensor '" + name + "' missing");
    t = std::move(it->second);
    tensors.erase(it);
  });
  if (!tensors.empty()) throw ValidationError("weights file: unexpected tensor '" + tensors.begin()->first + "'");
  validate_weights(ck.config, ck.weights);
  return ck;
}

void save_weights(const ModelConfig& config, const Weights& weights, const std::filesystem::path& path) {
  const std::string bytes = serialize_weights(config, weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("failed writing " + path.string());
}

Checkpoint load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open weights file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_weights(buf.str());
}

Checkpoint load_weights(const std::filesystem::path& path, const ModelConfig& expected) {
  Checkpoint ck = load_weights(path);
  const auto have = config_entries(ck.config);
  const auto want = config_entries(expected);
  for (const auto& [key, value] : want) {
    if (have.at(key) != value) {
      throw ValidationError("weights file " + path.string() + ": " + key + " is " + have.at(key) + ", expected " +
                            value);
    }
  }
  return ck;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static constexpr char kHex[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = kHex[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

std::string model_fingerprint(const ModelConfig& config, const Weights& weights) {
  return fnv1a_hex(serialize_weights(config, weights));
}

}  // namespace jscope

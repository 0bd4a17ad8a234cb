#pragma once

// Checkpoint file: text header (config hash, step, seed, free-form metadata,
// leaf table) followed by every leaf as little-endian float32, row-major.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "safn/core/container.hpp"
#include "safn/nn/adam.hpp"
#include "safn/nn/param.hpp"

namespace safn::nn {

inline constexpr const char* kCheckpointMagic = "SAFN-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

class ConfigHashMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct Leaf {
  std::string name;
  MatF value;
};

struct Checkpoint {
  std::string config_hash;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> meta;
  std::vector<Leaf> leaves;

  const Leaf* find(const std::string& name) const {
    for (const auto& l : leaves)
      if (l.name == name) return &l;
    return nullptr;
  }

  void add(const std::string& name, MatF value) { leaves.push_back({name, std::move(value)}); }

  void require_hash(const std::string& expected) const {
    if (config_hash != expected)
      throw ConfigHashMismatch("checkpoint was written for config " + config_hash + ", current config hashes to " +
                               expected);
  }
};

inline std::string serialize_checkpoint(const Checkpoint& c) {
  Container box;
  box.header.magic = kCheckpointMagic;
  box.header.set("schema_version", std::to_string(kCheckpointVersion));
  box.header.set("config_hash", c.config_hash);
  box.header.set("step", std::to_string(c.step));
  box.header.set("seed", std::to_string(c.seed));
  for (const auto& [k, v] : c.meta) box.header.set("meta", k + " " + v);
  for (const auto& l : c.leaves) {
    box.header.set("leaf", l.name + " " + std::to_string(l.value.rows()) + " " + std::to_string(l.value.cols()));
    box.payload.insert(box.payload.end(), l.value.data(), l.value.data() + l.value.size());
  }
  return serialize_container(box);
}

inline Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin = "<memory>") {
  Container box = parse_container(bytes, kCheckpointMagic, origin);
  if (box.header.get_int("schema_version") != kCheckpointVersion)
    throw VersionError(origin + ": unsupported checkpoint version");
  Checkpoint c;
  c.config_hash = box.header.get("config_hash");
  c.step = box.header.get_int("step");
  c.seed = std::stoull(box.header.get("seed"));
  for (const auto& m : box.header.get_all("meta")) {
    const auto sp = m.find(' ');
    c.meta[m.substr(0, sp)] = sp == std::string::npos ? "" : m.substr(sp + 1);
  }
  std::size_t offset = 0;
  for (const auto& spec : box.header.get_all("leaf")) {
    std::istringstream is(spec);
    Leaf l;
    Eigen::Index r = 0, k = 0;
    if (!(is >> l.name >> r >> k)) throw DataError(origin + ": malformed leaf entry '" + spec + "'");
    const auto n = static_cast<std::size_t>(r * k);
    if (offset + n > box.payload.size()) throw DataError(origin + ": leaf table exceeds payload");
    l.value = Eigen::Map<const MatF>(box.payload.data() + offset, r, k);
    offset += n;
    c.leaves.push_back(std::move(l));
  }
  if (offset != box.payload.size()) throw DataError(origin + ": payload has unreferenced data");
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(c));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path), path.string());
}

inline void add_params(Checkpoint& c, const ParamList<float>& params, const std::string& prefix = "") {
  for (const auto& p : params) c.add(prefix + p.name, p.param->value);
}

/// Loads every leaf of `params` from `c`; names and shapes must match.
inline void load_params(const Checkpoint& c, const ParamList<float>& params, const std::string& prefix = "") {
  for (const auto& p : params) {
    const Leaf* l = c.find(prefix + p.name);
    if (!l) throw DataError("checkpoint lacks parameter " + prefix + p.name);
    if (l->value.rows() != p.param->value.rows() || l->value.cols() != p.param->value.cols())
      throw ShapeError("checkpoint parameter " + prefix + p.name + " has the wrong shape");
    p.param->value = l->value;
  }
}

inline void add_adam_state(Checkpoint& c, const Adam<float>& opt, const std::string& prefix = "adam.") {
  c.meta["adam_steps"] = std::to_string(opt.steps());
  for (const auto& [name, mo] : opt.state()) {
    c.add(prefix + "m." + name, mo.m);
    c.add(prefix + "v." + name, mo.v);
  }
}

inline void load_adam_state(const Checkpoint& c, Adam<float>& opt, const ParamList<float>& params,
                            const std::string& prefix = "adam.") {
  auto it = c.meta.find("adam_steps");
  if (it == c.meta.end()) throw DataError("checkpoint carries no optimizer state");
  opt.set_steps(std::stoll(it->second));
  opt.state().clear();
  for (const auto& p : params) {
    const Leaf* m = c.find(prefix + "m." + p.name);
    const Leaf* v = c.find(prefix + "v." + p.name);
    if (m && v) opt.state()[p.name] = {m->value, v->value};
  }
}

}  // namespace safn::nn

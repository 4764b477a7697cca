#pragma once

// Internal JSON <-> type conversions shared by the WSSL1 and SLBANK1
// container readers/writers. Not installed.

#include <bit>
#include <cstdint>
#include <json.hpp>
#include <string>

#include "wssl/datagen.hpp"
#include "wssl/errors.hpp"
#include "wssl/kinematics.hpp"
#include "wssl/workspace.hpp"

namespace wssl::detail {

using nlohmann::json;

inline json to_json(const ElementDist& e) {
  if (e.kind == ElementDist::Kind::Dirac) return json{{"dirac", e.a}};
  return json{{"uniform", {e.a, e.b}}};
}

inline ElementDist element_from_json(const json& j) {
  if (j.contains("dirac")) return ElementDist::dirac(j.at("dirac").get<double>());
  const auto& u = j.at("uniform");
  return ElementDist::uniform(u.at(0).get<double>(), u.at(1).get<double>());
}

inline json to_json(const std::vector<ElementDist>& v) {
  json arr = json::array();
  for (const auto& e : v) arr.push_back(to_json(e));
  return arr;
}

inline std::vector<ElementDist> elements_from_json(const json& j) {
  std::vector<ElementDist> v;
  for (const auto& e : j) v.push_back(element_from_json(e));
  return v;
}

inline json to_json(const DistributionSpec& s) {
  return json{{"beta", s.beta},
              {"r_d", to_json(s.r_d)},
              {"r_a", to_json(s.r_a)},
              {"r_alpha", to_json(s.r_alpha)},
              {"n_i", {to_json(s.n_i[0]), to_json(s.n_i[1]), to_json(s.n_i[2])}}};
}

inline DistributionSpec spec_from_json(const json& j) {
  DistributionSpec s;
  s.beta = j.at("beta").get<double>();
  s.r_d = elements_from_json(j.at("r_d"));
  s.r_a = elements_from_json(j.at("r_a"));
  s.r_alpha = elements_from_json(j.at("r_alpha"));
  for (int i = 0; i < 3; ++i) s.n_i[i] = element_from_json(j.at("n_i").at(i));
  return s;
}

inline json to_json(const SubspaceDescriptor& d) {
  return json{{"id", d.id},
              {"spec", to_json(d.spec)},
              {"output_slice", {{"lo", d.output_slice.lo}, {"hi", d.output_slice.hi}}},
              {"free_indices", d.free_indices},
              {"n_i_base", d.n_i_base}};
}

inline SubspaceDescriptor descriptor_from_json(const json& j) {
  SubspaceDescriptor d;
  d.id = j.at("id").get<std::string>();
  d.spec = spec_from_json(j.at("spec"));
  d.output_slice.lo = j.at("output_slice").at("lo").get<std::size_t>();
  d.output_slice.hi = j.at("output_slice").at("hi").get<std::size_t>();
  d.free_indices = j.at("free_indices").get<std::vector<int>>();
  d.n_i_base = j.at("n_i_base").get<int>();
  return d;
}

inline json to_json(const Scope& s) {
  const auto vec3 = [](const Eigen::Vector3d& v) {
    return json{v[0], v[1], v[2]};
  };
  return json{{"mode", s.mode == WorkspaceMode::ConstantOrientation ? "cow" : "ow"},
              {"min", vec3(s.range_min)},
              {"max", vec3(s.range_max)},
              {"delta", vec3(s.delta)},
              {"fixed", vec3(s.fixed)}};
}

inline Scope scope_from_json(const json& j) {
  const auto vec3 = [](const json& a) {
    return Eigen::Vector3d(a.at(0).get<double>(), a.at(1).get<double>(),
                           a.at(2).get<double>());
  };
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "cow" && mode != "ow") {
    throw ValidationError("scope.mode must be \"cow\" or \"ow\"");
  }
  return build_scope(vec3(j.at("min")), vec3(j.at("max")), vec3(j.at("delta")),
                     vec3(j.at("fixed")),
                     mode == "cow" ? WorkspaceMode::ConstantOrientation
                                   : WorkspaceMode::Orientation);
}

inline json to_json(const IKSettings& ik) {
  json j{{"tolerance", ik.tolerance},
         {"lambda0", ik.lambda0},
         {"max_rejections", ik.max_rejections},
         {"max_iterations", ik.max_iterations}};
  if (ik.q0.size() > 0) {
    j["q0"] = std::vector<double>(ik.q0.data(), ik.q0.data() + ik.q0.size());
  }
  if (ik.mask != std::array<double, 6>{1, 1, 1, 1, 1, 1}) {
    j["mask"] = ik.mask;
  }
  return j;
}

inline IKSettings ik_from_json(const json& j) {
  IKSettings ik;
  ik.tolerance = j.at("tolerance").get<double>();
  ik.lambda0 = j.at("lambda0").get<double>();
  ik.max_rejections = j.at("max_rejections").get<int>();
  ik.max_iterations = j.at("max_iterations").get<int>();
  if (j.contains("q0")) {
    const auto q = j.at("q0").get<std::vector<double>>();
    ik.q0 = Eigen::Map<const Eigen::VectorXd>(q.data(),
                                              static_cast<Eigen::Index>(q.size()));
  }
  if (j.contains("mask")) ik.mask = j.at("mask").get<std::array<double, 6>>();
  ik.validate();
  return ik;
}

// -- binary helpers (explicitly little-endian) ------------------------------

inline void append_f64_le(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

inline double read_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace wssl::detail

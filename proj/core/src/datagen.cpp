#include "wssl/datagen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "parallel.hpp"
#include "serialize.hpp"
#include "wssl/errors.hpp"

namespace wssl {

namespace {

void append_tags(const std::vector<ElementDist>& tags, int base,
                 std::vector<int>& free_indices) {
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    if (tags[static_cast<std::size_t>(i)].is_free()) {
      free_indices.push_back(base + i);
    }
  }
}

Eigen::VectorXd draw_elements(const std::vector<ElementDist>& tags, Rng& rng) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(tags.size()));
  for (std::size_t i = 0; i < tags.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = tags[i].sample(rng);
  }
  return v;
}

}  // namespace

ElementDist ElementDist::uniform(double lo, double hi) {
  if (!(lo < hi)) throw ValidationError("uniform bounds need lo < hi");
  return {Kind::Uniform, lo, hi};
}

void DistributionSpec::validate() const {
  const std::size_t n = r_d.size();
  if (n == 0) throw ValidationError("distribution spec has no joints");
  if (r_a.size() != n || r_alpha.size() != n) {
    throw ValidationError("r_d, r_a, r_alpha must have equal length");
  }
  const auto check = [](const ElementDist& e) {
    if (!std::isfinite(e.a) || !std::isfinite(e.b)) {
      throw ValidationError("distribution element has non-finite bound");
    }
    if (e.kind == ElementDist::Kind::Uniform && !(e.a < e.b)) {
      throw ValidationError("uniform bounds need lo < hi");
    }
  };
  for (const auto& e : r_d) check(e);
  for (const auto& e : r_a) check(e);
  for (const auto& e : r_alpha) check(e);
  for (const auto& e : n_i) check(e);
}

DistributionSpec spherical_wrist_spec(double beta) {
  if (!(beta > 0)) throw ValidationError("beta must be > 0");
  constexpr double kHalfPi = 1.5707963267948966;
  DistributionSpec s;
  s.beta = beta;
  s.r_d.assign(6, ElementDist::dirac(0));
  s.r_a.assign(6, ElementDist::dirac(0));
  s.r_d[2] = ElementDist::uniform(0, beta);  // d3
  s.r_d[3] = ElementDist::uniform(0, beta);  // d4
  s.r_a[1] = ElementDist::uniform(0, beta);  // a2
  s.r_a[2] = ElementDist::uniform(0, beta);  // a3
  s.r_alpha = {ElementDist::dirac(kHalfPi),  ElementDist::dirac(0),
               ElementDist::dirac(-kHalfPi), ElementDist::dirac(kHalfPi),
               ElementDist::dirac(-kHalfPi), ElementDist::dirac(0)};
  return s;
}

ManipulatorSample sample_manipulator(const DistributionSpec& spec, Rng& rng) {
  spec.validate();
  ManipulatorSample out;
  out.r_d = draw_elements(spec.r_d, rng);
  out.r_a = draw_elements(spec.r_a, rng);
  out.r_alpha = draw_elements(spec.r_alpha, rng);
  for (int i = 0; i < 3; ++i) out.n_i[i] = spec.n_i[static_cast<std::size_t>(i)].sample(rng);
  std::vector<DHRow> rows(static_cast<std::size_t>(spec.dof()));
  for (int i = 0; i < spec.dof(); ++i) {
    rows[static_cast<std::size_t>(i)] = {0.0, out.r_d[i], out.r_a[i], out.r_alpha[i]};
  }
  out.manipulator = Manipulator(std::move(rows));
  return out;
}

SubspaceDescriptor make_descriptor(const std::string& id,
                                   const DistributionSpec& spec,
                                   const Scope& scope,
                                   const SliceBounds* slice) {
  spec.validate();
  if (id.empty()) throw ValidationError("descriptor id must be non-empty");
  for (int i = 0; i < 3; ++i) {
    const ElementDist& e = spec.n_i[static_cast<std::size_t>(i)];
    if (!e.is_free() && e.a != scope.fixed[i]) {
      throw ValidationError("spec.n_i Dirac value disagrees with scope.fixed");
    }
  }
  SubspaceDescriptor d;
  d.id = id;
  d.spec = spec;
  const std::size_t full = scope.node_count();
  if (slice) {
    if (slice->lo < 1 || slice->hi < slice->lo || slice->hi > full) {
      throw ValidationError("output_slice outside flattened label of length " +
                            std::to_string(full));
    }
    d.output_slice = *slice;
  } else {
    d.output_slice = {1, full};
  }
  const int n = spec.dof();
  append_tags(spec.r_d, 0, d.free_indices);
  append_tags(spec.r_a, n, d.free_indices);
  append_tags(spec.r_alpha, 2 * n, d.free_indices);
  d.n_i_base = 3 * n + scope.lx() + scope.ly() + scope.lz();
  for (int i = 0; i < 3; ++i) {
    if (spec.n_i[static_cast<std::size_t>(i)].is_free()) {
      d.free_indices.push_back(d.n_i_base + i);
    }
  }
  return d;
}

Eigen::VectorXd free_values(const SubspaceDescriptor& desc,
                            const ManipulatorSample& sample) {
  const int n = desc.spec.dof();
  Eigen::VectorXd x(desc.input_dim());
  Eigen::Index next = 0;
  for (int idx : desc.free_indices) {
    double value = 0;
    if (idx < n) {
      value = sample.r_d[idx];
    } else if (idx < 2 * n) {
      value = sample.r_a[idx - n];
    } else if (idx < 3 * n) {
      value = sample.r_alpha[idx - 2 * n];
    } else {
      value = sample.n_i[idx - desc.n_i_base];
    }
    x[next++] = value;
  }
  return x;
}

Dataset generate_dataset(int n, const SubspaceDescriptor& desc,
                         const Scope& scope, const IKSettings& ik,
                         std::uint64_t seed, int threads) {
  if (n < 1) throw ValidationError("sample count must be >= 1");
  ik.validate();
  // Re-derive against this scope; also validates slice bounds and n_i.
  const SubspaceDescriptor check =
      make_descriptor(desc.id, desc.spec, scope, &desc.output_slice);
  if (check.free_indices != desc.free_indices || check.n_i_base != desc.n_i_base) {
    throw ValidationError("descriptor layout does not match scope");
  }

  Dataset d;
  d.descriptor = desc;
  d.scope = scope;
  d.ik = ik;
  d.seed = seed;
  d.y_cols = desc.output_dim();
  d.X.resize(n, desc.input_dim());
  d.Y.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(d.y_cols), 0);

  detail::parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    Rng rng = Rng::stream(seed, i);
    const ManipulatorSample sample = sample_manipulator(desc.spec, rng);
    Scope node_scope = scope;
    node_scope.fixed = sample.n_i;
    const BitTensor tensor =
        discretize_workspace(sample.manipulator, node_scope, ik);
    const std::vector<std::uint8_t> sliced =
        slice_output(flatten(tensor), desc.output_slice.lo, desc.output_slice.hi);
    d.X.row(static_cast<Eigen::Index>(i)) = free_values(desc, sample).transpose();
    std::copy(sliced.begin(), sliced.end(),
              d.Y.begin() + static_cast<std::ptrdiff_t>(
                                i * static_cast<std::size_t>(d.y_cols)));
  });
  return d;
}

std::array<Dataset, 3> split_dataset(const Dataset& d,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed) {
  double sum = 0;
  for (double r : ratios) {
    if (!(r > 0)) throw ValidationError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");

  const int n = d.rows();
  const int n_val = static_cast<int>(std::floor(ratios[1] * n));
  const int n_test = static_cast<int>(std::floor(ratios[2] * n));
  const int n_train = n - n_val - n_test;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw ValidationError("dataset of " + std::to_string(n) +
                          " rows is too small for the requested split");
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  const auto take = [&](int offset, int count) {
    Dataset part;
    part.descriptor = d.descriptor;
    part.scope = d.scope;
    part.ik = d.ik;
    part.seed = d.seed;
    part.y_cols = d.y_cols;
    part.X.resize(count, d.X.cols());
    part.Y.assign(static_cast<std::size_t>(count) * static_cast<std::size_t>(d.y_cols), 0);
    for (int r = 0; r < count; ++r) {
      const int src = order[static_cast<std::size_t>(offset + r)];
      part.X.row(r) = d.X.row(src);
      std::copy_n(d.Y.begin() + static_cast<std::ptrdiff_t>(src) * d.y_cols,
                  d.y_cols,
                  part.Y.begin() + static_cast<std::ptrdiff_t>(r) * d.y_cols);
    }
    return part;
  };

  return {take(0, n_train), take(n_train, n_val), take(n_train + n_val, n_test)};
}

void save_dataset(const Dataset& d, const std::string& path) {
  detail::json header{{"format", "WSSL1"},
                      {"n", d.rows()},
                      {"x_cols", d.X.cols()},
                      {"y_bits", d.y_cols},
                      {"seed", d.seed},
                      {"descriptor", detail::to_json(d.descriptor)},
                      {"scope", detail::to_json(d.scope)},
                      {"ik", detail::to_json(d.ik)}};
  std::string blob = "WSSL1\n";
  blob += header.dump();
  blob += '\n';
  for (Eigen::Index r = 0; r < d.X.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) {
      detail::append_f64_le(blob, d.X(r, c));
    }
  }
  const std::size_t row_bytes = (static_cast<std::size_t>(d.y_cols) + 7) / 8;
  for (int r = 0; r < d.rows(); ++r) {
    std::string row(row_bytes, '\0');
    for (int c = 0; c < d.y_cols; ++c) {
      if (d.y(r, c)) {
        row[static_cast<std::size_t>(c) / 8] |=
            static_cast<char>(1 << (c % 8));
      }
    }
    blob += row;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("short write to " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != "WSSL1") {
    throw IoError(path + " is not a WSSL1 dataset");
  }
  if (!std::getline(in, header_line)) throw IoError(path + ": missing header");
  detail::json header;
  try {
    header = detail::json::parse(header_line);
  } catch (const detail::json::exception& e) {
    throw IoError(path + ": bad header: " + e.what());
  }

  Dataset d;
  const int n = header.at("n").get<int>();
  const auto x_cols = header.at("x_cols").get<Eigen::Index>();
  d.y_cols = header.at("y_bits").get<int>();
  d.seed = header.at("seed").get<std::uint64_t>();
  d.descriptor = detail::descriptor_from_json(header.at("descriptor"));
  d.scope = detail::scope_from_json(header.at("scope"));
  d.ik = detail::ik_from_json(header.at("ik"));

  const std::size_t x_bytes = static_cast<std::size_t>(n) *
                              static_cast<std::size_t>(x_cols) * 8;
  const std::size_t row_bytes = (static_cast<std::size_t>(d.y_cols) + 7) / 8;
  std::string body(x_bytes + static_cast<std::size_t>(n) * row_bytes, '\0');
  in.read(body.data(), static_cast<std::streamsize>(body.size()));
  if (static_cast<std::size_t>(in.gcount()) != body.size()) {
    throw IoError(path + ": truncated payload");
  }

  d.X.resize(n, x_cols);
  const auto* p = reinterpret_cast<const unsigned char*>(body.data());
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < x_cols; ++c, p += 8) {
      d.X(r, c) = detail::read_f64_le(p);
    }
  }
  d.Y.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(d.y_cols), 0);
  for (int r = 0; r < n; ++r, p += row_bytes) {
    for (int c = 0; c < d.y_cols; ++c) {
      d.Y[static_cast<std::size_t>(r) * static_cast<std::size_t>(d.y_cols) +
          static_cast<std::size_t>(c)] =
          (p[static_cast<std::size_t>(c) / 8] >> (c % 8)) & 1;
    }
  }
  return d;
}

void write_dataset_csv(const Dataset& d, std::ostream& out) {
  for (Eigen::Index c = 0; c < d.X.cols(); ++c) {
    out << (c ? "," : "") << "x_" << c;
  }
  for (int c = 0; c < d.y_cols; ++c) {
    out << (d.X.cols() + c ? "," : "") << "y_" << c;
  }
  out << '\n';
  char buf[32];
  for (int r = 0; r < d.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", d.X(r, c));
      out << (c ? "," : "") << buf;
    }
    for (int c = 0; c < d.y_cols; ++c) {
      out << ',' << static_cast<int>(d.y(r, c));
    }
    out << '\n';
  }
}

}  // namespace wssl

// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/psvd.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>

#include "json.hpp"
#include "simorch/error.hpp"
#include "simorch/naming.hpp"

namespace simorch::psvd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor to_tensor(const Matrix& m) { return Tensor({m.rows(), m.cols()}, m.data()); }

Matrix to_matrix(const Tensor& t) {
  if (t.dims().size() != 2) throw Error(ErrorCode::kShapeMismatch, "expected a rank-2 tensor");
  return Matrix(t.dims()[0], t.dims()[1], std::vector<double>(t.data().begin(), t.data().end()));
}

// Unit-norm discrete cosine mode k over the state index.
double mode_value(std::size_t k, std::size_t s, std::size_t m) {
  return std::sqrt(2.0 / static_cast<double>(m)) *
         std::cos(2.0 * std::numbers::pi * static_cast<double>(k * s) / static_cast<double>(m));
}

}  // namespace

void check_spec(const SnapshotSpec& spec) {
  if (spec.n_points == 0 || spec.components == 0 || spec.n_snapshots == 0 || spec.fields.empty())
    throw Error(ErrorCode::kInvalidConfig, "snapshot dimensions must be positive");
  if (spec.true_rank == 0) throw Error(ErrorCode::kInvalidConfig, "true_rank must be >= 1");
  const std::size_t m = spec.state_length();
  if (2 * spec.true_rank >= m)
    throw Error(ErrorCode::kInvalidConfig, "true_rank too large for the state length");
  if (m < spec.n_snapshots) {
    std::cerr << "warning: snapshot matrix is wide (M=" << m << " < N=" << spec.n_snapshots
              << ")\n";
  }
}

std::vector<double> generate_snapshot(const SnapshotSpec& spec, std::size_t t_index) {
  if (t_index >= spec.n_snapshots) throw Error(ErrorCode::kInvalidConfig, "time index out of range");
  const std::size_t m = spec.state_length();
  const double omega =
      spec.omega > 0.0 ? spec.omega
                       : 2.0 * std::numbers::pi / static_cast<double>(spec.n_snapshots);
  std::vector<double> x(m, 0.0);
  for (std::size_t k = 1; k <= spec.true_rank; ++k) {
    const double a = 1.0 / static_cast<double>(k);
    const double c = a * std::cos(static_cast<double>(k) * omega * static_cast<double>(t_index));
    for (std::size_t s = 0; s < m; ++s) x[s] += c * mode_value(k, s, m);
  }
  if (spec.noise > 0.0) {
    std::mt19937_64 rng(spec.seed * 1000003ULL + t_index);
    std::normal_distribution<double> g(0.0, spec.noise);
    for (auto& v : x) v += g(rng);
  }
  return x;
}

Matrix assemble(const SnapshotSpec& spec) {
  const std::size_t m = spec.state_length(), n = spec.n_snapshots;
  Matrix x(m, n);
  for (std::size_t t = 0; t < n; ++t) {
    auto col = generate_snapshot(spec, t);
    for (std::size_t s = 0; s < m; ++s) x(s, t) = col[s];
  }
  return x;
}

std::vector<double> normalize_fields(Matrix& x, const SnapshotSpec& spec) {
  const std::size_t nf = spec.fields.size();
  if (nf <= 1) return std::vector<double>(nf, 1.0);
  const std::size_t block = spec.n_points * spec.components;
  std::vector<double> scales(nf, 1.0);
  for (std::size_t f = 0; f < nf; ++f) {
    double ss = 0.0;
    for (std::size_t s = f * block; s < (f + 1) * block; ++s)
      for (std::size_t t = 0; t < x.cols(); ++t) ss += x(s, t) * x(s, t);
    const double rms = std::sqrt(ss / static_cast<double>(block * x.cols()));
    if (rms == 0.0) continue;
    scales[f] = rms;
    for (std::size_t s = f * block; s < (f + 1) * block; ++s)
      for (std::size_t t = 0; t < x.cols(); ++t) x(s, t) /= rms;
  }
  return scales;
}

PartitionPlan PartitionPlan::make(std::size_t rows, std::size_t partitions) {
  if (partitions == 0) throw Error(ErrorCode::kInvalidConfig, "partitions must be >= 1");
  if (partitions > rows) throw Error(ErrorCode::kInvalidConfig, "more partitions than rows");
  PartitionPlan plan;
  const std::size_t base = rows / partitions, extra = rows % partitions;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < partitions; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    plan.ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  return plan;
}

LocalFactors factor_partition(const Matrix& x_i) {
  auto f = linalg::svd(x_i);
  return {std::move(f.U), linalg::scale_cols(f.V, f.sigma).transpose()};
}

MergeResult merge(const std::vector<LocalFactors>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kIncomplete, "no partition factors to merge");
  MergeResult r;
  std::vector<Matrix> blocks;
  for (const auto& p : parts) blocks.push_back(p.SVt);
  r.Y = linalg::vstack(blocks);
  r.y = linalg::svd(r.Y);
  std::size_t row = 0;
  for (const auto& p : parts) {
    const std::size_t k_i = p.SVt.rows();
    r.uy_blocks.push_back(r.y.U.row_block(row, row + k_i));
    r.global_u.push_back(linalg::matmul(p.U, r.uy_blocks.back()));
    row += k_i;
  }
  r.sigma = r.y.sigma;
  r.V = r.y.V;
  return r;
}

Matrix reconstruct_partition(const Matrix& u_i, const Matrix& uy_i,
                             const std::vector<double>& sigma, const Matrix& v, std::size_t r) {
  if (r < 1 || r > sigma.size()) {
    throw Error(ErrorCode::kRankOutOfRange, "rank " + std::to_string(r) + " outside [1, " +
                                                std::to_string(sigma.size()) + "]");
  }
  auto left = linalg::matmul(u_i, uy_i.leading_cols(r));
  std::vector<double> s(sigma.begin(), sigma.begin() + r);
  return linalg::matmul(linalg::scale_cols(left, s), v.leading_cols(r).transpose());
}

MergeResult partitioned_svd(const Matrix& x, std::size_t partitions) {
  auto plan = PartitionPlan::make(x.rows(), partitions);
  std::vector<LocalFactors> parts;
  for (auto [b, e] : plan.ranges) parts.push_back(factor_partition(x.row_block(b, e)));
  return merge(parts);
}

std::string part_key(std::size_t i, const std::string& what) {
  return "svd.part." + std::to_string(i) + "." + what;
}
std::string uy_key(std::size_t i) { return "svd.uy." + std::to_string(i); }
std::string global_u_key(std::size_t i) { return "svd.global_u." + std::to_string(i); }
std::string recon_key(std::size_t i) { return "svd.recon." + std::to_string(i); }

namespace {

Matrix normalized_data(const SvdConfig& config) {
  check_spec(config.snapshots);
  auto x = assemble(config.snapshots);
  normalize_fields(x, config.snapshots);
  return x;
}

SvdReport finish_report(const Matrix& x, const MergeResult& merged,
                        const std::vector<Matrix>& recon_blocks, const SvdConfig& config) {
  SvdReport rep;
  rep.sigma = merged.sigma;
  rep.rank = config.rank;
  auto xr = linalg::vstack(recon_blocks);
  rep.reconstruction_error = linalg::frobenius(x - xr);
  const double norm = linalg::frobenius(x);
  rep.relative_error = norm > 0.0 ? rep.reconstruction_error / norm : 0.0;
  for (std::size_t i = config.rank; i < rep.sigma.size(); ++i)
    rep.tail_energy += rep.sigma[i] * rep.sigma[i];
  rep.data_matrix_bytes = static_cast<std::uint64_t>(x.rows()) * x.cols() * sizeof(double);
  rep.reference_bytes = 3000000ULL * 1000ULL * sizeof(double);
  rep.modes = merged.U().leading_cols(config.rank);
  return rep;
}

}  // namespace

SvdReport run_in_process(const SvdConfig& config) {
  const auto t0 = Clock::now();
  auto x = normalized_data(config);
  auto plan = PartitionPlan::make(x.rows(), config.partitions);
  std::vector<LocalFactors> parts;
  for (auto [b, e] : plan.ranges) parts.push_back(factor_partition(x.row_block(b, e)));
  auto merged = merge(parts);
  std::vector<Matrix> recon;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    recon.push_back(reconstruct_partition(parts[i].U, merged.uy_blocks[i], merged.sigma, merged.V,
                                          config.rank));
  }
  auto rep = finish_report(x, merged, recon, config);
  rep.timings.emplace_back("total", seconds_since(t0));
  return rep;
}

void produce_snapshots(Client& client, const SvdConfig& config) {
  const auto& spec = config.snapshots;
  auto x = normalized_data(config);
  FieldPublisher pub(client, config.publisher);
  pub.publish_metadata();
  const std::size_t block = spec.n_points * spec.components;
  for (std::size_t t = 0; t < spec.n_snapshots; ++t) {
    std::vector<FieldBlock> blocks;
    for (std::size_t f = 0; f < spec.fields.size(); ++f) {
      std::vector<double> flat(block);
      for (std::size_t s = 0; s < block; ++s) flat[s] = x(f * block + s, t);
      auto b = FieldBlock::make(spec.fields[f], kInternalPatch, std::move(flat), spec.components);
      if (b) blocks.push_back(std::move(*b));
    }
    pub.send_fields(t, 0, blocks);
  }
}

void run_partition_worker(Client& client, const SvdConfig& config, std::size_t i) {
  const auto& spec = config.snapshots;
  auto plan = PartitionPlan::make(spec.state_length(), config.partitions);
  if (i >= plan.size()) throw Error(ErrorCode::kInvalidConfig, "worker index out of range");
  const auto [begin, end] = plan.ranges[i];
  const std::size_t block = spec.n_points * spec.components;

  FieldResolver resolver = [&] {
    try {
      return FieldResolver::from_store(client, config.publisher, config.poll);
    } catch (const Error& e) {
      throw Error(ErrorCode::kWorkerStarved, "no snapshot metadata: " + e.message());
    }
  }();

  Matrix xi(end - begin, spec.n_snapshots);
  for (std::size_t t = 0; t < spec.n_snapshots; ++t) {
    auto ds = resolver.dataset_name(t, 0);
    if (!client.poll_key(Kind::kDataset, ds, config.poll).found)
      throw Error(ErrorCode::kWorkerStarved, "snapshot " + std::to_string(t) + " never arrived");
    for (std::size_t f = begin / block; f * block < end; ++f) {
      auto field = client.get_field(resolver.field_key(spec.fields[f], 0, t));
      if (!field) throw Error(ErrorCode::kWorkerStarved, "missing field " + spec.fields[f]);
      auto vals = field->data();
      const std::size_t lo = std::max(begin, f * block), hi = std::min(end, (f + 1) * block);
      for (std::size_t s = lo; s < hi; ++s) xi(s - begin, t) = vals[s - f * block];
    }
  }

  auto local = factor_partition(xi);
  client.put_tensor(part_key(i, "U"), to_tensor(local.U));
  client.put_tensor(part_key(i, "SVt"), to_tensor(local.SVt));

  if (!client.poll_key(Kind::kTensor, kMergedFlag, config.poll).found)
    throw Error(ErrorCode::kWorkerStarved, "merge never completed");
  auto uy = client.get_tensor(uy_key(i));
  auto sigma = client.get_tensor(kSigmaKey);
  auto v = client.get_tensor(kVKey);
  if (!uy || !sigma || !v) throw Error(ErrorCode::kIncomplete, "merge outputs missing");
  std::vector<double> s(sigma->data().begin(), sigma->data().end());
  auto xr = reconstruct_partition(local.U, to_matrix(*uy), s, to_matrix(*v), config.rank);
  client.put_tensor(recon_key(i), to_tensor(xr));
  client.delete_key(Kind::kTensor, part_key(i, "U"));
}

MergeResult merge_from_store(Client& client, const SvdConfig& config) {
  std::vector<LocalFactors> parts;
  for (std::size_t i = 0; i < config.partitions; ++i) {
    auto u = client.get_tensor(part_key(i, "U"));
    auto svt = client.get_tensor(part_key(i, "SVt"));
    if (!u || !svt) throw Error(ErrorCode::kIncomplete, "partition " + std::to_string(i) + " missing");
    parts.push_back({to_matrix(*u), to_matrix(*svt)});
  }
  auto merged = merge(parts);
  client.put_tensor(kSigmaKey, Tensor({merged.sigma.size()}, merged.sigma));
  client.put_tensor(kVKey, to_tensor(merged.V));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    client.put_tensor(uy_key(i), to_tensor(merged.uy_blocks[i]));
    client.put_tensor(global_u_key(i), to_tensor(merged.global_u[i]));
  }
  client.put_tensor(kMergedFlag, Tensor::flag());
  return merged;
}

SvdReport run_svd_workflow(Client& client, const SvdConfig& config, WorkerGroup& workers) {
  const auto t0 = Clock::now();
  check_spec(config.snapshots);
  if (config.rank < 1 || config.rank > config.snapshots.n_snapshots)
    throw Error(ErrorCode::kRankOutOfRange, "rank must be in [1, n_snapshots]");
  auto plan = PartitionPlan::make(config.snapshots.state_length(), config.partitions);

  // Stale outputs from an earlier run would satisfy the barriers early.
  client.delete_key(Kind::kTensor, kMergedFlag);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (const char* w : {"U", "SVt"}) client.delete_key(Kind::kTensor, part_key(i, w));
    client.delete_key(Kind::kTensor, recon_key(i));
  }

  for (std::size_t i = 0; i < plan.size(); ++i) workers.start(i);
  auto fail = [&](const std::string& what) {
    auto failures = workers.join();
    std::string msg = what;
    for (const auto& f : failures) msg += "; " + f;
    throw Error(ErrorCode::kWorkflow, msg);
  };

  std::vector<std::pair<std::string, double>> timings;
  auto t = Clock::now();
  try {
    produce_snapshots(client, config);
  } catch (const Error& e) {
    fail(std::string("producer failed: ") + e.what());
  }
  timings.emplace_back("produce", seconds_since(t));

  t = Clock::now();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!client.poll_key(Kind::kTensor, part_key(i, "SVt"), config.poll).found)
      fail("partition " + std::to_string(i) + " produced no factors");
  }
  timings.emplace_back("partition_svd", seconds_since(t));

  t = Clock::now();
  auto merged = merge_from_store(client, config);
  timings.emplace_back("merge", seconds_since(t));

  t = Clock::now();
  std::vector<Matrix> recon;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!client.poll_key(Kind::kTensor, recon_key(i), config.poll).found)
      fail("partition " + std::to_string(i) + " produced no reconstruction");
  }
  auto failures = workers.join();
  if (!failures.empty()) fail("worker failures");
  for (std::size_t i = 0; i < plan.size(); ++i) recon.push_back(to_matrix(*client.get_tensor(recon_key(i))));
  timings.emplace_back("reconstruct", seconds_since(t));

  auto rep = finish_report(normalized_data(config), merged, recon, config);
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (client.exists(Kind::kTensor, part_key(i, "U"))) ++rep.leftover_u_keys;
  timings.emplace_back("total", seconds_since(t0));
  rep.timings = std::move(timings);
  return rep;
}

void SvdReport::write(const std::filesystem::path& dir, const SnapshotSpec& spec) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "singular_values.csv");
    csv << "index,sigma\n";
    csv.precision(17);
    for (std::size_t i = 0; i < sigma.size(); ++i) csv << i << "," << sigma[i] << "\n";
  }
  nlohmann::json summary = {
      {"rank", rank},
      {"reconstruction_error", reconstruction_error},
      {"relative_error", relative_error},
      {"tail_energy", tail_energy},
      {"data_matrix_bytes", data_matrix_bytes},
      {"reference_data_matrix_bytes", reference_bytes},
      {"leftover_partition_u_keys", leftover_u_keys},
      {"sigma", sigma},
  };
  for (const auto& [name, sec] : timings) summary["timings_s"][name] = sec;
  std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";

  // Modes reshaped to [r, field, point, component], f64 little-endian.
  {
    std::ofstream bin(dir / "modes.bin", std::ios::binary);
    for (std::size_t j = 0; j < modes.cols(); ++j) {
      for (std::size_t s = 0; s < modes.rows(); ++s) {
        double v = modes(s, j);
        bin.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    }
  }
  nlohmann::json header = {
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"dims", {modes.cols(), spec.fields.size(), spec.n_points, spec.components}},
      {"fields", spec.fields},
  };
  std::ofstream(dir / "modes.json") << header.dump(2) << "\n";
}

}  // namespace simorch::psvd

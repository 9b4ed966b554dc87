// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/meshmotion.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "simorch/error.hpp"
#include "simorch/mlp.hpp"
#include "simorch/naming.hpp"

namespace simorch::meshmotion {

using mesh::AnnulusMesh;
using mesh::Vec2;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double output_scale(const MeshMotionConfig& c) {
  const double s = c.r_in * c.motion.amplitude_deg * std::numbers::pi / 180.0;
  return s > 0.0 ? s : 1.0;
}

// Stand-in for an MPI barrier among rank threads. abort() releases every
// waiter with an error so one failing rank cannot hang the others.
class RankBarrier {
 public:
  explicit RankBarrier(std::size_t n) : n_(n) {}

  void arrive_and_wait() {
    std::unique_lock lock(mu_);
    if (aborted_) throw Error(ErrorCode::kWorkflow, "aborted by another rank");
    const auto gen = generation_;
    if (++waiting_ == n_) {
      waiting_ = 0;
      ++generation_;
      cv_.notify_all();
      return;
    }
    cv_.wait(lock, [&] { return generation_ != gen || aborted_; });
    if (generation_ == gen) throw Error(ErrorCode::kWorkflow, "aborted by another rank");
  }

  void abort() {
    std::lock_guard lock(mu_);
    aborted_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t n_;
  std::size_t waiting_ = 0;
  std::uint64_t generation_ = 0;
  bool aborted_ = false;
};

std::vector<double> flatten(const std::vector<Vec2>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(2 * idx.size());
  for (auto p : idx) {
    out.push_back(v[p][0]);
    out.push_back(v[p][1]);
  }
  return out;
}

bool bit_equal(const Vec2& a, const Vec2& b) { return std::memcmp(a.data(), b.data(), sizeof a) == 0; }

double max_or_nan(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return *std::max_element(v.begin(), v.end());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                    std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != columns) throw Error(ErrorCode::kMalformed, "bad row in " + path.string());
    rows.push_back(std::move(cells));
  }
  return rows;
}

void write_points(const std::filesystem::path& path, const std::vector<Vec2>& pts) {
  std::ofstream bin(path, std::ios::binary);
  for (const auto& p : pts) bin.write(reinterpret_cast<const char*>(p.data()), sizeof p);
}

}  // namespace

void MeshMotionConfig::validate() const {
  if (ranks < 1) throw Error(ErrorCode::kInvalidConfig, "ranks must be ≥ 1");
  if (steps < 1) throw Error(ErrorCode::kInvalidConfig, "steps must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidConfig, "dt must be positive");
  if (hidden.empty()) throw Error(ErrorCode::kInvalidConfig, "need at least one hidden layer");
  for (auto h : hidden)
    if (h < 1) throw Error(ErrorCode::kInvalidConfig, "hidden widths must be >= 1");
  if (ranks > n_theta) throw Error(ErrorCode::kInvalidConfig, "more ranks than angular cells");
  if (!(learning_rate > 0.0) || max_epochs < 1)
    throw Error(ErrorCode::kInvalidConfig, "training budget must be positive");
  if (poll.max_attempts < 1 || bootstrap_poll.max_attempts < 1)
    throw Error(ErrorCode::kInvalidConfig, "poll budgets must be >= 1");
  make_mesh();
}

mesh::AnnulusMesh MeshMotionConfig::make_mesh() const { return {n_r, n_theta, r_in, r_out}; }

std::size_t MeshMotionConfig::peak_step() const {
  const auto s = static_cast<std::size_t>(std::llround(motion.period / 2.0 / dt));
  return std::clamp<std::size_t>(s, 1, steps);
}

// ---------------------------------------------------------------- trainer

void TrainerReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream csv(path);
  csv.precision(17);
  csv << "step,samples,epochs,mse,seconds\n";
  for (const auto& s : steps)
    csv << s.step << "," << s.samples << "," << s.epochs << "," << s.mse << "," << s.seconds << "\n";
}

TrainerReport TrainerReport::read_csv(const std::filesystem::path& path) {
  TrainerReport r;
  for (const auto& c : read_csv_rows(path, 5))
    r.steps.push_back({std::stoul(c[0]), std::stoul(c[1]), std::stoul(c[2]), std::stod(c[3]),
                       std::stod(c[4])});
  return r;
}

TrainerReport run_trainer(Client& client, const MeshMotionConfig& config) {
  config.validate();
  auto points = FieldResolver::from_store(client, kPointsPublisher, config.poll);
  auto disps = FieldResolver::from_store(client, kDisplacementsPublisher, config.poll);

  std::vector<std::size_t> widths{2};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(2);
  auto core = mlp::MlpModel::random(widths, mlp::Activation::kTanh, config.seed);
  mlp::TrainConfig tc;
  tc.learning_rate = config.learning_rate;
  tc.max_epochs = config.max_epochs;
  tc.target_mse = config.target_mse;
  mlp::AdamTrainer trainer(tc);

  const double in_s = 1.0 / config.r_out, out_s = output_scale(config);
  const std::vector<double> in_scale{in_s, in_s}, out_scale{out_s, out_s}, zero{0.0, 0.0};

  TrainerReport report;
  for (std::size_t step = 1;; ++step) {
    // Wait for every rank's points, leaving as soon as the simulation ends.
    bool ready = false;
    for (int attempt = 0; attempt < config.poll.max_attempts; ++attempt) {
      if (client.exists(Kind::kTensor, kEndTimeKey)) return report;
      const auto len = client.list_length(kPointsList).value_or(0);
      if (len > config.ranks) {
        throw Error(ErrorCode::kOvershoot, std::string(kPointsList) + " has " +
                                               std::to_string(len) + " entries at step " +
                                               std::to_string(step));
      }
      if (len == config.ranks) {
        ready = true;
        break;
      }
      std::this_thread::sleep_for(config.poll.interval);
    }
    if (!ready) throw Error(ErrorCode::kTimeout, "points not received for step " + std::to_string(step));
    if (!client.poll_list_length(kDisplacementsList, config.ranks, config.poll).found) {
      throw Error(ErrorCode::kTimeout, "displacements not received for step " + std::to_string(step));
    }

    auto plist = client.list_get(kPointsList).value_or(std::vector<std::string>{});
    auto dlist = client.list_get(kDisplacementsList).value_or(std::vector<std::string>{});
    const std::set<std::string> pnames(plist.begin(), plist.end()), dnames(dlist.begin(), dlist.end());
    std::vector<double> x, y;
    for (std::size_t r = 0; r < config.ranks; ++r) {
      const auto pname = points.dataset_name(step, r), dname = disps.dataset_name(step, r);
      if (!pnames.count(pname) || !dnames.count(dname)) {
        throw Error(ErrorCode::kProtocol, "step " + std::to_string(step) + " lists lack rank " +
                                              std::to_string(r));
      }
      auto pd = client.get_dataset(pname);
      auto dd = client.get_dataset(dname);
      if (!pd || !dd) throw Error(ErrorCode::kDangling, "dataset for rank " + std::to_string(r) + " missing");
      for (const auto& patch : AnnulusMesh::patch_names()) {
        auto pit = pd->tensors.find(points.naming().field_name(kPointsField, patch));
        auto dit = dd->tensors.find(disps.naming().field_name(kDisplacementsField, patch));
        const bool has_p = pit != pd->tensors.end(), has_d = dit != dd->tensors.end();
        if (has_p != has_d || (has_p && (pit->second.dims() != dit->second.dims() ||
                                         pit->second.cols() != 2))) {
          throw Error(ErrorCode::kShapeMismatch,
                      "rank " + std::to_string(r) + " patch " + patch + " points/displacements differ");
        }
        if (!has_p) continue;
        for (double v : pit->second.data()) x.push_back(v * in_s);
        for (double v : dit->second.data()) y.push_back(v / out_s);
      }
    }
    const std::size_t n = x.size() / 2;
    if (n == 0) throw Error(ErrorCode::kZeroSized, "no boundary samples at step " + std::to_string(step));

    const auto t0 = Clock::now();
    auto result = trainer.train(core, x, y, n);
    report.steps.push_back({step, n, result.epochs, result.final_mse, seconds_since(t0)});

    client.put_model(kModelKey,
                     core.with_input_affine(in_scale, zero).with_output_affine(out_scale, zero));
    // The lists go before the flag: once the simulation sees the flag it
    // may start the next step and append again.
    client.delete_key(Kind::kList, kPointsList);
    client.delete_key(Kind::kList, kDisplacementsList);
    client.put_tensor(kModelFlag, Tensor::flag());
  }
}

// ------------------------------------------------------------- simulation

void SimulationReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / kSimulationCsv);
    csv.precision(17);
    csv << "step,time,angle_deg,used_model,model_wait_s,max_boundary_disp,rms_interior_error,"
           "max_nonorth_ann,max_nonorth_ref,inverted,boundary_exact\n";
    for (const auto& s : steps) {
      csv << s.step << "," << s.time << "," << s.angle_deg << "," << s.used_model << ","
          << s.model_wait_s << "," << s.max_boundary_disp << "," << s.rms_interior_error << ","
          << s.max_nonorth_ann << "," << s.max_nonorth_ref << "," << s.inverted << ","
          << s.boundary_exact << "\n";
    }
  }
  if (peak.step == 0) return;
  write_points(dir / "peak_points_ann.bin", peak.ann_points);
  write_points(dir / "peak_points_ref.bin", peak.ref_points);
  nlohmann::json header = {
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"dims", {peak.ann_points.size(), 2}},
      {"step", peak.step},
      {"files", {{"ann", "peak_points_ann.bin"}, {"reference", "peak_points_ref.bin"}}},
  };
  std::ofstream(dir / "peak_points.json") << header.dump(2) << "\n";

  std::ofstream cells(dir / "nonorthogonality_peak.csv");
  cells.precision(17);
  cells << "cell,ann_deg,ref_deg\n";
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t c = 0; c < peak.ref_angles.size(); ++c) {
    cells << c << "," << (peak.ann_angles.empty() ? nan : peak.ann_angles[c]) << ","
          << peak.ref_angles[c] << "\n";
  }
  // Two-degree bins for the histogram plot.
  constexpr int kBins = 45;
  std::vector<std::size_t> ann(kBins, 0), ref(kBins, 0);
  auto bin = [](double deg) { return std::clamp(static_cast<int>(deg / 2.0), 0, kBins - 1); };
  for (double v : peak.ann_angles) ++ann[bin(v)];
  for (double v : peak.ref_angles) ++ref[bin(v)];
  std::ofstream hist(dir / "nonorthogonality_histogram.csv");
  hist << "bin_lo_deg,bin_hi_deg,ann_cells,ref_cells\n";
  for (int b = 0; b < kBins; ++b) hist << 2 * b << "," << 2 * b + 2 << "," << ann[b] << "," << ref[b] << "\n";
}

std::vector<SimulationStep> SimulationReport::read_steps(const std::filesystem::path& path) {
  std::vector<SimulationStep> out;
  for (const auto& c : read_csv_rows(path, 11)) {
    SimulationStep s;
    s.step = std::stoul(c[0]);
    s.time = std::stod(c[1]);
    s.angle_deg = std::stod(c[2]);
    s.used_model = c[3] == "1";
    s.model_wait_s = std::stod(c[4]);
    s.max_boundary_disp = std::stod(c[5]);
    s.rms_interior_error = std::stod(c[6]);
    s.max_nonorth_ann = std::stod(c[7]);
    s.max_nonorth_ref = std::stod(c[8]);
    s.inverted = c[9] == "1";
    s.boundary_exact = c[10] == "1";
    out.push_back(s);
  }
  return out;
}

SimulationReport run_simulation(const std::function<Client()>& connect,
                                const MeshMotionConfig& config) {
  config.validate();
  const auto mesh = config.make_mesh();
  const auto layout = mesh::decompose(mesh, config.ranks, config.decomposition);
  const auto& names = AnnulusMesh::patch_names();
  const auto peak_step = config.peak_step();

  std::vector<Vec2> field(mesh.n_points(), Vec2{0.0, 0.0});
  std::vector<char> used_model(config.ranks, 0);
  std::vector<double> waits(config.ranks, 0.0);
  SimulationReport report;
  RankBarrier barrier(config.ranks);
  std::mutex error_mu;
  std::exception_ptr first_error;

  // Rank 0 only, between the two barriers of a step.
  auto record_step = [&](Client& client, std::size_t step, double t,
                         const std::vector<Vec2>& prescribed) {
    if (std::find(used_model.begin(), used_model.end(), 0) != used_model.end()) {
      // Bootstrap fallback: the step-1 model must still arrive before cleanup.
      if (!client.poll_key(Kind::kTensor, kModelFlag, config.poll).found) {
        throw Error(ErrorCode::kModelStarved, "no model for step " + std::to_string(step));
      }
    }
    client.delete_key(Kind::kTensor, kModelFlag);
    client.delete_key(Kind::kModel, kModelKey);
    if (step == config.steps) client.put_tensor(kEndTimeKey, Tensor::flag());

    SimulationStep s;
    s.step = step;
    s.time = t;
    s.angle_deg = config.motion.angle_rad(t) * 180.0 / std::numbers::pi;
    s.used_model = std::find(used_model.begin(), used_model.end(), 0) == used_model.end();
    s.model_wait_s = *std::max_element(waits.begin(), waits.end());
    const auto ref = mesh::laplacian_reference(mesh, prescribed);
    for (auto p : mesh.boundary_points()) {
      s.max_boundary_disp = std::max(s.max_boundary_disp, std::hypot(prescribed[p][0], prescribed[p][1]));
      s.boundary_exact = s.boundary_exact && bit_equal(field[p], prescribed[p]);
    }
    const auto interior = mesh.interior_points();
    double sq = 0.0;
    for (auto p : interior) {
      const double dx = field[p][0] - ref[p][0], dy = field[p][1] - ref[p][1];
      sq += dx * dx + dy * dy;
    }
    s.rms_interior_error = interior.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(interior.size()));
    const auto ann_pts = mesh::displaced(mesh, field), ref_pts = mesh::displaced(mesh, ref);
    const auto ref_angles = mesh::non_orthogonality(mesh, ref_pts);
    std::vector<double> ann_angles;
    s.inverted = mesh::first_inverted_cell(mesh, ann_pts) >= 0;
    if (!s.inverted) ann_angles = mesh::non_orthogonality(mesh, ann_pts);
    s.max_nonorth_ann = max_or_nan(ann_angles);
    s.max_nonorth_ref = max_or_nan(ref_angles);
    report.steps.push_back(s);
    if (step == peak_step) report.peak = {step, ann_pts, ref_pts, ann_angles, ref_angles};
  };

  auto rank_body = [&](std::size_t r) {
    auto client = connect();
    FieldPublisher pub_points(client, kPointsPublisher);
    FieldPublisher pub_disps(client, kDisplacementsPublisher);
    if (r == 0) {
      pub_points.publish_metadata();
      pub_disps.publish_metadata();
    }
    const auto& owned = layout.owned[r];
    const auto query_in = "mm.query." + std::to_string(r) + ".in";
    const auto query_out = "mm.query." + std::to_string(r) + ".out";
    const Tensor query({owned.size(), 2}, flatten(mesh.points(), owned));

    for (std::size_t step = 1; step <= config.steps; ++step) {
      const double t = static_cast<double>(step) * config.dt;
      const auto prescribed = config.motion.boundary_displacement(mesh, t);

      std::vector<FieldBlock> pblocks, dblocks;
      for (std::size_t patch = 0; patch < names.size(); ++patch) {
        const auto& idx = layout.patches[r][patch];
        // make() yields nothing for an empty patch.
        if (auto b = FieldBlock::make(kPointsField, names[patch], flatten(mesh.points(), idx), 2))
          pblocks.push_back(std::move(*b));
        if (auto b = FieldBlock::make(kDisplacementsField, names[patch], flatten(prescribed, idx), 2))
          dblocks.push_back(std::move(*b));
      }
      client.list_append(kPointsList, pub_points.send_fields(step, r, pblocks));
      client.list_append(kDisplacementsList, pub_disps.send_fields(step, r, dblocks));

      const auto t0 = Clock::now();
      const auto& spec = step == 1 ? config.bootstrap_poll : config.poll;
      const bool have_model = client.poll_key(Kind::kTensor, kModelFlag, spec).found;
      waits[r] = seconds_since(t0);
      used_model[r] = have_model;
      if (!have_model && step != 1) {
        throw Error(ErrorCode::kModelStarved, "no model for step " + std::to_string(step));
      }

      std::vector<Vec2> interior_values(owned.size());
      if (have_model) {
        client.put_tensor(query_in, query);
        if (!client.run_model(kModelKey, {query_in}, {query_out})) {
          throw Error(ErrorCode::kProtocol, "model flag set but inference failed at step " +
                                                std::to_string(step));
        }
        auto out = client.get_tensor(query_out);
        if (!out || out->size() != 2 * owned.size()) {
          throw Error(ErrorCode::kShapeMismatch, "inference output for rank " + std::to_string(r));
        }
        for (std::size_t k = 0; k < owned.size(); ++k)
          interior_values[k] = {out->data()[2 * k], out->data()[2 * k + 1]};
        client.delete_key(Kind::kTensor, query_in);
        client.delete_key(Kind::kTensor, query_out);
      } else {
        const auto lap = mesh::laplacian_reference(mesh, prescribed);
        for (std::size_t k = 0; k < owned.size(); ++k) interior_values[k] = lap[owned[k]];
      }
      // Boundary rows keep the prescribed values; only interior rows take the
      // inferred ones.
      for (std::size_t k = 0; k < owned.size(); ++k) {
        const auto p = owned[k];
        field[p] = mesh.patch_of(p) == mesh::kInterior ? interior_values[k] : prescribed[p];
      }

      barrier.arrive_and_wait();
      if (r == 0) record_step(client, step, t, prescribed);
      barrier.arrive_and_wait();
    }
  };

  std::vector<std::thread> threads;
  for (std::size_t r = 0; r < config.ranks; ++r) {
    threads.emplace_back([&, r] {
      try {
        rank_body(r);
      } catch (...) {
        {
          std::lock_guard lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
        barrier.abort();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return report;
}

// ----------------------------------------------------------------- driver

void MeshMotionReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "meshmotion_steps.csv");
  csv.precision(17);
  csv << "step,train_mse,epochs,rms_interior_error,rms_relative,max_nonorth_ann,max_nonorth_ref,"
         "inverted,boundary_exact,model_wait_s\n";
  for (const auto& s : simulation) {
    const TrainerStep* tr = nullptr;
    for (const auto& t : training)
      if (t.step == s.step) tr = &t;
    const double rel = s.max_boundary_disp > 0.0 ? s.rms_interior_error / s.max_boundary_disp : 0.0;
    csv << s.step << "," << (tr ? tr->mse : std::numeric_limits<double>::quiet_NaN()) << ","
        << (tr ? tr->epochs : 0) << "," << s.rms_interior_error << "," << rel << ","
        << s.max_nonorth_ann << "," << s.max_nonorth_ref << "," << s.inverted << ","
        << s.boundary_exact << "," << s.model_wait_s << "\n";
  }
  nlohmann::json summary = {
      {"peak_step", peak_step},
      {"peak_rms_interior_error", peak_rms_error},
      {"peak_max_boundary_displacement", peak_max_boundary},
      {"peak_rms_relative", peak_rms_relative},
      {"peak_max_nonorthogonality_ann_deg", peak_nonorth_ann},
      {"peak_max_nonorthogonality_ref_deg", peak_nonorth_ref},
      {"any_inverted", any_inverted},
      {"boundary_exact_every_step", boundary_exact},
      {"training_steps", training.size()},
      {"simulation_steps", simulation.size()},
  };
  for (const auto& [name, sec] : timings) summary["timings_s"][name] = sec;
  std::ofstream(dir / "meshmotion_summary.json") << summary.dump(2) << "\n";
}

MeshMotionReport run_meshmotion(Client& client, const MeshMotionConfig& config,
                                WorkerGroup& workers, const std::filesystem::path& dir) {
  config.validate();
  std::filesystem::create_directories(dir);
  for (const char* f : {kTrainerCsv, kSimulationCsv}) std::filesystem::remove(dir / f);
  client.delete_key(Kind::kList, kPointsList);
  client.delete_key(Kind::kList, kDisplacementsList);
  client.delete_key(Kind::kModel, kModelKey);
  client.delete_key(Kind::kTensor, kModelFlag);
  client.delete_key(Kind::kTensor, kEndTimeKey);

  const auto t0 = Clock::now();
  workers.start(0);
  workers.start(1);
  auto failures = workers.join();
  const double wall = seconds_since(t0);
  if (!failures.empty()) {
    std::string msg = "mesh-motion workers failed";
    for (const auto& f : failures) msg += "; " + f;
    throw Error(ErrorCode::kWorkflow, msg);
  }

  MeshMotionReport report;
  report.training = TrainerReport::read_csv(dir / kTrainerCsv).steps;
  report.simulation = SimulationReport::read_steps(dir / kSimulationCsv);
  report.peak_step = config.peak_step();
  double train_s = 0.0;
  for (const auto& t : report.training) train_s += t.seconds;
  for (const auto& s : report.simulation) {
    report.any_inverted = report.any_inverted || s.inverted;
    report.boundary_exact = report.boundary_exact && s.boundary_exact;
    if (s.step != report.peak_step) continue;
    report.peak_rms_error = s.rms_interior_error;
    report.peak_max_boundary = s.max_boundary_disp;
    report.peak_rms_relative = s.max_boundary_disp > 0.0 ? s.rms_interior_error / s.max_boundary_disp : 0.0;
    report.peak_nonorth_ann = s.max_nonorth_ann;
    report.peak_nonorth_ref = s.max_nonorth_ref;
  }
  report.timings = {{"workflow", wall}, {"training", train_s}};
  report.write(dir);
  return report;
}

}  // namespace simorch::meshmotion

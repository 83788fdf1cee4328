#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "modeshift/bandwidth.hpp"
#include "modeshift/deflation.hpp"
#include "modeshift/errors.hpp"
#include "modeshift/evaluation.hpp"
#include "modeshift/io.hpp"
#include "modeshift/mean_shift.hpp"
#include "modeshift/rng.hpp"
#include "modeshift/synth.hpp"
#include "modeshift/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace modeshift;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConvergence = 3;

double now_sec() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// "--sizes 50k" means 50*k points for component k (1-based); "--sizes 100"
// gives equal sizes; an explicit comma list is taken as is.
std::vector<std::size_t> parse_sizes(const std::string& spec, std::size_t k) {
  std::vector<std::size_t> sizes;
  if (!spec.empty() && (spec.back() == 'k' || spec.back() == 'K') &&
      spec.find(',') == std::string::npos) {
    const long base = std::strtol(spec.c_str(), nullptr, 10);
    if (base <= 0) throw std::invalid_argument("bad --sizes: " + spec);
    for (std::size_t i = 1; i <= k; ++i) sizes.push_back(base * i);
    return sizes;
  }
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t next = spec.find(',', pos);
    if (next == std::string::npos) next = spec.size();
    const long v = std::strtol(spec.substr(pos, next - pos).c_str(), nullptr, 10);
    if (v <= 0) throw std::invalid_argument("bad --sizes: " + spec);
    sizes.push_back(static_cast<std::size_t>(v));
    pos = next + 1;
  }
  if (sizes.size() == 1) sizes.assign(k, sizes.front());
  if (sizes.size() != k)
    throw std::invalid_argument("--sizes length does not match --k");
  return sizes;
}

void write_manifest(const fs::path& dir, json j) {
  j["version"] = kVersion;
  io::atomic_write_text(dir / "manifest.json", j.dump(2) + "\n");
}

void write_trace_csv(const fs::path& path,
                     const std::vector<IterateTrace>& traces) {
  std::string out = "seed_index,t,f_value,inlier_count,boundary_escape\n";
  for (std::size_t s = 0; s < traces.size(); ++s) {
    for (std::size_t t = 0; t < traces[s].steps.size(); ++t) {
      const auto& step = traces[s].steps[t];
      out += std::to_string(s);
      out.push_back(',');
      out += std::to_string(t);
      out.push_back(',');
      out += io::format_double(step.f_value);
      out.push_back(',');
      out += std::to_string(step.inlier_count);
      out.push_back(',');
      out += step.boundary_escape ? '1' : '0';
      out.push_back('\n');
    }
  }
  io::atomic_write_text(path, out);
}

struct BenchRow {
  std::size_t trial;
  std::string algo;
  std::string error;  // number or "NA"
  double seconds;
};

GmmSpec paper_style_spec(std::size_t d, std::size_t k, double centroid_std,
                         double sigma, const std::string& sizes,
                         std::uint64_t seed) {
  GmmSpec spec;
  spec.dim = d;
  spec.components = k;
  spec.centroid_std = centroid_std;
  spec.sigma = sigma;
  spec.sizes = parse_sizes(sizes, k);
  spec.rng_seed = seed;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mode-seeking clustering toolkit"};
  app.require_subcommand(1);

  int jobs = 0;
  app.add_option("--jobs", jobs, "OpenMP thread count (env MODESHIFT_JOBS)");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "Generate a spherical Gaussian mixture");
  std::size_t gen_d = 2, gen_k = 1;
  double gen_cstd = 2.0, gen_sigma = 1.0;
  std::string gen_sizes = "50k";
  std::uint64_t gen_seed = 0;
  std::string gen_out = ".";
  gen->add_option("--d", gen_d, "Dimension")->required();
  gen->add_option("--k", gen_k, "Number of components")->required();
  gen->add_option("--centroid-std", gen_cstd, "Centroid deviation");
  gen->add_option("--sigma", gen_sigma, "Component deviation");
  gen->add_option("--sizes", gen_sizes, "Component sizes: '50k', '100', or comma list");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "Output directory");

  // ---- bandwidth ----
  auto* bw = app.add_subcommand("bandwidth", "Cross-validated bandwidth selection");
  std::string bw_data, bw_out = ".", bw_cands, bw_kernel = "epanechnikov";
  std::size_t bw_mc = 0;
  std::uint64_t bw_seed = 0;
  bw->add_option("--data", bw_data, "Dataset CSV")->required();
  bw->add_option("--candidates", bw_cands, "Comma list; default: data-driven grid");
  bw->add_option("--mc-samples", bw_mc, "Monte Carlo samples (default 10*M)");
  bw->add_option("--seed", bw_seed, "RNG seed");
  bw->add_option("--kernel", bw_kernel, "epanechnikov|gaussian");
  bw->add_option("--out", bw_out, "Output directory");

  // ---- cluster ----
  auto* cl = app.add_subcommand("cluster", "Cluster a dataset");
  std::string cl_algo, cl_data, cl_out = ".";
  double cl_w = 0.0, cl_sigma = 0.0, cl_merge_eps = -1.0, cl_tol = -1.0;
  std::size_t cl_k = 0, cl_cap = 0, cl_max_iter = 100;
  std::uint64_t cl_seed = 0;
  bool cl_trace = false;
  cl->add_option("--algo", cl_algo, "meanshift|deflation|gaussian-ms|kmeans|em")
      ->required();
  cl->add_option("--data", cl_data, "Dataset CSV")->required();
  cl->add_option("--w", cl_w, "Bandwidth");
  cl->add_option("--sigma", cl_sigma, "Component deviation (deflation)");
  cl->add_option("--k", cl_k, "Cluster count (kmeans/em)");
  cl->add_option("--merge-eps", cl_merge_eps, "Mode merge distance");
  cl->add_option("--cap", cl_cap, "Iteration cap (0: 10M+100)");
  cl->add_option("--max-iter", cl_max_iter, "Max iterations (kmeans/em)");
  cl->add_option("--tol", cl_tol, "Tolerance (gaussian-ms/kmeans/em)");
  cl->add_option("--seed", cl_seed, "RNG seed");
  cl->add_flag("--trace", cl_trace, "Write per-iteration trace.csv (meanshift)");
  cl->add_option("--out", cl_out, "Output directory");

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "Score labels against ground truth");
  std::string ev_labels, ev_truth, ev_out = ".";
  ev->add_option("--labels", ev_labels, "Found labels CSV")->required();
  ev->add_option("--truth", ev_truth, "True labels CSV")->required();
  ev->add_option("--out", ev_out, "Output directory");

  // ---- bench ----
  auto* be = app.add_subcommand("bench", "Monte Carlo benchmark over generated mixtures");
  std::size_t be_trials = 30, be_d = 100, be_k = 30, be_mc = 2000;
  double be_cstd = 2.0, be_sigma = 1.0;
  std::string be_sizes = "50k", be_algos = "deflation,kmeans,meanshift", be_out = ".";
  std::uint64_t be_seed = 0;
  be->add_option("--trials", be_trials, "Number of Monte Carlo trials");
  be->add_option("--d", be_d, "Dimension");
  be->add_option("--k", be_k, "Components");
  be->add_option("--centroid-std", be_cstd, "Centroid deviation");
  be->add_option("--sigma", be_sigma, "Component deviation");
  be->add_option("--sizes", be_sizes, "Component sizes spec");
  be->add_option("--algos", be_algos, "Comma list of algorithms");
  be->add_option("--seed", be_seed, "Master seed");
  be->add_option("--mc-samples", be_mc, "CV Monte Carlo samples (meanshift)");
  be->add_option("--out", be_out, "Output directory");

  // ---- verify-trace ----
  auto* vt = app.add_subcommand("verify-trace", "Re-check descent amounts in a trace");
  std::string vt_trace;
  double vt_w = 0.0;
  vt->add_option("--trace", vt_trace, "trace.csv from cluster --trace")->required();
  vt->add_option("--w", vt_w, "Bandwidth the trace was produced with")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  if (jobs == 0)
    if (const char* env = std::getenv("MODESHIFT_JOBS"))
      jobs = std::atoi(env);
  if (jobs > 0) omp_set_num_threads(jobs);

  try {
    if (*gen) {
      const double t0 = now_sec();
      const GmmSpec spec =
          paper_style_spec(gen_d, gen_k, gen_cstd, gen_sigma, gen_sizes, gen_seed);
      const LabeledData labeled = generate_gmm(spec);
      const fs::path dir(gen_out);
      fs::create_directories(dir);
      io::write_points_csv(dir / "dataset.csv", labeled.data);
      io::write_labels_csv(dir / "labels.csv", labeled.true_labels);
      json j;
      j["command"] = "gen";
      j["parameters"] = {{"d", gen_d},
                         {"k", gen_k},
                         {"centroid_std", gen_cstd},
                         {"sigma", gen_sigma},
                         {"sizes", spec.sizes},
                         {"seed", gen_seed}};
      j["true_centroids"] = labeled.true_centroids;
      j["wall_times"] = {{"total_sec", now_sec() - t0}};
      write_manifest(dir, std::move(j));
      std::cerr << "wrote " << labeled.data.size() << " points to "
                << (dir / "dataset.csv") << "\n";
      return kExitOk;
    }

    if (*bw) {
      const double t0 = now_sec();
      const DataSet data = io::read_points_csv(bw_data);
      const Kernel kernel =
          bw_kernel == "gaussian" ? Kernel::Gaussian : Kernel::Epanechnikov;
      std::vector<double> cands;
      if (bw_cands.empty()) {
        cands = default_candidate_grid(data, bw_seed);
      } else {
        std::size_t pos = 0;
        while (pos < bw_cands.size()) {
          std::size_t next = bw_cands.find(',', pos);
          if (next == std::string::npos) next = bw_cands.size();
          cands.push_back(std::strtod(bw_cands.substr(pos, next - pos).c_str(), nullptr));
          pos = next + 1;
        }
      }
      const std::size_t mc = bw_mc != 0 ? bw_mc : default_mc_samples(data);
      const BandwidthSearch search = select_bandwidth(data, kernel, cands, mc, bw_seed);
      const fs::path dir(bw_out);
      fs::create_directories(dir);
      std::string scores = "candidate_w,score\n";
      for (std::size_t i = 0; i < search.candidates.size(); ++i)
        scores += io::format_double(search.candidates[i]) + "," +
                  io::format_double(search.scores[i]) + "\n";
      io::atomic_write_text(dir / "scores.csv", scores);
      json j;
      j["command"] = "bandwidth";
      j["parameters"] = {{"data", bw_data},
                         {"kernel", bw_kernel},
                         {"mc_samples", mc},
                         {"seed", bw_seed},
                         {"candidates", search.candidates}};
      j["selected_w"] = search.selected_w;
      j["wall_times"] = {{"total_sec", now_sec() - t0}};
      write_manifest(dir, std::move(j));
      std::printf("%s\n", io::format_double(search.selected_w).c_str());
      return kExitOk;
    }

    if (*cl) {
      const double t0 = now_sec();
      const DataSet data = io::read_points_csv(cl_data);
      const fs::path dir(cl_out);
      fs::create_directories(dir);
      ClusterAssignment result;
      std::vector<IterateTrace> traces;

      if (cl_algo == "meanshift") {
        if (!(cl_w > 0.0)) throw CLI::ValidationError("--w required for meanshift");
        MeanShiftOptions opts;
        opts.bandwidth = cl_w;
        opts.merge_eps = cl_merge_eps;
        opts.cap = cl_cap;
        opts.rng_seed = cl_seed;
        result = mean_shift_cluster(data, opts, cl_trace ? &traces : nullptr);
      } else if (cl_algo == "gaussian-ms") {
        if (!(cl_w > 0.0)) throw CLI::ValidationError("--w required for gaussian-ms");
        const double tol = cl_tol > 0.0 ? cl_tol : 1e-8;
        result = gaussian_ms_cluster(data, cl_w, tol, cl_merge_eps, cl_cap);
      } else if (cl_algo == "deflation") {
        DeflationConfig cfg;
        if (cl_w > 0.0)
          cfg.bandwidth_override = cl_w;
        else if (cl_sigma > 0.0)
          cfg.sigma = cl_sigma;
        else
          throw CLI::ValidationError("--sigma or --w required for deflation");
        cfg.rng_seed = cl_seed;
        result = deflation_cluster(data, cfg, cl_cap);
      } else if (cl_algo == "kmeans") {
        if (cl_k == 0) throw CLI::ValidationError("--k required for kmeans");
        KmeansOptions opts;
        opts.k = cl_k;
        opts.rng_seed = cl_seed;
        opts.max_iter = cl_max_iter;
        opts.tol = cl_tol > 0.0 ? cl_tol : 0.0;
        result = lloyd_kmeans(data, opts);
      } else if (cl_algo == "em") {
        if (cl_k == 0) throw CLI::ValidationError("--k required for em");
        EmOptions opts;
        opts.k = cl_k;
        opts.rng_seed = cl_seed;
        opts.max_iter = cl_max_iter;
        opts.tol = cl_tol > 0.0 ? cl_tol : 1e-8;
        result = em_spherical_gmm(data, opts).assignment;
      } else {
        throw CLI::ValidationError("unknown --algo " + cl_algo);
      }

      io::write_labels_csv(dir / "labels.csv", result.labels);
      io::write_points_csv(dir / "centroids.csv", result.centroids);
      if (cl_trace && cl_algo == "meanshift")
        write_trace_csv(dir / "trace.csv", traces);
      json j;
      j["command"] = "cluster";
      j["parameters"] = {{"algo", cl_algo}, {"data", cl_data}, {"w", cl_w},
                         {"sigma", cl_sigma}, {"k", cl_k},
                         {"merge_eps", cl_merge_eps}, {"cap", cl_cap},
                         {"max_iter", cl_max_iter}, {"tol", cl_tol},
                         {"seed", cl_seed}, {"trace", cl_trace}};
      j["k_found"] = result.cluster_count();
      j["wall_times"] = {{"algorithm_sec", result.wall_time_sec},
                         {"total_sec", now_sec() - t0}};
      write_manifest(dir, std::move(j));
      std::cerr << cl_algo << ": " << result.cluster_count() << " clusters\n";
      return kExitOk;
    }

    if (*ev) {
      const std::vector<int> found = io::read_labels_csv(ev_labels);
      const std::vector<int> truth = io::read_labels_csv(ev_truth);
      if (found.size() != truth.size())
        throw std::invalid_argument("eval: label files differ in length");
      ClusterAssignment a;
      a.labels = found;
      int kf = 0;
      for (int l : found) kf = std::max(kf, l + 1);
      a.centroids.assign(kf, {});
      LabeledData t{DataSet(std::vector<double>(truth.size(), 0.0), 1),
                    truth, {}, 1.0};
      const AlignmentResult res = score_assignment(a, t);
      const fs::path dir(ev_out);
      fs::create_directories(dir);
      std::vector<std::vector<long long>> counts;
      for (const auto& row : res.confusion_counts)
        counts.emplace_back(row.begin(), row.end());
      io::write_int_matrix_csv(dir / "confusion.csv", counts);
      std::printf("%s\n", io::format_double(res.error_ratio).c_str());
      return kExitOk;
    }

    if (*be) {
      const double t0 = now_sec();
      const fs::path dir(be_out);
      fs::create_directories(dir);
      std::vector<std::string> algos;
      {
        std::size_t pos = 0;
        while (pos < be_algos.size()) {
          std::size_t next = be_algos.find(',', pos);
          if (next == std::string::npos) next = be_algos.size();
          algos.push_back(be_algos.substr(pos, next - pos));
          pos = next + 1;
        }
      }
      std::vector<BenchRow> rows;
      std::size_t warnings = 0;
      json trial_info = json::array();
      for (std::size_t trial = 0; trial < be_trials; ++trial) {
        const std::uint64_t trial_seed = rng::derive_stream(be_seed, trial);
        const GmmSpec spec = paper_style_spec(be_d, be_k, be_cstd, be_sigma,
                                              be_sizes, trial_seed);
        const LabeledData labeled = generate_gmm(spec);
        json info;
        info["trial"] = trial;
        info["seed"] = trial_seed;

        double cv_w = 0.0, cv_sec = 0.0;
        for (const std::string& algo : algos) {
          BenchRow row{trial, algo, "NA", 0.0};
          try {
            ClusterAssignment out;
            if (algo == "meanshift") {
              if (cv_w == 0.0) {
                const double c0 = now_sec();
                const std::vector<double> grid =
                    default_candidate_grid(labeled.data, trial_seed);
                cv_w = select_bandwidth(labeled.data, Kernel::Epanechnikov, grid,
                                        be_mc, trial_seed)
                           .selected_w;
                cv_sec = now_sec() - c0;
                info["cv_w"] = cv_w;
                info["cv_sec"] = cv_sec;
              }
              MeanShiftOptions opts;
              opts.bandwidth = cv_w;
              out = mean_shift_cluster(labeled.data, opts);
            } else if (algo == "deflation") {
              DeflationConfig cfg;
              cfg.sigma = be_sigma;
              out = deflation_cluster(labeled.data, cfg);
            } else if (algo == "gaussian-ms") {
              if (cv_w == 0.0) {
                const double c0 = now_sec();
                const std::vector<double> grid =
                    default_candidate_grid(labeled.data, trial_seed);
                cv_w = select_bandwidth(labeled.data, Kernel::Epanechnikov, grid,
                                        be_mc, trial_seed)
                           .selected_w;
                cv_sec = now_sec() - c0;
                info["cv_w"] = cv_w;
                info["cv_sec"] = cv_sec;
              }
              out = gaussian_ms_cluster(labeled.data, cv_w, 1e-8);
            } else if (algo == "kmeans") {
              KmeansOptions opts;
              opts.k = be_k;
              opts.rng_seed = trial_seed;
              out = lloyd_kmeans(labeled.data, opts);
            } else if (algo == "em") {
              EmOptions opts;
              opts.k = be_k;
              opts.rng_seed = trial_seed;
              out = em_spherical_gmm(labeled.data, opts).assignment;
            } else {
              throw std::invalid_argument("unknown algorithm " + algo);
            }
            row.error = io::format_double(score_assignment(out, labeled).error_ratio);
            row.seconds = out.wall_time_sec;
          } catch (const std::exception& e) {
            std::cerr << "warning: trial " << trial << " " << algo << ": "
                      << e.what() << "\n";
            ++warnings;
          }
          rows.push_back(std::move(row));
        }
        trial_info.push_back(std::move(info));
      }
      std::string csv = "trial,algo,error,seconds\n";
      for (const auto& row : rows)
        csv += std::to_string(row.trial) + "," + row.algo + "," + row.error + "," +
               io::format_double(row.seconds) + "\n";
      io::atomic_write_text(dir / "results.csv", csv);
      json j;
      j["command"] = "bench";
      j["parameters"] = {{"trials", be_trials}, {"d", be_d}, {"k", be_k},
                         {"centroid_std", be_cstd}, {"sigma", be_sigma},
                         {"sizes", be_sizes}, {"algos", be_algos},
                         {"seed", be_seed}, {"mc_samples", be_mc}};
      j["trials"] = std::move(trial_info);
      j["warnings"] = warnings;
      j["wall_times"] = {{"total_sec", now_sec() - t0}};
      write_manifest(dir, std::move(j));
      if (warnings != 0)
        std::cerr << warnings << " warning(s); failed cells recorded as NA\n";
      return kExitOk;
    }

    if (*vt) {
      if (!(vt_w > 0.0)) throw CLI::ValidationError("--w must be positive");
      std::ifstream in(vt_trace);
      if (!in) throw std::invalid_argument("cannot open " + vt_trace);
      std::string line;
      std::getline(in, line);  // header
      long long prev_seed = -1;
      double prev_f = 0.0;
      long long prev_count = 0;
      std::size_t violations = 0, rows = 0;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        long long seed, t, count;
        double f;
        int escape;
        if (std::sscanf(line.c_str(), "%lld,%lld,%lf,%lld,%d", &seed, &t, &f,
                        &count, &escape) != 5)
          throw std::invalid_argument("bad trace row: " + line);
        ++rows;
        if (seed == prev_seed) {
          const double drop = prev_f - f;
          if (!(f < prev_f)) {
            ++violations;
            std::cerr << "violation: f not strictly decreasing at seed " << seed
                      << " t " << t << "\n";
          }
          if (escape != 0) {
            const double expected =
                vt_w * vt_w / (static_cast<double>(prev_count) + 1.0);
            if (std::abs(drop - expected) > 1e-9 * expected) {
              ++violations;
              std::cerr << "violation: escape drop " << drop << " != "
                        << expected << " at seed " << seed << " t " << t << "\n";
            }
          }
        }
        prev_seed = seed;
        prev_f = f;
        prev_count = count;
      }
      std::printf("checked %zu rows, %zu violation(s)\n", rows, violations);
      return violations == 0 ? kExitOk : kExitConvergence;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CapExceededError& e) {
    std::cerr << "convergence diagnostic: " << e.what()
              << " (tolerance misconfiguration?)\n";
    return kExitConvergence;
  } catch (const DeflationStallError& e) {
    std::cerr << "convergence diagnostic: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

#pragma once

// Dataset I/O, experiment configuration and the reproducible experiment
// drivers behind the command-line tool.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfm/estimators.hpp"
#include "sfm/gaussian.hpp"
#include "sfm/mstats.hpp"

namespace sfm::harness {

using matkit::Matrix;
using stiefel::StiefelPoint;

// ---------------------------------------------------------------------------
// Matrix bundles
//
// Line 1 is a JSON manifest, e.g.
//   {"format":"sfm-matrix-bundle","version":1,"n":3,"p":2,"count":98,
//    "manifold":"stiefel","encoding":"csv","labels":[...]}
// With encoding "csv" each matrix follows as n lines of p comma-separated
// decimals (shortest round-trip form). With encoding "f64le" the remainder of
// the file is count*n*p little-endian IEEE doubles, row-major per matrix.

enum class Encoding { csv, f64le };

struct BundleManifest {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::size_t count = 0;
  bool stiefel = true;  ///< manifold == "stiefel": every matrix must be orthonormal
  Encoding encoding = Encoding::csv;
  std::optional<std::vector<std::int64_t>> labels;
  /// Accepted orthonormality drift under the stiefel tag. Larger drift is a
  /// parse error; any drift above 1e-10 is repaired when converting to points.
  double tolerance = stiefel::kOrthoRepairLimit;
};

struct MatrixBundle {
  BundleManifest manifest;
  std::vector<Matrix> payload;

  static MatrixBundle from_points(std::span<const StiefelPoint> points, Encoding encoding = Encoding::csv);
  std::vector<StiefelPoint> points() const;
  /// Throws ParseError naming the first offending record.
  void validate() const;
};

MatrixBundle read_bundle(std::istream& in);
void write_bundle(const MatrixBundle& bundle, std::ostream& out);
MatrixBundle load_bundle(const std::filesystem::path& path);
void save_bundle(const MatrixBundle& bundle, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::string experiment = "bench";
  Eigen::Index n = 50;
  Eigen::Index p = 10;
  double sigma = 0.25;
  std::size_t samples = 1000;
  std::size_t trials = 100;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::filesystem::path output = "out";
  std::filesystem::path input;  ///< optional dataset bundle

  std::vector<std::size_t> grid = {10, 100, 1000};
  bool incremental = false;      ///< per-arrival warm-start workload for StFME
  std::vector<double> tolerances;
  std::vector<double> sgd_a = {0.5, 1.0, 2.0};
  double sgd_b = 1.0;
  std::size_t sgd_max_passes = 64;

  std::size_t clusters = 3;
  double min_separation = 0.5;  ///< synthetic cluster centers, in lift distance
  int bins = 20;
  Eigen::Index components = 2;
  std::size_t time_steps = 200;
  Eigen::Index state_dim = 3;
  double noise = 0.0;

  /// Throws ConfigError; `need_seed` for stochastic commands.
  void validate(bool need_seed) const;
  std::uint64_t require_seed() const;

  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
};

// ---------------------------------------------------------------------------
// Benchmarks

/// The reference mean used by the synthetic benchmarks: I~ = [I_p; 0].
StiefelPoint reference_mean(Eigen::Index n, Eigen::Index p);

struct BenchRow {
  std::string estimator;
  std::size_t n = 0;
  double mean_error = 0.0;
  double mean_wall_time = 0.0;
  double passes = 1.0;
  std::uint64_t seed = 0;
};

struct TraceRow {
  std::string estimator;
  std::size_t k = 0;
  double error = 0.0;
  double elapsed = 0.0;
};

struct ToleranceRow {
  std::string estimator;
  double tolerance = 0.0;
  double mean_time = 0.0;   ///< over trials that reached the tolerance
  double reached = 0.0;     ///< fraction of trials
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<TraceRow> traces;
  std::vector<ToleranceRow> time_to_tolerance;
};

/// Error/time against I~ on the N grid for StiFME, warm-start StFME and
/// one-pass SGD (one row per step-size scale a), averaged over trials.
BenchReport bench_fm(const ExperimentConfig& config);

struct SgdComparison {
  double stifme_error = 0.0;  ///< mean d(StiFME, batch FM) over trials
  struct Schedule {
    double a = 0.0;
    double one_pass_error = 0.0;
    std::vector<double> error_by_pass;   ///< mean over trials, passes 1..max
    double mean_passes_to_match = 0.0;   ///< unmatched trials count as max + 1
    double matched_fraction = 0.0;
  };
  std::vector<Schedule> schedules;
};

/// Distances to the batch Fréchet mean of each data set (N = config.samples)
/// for StiFME and SGD with uniform-with-replacement visitation.
SgdComparison sgd_compare(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Synthetic data

/// Points Cay(t_i W) M on one Cayley geodesic with symmetric t_i.
std::vector<StiefelPoint> synthetic_geodesic(Eigen::Index n, Eigen::Index p, std::size_t count, double spread, Rng& rng);

struct SyntheticClusters {
  std::vector<StiefelPoint> points;
  std::vector<std::size_t> truth;
  std::vector<StiefelPoint> centers;
};

/// `clusters` Gaussian blobs around centers drawn near I~ whose pairwise lift
/// distance exceeds min_separation.
SyntheticClusters synthetic_clusters(Eigen::Index n, Eigen::Index p, std::size_t clusters, std::size_t per_cluster,
                                     double sigma, double min_separation, Rng& rng);

struct SyntheticArma {
  Matrix features;  ///< d x T
  Matrix a;         ///< p x p
  Matrix c;         ///< d x p, orthonormal
};

/// Stable system with eigenvalues of modulus in [0.9, 0.99] and zero-mean
/// Gaussian noise of standard deviation `noise` on the observations.
SyntheticArma synthetic_arma(Eigen::Index d, Eigen::Index p, std::size_t t, double noise, Rng& rng);

/// Largest |a_i - b_pi(i)| under the best pairing pi (sizes must match, <= 8).
double eigenvalue_error(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b);

/// Stand-in for the 98-subject vector-cardiogram set: St(2,3) frames whose
/// spread is concentrated in two tangent directions.
std::vector<StiefelPoint> vcg_surrogate(Rng& rng, std::size_t count = 98);

// ---------------------------------------------------------------------------
// CSV writers. Every file starts with a header row.

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);
void write_trace_csv(const std::vector<TraceRow>& rows, std::ostream& out);
void write_tolerance_csv(const std::vector<ToleranceRow>& rows, std::ostream& out);
void write_sgd_csv(const SgdComparison& cmp, std::ostream& out);
void write_gof_csv(const gaussian::GofReport& report, std::ostream& out);
void write_spectrum_csv(const mstats::PgaModel& model, std::ostream& out);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

}  // namespace sfm::harness

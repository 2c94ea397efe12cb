// Command-line front end: sampling, Fréchet means, benchmarks, goodness of
// fit, PGA, k-means and ARMA subspace models.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfm/estimators.hpp"
#include "sfm/gaussian.hpp"
#include "sfm/grassmann.hpp"
#include "sfm/harness.hpp"
#include "sfm/mstats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using sfm::Error;
using sfm::ErrorCode;
using sfm::harness::ExperimentConfig;
using sfm::matkit::Matrix;
using sfm::stiefel::StiefelPoint;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::optional<std::string> out;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> threads;
};

struct Common {
  std::optional<Eigen::Index> n;
  std::optional<Eigen::Index> p;
  std::optional<double> sigma;
  std::optional<std::size_t> samples;
  std::optional<std::string> input;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--n", c.n, "ambient dimension n");
  sub->add_option("--p", c.p, "frame size p");
  sub->add_option("--sigma", c.sigma, "Gaussian scale");
  sub->add_option("--samples", c.samples, "sample count");
  sub->add_option("--input", c.input, "input file");
}

ExperimentConfig make_config(const Globals& g, const Common& c) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
  if (g.seed) cfg.seed = g.seed;
  if (g.out) cfg.output = *g.out;
  if (g.trials) cfg.trials = *g.trials;
  if (g.threads) cfg.threads = *g.threads;
  if (c.n) cfg.n = *c.n;
  if (c.p) cfg.p = *c.p;
  if (c.sigma) cfg.sigma = *c.sigma;
  if (c.samples) cfg.samples = *c.samples;
  if (c.input) cfg.input = *c.input;
  return cfg;
}

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output);
  const fs::path path = cfg.output / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::NotFound, "cannot write '" + path.string() + "'");
  return out;
}

void write_json(const ExperimentConfig& cfg, const std::string& name, const json& j) {
  open_out(cfg, name) << j.dump(2) << '\n';
}

std::vector<StiefelPoint> load_points(const ExperimentConfig& cfg) {
  return sfm::harness::load_bundle(cfg.input).points();
}

std::vector<StiefelPoint> generate(const ExperimentConfig& cfg) {
  sfm::Rng rng(cfg.require_seed());
  const sfm::gaussian::GaussianParams params(sfm::harness::reference_mean(cfg.n, cfg.p), cfg.sigma);
  return sfm::gaussian::sample(params, cfg.samples, rng);
}

std::optional<double> origin_distance(const StiefelPoint& x) {
  try {
    return sfm::gaussian::distance_to_mean(sfm::harness::reference_mean(x.n(), x.p()), x);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutOfNeighborhood) throw;
    return std::nullopt;
  }
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

/// Plain numeric CSV, one matrix row per line, no header.
Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::NotFound, "cannot open '" + path.string() +
                                         "'; expected a d x T numeric CSV with one feature per row, one frame per column");
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto b = tok.find_first_not_of(" \t\r");
      const auto e = tok.find_last_not_of(" \t\r");
      double v = 0.0;
      const char* first = b == std::string::npos ? tok.data() : tok.data() + b;
      const char* last = b == std::string::npos ? tok.data() : tok.data() + e + 1;
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(rows.size()) + ": bad number '" + tok + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(rows.size()) + " has " + std::to_string(row.size()) +
                                             " columns, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, "empty feature matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string encoding = "csv";
  bool horizontal_only = false;
};

int run_sample(ExperimentConfig cfg, const SampleArgs& a) {
  cfg.validate(true);
  sfm::Rng rng(cfg.require_seed());
  const sfm::gaussian::GaussianParams params(sfm::harness::reference_mean(cfg.n, cfg.p), cfg.sigma);
  sfm::gaussian::SamplerOptions opts;
  opts.horizontal_only = a.horizontal_only;
  const std::vector<StiefelPoint> xs = sfm::gaussian::sample(params, cfg.samples, rng, opts);
  const auto enc = a.encoding == "f64le" ? sfm::harness::Encoding::f64le : sfm::harness::Encoding::csv;
  fs::create_directories(cfg.output);
  sfm::harness::save_bundle(sfm::harness::MatrixBundle::from_points(xs, enc), cfg.output / "samples.bundle");
  std::ofstream d = open_out(cfg, "distances.csv");
  d << "index,distance\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d << i << ',' << sfm::harness::format_double(sfm::gaussian::distance_to_mean(params.mean(), xs[i])) << '\n';
  }
  std::cout << "wrote " << xs.size() << " samples on St(" << cfg.p << "," << cfg.n << ") to "
            << (cfg.output / "samples.bundle").string() << '\n';
  return 0;
}

struct FmArgs {
  std::string estimator = "stifme";
  double tol = 1e-8;
  std::size_t max_iter = 1000;
  double a = 1.0;
  double b = 1.0;
  std::size_t passes = 1;
  std::string visitation = "with_replacement";
  bool trace = false;
};

int run_fm(ExperimentConfig cfg, const FmArgs& a) {
  namespace est = sfm::estimators;
  const bool stochastic = cfg.input.empty() || a.estimator == "sgd";
  cfg.validate(stochastic);
  const std::vector<StiefelPoint> xs = cfg.input.empty() ? generate(cfg) : load_points(cfg);
  if (xs.empty()) throw Error(ErrorCode::InsufficientData, "no samples");
  est::IfmeOptions trace_opts;
  if (a.trace) trace_opts.reference = sfm::harness::reference_mean(xs.front().n(), xs.front().p());
  est::BatchOptions bo;
  bo.tol = a.tol;
  bo.max_iter = a.max_iter;

  std::optional<est::FrechetMeanResult> r;
  if (a.estimator == "stifme") {
    r = est::ifme(xs, trace_opts);
  } else if (a.estimator == "batch") {
    r = est::batch_fm(xs, est::ifme(xs).estimate, bo);
  } else if (a.estimator == "incremental") {
    r = est::batch_fm_incremental(xs, bo, trace_opts);
  } else if (a.estimator == "sgd") {
    est::SgdConfig sc;
    sc.a = a.a;
    sc.b = a.b;
    sc.passes = a.passes;
    sc.seed = sfm::substream_seed(cfg.require_seed(), 1);
    sc.visitation = a.visitation == "ordered"    ? est::Visitation::ordered
                    : a.visitation == "shuffled" ? est::Visitation::shuffled
                                                 : est::Visitation::with_replacement;
    r = est::sgd_fm(xs, sc, xs.front()).fm;
  }

  sfm::harness::save_bundle(sfm::harness::MatrixBundle::from_points(std::span(&r->estimate, 1)),
                            cfg.output / "estimate.bundle");
  json j;
  j["estimator"] = a.estimator;
  j["samples"] = xs.size();
  j["steps"] = r->steps;
  j["wall_time"] = r->wall_time;
  j["converged"] = r->converged;
  j["gradient_norm"] = r->gradient_norm;
  j["skipped"] = r->skipped;
  j["objective"] = est::fm_objective(xs, r->estimate);
  const auto d0 = origin_distance(r->estimate);
  j["distance_to_origin"] = d0 ? json(*d0) : json(nullptr);
  write_json(cfg, "fm.json", j);
  if (!r->trace.empty()) {
    std::vector<sfm::harness::TraceRow> rows;
    for (const auto& t : r->trace) rows.push_back({a.estimator, t.k, t.error_to_reference, t.elapsed});
    std::ofstream out = open_out(cfg, "trace.csv");
    sfm::harness::write_trace_csv(rows, out);
  }
  std::cout << a.estimator << ": " << xs.size() << " samples, " << r->steps << " steps, objective "
            << j["objective"].get<double>() << '\n';
  return 0;
}

struct BenchArgs {
  std::string mode = "fm";
  std::optional<std::vector<std::size_t>> grid;
  bool incremental = false;
  std::optional<std::vector<double>> tolerances;
  std::optional<std::vector<double>> a;
  std::optional<std::size_t> max_passes;
};

int run_bench(ExperimentConfig cfg, const BenchArgs& a) {
  if (a.grid) cfg.grid = *a.grid;
  if (a.incremental) cfg.incremental = true;
  if (a.tolerances) cfg.tolerances = *a.tolerances;
  if (a.a) cfg.sgd_a = *a.a;
  if (a.max_passes) cfg.sgd_max_passes = *a.max_passes;
  cfg.validate(true);
  if (a.mode == "sgd") {
    const sfm::harness::SgdComparison cmp = sfm::harness::sgd_compare(cfg);
    std::ofstream out = open_out(cfg, "sgd.csv");
    sfm::harness::write_sgd_csv(cmp, out);
    std::cout << "StiFME one-pass error " << cmp.stifme_error << '\n';
    for (const auto& s : cmp.schedules) {
      std::cout << "SGD a=" << s.a << " one-pass error " << s.one_pass_error << ", passes to match "
                << s.mean_passes_to_match << " (matched " << s.matched_fraction * 100.0 << "%)\n";
    }
    return 0;
  }
  const sfm::harness::BenchReport rep = sfm::harness::bench_fm(cfg);
  {
    std::ofstream out = open_out(cfg, "bench.csv");
    sfm::harness::write_bench_csv(rep.rows, out);
  }
  {
    std::ofstream out = open_out(cfg, "trace.csv");
    sfm::harness::write_trace_csv(rep.traces, out);
  }
  {
    std::ofstream out = open_out(cfg, "tolerance.csv");
    sfm::harness::write_tolerance_csv(rep.time_to_tolerance, out);
  }
  sfm::harness::write_bench_csv(rep.rows, std::cout);
  return 0;
}

struct GofArgs {
  std::optional<int> bins;
  bool fit_sigma = false;
  bool no_truncate = false;
};

int run_gof(ExperimentConfig cfg, const GofArgs& a) {
  if (a.bins) cfg.bins = *a.bins;
  cfg.validate(cfg.input.empty());
  const std::vector<StiefelPoint> xs = cfg.input.empty() ? generate(cfg) : load_points(cfg);
  if (xs.empty()) throw Error(ErrorCode::InsufficientData, "no samples");
  const sfm::gaussian::Frame origin(sfm::harness::reference_mean(xs.front().n(), xs.front().p()));
  std::vector<double> d;
  d.reserve(xs.size());
  for (const StiefelPoint& x : xs) d.push_back(origin.distance_to(x));
  std::optional<double> sigma;
  if (!a.fit_sigma) sigma = cfg.sigma;
  std::optional<double> trunc;
  if (!a.no_truncate) trunc = sfm::stiefel::kRegularBallRadius;
  const sfm::gaussian::GofReport rep = sfm::gaussian::gof_halfnormal(d, sigma, cfg.bins, trunc);
  {
    std::ofstream out = open_out(cfg, "gof.csv");
    sfm::harness::write_gof_csv(rep, out);
  }
  json j;
  j["statistic"] = rep.statistic;
  j["dof"] = rep.dof;
  j["p_value"] = rep.p_value;
  j["sigma"] = rep.sigma;
  j["sigma_fitted"] = rep.sigma_fitted;
  j["n"] = rep.n;
  j["bins"] = rep.bins.size();
  j["reject_at_5pct"] = rep.p_value <= 0.05;
  write_json(cfg, "gof.json", j);
  std::cout << "chi2 = " << rep.statistic << ", dof = " << rep.dof << ", p = " << rep.p_value << '\n';
  return 0;
}

struct PgaArgs {
  std::optional<Eigen::Index> components;
  bool surrogate = false;
};

int run_pga(ExperimentConfig cfg, const PgaArgs& a) {
  if (a.components) cfg.components = *a.components;
  const bool stochastic = cfg.input.empty();
  cfg.validate(stochastic);
  std::vector<StiefelPoint> xs;
  if (!cfg.input.empty()) {
    xs = load_points(cfg);
  } else {
    sfm::Rng rng(cfg.require_seed());
    xs = a.surrogate ? sfm::harness::vcg_surrogate(rng, cfg.samples)
                     : sfm::harness::synthetic_geodesic(cfg.n, cfg.p, cfg.samples, 0.5, rng);
  }
  if (xs.size() < 2) throw Error(ErrorCode::InsufficientData, "PGA needs at least 2 samples");
  const Eigen::Index full = sfm::stiefel::manifold_dimension(xs.front().n(), xs.front().p());
  const sfm::mstats::PgaModel model = sfm::mstats::pga_fit(xs, full);
  const Eigen::Index k = std::min(cfg.components, full);
  double recon_k = 0.0;
  double recon_full = 0.0;
  for (const StiefelPoint& x : xs) {
    recon_k += (sfm::mstats::pga_reconstruct(model, x, k).matrix() - x.matrix()).norm();
    recon_full += (sfm::mstats::pga_reconstruct(model, x, full).matrix() - x.matrix()).norm();
  }
  recon_k /= static_cast<double>(xs.size());
  recon_full /= static_cast<double>(xs.size());
  {
    std::ofstream out = open_out(cfg, "spectrum.csv");
    sfm::harness::write_spectrum_csv(model, out);
  }
  sfm::harness::save_bundle(sfm::harness::MatrixBundle::from_points(std::span(&model.mean, 1)),
                            cfg.output / "mean.bundle");
  json j;
  j["samples"] = xs.size();
  j["components"] = k;
  j["explained_ratio"] = model.explained_ratio(k);
  j["total_variance"] = model.total_variance;
  j["mean_reconstruction_error"] = recon_k;
  j["full_rank_reconstruction_error"] = recon_full;
  write_json(cfg, "pga.json", j);
  std::cout << k << " components explain " << model.explained_ratio(k) * 100.0
            << "% of the variance; mean reconstruction error " << recon_k << '\n';
  return 0;
}

struct KMeansArgs {
  std::optional<std::size_t> k;
  std::string centroid = "inductive";
  std::size_t max_iter = 100;
};

int run_kmeans(ExperimentConfig cfg, const KMeansArgs& a) {
  cfg.validate(true);
  std::vector<StiefelPoint> xs;
  std::optional<std::vector<std::size_t>> truth;
  if (!cfg.input.empty()) {
    const sfm::harness::MatrixBundle b = sfm::harness::load_bundle(cfg.input);
    xs = b.points();
    if (b.manifest.labels) {
      truth.emplace();
      for (std::int64_t l : *b.manifest.labels) {
        if (l < 0) throw Error(ErrorCode::ParseError, "labels must be non-negative");
        truth->push_back(static_cast<std::size_t>(l));
      }
    }
  } else {
    sfm::Rng rng(sfm::substream_seed(cfg.require_seed(), 1));
    const std::size_t per = std::max<std::size_t>(1, cfg.samples / cfg.clusters);
    sfm::harness::SyntheticClusters sc =
        sfm::harness::synthetic_clusters(cfg.n, cfg.p, cfg.clusters, per, cfg.sigma, cfg.min_separation, rng);
    xs = std::move(sc.points);
    truth = std::move(sc.truth);
  }
  std::vector<sfm::mstats::ProductPoint> pts;
  pts.reserve(xs.size());
  for (const StiefelPoint& x : xs) pts.push_back({x, std::nullopt, {}});
  sfm::mstats::KMeansOptions opts;
  opts.k = a.k.value_or(cfg.clusters);
  opts.max_iter = a.max_iter;
  opts.seed = cfg.require_seed();
  opts.centroid = a.centroid == "batch" ? sfm::mstats::CentroidMethod::batch : sfm::mstats::CentroidMethod::inductive;
  const sfm::mstats::KMeansResult r = sfm::mstats::kmeans(pts, opts);
  {
    std::ofstream out = open_out(cfg, "labels.csv");
    out << "index,label" << (truth ? ",truth" : "") << '\n';
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
      out << i << ',' << r.labels[i];
      if (truth) out << ',' << (*truth)[i];
      out << '\n';
    }
  }
  json j;
  j["k"] = opts.k;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["reseeded"] = r.reseeded;
  j["inertia"] = r.inertia.empty() ? 0.0 : r.inertia.back();
  if (truth) {
    std::size_t classes = 0;
    for (std::size_t t : *truth) classes = std::max(classes, t + 1);
    j["accuracy"] = sfm::mstats::clustering_accuracy(r.labels, *truth, std::max(classes, opts.k));
  }
  write_json(cfg, "kmeans.json", j);
  std::cout << "k-means: " << r.iterations << " iterations";
  if (truth) std::cout << ", accuracy " << j["accuracy"].get<double>();
  std::cout << '\n';
  return 0;
}

struct ArmaArgs {
  std::optional<Eigen::Index> order;
};

int run_arma(ExperimentConfig cfg, const ArmaArgs& a) {
  if (a.order) cfg.state_dim = *a.order;
  cfg.p = std::min(cfg.p, cfg.n);
  cfg.validate(cfg.input.empty());
  json j;
  Matrix features;
  std::optional<sfm::harness::SyntheticArma> truth;
  if (!cfg.input.empty()) {
    features = read_matrix_csv(cfg.input);
  } else {
    sfm::Rng rng(cfg.require_seed());
    truth = sfm::harness::synthetic_arma(cfg.n, cfg.state_dim, cfg.time_steps, cfg.noise, rng);
    features = truth->features;
  }
  const sfm::mstats::ArmaModel m = sfm::mstats::arma_decompose(features, cfg.state_dim);
  json eig = json::array();
  for (const auto& ev : m.eigenvalues()) eig.push_back({ev.real(), ev.imag()});
  j["d"] = features.rows();
  j["T"] = features.cols();
  j["p"] = cfg.state_dim;
  j["a"] = to_json(m.a);
  j["eigenvalues"] = eig;
  j["spectral_radius"] = m.spectral_radius;
  j["singular_values"] = std::vector<double>(m.sigma.data(), m.sigma.data() + m.sigma.size());
  if (truth) {
    Eigen::EigenSolver<Matrix> es(truth->a, false);
    std::vector<std::complex<double>> want(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    j["span_error"] = sfm::grassmann::principal_angle_distance(m.c, StiefelPoint(truth->c));
    j["eigenvalue_error"] = sfm::harness::eigenvalue_error(m.eigenvalues(), want);
  }
  sfm::harness::save_bundle(sfm::harness::MatrixBundle::from_points(std::span(&m.c, 1)), cfg.output / "c.bundle");
  write_json(cfg, "arma.json", j);
  std::cout << "ARMA(p=" << cfg.state_dim << "): spectral radius " << m.spectral_radius;
  if (truth) std::cout << ", span error " << j["span_error"].get<double>() << ", eigenvalue error "
                       << j["eigenvalue_error"].get<double>();
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistics on the Stiefel manifold St(p, n)"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "RNG seed (required for stochastic commands)");
  app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--trials", g.trials, "trial count");
  app.add_option("--threads", g.threads, "worker threads");

  Common common;

  auto* sample = app.add_subcommand("sample", "draw Gaussian samples around [I_p; 0]");
  SampleArgs sample_args;
  add_common(sample, common);
  sample->add_option("--encoding", sample_args.encoding, "bundle encoding")->check(CLI::IsMember({"csv", "f64le"}));
  sample->add_flag("--horizontal-only", sample_args.horizontal_only, "draw subspace motion only");

  auto* fm = app.add_subcommand("fm", "Fréchet mean of a bundle (or of generated samples)");
  FmArgs fm_args;
  add_common(fm, common);
  fm->add_option("--estimator", fm_args.estimator)->check(CLI::IsMember({"stifme", "batch", "incremental", "sgd"}));
  fm->add_option("--tol", fm_args.tol, "batch tolerance");
  fm->add_option("--max-iter", fm_args.max_iter, "batch iteration cap");
  fm->add_option("--a", fm_args.a, "SGD step scale");
  fm->add_option("--b", fm_args.b, "SGD step offset");
  fm->add_option("--passes", fm_args.passes, "SGD passes");
  fm->add_option("--visitation", fm_args.visitation)
      ->check(CLI::IsMember({"ordered", "shuffled", "with_replacement"}));
  fm->add_flag("--trace", fm_args.trace, "record the error to [I_p; 0] after every step");

  auto* bench = app.add_subcommand("bench", "error/time benchmarks on synthetic data");
  BenchArgs bench_args;
  add_common(bench, common);
  bench->add_option("--mode", bench_args.mode)->check(CLI::IsMember({"fm", "sgd"}));
  bench->add_option("--grid", bench_args.grid, "sample counts");
  bench->add_flag("--incremental", bench_args.incremental, "recompute the batch mean after every arrival");
  bench->add_option("--tolerances", bench_args.tolerances, "error tolerances for time-to-tolerance");
  bench->add_option("--a", bench_args.a, "SGD step scales");
  bench->add_option("--max-passes", bench_args.max_passes, "SGD pass budget");

  auto* gof = app.add_subcommand("gof", "half-normal goodness of fit of distances to [I_p; 0]");
  GofArgs gof_args;
  add_common(gof, common);
  gof->add_option("--bins", gof_args.bins, "bin count");
  gof->add_flag("--fit-sigma", gof_args.fit_sigma, "fit the scale instead of using --sigma");
  gof->add_flag("--no-truncate", gof_args.no_truncate, "untruncated half-normal null");

  auto* pga = app.add_subcommand("pga", "principal geodesic analysis");
  PgaArgs pga_args;
  add_common(pga, common);
  pga->add_option("--components", pga_args.components, "retained components");
  pga->add_flag("--surrogate", pga_args.surrogate, "use the St(2,3) cardiogram surrogate");

  auto* km = app.add_subcommand("kmeans", "k-means on St(p, n)");
  KMeansArgs km_args;
  add_common(km, common);
  km->add_option("--k", km_args.k, "cluster count");
  km->add_option("--centroid", km_args.centroid)->check(CLI::IsMember({"inductive", "batch"}));
  km->add_option("--max-iter", km_args.max_iter, "iteration cap");

  auto* arma = app.add_subcommand("arma", "ARMA subspace model of a d x T feature matrix");
  ArmaArgs arma_args;
  add_common(arma, common);
  arma->add_option("--order", arma_args.order, "state dimension p");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const ExperimentConfig cfg = make_config(g, common);
    if (*sample) return run_sample(cfg, sample_args);
    if (*fm) return run_fm(cfg, fm_args);
    if (*bench) return run_bench(cfg, bench_args);
    if (*gof) return run_gof(cfg, gof_args);
    if (*pga) return run_pga(cfg, pga_args);
    if (*km) return run_kmeans(cfg, km_args);
    if (*arma) return run_arma(cfg, arma_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sfm::is_numerical(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

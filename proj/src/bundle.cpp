#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sfm/harness.hpp"

namespace sfm::harness {

namespace {

static_assert(std::endian::native == std::endian::little, "f64le bundles assume a little-endian host");

constexpr const char* kFormat = "sfm-matrix-bundle";

[[noreturn]] void parse_error(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }

double parse_double(std::string_view tok, std::size_t record, Eigen::Index row) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    parse_error("record " + std::to_string(record) + ", row " + std::to_string(row) + ": bad number '" +
                std::string(tok) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

MatrixBundle MatrixBundle::from_points(std::span<const StiefelPoint> points, Encoding encoding) {
  MatrixBundle b;
  b.manifest.encoding = encoding;
  b.manifest.count = points.size();
  if (!points.empty()) {
    b.manifest.n = points.front().n();
    b.manifest.p = points.front().p();
  }
  for (const StiefelPoint& x : points) b.payload.push_back(x.matrix());
  b.validate();
  return b;
}

std::vector<StiefelPoint> MatrixBundle::points() const {
  validate();
  if (!manifest.stiefel) parse_error("bundle is not tagged manifold=stiefel");
  std::vector<StiefelPoint> out;
  out.reserve(payload.size());
  for (const Matrix& m : payload) {
    if (matkit::orthonormality_error(m) > stiefel::kOrthoTol) {
      out.emplace_back(matkit::orthonormalize(m));
    } else {
      out.emplace_back(m);
    }
  }
  return out;
}

void MatrixBundle::validate() const {
  if (payload.size() != manifest.count) {
    parse_error("manifest declares " + std::to_string(manifest.count) + " records, payload has " +
                std::to_string(payload.size()));
  }
  if (manifest.labels && manifest.labels->size() != manifest.count) {
    parse_error("manifest has " + std::to_string(manifest.labels->size()) + " labels for " +
                std::to_string(manifest.count) + " records");
  }
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const Matrix& m = payload[i];
    if (m.rows() != manifest.n || m.cols() != manifest.p) {
      parse_error("record " + std::to_string(i) + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                  ", manifest says " + std::to_string(manifest.n) + "x" + std::to_string(manifest.p));
    }
    if (!m.allFinite()) parse_error("record " + std::to_string(i) + " has non-finite entries");
    if (manifest.stiefel) {
      if (manifest.p < 1 || manifest.n < manifest.p) parse_error("stiefel bundle needs n >= p >= 1");
      const double drift = matkit::orthonormality_error(m);
      if (!(drift <= manifest.tolerance)) {
        parse_error("record " + std::to_string(i) + " is not orthonormal (||X^T X - I||_F = " + format_double(drift) +
                    ")");
      }
    }
  }
}

MatrixBundle read_bundle(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) parse_error("missing manifest line");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    parse_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  MatrixBundle b;
  try {
    if (j.value("format", std::string(kFormat)) != kFormat) parse_error("unknown format tag");
    b.manifest.n = j.at("n").get<Eigen::Index>();
    b.manifest.p = j.at("p").get<Eigen::Index>();
    b.manifest.count = j.at("count").get<std::size_t>();
    const std::string manifold = j.value("manifold", std::string("stiefel"));
    if (manifold != "stiefel" && manifold != "none") parse_error("unknown manifold tag '" + manifold + "'");
    b.manifest.stiefel = manifold == "stiefel";
    const std::string enc = j.value("encoding", std::string("csv"));
    if (enc == "csv") {
      b.manifest.encoding = Encoding::csv;
    } else if (enc == "f64le") {
      b.manifest.encoding = Encoding::f64le;
    } else {
      parse_error("unknown encoding '" + enc + "'");
    }
    if (j.contains("labels")) b.manifest.labels = j.at("labels").get<std::vector<std::int64_t>>();
    if (j.contains("tolerance")) b.manifest.tolerance = j.at("tolerance").get<double>();
  } catch (const nlohmann::json::exception& e) {
    parse_error(std::string("malformed manifest: ") + e.what());
  }
  if (b.manifest.n < 0 || b.manifest.p < 0 || (b.manifest.count > 0 && (b.manifest.n < 1 || b.manifest.p < 1))) {
    parse_error("manifest dimensions must be positive");
  }

  const Eigen::Index n = b.manifest.n;
  const Eigen::Index p = b.manifest.p;
  b.payload.reserve(b.manifest.count);
  if (b.manifest.encoding == Encoding::f64le) {
    std::vector<double> row(static_cast<std::size_t>(p));
    for (std::size_t r = 0; r < b.manifest.count; ++r) {
      Matrix m(n, p);
      for (Eigen::Index i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
        if (!in) parse_error("record " + std::to_string(r) + ": truncated binary payload");
        for (Eigen::Index c = 0; c < p; ++c) m(i, c) = row[static_cast<std::size_t>(c)];
      }
      b.payload.push_back(std::move(m));
    }
  } else {
    std::string line;
    for (std::size_t r = 0; r < b.manifest.count; ++r) {
      Matrix m(n, p);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::getline(in, line)) parse_error("record " + std::to_string(r) + ": unexpected end of file");
        std::string_view rest(line);
        Eigen::Index c = 0;
        while (true) {
          const auto comma = rest.find(',');
          const std::string_view tok = rest.substr(0, comma);
          if (c >= p) parse_error("record " + std::to_string(r) + ", row " + std::to_string(i) + ": too many columns");
          m(i, c++) = parse_double(tok, r, i);
          if (comma == std::string_view::npos) break;
          rest.remove_prefix(comma + 1);
        }
        if (c != p) {
          parse_error("record " + std::to_string(r) + ", row " + std::to_string(i) + ": expected " +
                      std::to_string(p) + " columns, got " + std::to_string(c));
        }
      }
      b.payload.push_back(std::move(m));
    }
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) parse_error("trailing data after the last record");
    }
  }
  b.validate();
  return b;
}

void write_bundle(const MatrixBundle& bundle, std::ostream& out) {
  bundle.validate();
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = 1;
  j["n"] = bundle.manifest.n;
  j["p"] = bundle.manifest.p;
  j["count"] = bundle.manifest.count;
  j["manifold"] = bundle.manifest.stiefel ? "stiefel" : "none";
  j["encoding"] = bundle.manifest.encoding == Encoding::csv ? "csv" : "f64le";
  if (bundle.manifest.labels) j["labels"] = *bundle.manifest.labels;
  if (bundle.manifest.tolerance != stiefel::kOrthoRepairLimit) j["tolerance"] = bundle.manifest.tolerance;
  out << j.dump() << '\n';
  for (const Matrix& m : bundle.payload) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (bundle.manifest.encoding == Encoding::f64le) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          const double v = m(i, c);
          out.write(reinterpret_cast<const char*>(&v), sizeof(double));
        }
      } else {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          if (c) out << ',';
          out << format_double(m(i, c));
        }
        out << '\n';
      }
    }
  }
}

MatrixBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::NotFound, "cannot open bundle '" + path.string() +
                                         "'; expected a JSON manifest line followed by matrix rows (see README)");
  }
  return read_bundle(in);
}

void save_bundle(const MatrixBundle& bundle, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::NotFound, "cannot write bundle '" + path.string() + "'");
  write_bundle(bundle, out);
}

}  // namespace sfm::harness

#include "repsim/repdata.hpp"

#include "repsim/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace repsim {

namespace {

constexpr double kNormalizedMeanTol = 1e-10;
constexpr double kNormalizedScaleTol = 1e-10;

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void check_normalized(const Eigen::MatrixXd& data) {
  const double n = static_cast<double>(data.rows());
  const double mean_tol = kNormalizedMeanTol * (1.0 + max_abs(data));
  const Eigen::RowVectorXd means = data.colwise().sum() / n;
  if (means.size() > 0 && means.cwiseAbs().maxCoeff() > mean_tol)
    throw InputError("representation tagged normalized has non-centered columns");
  const double mean_sq_norm = data.squaredNorm() / n;
  if (std::abs(mean_sq_norm - 1.0) > kNormalizedScaleTol)
    throw InputError("representation tagged normalized has mean squared row norm " +
                     std::to_string(mean_sq_norm));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw InputError("read failure on '" + path.string() + "'");
  return std::move(buf).str();
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t row, std::size_t col) {
  field = trim(field);
  // from_chars rejects a leading '+', which some writers emit.
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw InputError("non-numeric field '" + std::string(field) + "' at row " +
                     std::to_string(row) + ", column " + std::to_string(col));
  }
  return value;
}

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t read_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

constexpr std::array<char, 4> kMagic{'R', 'E', 'P', 'M'};
constexpr std::uint32_t kRepmVersion = 1;
constexpr std::size_t kRepmHeader = 4 + 4 + 8 + 8;

}  // namespace

// ---------------------------------------------------------------------------

Representation::Representation(std::string name, Eigen::MatrixXd data, RepState state)
    : name_(std::move(name)), data_(std::move(data)), state_(state) {
  if (data_.rows() < 2)
    throw InputError("n < 2: representation '" + name_ + "' has " +
                     std::to_string(data_.rows()) + " samples");
  if (data_.cols() < 1)
    throw InputError("k < 1: representation '" + name_ + "' has no features");
  if (!data_.allFinite())
    throw InputError("representation '" + name_ + "' contains non-finite entries");
  if (state_ == RepState::normalized) check_normalized(data_);
}

Representation Representation::renamed(std::string name) const {
  Representation copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

Representation Representation::select_rows(std::span<const Eigen::Index> rows) const {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), data_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= data_.rows())
      throw InputError("row index out of range in select_rows");
    sub.row(static_cast<Eigen::Index>(i)) = data_.row(rows[i]);
  }
  return Representation(name_, std::move(sub), RepState::raw);
}

Representation normalize(const Representation& rep) {
  const double n = static_cast<double>(rep.samples());
  Eigen::MatrixXd centered = rep.data().rowwise() - rep.data().colwise().mean();
  const double scale = std::sqrt(centered.squaredNorm() / n);
  if (!(scale > 1e-14 * (1.0 + max_abs(rep.data()))))
    throw NumericalError("degenerate representation '" + rep.name() +
                         "': all rows are equal");
  centered /= scale;
  return Representation(rep.name(), std::move(centered), RepState::normalized);
}

// ---------------------------------------------------------------------------
// CSV

Representation load_csv(const std::filesystem::path& path, bool has_header) {
  const std::string text = read_file(path);
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;

  std::string_view rest(text);
  while (!rest.empty()) {
    const auto eol = rest.find('\n');
    std::string_view line = rest.substr(0, eol);
    rest = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 1);
    ++line_no;
    if (has_header && line_no == 1) continue;
    line = trim(line);
    if (line.empty()) continue;

    std::size_t fields = 0;
    while (true) {
      const auto comma = line.find(',');
      values.push_back(parse_double(line.substr(0, comma), line_no, fields + 1));
      ++fields;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      width = fields;
    } else if (fields != width) {
      throw InputError("ragged rows: row " + std::to_string(line_no) + " has " +
                       std::to_string(fields) + " fields, expected " +
                       std::to_string(width));
    }
    ++rows;
  }

  if (rows < 2)
    throw InputError("n < 2: '" + path.string() + "' has " + std::to_string(rows) +
                     " data rows");
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < width; ++j)
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * width + j];
  return Representation(path.stem().string(), std::move(data));
}

void save_csv(const Representation& rep, const std::filesystem::path& path) {
  std::string out;
  std::array<char, 32> buf{};
  const auto& d = rep.data();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (j > 0) out.push_back(',');
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d(i, j));
      out.append(buf.data(), ptr);
    }
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// REPM

std::string encode_repm(const Representation& rep) {
  const auto& d = rep.data();
  std::string out;
  out.reserve(kRepmHeader + static_cast<std::size_t>(d.size()) * 8);
  out.append(kMagic.data(), kMagic.size());
  append_u32(out, kRepmVersion);
  append_u64(out, static_cast<std::uint64_t>(d.rows()));
  append_u64(out, static_cast<std::uint64_t>(d.cols()));
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      append_u64(out, std::bit_cast<std::uint64_t>(d(i, j)));
  return out;
}

Representation decode_repm(std::string_view bytes, std::string name) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0)
    throw InputError("bad magic: not a REPM file");
  if (bytes.size() < kRepmHeader) throw InputError("truncated payload: incomplete header");
  const auto version = static_cast<std::uint32_t>(read_le(bytes, 4, 4));
  if (version != kRepmVersion)
    throw InputError("unsupported REPM version " + std::to_string(version));
  const std::uint64_t n = read_le(bytes, 8, 8);
  const std::uint64_t k = read_le(bytes, 16, 8);
  const std::uint64_t payload = bytes.size() - kRepmHeader;
  if (k != 0 && n > payload / 8 / k)
    throw InputError("truncated payload: header declares " + std::to_string(n) + "x" +
                     std::to_string(k) + " but only " + std::to_string(payload / 8) +
                     " values present");
  if (payload != n * k * 8)
    throw InputError("trailing bytes after REPM payload");

  Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::size_t offset = kRepmHeader;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index j = 0; j < data.cols(); ++j, offset += 8)
      data(i, j) = std::bit_cast<double>(read_le(bytes, offset, 8));
  return Representation(std::move(name), std::move(data));
}

Representation load_repm(const std::filesystem::path& path) {
  return decode_repm(read_file(path), path.stem().string());
}

void save_repm(const Representation& rep, const std::filesystem::path& path) {
  write_file_atomic(path, encode_repm(rep));
}

Representation load_representation(const std::filesystem::path& path, bool has_header) {
  if (path.extension() == ".repm") return load_repm(path);
  return load_csv(path, has_header);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failure on '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot rename into '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthSpec::validate() const {
  if (n < 2) throw InputError("synth: n must be >= 2");
  if (k < 1) throw InputError("synth: k must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("synth: sigma must be >= 0");
  if (rank < 1 || rank > k) throw InputError("synth: rank must satisfy 1 <= r <= k");
  if (!(rho >= -1.0 && rho <= 1.0)) throw InputError("synth: rho must lie in [-1, 1]");
}

SynthFamily parse_synth_family(std::string_view name) {
  if (name == "gaussian") return SynthFamily::gaussian;
  if (name == "rotated_copy") return SynthFamily::rotated_copy;
  if (name == "linear_map") return SynthFamily::linear_map;
  if (name == "noisy_copy") return SynthFamily::noisy_copy;
  if (name == "lowrank") return SynthFamily::lowrank;
  throw InputError("unknown synth family '" + std::string(name) + "'");
}

std::string_view to_string(SynthFamily family) {
  switch (family) {
    case SynthFamily::gaussian: return "gaussian";
    case SynthFamily::rotated_copy: return "rotated_copy";
    case SynthFamily::linear_map: return "linear_map";
    case SynthFamily::noisy_copy: return "noisy_copy";
    case SynthFamily::lowrank: return "lowrank";
  }
  return "unknown";
}

std::vector<Representation> synthesize(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto k = static_cast<Eigen::Index>(spec.k);

  auto pair = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return std::vector<Representation>{normalize(Representation("phi", a)),
                                       normalize(Representation("psi", b))};
  };

  switch (spec.family) {
    case SynthFamily::gaussian: {
      const Eigen::MatrixXd base = standard_normal(n, k, rng);
      const Eigen::MatrixXd other = standard_normal(n, k, rng);
      return pair(base, spec.rho * base + std::sqrt(1.0 - spec.rho * spec.rho) * other);
    }
    case SynthFamily::rotated_copy: {
      const Eigen::MatrixXd base = standard_normal(n, k, rng);
      const Eigen::MatrixXd u = haar_orthogonal(k, rng);
      // Rows are samples, so psi(x) = U phi(x) becomes B = A U^T.
      return pair(base, base * u.transpose());
    }
    case SynthFamily::linear_map: {
      const Eigen::MatrixXd base = standard_normal(n, k, rng);
      const Eigen::MatrixXd left = haar_orthogonal(k, rng);
      const Eigen::MatrixXd right = haar_orthogonal(k, rng);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Eigen::VectorXd singular(k);
      for (Eigen::Index i = 0; i < k; ++i) singular(i) = std::pow(100.0, unit(rng));
      const Eigen::MatrixXd m = left * singular.asDiagonal() * right;
      return pair(base, base * m.transpose());
    }
    case SynthFamily::noisy_copy: {
      const Eigen::MatrixXd base = standard_normal(n, k, rng);
      const Eigen::MatrixXd noise = standard_normal(n, k, rng);
      if (spec.sigma == 0.0) return pair(base, base);
      return pair(base, base + spec.sigma * noise);
    }
    case SynthFamily::lowrank: {
      const auto r = static_cast<Eigen::Index>(spec.rank);
      const Eigen::MatrixXd latent = standard_normal(n, r, rng);
      const Eigen::MatrixXd basis = standard_normal(r, k, rng);
      const Eigen::MatrixXd jitter = standard_normal(n, k, rng);
      return {normalize(Representation("phi", latent * basis + 1e-8 * jitter))};
    }
  }
  throw InputError("synth: unhandled family");
}

}  // namespace repsim

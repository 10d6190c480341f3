#include "sbe/io.hpp"

#include <bit>
#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sbe {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& token, const std::string& context) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE) {
    fail(context + ": malformed number '" + token + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string numbered_header(const std::string& first, int dim) {
  std::string h = first;
  for (int c = 1; c <= dim; ++c) h += ",x" + std::to_string(c);
  return h;
}

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& file)
      : out_(file, std::ios::binary | std::ios::trunc) {
    if (!out_) fail("io: cannot open '" + file.string() + "' for writing");
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof v);
  }
  void doubles(std::span<const double> v) {
    bytes(v.data(), v.size() * sizeof(double));
  }
  void close(const std::string& context) {
    out_.flush();
    if (!out_) fail(context + ": write failed");
  }

 private:
  std::ofstream out_;
};

class BinaryReader {
 public:
  BinaryReader(const std::filesystem::path& file, const std::string& context)
      : in_(file, std::ios::binary), context_(context) {
    if (!in_) fail(context + ": cannot open '" + file.string() + "'");
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      fail(context_ + ": truncated file");
    }
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  void doubles(std::vector<double>& v, std::size_t n) {
    v.resize(n);
    bytes(v.data(), n * sizeof(double));
  }
  void expect_eof() {
    char extra;
    in_.read(&extra, 1);
    if (!in_.eof()) fail(context_ + ": trailing bytes after payload");
  }

 private:
  std::ifstream in_;
  std::string context_;
};

constexpr std::size_t kMaxSamples = std::size_t{1} << 40;

}  // namespace

std::uint64_t fnv1a64(std::span<const std::byte> data) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (std::byte b : data) {
    hash ^= static_cast<std::uint64_t>(b);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail("io: cannot open '" + file.string() + "' for hashing");
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  char buf[4096];
  for (;;) {
    in.read(buf, sizeof buf);
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001B3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof buf)) break;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, value);
  return buf;
}

void write_path_csv(const std::filesystem::path& file,
                    const SampledPath& path) {
  path.validate();
  std::ofstream out(file, std::ios::trunc);
  if (!out) fail("path csv: cannot open '" + file.string() + "' for writing");
  out << numbered_header("t", path.dim) << '\n';
  const std::size_t d = static_cast<std::size_t>(path.dim);
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << fmt17(path.times[i]);
    for (std::size_t c = 0; c < d; ++c) {
      out << ',' << fmt17(path.values[i * d + c]);
    }
    out << '\n';
  }
  out.flush();
  if (!out) fail("path csv: write failed");
}

SampledPath read_path_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail("path csv: cannot open '" + file.string() + "'");
  std::string line;
  if (!std::getline(in, line)) fail("path csv: empty file");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "t") {
    fail("path csv: header must be t,x1,...,xd");
  }
  const int dim = static_cast<int>(header.size()) - 1;
  for (int c = 1; c <= dim; ++c) {
    if (header[static_cast<std::size_t>(c)] != "x" + std::to_string(c)) {
      fail("path csv: header must be t,x1,...,xd");
    }
  }
  SampledPath path;
  path.dim = dim;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      fail("path csv: row " + std::to_string(row) + " has " +
           std::to_string(fields.size()) + " fields, expected " +
           std::to_string(header.size()));
    }
    const std::string ctx = "path csv row " + std::to_string(row);
    path.times.push_back(parse_double(fields[0], ctx));
    for (int c = 1; c <= dim; ++c) {
      path.values.push_back(
          parse_double(fields[static_cast<std::size_t>(c)], ctx));
    }
  }
  path.validate();
  return path;
}

void write_path_binary(const std::filesystem::path& file,
                       const SampledPath& path) {
  path.validate();
  BinaryWriter out(file);
  out.bytes("SBEP", 4);
  out.pod<std::uint8_t>(1);
  out.pod<std::uint64_t>(path.size());
  out.pod<std::uint32_t>(static_cast<std::uint32_t>(path.dim));
  out.doubles(path.times);
  out.doubles(path.values);
  out.close("path binary");
}

SampledPath read_path_binary(const std::filesystem::path& file) {
  BinaryReader in(file, "path binary");
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, "SBEP", 4) != 0) fail("path binary: bad magic");
  const auto version = in.pod<std::uint8_t>();
  if (version != 1) {
    fail("path binary: unsupported version " + std::to_string(version));
  }
  const auto n = in.pod<std::uint64_t>();
  const auto dim = in.pod<std::uint32_t>();
  if (n < 2 || n > kMaxSamples || dim < 1 || dim > 1024) {
    fail("path binary: implausible sample count or dimension");
  }
  SampledPath path;
  path.dim = static_cast<int>(dim);
  in.doubles(path.times, static_cast<std::size_t>(n));
  in.doubles(path.values, static_cast<std::size_t>(n * dim));
  in.expect_eof();
  path.validate();
  return path;
}

SampledPath read_path_any(const std::filesystem::path& file) {
  std::ifstream probe(file, std::ios::binary);
  if (!probe) fail("path: cannot open '" + file.string() + "'");
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (std::memcmp(magic, "SBEP", 4) == 0) return read_path_binary(file);
  return read_path_csv(file);
}

void write_measure_csv(const std::filesystem::path& file,
                       const OccupationMeasure& mu) {
  mu.validate();
  std::ofstream out(file, std::ios::trunc);
  if (!out) {
    fail("measure csv: cannot open '" + file.string() + "' for writing");
  }
  out << "# span," << fmt17(mu.span_start) << ',' << fmt17(mu.span_end)
      << '\n';
  out << numbered_header("w", mu.dim) << '\n';
  const std::size_t d = static_cast<std::size_t>(mu.dim);
  for (std::size_t i = 0; i < mu.weights.size(); ++i) {
    out << fmt17(mu.weights[i]);
    for (std::size_t c = 0; c < d; ++c) {
      out << ',' << fmt17(mu.atoms[i * d + c]);
    }
    out << '\n';
  }
  out.flush();
  if (!out) fail("measure csv: write failed");
}

OccupationMeasure read_measure_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail("measure csv: cannot open '" + file.string() + "'");
  std::string line;
  if (!std::getline(in, line)) fail("measure csv: empty file");
  auto fields = split_csv(line);
  if (fields.size() != 3 || fields[0] != "# span") {
    fail("measure csv: first line must be '# span,<s>,<t>'");
  }
  OccupationMeasure mu;
  mu.span_start = parse_double(fields[1], "measure csv span");
  mu.span_end = parse_double(fields[2], "measure csv span");
  if (!std::getline(in, line)) fail("measure csv: missing header");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "w") {
    fail("measure csv: header must be w,x1,...,xd");
  }
  const int dim = static_cast<int>(header.size()) - 1;
  for (int c = 1; c <= dim; ++c) {
    if (header[static_cast<std::size_t>(c)] != "x" + std::to_string(c)) {
      fail("measure csv: header must be w,x1,...,xd");
    }
  }
  mu.dim = dim;
  std::size_t row = 2;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    fields = split_csv(line);
    if (fields.size() != header.size()) {
      fail("measure csv: row " + std::to_string(row) + " has " +
           std::to_string(fields.size()) + " fields, expected " +
           std::to_string(header.size()));
    }
    const std::string ctx = "measure csv row " + std::to_string(row);
    mu.weights.push_back(parse_double(fields[0], ctx));
    for (int c = 1; c <= dim; ++c) {
      mu.atoms.push_back(
          parse_double(fields[static_cast<std::size_t>(c)], ctx));
    }
  }
  mu.validate();
  return mu;
}

DriftFieldData DriftFieldData::sample(
    const std::function<std::vector<double>(double, std::span<const double>)>&
        f,
    const std::vector<double>& times, const BoxGridSpec& box, int components,
    DriftRegularity declared, bool zero_extension) {
  if (!f) fail("drift data: sampling function is empty");
  const std::size_t d = box.lo.size();
  if (d == 0 || box.hi.size() != d || box.cells.size() != d) {
    fail("drift data: malformed box");
  }
  std::size_t total = 1;
  std::vector<double> h(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (box.cells[c] < 1 || !(box.hi[c] > box.lo[c])) {
      fail("drift data: malformed box");
    }
    h[c] = (box.hi[c] - box.lo[c]) / static_cast<double>(box.cells[c]);
    total *= static_cast<std::size_t>(box.cells[c]);
  }
  if (components < 1) fail("drift data: need at least one component");
  if (times.empty()) fail("drift data: need at least one time");

  DriftFieldData data;
  data.times = times;
  data.box = box;
  data.dim = static_cast<int>(d);
  data.components = components;
  data.declared = declared;
  data.zero_extension = zero_extension;

  std::vector<double> center(d);
  for (double t : times) {
    std::vector<std::vector<double>> vals(
        static_cast<std::size_t>(components), std::vector<double>(total));
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      for (std::size_t c = d; c-- > 0;) {
        const std::size_t ic = rem % static_cast<std::size_t>(box.cells[c]);
        rem /= static_cast<std::size_t>(box.cells[c]);
        center[c] = box.lo[c] + (static_cast<double>(ic) + 0.5) * h[c];
      }
      const std::vector<double> fv = f(t, center);
      if (fv.size() != static_cast<std::size_t>(components)) {
        fail("drift data: sampling function returned the wrong component "
             "count");
      }
      for (std::size_t k = 0; k < fv.size(); ++k) vals[k][flat] = fv[k];
    }
    for (auto& v : vals) data.slices.push_back(std::move(v));
  }
  return data;
}

DriftField DriftFieldData::to_field() const {
  const std::size_t d = box.lo.size();
  std::vector<GridDensity> grids;
  grids.reserve(slices.size());
  for (const auto& v : slices) {
    GridDensity g;
    g.dim = static_cast<int>(d);
    g.lo = box.lo;
    g.hi = box.hi;
    g.cells = box.cells;
    g.values = v;
    grids.push_back(std::move(g));
  }
  return DriftField(times, std::move(grids), components, declared,
                    zero_extension);
}

void write_drift_binary(const std::filesystem::path& file,
                        const DriftFieldData& data) {
  const std::size_t d = data.box.lo.size();
  if (d == 0 || data.box.hi.size() != d || data.box.cells.size() != d ||
      data.dim != static_cast<int>(d)) {
    fail("drift binary: malformed box");
  }
  std::size_t total = 1;
  for (int cells : data.box.cells) {
    if (cells < 1) fail("drift binary: malformed box");
    total *= static_cast<std::size_t>(cells);
  }
  if (data.slices.size() !=
      data.times.size() * static_cast<std::size_t>(data.components)) {
    fail("drift binary: slice count must be times x components");
  }
  for (const auto& s : data.slices) {
    if (s.size() != total) fail("drift binary: slice size mismatch");
  }

  BinaryWriter out(file);
  out.bytes("SBED", 4);
  out.pod<std::uint8_t>(1);
  out.pod<std::uint32_t>(static_cast<std::uint32_t>(data.dim));
  out.pod<std::uint32_t>(static_cast<std::uint32_t>(data.components));
  out.pod<std::uint64_t>(data.times.size());
  out.pod<std::uint8_t>(data.zero_extension ? 1 : 0);
  out.pod<double>(data.declared.alpha);
  out.pod<double>(data.declared.p);
  out.pod<double>(data.declared.q);
  out.pod<double>(data.declared.r_var);
  out.doubles(data.box.lo);
  out.doubles(data.box.hi);
  for (int cells : data.box.cells) {
    out.pod<std::uint32_t>(static_cast<std::uint32_t>(cells));
  }
  out.doubles(data.times);
  for (const auto& s : data.slices) out.doubles(s);
  out.close("drift binary");
}

DriftFieldData read_drift_binary(const std::filesystem::path& file) {
  BinaryReader in(file, "drift binary");
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, "SBED", 4) != 0) fail("drift binary: bad magic");
  const auto version = in.pod<std::uint8_t>();
  if (version != 1) {
    fail("drift binary: unsupported version " + std::to_string(version));
  }
  const auto dim = in.pod<std::uint32_t>();
  const auto components = in.pod<std::uint32_t>();
  const auto n_times = in.pod<std::uint64_t>();
  const auto zero_ext = in.pod<std::uint8_t>();
  if (dim < 1 || dim > 8 || components < 1 || components > 64 ||
      n_times < 1 || n_times > (std::uint64_t{1} << 24)) {
    fail("drift binary: implausible dimensions");
  }
  DriftFieldData data;
  data.dim = static_cast<int>(dim);
  data.components = static_cast<int>(components);
  data.zero_extension = zero_ext != 0;
  data.declared.alpha = in.pod<double>();
  data.declared.p = in.pod<double>();
  data.declared.q = in.pod<double>();
  data.declared.r_var = in.pod<double>();
  in.doubles(data.box.lo, dim);
  in.doubles(data.box.hi, dim);
  std::size_t total = 1;
  data.box.cells.resize(dim);
  for (std::uint32_t c = 0; c < dim; ++c) {
    const auto cells = in.pod<std::uint32_t>();
    if (cells < 1 || cells > (1u << 20)) {
      fail("drift binary: implausible cell count");
    }
    data.box.cells[c] = static_cast<int>(cells);
    total *= cells;
  }
  if (total > (std::size_t{1} << 28)) {
    fail("drift binary: grid too large");
  }
  in.doubles(data.times, static_cast<std::size_t>(n_times));
  const std::size_t n_slices =
      static_cast<std::size_t>(n_times) * components;
  data.slices.resize(n_slices);
  for (auto& s : data.slices) in.doubles(s, total);
  in.expect_eof();
  return data;
}

}  // namespace sbe

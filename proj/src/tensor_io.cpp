#include "sfdet/tensor_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "sfdet/error.hpp"

namespace sfdet {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'F', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "SFT1 I/O assumes a little-endian host");

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("SFT1: truncated header");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Tensor read_sft1(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kMagic) throw Error("SFT1: bad magic");
  char header[2];
  if (!in.read(header, 2)) throw Error("SFT1: truncated header");
  const auto dtype = static_cast<std::uint8_t>(header[0]);
  const auto rank = static_cast<std::uint8_t>(header[1]);
  if (dtype != kDtypeFloat32) throw Error("SFT1: unsupported dtype code " + std::to_string(dtype));

  Tensor t;
  t.dims.reserve(rank);
  for (std::uint8_t r = 0; r < rank; ++r) t.dims.push_back(read_u32(in));
  t.data.resize(t.element_count());
  const auto bytes = static_cast<std::streamsize>(t.data.size() * sizeof(float));
  if (!in.read(reinterpret_cast<char*>(t.data.data()), bytes)) throw Error("SFT1: truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) throw Error("SFT1: trailing bytes after payload");
  return t;
}

void write_sft1(std::ostream& out, const Tensor& t) {
  if (t.dims.size() > 255) throw Error("SFT1: rank exceeds 255");
  if (t.data.size() != t.element_count()) throw Error("SFT1: payload does not match dims");
  out.write(kMagic.data(), 4);
  const char header[2] = {static_cast<char>(kDtypeFloat32), static_cast<char>(t.dims.size())};
  out.write(header, 2);
  for (auto d : t.dims) write_u32(out, d);
  out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

Tensor parse_csv_grid(const std::string& text) {
  Tensor t;
  std::istringstream lines(text);
  std::string line;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (start <= row.size()) {
      const std::size_t end = std::min(row.find(',', start), row.size());
      const std::string_view cell = trim(row.substr(start, end - start));
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw Error("CSV grid line " + std::to_string(line_no) + ": bad value '" + std::string(cell) + "'");
      }
      t.data.push_back(v);
      ++count;
      start = end + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw Error("CSV grid line " + std::to_string(line_no) + ": ragged row");
    ++rows;
  }
  if (rows == 0) throw Error("CSV grid is empty");
  t.dims = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};
  return t;
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  const bool is_sft = in.gcount() == 4 && magic == kMagic;
  in.clear();
  in.seekg(0);
  if (is_sft) return read_sft1(in);
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_csv_grid(text);
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_sft1(out, t);
  if (!out) throw Error("write failed for " + path.string());
}

ScoreMap tensor_to_map(const Tensor& t) {
  std::vector<double> values(t.data.begin(), t.data.end());
  if (t.dims.size() == 2) return ScoreMap(t.dims[0], t.dims[1], 1, std::move(values));
  if (t.dims.size() == 3) return ScoreMap(t.dims[0], t.dims[1], t.dims[2], std::move(values));
  throw Error("expected a rank-2 or rank-3 tensor, got rank " + std::to_string(t.dims.size()));
}

Tensor map_to_tensor(const ScoreMap& m) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(m.height()), static_cast<std::uint32_t>(m.width()),
            static_cast<std::uint32_t>(m.channels())};
  t.data.reserve(m.size());
  for (double v : m.values()) t.data.push_back(static_cast<float>(v));
  return t;
}

}  // namespace sfdet

#include "textkg/features.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace textkg {

namespace {

constexpr char kMagic[4] = {'T', 'K', 'G', 'F'};

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

Tensor load_binary(std::ifstream& in, const std::string& path) {
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), 16);
  if (in.gcount() != 16) throw std::runtime_error("feature file: truncated header in " + path);
  std::uint32_t rows = read_u32_le(header + 4);
  std::uint32_t cols = read_u32_le(header + 8);
  std::size_t count = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size())
    throw std::runtime_error("feature file: truncated payload in " + path);
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = read_u32_le(payload.data() + i * 4);
    float f;
    std::memcpy(&f, &bits, 4);
    values[i] = static_cast<double>(f);
  }
  return Tensor({rows, cols}, std::move(values));
}

Tensor load_text(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof())
      throw std::runtime_error("feature file: non-numeric token at " + path + ":" +
                               std::to_string(lineno));
    if (rows == 0)
      cols = row.size();
    else if (row.size() != cols)
      throw std::runtime_error("feature file: row " + std::to_string(lineno) + " has " +
                               std::to_string(row.size()) + " columns, expected " +
                               std::to_string(cols) + " in " + path);
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  return Tensor({rows, cols}, std::move(values));
}

}  // namespace

Tensor load_feature_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("feature file: cannot open " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) {
    in.seekg(0);
    return load_binary(in, path);
  }
  in.close();
  return load_text(path);
}

void save_feature_matrix_text(const std::string& path, const Tensor& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("feature file: cannot write " + path);
  std::size_t r = m.rows(), c = m.cols();
  out.precision(17);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (j) out << ' ';
      out << m(i, j);
    }
    out << '\n';
  }
}

void save_feature_matrix_binary(const std::string& path, const Tensor& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("feature file: cannot write " + path);
  out.write(kMagic, 4);
  write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
  write_u32_le(out, static_cast<std::uint32_t>(m.cols()));
  write_u32_le(out, 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    float f = static_cast<float>(m.at(i));
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32_le(out, bits);
  }
}

}  // namespace textkg

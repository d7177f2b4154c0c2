#include "parskit/tensor_file.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "parskit/error.hpp"

namespace parskit {

namespace {

void put_f64_le(std::string& out, double v) {
  uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f64_le(const unsigned char* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::string out;
  out += "parskit tensors v1\n";
  out += "count " + std::to_string(tensors.size()) + "\n";
  for (const NamedTensor& t : tensors) {
    if (t.name.empty() || t.name.find_first_of(" \t\n\r") != std::string::npos)
      raise(errc::invalid_record, "tensor name must be non-empty without whitespace: '" + t.name + "'");
    out += "tensor " + t.name + " " + std::to_string(t.values.rows()) + " " +
           std::to_string(t.values.cols()) + "\n";
  }
  out += "data\n";
  for (const NamedTensor& t : tensors)
    for (double v : t.values.data()) put_f64_le(out, v);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(errc::io_error, "cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) raise(errc::io_error, "write failed: " + path);
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(errc::io_error, "cannot open: " + path);
  std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  size_t pos = 0;
  auto next_line = [&]() -> std::string {
    if (pos >= raw.size()) raise(errc::invalid_record, "truncated tensor file header: " + path);
    size_t nl = raw.find('\n', pos);
    if (nl == std::string::npos) raise(errc::invalid_record, "unterminated header line: " + path);
    std::string line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  if (next_line() != "parskit tensors v1")
    raise(errc::invalid_record, "not a tensor file: " + path);
  std::string count_line = next_line();
  size_t count = 0;
  {
    std::istringstream ss(count_line);
    std::string word;
    if (!(ss >> word) || word != "count" || !(ss >> count) || (ss >> word))
      raise(errc::invalid_record, "bad count line: '" + count_line + "'");
  }

  std::vector<NamedTensor> out;
  out.reserve(count);
  size_t total_values = 0;
  for (size_t i = 0; i < count; ++i) {
    std::string line = next_line();
    std::istringstream ss(line);
    std::string word, name;
    int64_t rows = 0, cols = 0;
    if (!(ss >> word) || word != "tensor" || !(ss >> name >> rows >> cols) || (ss >> word))
      raise(errc::invalid_record, "bad tensor line: '" + line + "'");
    if (rows < 0 || cols < 0) raise(errc::invalid_record, "negative tensor shape: '" + line + "'");
    out.push_back({std::move(name), Matrix(static_cast<size_t>(rows), static_cast<size_t>(cols))});
    total_values += static_cast<size_t>(rows) * static_cast<size_t>(cols);
  }
  if (next_line() != "data") raise(errc::invalid_record, "missing data marker: " + path);

  if (raw.size() - pos != total_values * 8)
    raise(errc::invalid_record, "tensor payload size mismatch: " + path);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(raw.data()) + pos;
  for (NamedTensor& t : out) {
    for (double& v : t.values.data()) {
      v = get_f64_le(p);
      p += 8;
    }
  }
  return out;
}

}  // namespace parskit

#include "helmscat/io.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <openssl/evp.h>

namespace helmscat {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw InvariantError("sha256: digest computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string short_digest(std::string_view data) { return sha256_hex(data).substr(0, 16); }

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string join_doubles(const std::vector<double>& values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(sep);
    out += format_double(values[i]);
  }
  return out;
}

std::vector<double> parse_doubles(std::string_view text, char sep) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(sep, pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw ConfigError("cannot parse number '" + std::string(item) + "' in '" + std::string(text) + "'");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

void write_point_value_csv(std::ostream& os, const std::string& header, const std::vector<Vec3>& points,
                           const std::vector<Complex>& values) {
  if (points.size() != values.size()) throw InvariantError("write_point_value_csv: length mismatch");
  os << header << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    os << format_double(points[i].x()) << ',' << format_double(points[i].y()) << ','
       << format_double(points[i].z()) << ',' << format_double(values[i].real()) << ','
       << format_double(values[i].imag()) << '\n';
  }
}

}  // namespace helmscat

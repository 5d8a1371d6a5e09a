#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "helmscat/common.hpp"

namespace helmscat {

std::string sha256_hex(std::string_view data);

/// First 16 hex digits of the SHA-256 of `data`.
std::string short_digest(std::string_view data);

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

/// Comma-separated doubles in shortest round-trip form.
std::string join_doubles(const std::vector<double>& values, char sep = ',');

/// Parses "a,b,c" into doubles. Throws ConfigError on malformed input.
std::vector<double> parse_doubles(std::string_view text, char sep = ',');

/// CSV writer for `dir_x,dir_y,dir_z,re,im` style tables: one point + complex value per row.
void write_point_value_csv(std::ostream& os, const std::string& header, const std::vector<Vec3>& points,
                           const std::vector<Complex>& values);

}  // namespace helmscat

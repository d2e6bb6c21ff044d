#pragma once

#include <string>
#include <vector>

namespace promptrec {

// Round-trippable double formatting ("%.17g") used by every text artifact so
// that re-running a command reproduces files byte-for-byte.
std::string format_g17(double v);

// Fixed-precision formatting for report metrics.
std::string format_fixed(double v, int digits = 6);

double parse_double(const std::string& s, const char* what);
long long parse_int(const std::string& s, const char* what);

std::vector<std::string> split(const std::string& line, char sep);
std::string join(const std::vector<std::string>& parts, char sep);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<std::string> read_lines(const std::string& path);

// 64-bit FNV-1a, used for config hashes embedded in manifests.
std::uint64_t fnv1a64(const std::string& s);

}  // namespace promptrec

#include "macells/ids.hpp"

#include <algorithm>
#include <cctype>

namespace macells {

namespace {

bool all_digits(const Id& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

// Numeric comparison of digit strings without overflow: strip leading
// zeros, compare by length, then lexicographically.
int compare_numeric(const Id& a, const Id& b) {
  std::size_t ia = a.find_first_not_of('0');
  std::size_t ib = b.find_first_not_of('0');
  std::string_view va =
      ia == std::string::npos ? std::string_view("0") : std::string_view(a).substr(ia);
  std::string_view vb =
      ib == std::string::npos ? std::string_view("0") : std::string_view(b).substr(ib);
  if (va.size() != vb.size()) return va.size() < vb.size() ? -1 : 1;
  if (int c = va.compare(vb); c != 0) return c < 0 ? -1 : 1;
  return 0;
}

}  // namespace

bool id_less(const Id& a, const Id& b) {
  const bool na = all_digits(a);
  const bool nb = all_digits(b);
  if (na && nb) {
    if (int c = compare_numeric(a, b); c != 0) return c < 0;
    return a < b;  // same value, e.g. "7" vs "07": keep a total order
  }
  if (na != nb) return na;  // numeric ids sort before non-numeric ones
  return a < b;
}

void sort_ids(std::vector<Id>& ids) {
  std::sort(ids.begin(), ids.end(), id_less);
}

std::string join(const std::vector<std::string>& parts,
                 const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace macells

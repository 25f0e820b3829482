#pragma once

#include <string>
#include <vector>

namespace macells {

// Router and agent identifiers are opaque strings compared with a
// numeric-aware ordering ("2" < "10"), so every tie-break in the library is a
// property of the id itself and never of the order ids arrived in.
using Id = std::string;

// Numeric-aware strict weak ordering: purely numeric ids compare by value
// (then by string to separate "7" from "07"), numeric ids sort before
// non-numeric ones, everything else is plain string order.
bool id_less(const Id& a, const Id& b);

struct IdLess {
  bool operator()(const Id& a, const Id& b) const { return id_less(a, b); }
};

// Sorts ids in place under id_less.
void sort_ids(std::vector<Id>& ids);

// Joins ids (or any strings) with a separator; used by reports and errors.
std::string join(const std::vector<std::string>& parts,
                 const std::string& sep);

}  // namespace macells

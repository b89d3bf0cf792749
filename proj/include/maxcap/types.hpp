#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxcap {

using ZoneId = int;
using LocationId = int;

/// Input that cannot be read (bad file layout, bad token, bad schema).
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Data that reads fine but violates a model invariant.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Caller broke an operation precondition.
class ContractError : public std::logic_error {
public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// A set of opened candidate locations of fixed cardinality r.
/// `selected` is kept sorted ascending; |selected| == r always.
struct Solution {
  std::vector<LocationId> selected;
  int r = 0;

  bool contains(LocationId id) const {
    return std::binary_search(selected.begin(), selected.end(), id);
  }
  bool operator==(const Solution& other) const {
    return r == other.r && selected == other.selected;
  }
};

/// Builds a Solution from an arbitrary id list (sorts, rejects duplicates).
inline Solution make_solution(std::vector<LocationId> ids) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw ContractError("solution contains a duplicate location id");
  Solution s;
  s.r = static_cast<int>(ids.size());
  s.selected = std::move(ids);
  return s;
}

}  // namespace maxcap

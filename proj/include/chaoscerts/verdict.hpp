#pragma once

#include <string>

namespace chaoscerts {

/// One checked inequality or identity, with the tolerance it was judged against.
struct Verdict {
  std::string name;
  bool holds = false;
  std::string lhs;
  std::string rhs;
  std::string tolerance;
  std::string note;
};

}  // namespace chaoscerts

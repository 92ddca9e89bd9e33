#pragma once

#include <limits>
#include <map>
#include <string>

namespace earlystop {

// A closed-form bound value together with the status of the hypothesis that
// makes it meaningful and the parameters that produced it. When the validity
// condition fails the value is NaN and valid is false.
struct BoundReport {
  std::string name;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
  std::string condition;
  std::map<std::string, double> params;
};

}  // namespace earlystop

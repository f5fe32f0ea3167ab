#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace vifreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A numeric regression problem: n rows, p candidate covariate columns (no
// intercept column; the selectors manage the intercept themselves).
struct Dataset {
  Matrix X;
  Vector y;
  std::vector<std::string> names;  // one per column of X
  std::string response_name;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

}  // namespace vifreg

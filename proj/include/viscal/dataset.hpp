#pragma once

#include <Eigen/Dense>
#include <vector>

#include "viscal/scale.hpp"

namespace viscal {

// Design matrix plus observed class labels, shared by every classifier.
struct OrdinalData {
  Eigen::MatrixXd x;   // one row per case
  std::vector<int> y;  // observed class per row, 1..n_classes
  int n_classes = kNumClasses;
};

// Throws ValidationError on empty data, row/label count mismatch, or labels
// outside 1..n_classes.
void validate_dataset(const OrdinalData& data);

}  // namespace viscal

#pragma once

#include <vector>

#include "fusetrack/types.hpp"

namespace fusetrack {

// Maximum-total-similarity one-to-one assignment between rows and columns.
// Entries are similarities >= 0; matching a pair with similarity 0 is
// allowed but never increases the total, and unmatched rows/columns are
// permitted. result[row] is the assigned column or -1. Exact ties in total
// similarity are resolved toward lower (row, column) index pairs.
std::vector<int> solve_assignment(const Eigen::MatrixXd& similarity);

}  // namespace fusetrack

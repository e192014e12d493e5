#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dpmnorm/experiments.hpp"

namespace dpmnorm::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kPreconditionError = 3, kNumericError = 4 };

// Unreadable or malformed user input.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "lo..hi[..step]" with lo, hi written as 2^k or as plain positive values,
// step in log2 units (default 1). A single value gives a one-point grid.
AlphaGrid parse_alpha_grid(std::string_view text);

// "lo..hi..step" on the linear scale.
Eigen::VectorXd parse_linear_grid(std::string_view text);

std::vector<int> parse_int_list(std::string_view text);

// Comma separated, '#' comments and blank lines skipped, one optional
// header row detected by a non-numeric first row.
DataMatrix parse_data_csv(std::istream& in);
DataMatrix read_data_csv(const std::string& path);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace dpmnorm::cli

#pragma once

#include <stdexcept>
#include <string>

namespace cadam {

// Input-contract violations.
struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct nonfinite_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct index_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct undefined_auc_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Reading past the end of a finite stream.
struct exhausted_error : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Bad experiment configuration (unknown preset, malformed file, ...).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cadam

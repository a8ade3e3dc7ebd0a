#pragma once

#include <stdexcept>
#include <string>

namespace gmmssl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// malformed input files, bad labels, dimension mismatches in user data
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace gmmssl

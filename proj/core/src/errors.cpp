#include "sortform/errors.hpp"

namespace sortform {

ParseError::ParseError(std::size_t line, const std::string &what)
    : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

}  // namespace sortform

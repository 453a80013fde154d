#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hasprof {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

#define HASPROF_DEFINE_ERROR(Name) \
  class Name : public Error {      \
   public:                         \
    using Error::Error;            \
  }

HASPROF_DEFINE_ERROR(InvalidPacket);
HASPROF_DEFINE_ERROR(AmbiguousDirection);
HASPROF_DEFINE_ERROR(OutOfOrderPacket);
HASPROF_DEFINE_ERROR(KeyMismatch);
HASPROF_DEFINE_ERROR(MissingClientIp);
HASPROF_DEFINE_ERROR(UnsupportedFormat);
HASPROF_DEFINE_ERROR(OverlapError);
HASPROF_DEFINE_ERROR(InvalidConfig);
HASPROF_DEFINE_ERROR(EmptyDataset);
HASPROF_DEFINE_ERROR(EmptyNode);
HASPROF_DEFINE_ERROR(ArityMismatch);
HASPROF_DEFINE_ERROR(FormatError);
HASPROF_DEFINE_ERROR(VersionError);
HASPROF_DEFINE_ERROR(BadK);
HASPROF_DEFINE_ERROR(InvalidScript);
HASPROF_DEFINE_ERROR(IoError);

#undef HASPROF_DEFINE_ERROR

}  // namespace hasprof

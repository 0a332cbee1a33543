#pragma once

#include <stdexcept>
#include <string>

namespace qls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QLS_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what) : Error(what) {}     \
  }

// linalg
QLS_DEFINE_ERROR(SingularMatrix);
QLS_DEFINE_ERROR(RankDeficient);
QLS_DEFINE_ERROR(DimensionMismatch);

// dataio
QLS_DEFINE_ERROR(IoError);
QLS_DEFINE_ERROR(ParseError);
QLS_DEFINE_ERROR(BadMagic);
QLS_DEFINE_ERROR(LengthMismatch);
QLS_DEFINE_ERROR(BadBatchSize);
QLS_DEFINE_ERROR(WrongMode);

// netcore / lineprobe
QLS_DEFINE_ERROR(NonFinite);
QLS_DEFINE_ERROR(InvalidSpec);

// quadapprox / linesearch / trainer
QLS_DEFINE_ERROR(WrongKind);
QLS_DEFINE_ERROR(ZeroDirection);
QLS_DEFINE_ERROR(BadInterval);
QLS_DEFINE_ERROR(EmptyInput);

// expcli
QLS_DEFINE_ERROR(ConfigError);

#undef QLS_DEFINE_ERROR

}  // namespace qls

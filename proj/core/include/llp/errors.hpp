#pragma once

#include <stdexcept>
#include <string>

namespace llp {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested bag proportions cannot be realized; carries the first
// violating (bag, class) pair when one exists.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& msg, long bag, long cls)
      : Error(msg), bag_(bag), cls_(cls) {}
  long bag() const { return bag_; }
  long cls() const { return cls_; }

 private:
  long bag_;
  long cls_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace llp

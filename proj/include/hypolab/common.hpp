#ifndef HYPOLAB_COMMON_HPP
#define HYPOLAB_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace hypolab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/** \brief Error carrying a stable machine-readable code such as "unknown-name". */
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/** \brief Uniform 1-D axis lo, lo+h, ..., hi (n nodes). */
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 2;
  double h() const { return (hi - lo) / (n - 1); }
  double at(int i) const { return lo + i * h(); }
};

/** Parse "lo:hi:n" into an Axis. */
Axis parse_axis(const std::string& spec);

}  // namespace hypolab

#endif

#ifndef BALPA_CORE_HPP
#define BALPA_CORE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace balpa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline void require(bool cond, const std::string &msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace balpa

#endif  // BALPA_CORE_HPP

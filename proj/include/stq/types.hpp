#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stq {

using cd = std::complex<double>;
using Index = Eigen::Index;

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
using MatR = Mat<double>;
using VecR = Vec<double>;

// Local operators on one spin-1/2. Basis ordering: index 0 = up (sigma^z = +1), 1 = down.
template <class T>
using Op2 = Eigen::Matrix<T, 2, 2>;

template <class T>
inline Op2<T> pauliX() {
  Op2<T> m;
  m << T(0), T(1), T(1), T(0);
  return m;
}
template <class T>
inline Op2<T> pauliZ() {
  Op2<T> m;
  m << T(1), T(0), T(0), T(-1);
  return m;
}
template <class T>
inline Op2<T> identity2() {
  return Op2<T>::Identity();
}
inline Op2<cd> pauliY() {
  Op2<cd> m;
  m << cd(0), cd(0, -1), cd(0, 1), cd(0);
  return m;
}

template <class T>
inline double realPart(T v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return v.real();
  }
}

template <class T>
inline T conjugate(T v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return std::conj(v);
  }
}

// Thrown for malformed inputs and violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when an iterative solver cannot meet its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stq

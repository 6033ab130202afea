#ifndef BALPA_IO_HPP
#define BALPA_IO_HPP

#include <fstream>
#include <sstream>
#include <string>

#include "balpa/distributed.hpp"

namespace balpa {

/// Dense matrix text format: one header line "rows cols", then
/// whitespace-delimited values row by row.
inline void save_matrix(const Matrix &A, std::ostream &os) {
  os << A.rows() << ' ' << A.cols() << '\n';
  os.precision(17);
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      os << A(i, j) << (j + 1 < A.cols() ? ' ' : '\n');
    }
  }
}

inline void save_matrix(const Matrix &A, const std::string &path) {
  std::ofstream os(path);
  require(os.good(), "save_matrix: cannot open " + path);
  save_matrix(A, os);
}

inline Matrix load_matrix(std::istream &is) {
  Index rows = 0, cols = 0;
  is >> rows >> cols;
  require(is.good() && rows >= 0 && cols >= 0, "load_matrix: bad header");
  Matrix A(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!(is >> A(i, j))) throw std::runtime_error("load_matrix: truncated data");
    }
  }
  return A;
}

inline Matrix load_matrix(const std::string &path) {
  std::ifstream is(path);
  require(is.good(), "load_matrix: cannot open " + path);
  return load_matrix(is);
}

/// Vectors: one value per line.
inline void save_vector(const Vector &v, const std::string &path) {
  std::ofstream os(path);
  require(os.good(), "save_vector: cannot open " + path);
  os.precision(17);
  for (Index i = 0; i < v.size(); ++i) os << v(i) << '\n';
}

inline Vector load_vector(const std::string &path) {
  std::ifstream is(path);
  require(is.good(), "load_vector: cannot open " + path);
  std::vector<double> vals;
  double x;
  while (is >> x) vals.push_back(x);
  Vector v(static_cast<Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v(static_cast<Index>(i)) = vals[i];
  return v;
}

/// Topology file: first line "N", then one edge "i j" per line, 0-indexed.
inline std::pair<int, EdgeSet> load_topology(const std::string &path) {
  std::ifstream is(path);
  require(is.good(), "load_topology: cannot open " + path);
  int N = 0;
  is >> N;
  require(N > 0, "load_topology: bad agent count");
  EdgeSet edges;
  int a, b;
  while (is >> a >> b) {
    require(0 <= a && a < N && 0 <= b && b < N && a != b, "load_topology: bad edge");
    edges.insert({std::min(a, b), std::max(a, b)});
  }
  return {N, edges};
}

}  // namespace balpa

#endif  // BALPA_IO_HPP

#include "agglo/graph.hpp"

#include "agglo/format.hpp"

#include <fstream>

namespace agglo {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

}  // namespace

void write_dot(const MatrixXd& S, const std::filesystem::path& path) {
  const MatrixXd A = symmetrize(S);
  auto out = open_for_write(path);
  out << "graph connection {\n";
  for (Index i = 0; i < A.rows(); ++i) out << "  " << i << ";\n";
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = i + 1; j < A.cols(); ++j) {
      if (A(i, j) > kEdgeThreshold) {
        out << "  " << i << " -- " << j << " [weight=" << format_real(A(i, j)) << "];\n";
      }
    }
  }
  out << "}\n";
  finish(out, path);
}

void write_edge_csv(const MatrixXd& S, const std::filesystem::path& path) {
  const MatrixXd A = symmetrize(S);
  auto out = open_for_write(path);
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = i + 1; j < A.cols(); ++j) {
      if (A(i, j) > kEdgeThreshold) out << i << ',' << j << ',' << format_real(A(i, j)) << '\n';
    }
  }
  finish(out, path);
}

}  // namespace agglo

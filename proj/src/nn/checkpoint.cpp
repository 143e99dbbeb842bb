#include "vdb/nn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace vdb {

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_checkpoint(std::ostream& os, const ConstParamList& params) {
  os << "vdb-checkpoint " << kCheckpointVersion << "\n";
  os << "tensors " << params.size() << "\n";
  for (const Tensor* p : params) {
    os << "tensor " << p->name << " " << p->rows() << " " << p->cols() << "\n";
    for (Eigen::Index i = 0; i < p->rows(); ++i) {
      for (Eigen::Index j = 0; j < p->cols(); ++j) os << (j ? " " : "") << format_value(p->value(i, j));
      os << "\n";
    }
  }
}

void save_checkpoint(const std::filesystem::path& path, const ConstParamList& params) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  save_checkpoint(os, params);
}

void load_checkpoint(std::istream& is, const ParamList& params) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "vdb-checkpoint")
    throw std::runtime_error("not a vdb checkpoint");
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  std::string word;
  std::size_t count = 0;
  if (!(is >> word >> count) || word != "tensors") throw std::runtime_error("malformed checkpoint header");
  if (count != params.size())
    throw DimensionError("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                         std::to_string(params.size()));
  for (Tensor* p : params) {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> word >> name >> rows >> cols) || word != "tensor") throw std::runtime_error("malformed tensor record");
    if (name != p->name) throw DimensionError("checkpoint tensor '" + name + "' where '" + p->name + "' expected");
    if (rows != p->rows() || cols != p->cols()) throw DimensionError("checkpoint shape mismatch for " + name);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (!(is >> p->value(i, j))) throw std::runtime_error("truncated values for " + name);
    p->zero_grad();
  }
}

void load_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
  load_checkpoint(is, params);
}

}  // namespace vdb

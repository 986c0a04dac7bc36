#pragma once
//
// Binary containers for H-matrices (HMX1) and network checkpoints (HMXN),
// plus the plain-text matrix exchange format. All binary encodings are
// explicit little-endian and round-trip bit-exactly.
//

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmx/hmatrix.hpp"
#include "hmx/nn.hpp"

namespace hmx {

namespace detail {

inline void put_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline void put_f64(std::ostream& os, double d) {
  put_u64(os, std::bit_cast<std::uint64_t>(d));
}

inline std::uint8_t get_u8(std::istream& is) {
  const int c = is.get();
  if (c == EOF) throw std::runtime_error("serialize: unexpected end of stream");
  return static_cast<std::uint8_t>(c);
}

inline std::uint64_t get_u64(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  if (is.gcount() != 8)
    throw std::runtime_error("serialize: unexpected end of stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i]))
         << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

inline void put_f64_array(std::ostream& os, const std::vector<double>& a) {
  put_u64(os, a.size());
  for (double d : a) put_f64(os, d);
}

inline std::vector<double> get_f64_array(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  std::vector<double> a(n);
  for (auto& d : a) d = get_f64(is);
  return a;
}

inline void write_node(std::ostream& os, const BlockNode& node) {
  std::uint8_t tag = 0;
  if (node.kind == BlockNode::Kind::low_rank) tag = 1;
  if (node.kind == BlockNode::Kind::dense_leaf) tag = 2;
  put_u8(os, tag);
  put_u64(os, node.row_span.begin);
  put_u64(os, node.row_span.end);
  put_u64(os, node.col_span.begin);
  put_u64(os, node.col_span.end);
  switch (node.kind) {
    case BlockNode::Kind::branch:
      for (const auto& c : node.children) write_node(os, *c);
      break;
    case BlockNode::Kind::low_rank:
      put_u64(os, node.factor.rank());
      put_f64(os, node.factor.local_error);
      put_f64_array(os, node.factor.u.entries);
      put_f64_array(os, node.factor.v.entries);
      break;
    case BlockNode::Kind::dense_leaf:
      put_f64_array(os, node.block.entries);
      break;
  }
}

inline std::shared_ptr<const BlockNode> read_node(std::istream& is) {
  auto node = std::make_shared<BlockNode>();
  const std::uint8_t tag = get_u8(is);
  node->row_span.begin = get_u64(is);
  node->row_span.end = get_u64(is);
  node->col_span.begin = get_u64(is);
  node->col_span.end = get_u64(is);
  const std::size_t m = node->row_span.size();
  const std::size_t n = node->col_span.size();
  switch (tag) {
    case 0:
      node->kind = BlockNode::Kind::branch;
      for (auto& c : node->children) c = read_node(is);
      break;
    case 1: {
      node->kind = BlockNode::Kind::low_rank;
      const std::size_t k = get_u64(is);
      node->factor.local_error = get_f64(is);
      std::vector<double> ue = get_f64_array(is);
      std::vector<double> ve = get_f64_array(is);
      if (ue.size() != m * k || ve.size() != n * k)
        throw std::runtime_error("HMX1: factor size mismatch");
      node->factor.u = DenseMatrix(m, k, std::move(ue));
      node->factor.v = DenseMatrix(n, k, std::move(ve));
      break;
    }
    case 2: {
      node->kind = BlockNode::Kind::dense_leaf;
      std::vector<double> be = get_f64_array(is);
      if (be.size() != m * n)
        throw std::runtime_error("HMX1: dense block size mismatch");
      node->block = DenseMatrix(m, n, std::move(be));
      break;
    }
    default:
      throw std::runtime_error("HMX1: unknown node tag");
  }
  return node;
}

} // namespace detail

inline void write_hmx1(std::ostream& os, const HMatrix& h) {
  os.write("HMX1", 4);
  detail::put_u64(os, h.rows);
  detail::put_u64(os, h.cols);
  detail::put_f64(os, h.tol);
  detail::write_node(os, *h.root);
}

inline HMatrix read_hmx1(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, "HMX1", 4) != 0)
    throw std::runtime_error("HMX1: bad magic");
  HMatrix h;
  h.rows = detail::get_u64(is);
  h.cols = detail::get_u64(is);
  h.tol = detail::get_f64(is);
  h.root = detail::read_node(is);
  detail::recount(h);
  return h;
}

inline std::string hmx1_bytes(const HMatrix& h) {
  std::ostringstream os(std::ios::binary);
  write_hmx1(os, h);
  return os.str();
}

inline void write_hmxn(std::ostream& os, const Network& net) {
  os.write("HMXN", 4);
  detail::put_u64(os, net.layers.size());
  for (const Layer& l : net.layers) {
    detail::put_u8(os, static_cast<std::uint8_t>(l.activation));
    detail::put_f64_array(os, l.bias);
    if (l.is_dense()) {
      detail::put_u8(os, 0);
      detail::put_u64(os, l.dense_weight().rows);
      detail::put_u64(os, l.dense_weight().cols);
      detail::put_f64_array(os, l.dense_weight().entries);
    } else {
      detail::put_u8(os, 1);
      const std::string blob = hmx1_bytes(l.hmatrix_weight());
      detail::put_u64(os, blob.size());
      os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    }
  }
}

inline Network read_hmxn(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, "HMXN", 4) != 0)
    throw std::runtime_error("HMXN: bad magic");
  Network net;
  const std::uint64_t layers = detail::get_u64(is);
  for (std::uint64_t i = 0; i < layers; ++i) {
    Layer l;
    const std::uint8_t act = detail::get_u8(is);
    if (act > 1) throw std::runtime_error("HMXN: unknown activation tag");
    l.activation = static_cast<Activation>(act);
    l.bias = detail::get_f64_array(is);
    const std::uint8_t kind = detail::get_u8(is);
    if (kind == 0) {
      const std::size_t rows = detail::get_u64(is);
      const std::size_t cols = detail::get_u64(is);
      std::vector<double> e = detail::get_f64_array(is);
      if (e.size() != rows * cols)
        throw std::runtime_error("HMXN: weight size mismatch");
      l.weight = DenseMatrix(rows, cols, std::move(e));
    } else if (kind == 1) {
      const std::uint64_t len = detail::get_u64(is);
      std::string blob(len, '\0');
      is.read(blob.data(), static_cast<std::streamsize>(len));
      if (static_cast<std::uint64_t>(is.gcount()) != len)
        throw std::runtime_error("HMXN: truncated blob");
      std::istringstream bs(blob, std::ios::binary);
      l.weight = read_hmx1(bs);
    } else {
      throw std::runtime_error("HMXN: unknown weight tag");
    }
    net.layers.push_back(std::move(l));
  }
  return net;
}

inline std::string hmxn_bytes(const Network& net) {
  std::ostringstream os(std::ios::binary);
  write_hmxn(os, net);
  return os.str();
}

// ---- text matrix format: "rows cols" then rows of 17-digit decimals ----

inline void write_matrix(std::ostream& os, const DenseMatrix& a) {
  os << a.rows << ' ' << a.cols << '\n';
  char buf[64];
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", a.at(i, j));
      if (j) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

inline DenseMatrix read_matrix(std::istream& is) {
  std::size_t rows = 0, cols = 0;
  if (!(is >> rows >> cols))
    throw std::runtime_error("read_matrix: bad header");
  DenseMatrix a(rows, cols);
  for (double& x : a.entries)
    if (!(is >> x)) throw std::runtime_error("read_matrix: truncated data");
  return a;
}

inline void write_matrix_file(const std::string& path, const DenseMatrix& a) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_matrix(os, a);
}

inline DenseMatrix read_matrix_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_matrix(is);
}

inline void write_hmx1_file(const std::string& path, const HMatrix& h) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_hmx1(os, h);
}

inline HMatrix read_hmx1_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_hmx1(is);
}

inline void write_hmxn_file(const std::string& path, const Network& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_hmxn(os, net);
}

inline Network read_hmxn_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_hmxn(is);
}

} // namespace hmx

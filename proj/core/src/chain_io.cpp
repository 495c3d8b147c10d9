#include "crvar/chain_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "crvar/errors.hpp"

namespace crvar {

namespace {

constexpr char kMagic[8] = {'C', 'R', 'V', 'A', 'R', 'C', 'H', '1'};

void put_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_matrix(std::ofstream& os, const MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(os, m(i, j));
  }
}

std::uint32_t get_u32(std::ifstream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error("chain file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::ifstream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("chain file truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

MatrixXd get_matrix(std::ifstream& is, int d) {
  MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = get_f64(is);
  }
  return m;
}

}  // namespace

StoredDraws stored_draws(const ChainOutput& chain) {
  StoredDraws s;
  s.d = chain.dim();
  for (const auto& a : chain.A_draws) s.p = std::max(s.p, static_cast<int>(a.size()));
  if (chain.A_draws.empty()) s.p = chain.final_order;
  for (int r : chain.final_ranks) s.r = std::max(s.r, r);
  s.lambda = chain.lambda_draws;
  s.omega = chain.omega_draws;
  s.sigma = chain.sigma_draws;
  s.A = chain.A_draws;
  return s;
}

void write_chain_binary(const std::string& path, const ChainOutput& chain) {
  const StoredDraws s = stored_draws(chain);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(kMagic, 8);
  put_u32(os, s.d);
  put_u32(os, s.p);
  put_u32(os, s.r);
  put_u32(os, static_cast<std::uint32_t>(s.omega.size()));
  const bool has_a = !s.A.empty();
  put_u32(os, has_a ? 1 : 0);
  for (std::size_t n = 0; n < s.omega.size(); ++n) {
    put_f64(os, s.lambda[n]);
    put_matrix(os, s.omega[n]);
    put_matrix(os, s.sigma[n]);
    if (has_a) {
      put_u32(os, static_cast<std::uint32_t>(s.A[n].size()));
      for (const auto& a : s.A[n]) put_matrix(os, a);
    }
  }
  if (!os) throw Error("write failed for " + path);
}

StoredDraws read_chain_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error(path + " is not a chain file");
  }
  StoredDraws s;
  s.d = static_cast<int>(get_u32(is));
  s.p = static_cast<int>(get_u32(is));
  s.r = static_cast<int>(get_u32(is));
  const std::uint32_t n = get_u32(is);
  const bool has_a = get_u32(is) != 0;
  for (std::uint32_t k = 0; k < n; ++k) {
    s.lambda.push_back(get_f64(is));
    s.omega.push_back(get_matrix(is, s.d));
    s.sigma.push_back(get_matrix(is, s.d));
    if (has_a) {
      const std::uint32_t order = get_u32(is);
      std::vector<MatrixXd> a;
      for (std::uint32_t j = 0; j < order; ++j) a.push_back(get_matrix(is, s.d));
      s.A.push_back(std::move(a));
    }
  }
  return s;
}

void write_chain_csv(const std::string& path, const ChainOutput& chain) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw Error("cannot open " + path + " for writing");
  const int d = chain.dim();
  std::fprintf(fp, "draw,lambda");
  for (const char* name : {"omega", "sigma"}) {
    for (int i = 1; i <= d; ++i) {
      for (int j = i; j <= d; ++j) std::fprintf(fp, ",%s_%d_%d", name, i, j);
    }
  }
  std::fprintf(fp, "\n");
  for (std::size_t n = 0; n < chain.omega_draws.size(); ++n) {
    std::fprintf(fp, "%zu,%.17g", n + 1, chain.lambda_draws[n]);
    for (const MatrixXd* m : {&chain.omega_draws[n], &chain.sigma_draws[n]}) {
      for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) std::fprintf(fp, ",%.17g", (*m)(i, j));
      }
    }
    std::fprintf(fp, "\n");
  }
  std::fclose(fp);
}

}  // namespace crvar

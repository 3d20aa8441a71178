#include <Eigen/Dense>
#include <cmath>

#include "repute/cae/autoencoder.hpp"
#include "repute/common/format.hpp"
#include "repute/kernels/parallel_map.hpp"

namespace repute::cae {

LatentExport export_latents(const AutoencoderModel& model, const std::vector<features::WindowTensor>& windows,
                            const EmbeddingLookup& embeddings) {
  const std::size_t dim = model.config().bottleneck;
  const auto latents = kernels::omp::map_indexed(windows.size(), [&](std::size_t i) {
    const auto& w = windows[i];
    return model.multimodal() ? model.latent(w.window, embedding_for(embeddings, w.contract_address))
                              : model.latent(w.window);
  });

  LatentExport out;
  out.window_latents = Matrix(0, dim);
  std::map<std::string, std::size_t, std::less<>> slot;
  std::vector<std::vector<double>> sums;
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& a = windows[i].contract_address;
    out.window_addresses.push_back(a);
    out.window_latents.append_row(latents[i]);
    auto [it, inserted] = slot.try_emplace(a, sums.size());
    if (inserted) {
      out.contract_addresses.push_back(a);
      sums.emplace_back(dim, 0.0);
      counts.push_back(0);
    }
    for (std::size_t d = 0; d < dim; ++d) sums[it->second][d] += latents[i][d];
    ++counts[it->second];
  }
  out.contract_latents = Matrix(0, dim);
  for (std::size_t c = 0; c < sums.size(); ++c) {
    for (auto& v : sums[c]) v /= static_cast<double>(counts[c]);
    out.contract_latents.append_row(sums[c]);
  }
  return out;
}

Projection2D pca_2d(const Matrix& x) {
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto d = static_cast<Eigen::Index>(x.cols());
  Projection2D out{Matrix(x.rows(), 2), {0.0, 0.0}, Matrix(2, x.cols())};
  if (n == 0 || d == 0) return out;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = x(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  const Eigen::RowVectorXd mean = m.colwise().mean();
  m.rowwise() -= mean;
  const Eigen::MatrixXd cov = (m.transpose() * m) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; take the two largest.
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, d); ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < d; ++j) {
      if (std::abs(v(j)) > std::abs(v(arg))) arg = j;
    }
    if (v(arg) < 0) v = -v;
    const Eigen::VectorXd proj = m * v;
    for (Eigen::Index i = 0; i < n; ++i) out.points(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) = proj(i);
    for (Eigen::Index j = 0; j < d; ++j) out.components(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) = v(j);
    out.variances[static_cast<std::size_t>(k)] = std::max(0.0, solver.eigenvalues()(d - 1 - k));
  }
  return out;
}

std::string matrix_csv(const std::vector<std::string>& addresses, const Matrix& m, std::string_view prefix) {
  std::string out = "address";
  for (std::size_t c = 0; c < m.cols(); ++c) out += "," + std::string(prefix) + std::to_string(c);
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += addresses.at(r);
    for (double v : m.row(r)) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

}  // namespace repute::cae

#include "spikeflow/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "spikeflow/errors.hpp"

namespace spikeflow {

double orth_defect(const Matrix& X) {
    const double N = static_cast<double>(X.rows());
    Matrix G = X.transpose() * X / N;
    G.diagonal().array() -= 1.0;
    return G.cwiseAbs().maxCoeff();
}

bool on_manifold(const Matrix& X, double tol) { return orth_defect(X) <= tol; }

double tangency_defect(const Matrix& X, const Matrix& U) {
    const double N = static_cast<double>(X.rows());
    Matrix S = X.transpose() * U;
    S += S.transpose().eval();
    return S.cwiseAbs().maxCoeff() / N;
}

Matrix symmetric_inverse_sqrt(const Matrix& S, double tol_pd) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed in inverse sqrt");
    const Vector& ev = es.eigenvalues();
    if (ev.minCoeff() <= tol_pd)
        throw NumericalError("matrix not positive definite in inverse sqrt (min eig " +
                             std::to_string(ev.minCoeff()) + ")");
    Vector inv_sqrt = ev.array().rsqrt();
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

StiefelPoint sample_uniform(Eigen::Index N, Eigen::Index r, Rng& rng, int max_retries) {
    if (r < 1 || r > N) throw ConfigError("need 1 <= r <= N to sample a frame");
    for (int attempt = 0;; ++attempt) {
        Matrix Z(N, r);
        fill_gaussian(Z.data(), static_cast<std::size_t>(N) * r, rng);
        Matrix G = Z.transpose() * Z / static_cast<double>(N);
        try {
            return {Z * symmetric_inverse_sqrt(G)};
        } catch (const NumericalError&) {
            // Gaussian matrix was (numerically) rank deficient; essentially
            // impossible for r << N but retried for tiny N
            if (attempt + 1 >= max_retries) throw;
        }
    }
}

TangentVector project_tangent(const StiefelPoint& X, const Matrix& G) {
    const double N = static_cast<double>(X.n());
    Matrix S = X.X.transpose() * G;
    S += S.transpose().eval();
    return {G - X.X * (S / (2.0 * N))};
}

StiefelPoint polar_retract(const StiefelPoint& X, const Matrix& U) {
    const double N = static_cast<double>(X.n());
    Matrix Y = X.X + U;
    Matrix A = Y.transpose() * Y / N;
    return {Y * symmetric_inverse_sqrt(A)};
}

StiefelPoint stiefel_with_correlations(const Matrix& V, const Matrix& m0, Rng& rng) {
    const Eigen::Index N = V.rows();
    const Eigen::Index r = m0.cols();
    if (m0.rows() != V.cols())
        throw ConfigError("correlation rows must match the number of spikes");
    if (orth_defect(V) > kOrthTol)
        throw ConfigError("spike matrix is not a frame");

    // residual Gram; must be PSD for m0 to be realizable
    Matrix S = Matrix::Identity(r, r) - m0.transpose() * m0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed for residual Gram");
    Vector ev = es.eigenvalues();
    if (ev.minCoeff() < -1e-10)
        throw ConfigError("correlation target exceeds unit operator norm");
    Vector sq = ev.array().max(0.0).sqrt();
    Matrix S_half = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();

    // orthonormal complement basis: Gaussian block projected off span(V)
    Matrix Z(N, r);
    fill_gaussian(Z.data(), static_cast<std::size_t>(N) * r, rng);
    Z -= V * (V.transpose() * Z) / static_cast<double>(N);
    Eigen::HouseholderQR<Matrix> qr(Z);
    Matrix Q = qr.householderQ() * Matrix::Identity(N, r);

    return {V * m0 + std::sqrt(static_cast<double>(N)) * Q * S_half};
}

}  // namespace spikeflow

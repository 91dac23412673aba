#pragma once

#include <armadillo>
#include <stdexcept>

namespace tamlab {

struct DominantEig {
    double value = 0.0;
    arma::cx_vec vec; // unit norm, deterministic sign (see sign_fixed)
};

// Rotates the global phase so the first component with |v_i| > 1e-12 is real
// and positive. Makes eigenvectors reproducible across runs and platforms.
inline arma::cx_vec sign_fixed(arma::cx_vec v) {
    for (arma::uword i = 0; i < v.n_elem; ++i) {
        const double a = std::abs(v[i]);
        if (a > 1e-12) {
            v *= std::conj(v[i]) / a;
            break;
        }
    }
    return v;
}

// Dominant eigenpair of a Hermitian matrix. LAPACK returns eigenvalues in
// ascending order; exact ties for the maximum are broken by the lowest index
// in that ordering, which makes the choice deterministic (identity input
// yields e_1).
inline DominantEig dominant_eig(const arma::cx_mat &a) {
    if (a.n_rows != a.n_cols)
        throw std::invalid_argument("dominant_eig: matrix must be square");
    if (a.n_rows == 0)
        throw std::invalid_argument("dominant_eig: empty matrix");
    arma::vec eigval;
    arma::cx_mat eigvec;
    if (!arma::eig_sym(eigval, eigvec, a))
        throw std::runtime_error("dominant_eig: eigen decomposition failed");
    arma::uword best = 0;
    for (arma::uword i = 1; i < eigval.n_elem; ++i)
        if (eigval[i] > eigval[best])
            best = i;
    DominantEig out;
    out.value = eigval[best];
    out.vec = sign_fixed(eigvec.col(best));
    return out;
}

// Relative Hermitian-ness check used by preconditions on covariance inputs.
inline bool is_hermitian(const arma::cx_mat &a, double tol = 1e-9) {
    if (a.n_rows != a.n_cols)
        return false;
    const double scale = std::max(1.0, arma::norm(a, "fro"));
    return arma::norm(a - a.t(), "fro") <= tol * scale;
}

} // namespace tamlab

#include "amp/ensembles.hpp"

#include <algorithm>
#include <cmath>

namespace amp {

Mat sample_goe(Eigen::Index n, RngStream& rng) {
    require(n >= 1, "sample_goe: n must be positive");
    Mat W(n, n);
    const double sd = 1.0 / std::sqrt(double(n));
    const double sd_diag = std::sqrt(2.0 / double(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        W(j, j) = sd_diag * rng.normal();
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double x = sd * rng.normal();
            W(i, j) = x;
            W(j, i) = x;
        }
    }
    return W;
}

Mat sample_design(Eigen::Index n, Eigen::Index p, RngStream& rng) {
    require(n >= 1 && p >= 1, "sample_design: dimensions must be positive");
    Mat X(n, p);
    const double sd = 1.0 / std::sqrt(double(n));
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) X(i, j) = sd * rng.normal();
    return X;
}

void orient(Vec& v, const Vec* reference) {
    if (reference) {
        if (v.dot(*reference) < 0) v = -v;
        return;
    }
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    if (v.size() && v[best] < 0) v = -v;
}

namespace {

double row_abs_bound(const Mat& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); }

void finish(EigenPair& ep, const Mat& A, const Vec* reference) {
    const double n = double(A.rows());
    ep.vector *= std::sqrt(n) / ep.vector.norm();
    orient(ep.vector, reference);
    ep.orientation = reference ? Orientation::AlignedToReference : Orientation::DeterministicSign;
    ep.residual = norm_n(A * ep.vector - ep.value * ep.vector);
}

// Power iteration on A + sI; stops on the angle between successive iterates.
EigenPair power_method(const Mat& A, const EigenOptions& opts, const Vec* reference) {
    const Eigen::Index n = A.rows();
    const double s = opts.shift.value_or(row_abs_bound(A));
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : int(std::max<Eigen::Index>(10 * n, 1000));
    auto run = [&](const Vec* u1, EigenPair& out) {
        Vec u = Vec::Ones(n);
        // Deterministic start with a small irregular component to avoid orthogonality accidents.
        for (Eigen::Index i = 0; i < n; ++i) u[i] += 1e-3 * std::sin(1.0 + double(i));
        if (u1) u -= (u1->dot(u) / u1->squaredNorm()) * (*u1);
        u.normalize();
        out.converged = false;
        for (int it = 1; it <= max_iter; ++it) {
            Vec w = A * u + s * u;
            if (u1) w -= (u1->dot(w) / u1->squaredNorm()) * (*u1);
            const double nw = w.norm();
            if (nw == 0.0) break;
            w /= nw;
            // sin of the angle; 1 - |cos| would only resolve the angle to sqrt(tol).
            const double angle = (w - w.dot(u) * u).norm();
            u = w;
            out.iterations = it;
            if (angle < opts.tol) {
                out.converged = true;
                break;
            }
        }
        out.vector = u;
        out.value = u.dot(A * u);
    };
    EigenPair ep;
    run(nullptr, ep);
    if (opts.want_gap) {
        EigenPair second;
        Vec u1 = ep.vector;
        run(&u1, second);
        ep.gap = ep.value - second.value;
    }
    finish(ep, A, reference);
    return ep;
}

// Lanczos with full reorthogonalisation; stops when the Ritz residual is below tol * ||A||.
EigenPair lanczos(const Mat& A, const EigenOptions& opts, const Vec* reference) {
    const Eigen::Index n = A.rows();
    const int max_dim = opts.max_iter > 0 ? std::min<int>(opts.max_iter, int(n)) : int(std::min<Eigen::Index>(n, 400));
    Mat V(n, max_dim + 1);
    std::vector<double> alpha, beta;
    Vec u = Vec::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] += 1e-3 * std::sin(1.0 + double(i));
    V.col(0) = u.normalized();
    double anorm = 0.0;
    EigenPair ep;
    Eigen::SelfAdjointEigenSolver<Mat> tri;
    Vec w(n);
    for (int j = 0; j < max_dim; ++j) {
        w.noalias() = A * V.col(j);
        const double a = V.col(j).dot(w);
        w -= a * V.col(j);
        if (j > 0) w -= beta.back() * V.col(j - 1);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for (int pass = 0; pass < 2; ++pass) {
            Vec coef = V.leftCols(j + 1).transpose() * w;
            w.noalias() -= V.leftCols(j + 1) * coef;
        }
        alpha.push_back(a);
        const double bnext = w.norm();
        const int m = j + 1;
        Mat T = Mat::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        tri.compute(T);
        const double theta = tri.eigenvalues()[m - 1];
        anorm = std::max({anorm, std::abs(tri.eigenvalues()[0]), std::abs(theta)});
        const double ritz_res = bnext * std::abs(tri.eigenvectors()(m - 1, m - 1));
        ep.iterations = m;
        const bool last = (m == max_dim) || bnext < 1e-14 * std::max(anorm, 1.0);
        const bool conv = m >= 2 && ritz_res < opts.tol * std::max(anorm, 1e-300);
        if (conv || last) {
            ep.converged = conv || bnext < 1e-14 * std::max(anorm, 1.0);
            ep.vector = V.leftCols(m) * tri.eigenvectors().col(m - 1);
            ep.value = theta;
            if (opts.want_gap && m >= 2) ep.gap = theta - tri.eigenvalues()[m - 2];
            break;
        }
        beta.push_back(bnext);
        V.col(j + 1) = w / bnext;
    }
    finish(ep, A, reference);
    // Rayleigh quotient of the normalised vector is the reported value.
    ep.value = ep.vector.dot(A * ep.vector) / ep.vector.squaredNorm();
    ep.residual = norm_n(A * ep.vector - ep.value * ep.vector);
    return ep;
}

}  // namespace

EigenPair leading_eigenpair(const Mat& A, const EigenOptions& opts, const Vec* reference) {
    require(A.rows() == A.cols() && A.rows() >= 1, "leading_eigenpair: square matrix required");
    require(opts.tol > 0, "leading_eigenpair: tol must be positive");
    double asym = 0.0, amax = 0.0;
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = j; i < A.rows(); ++i) {
            asym = std::max(asym, std::abs(A(i, j) - A(j, i)));
            amax = std::max(amax, std::abs(A(i, j)));
        }
    require(asym <= 1e-12 * std::max(1.0, amax), "leading_eigenpair: matrix must be symmetric");
    if (reference) require(reference->size() == A.rows(), "leading_eigenpair: reference size mismatch");
    if (A.rows() == 1) {
        EigenPair ep;
        ep.value = A(0, 0);
        ep.vector = Vec::Ones(1);
        ep.converged = true;
        orient(ep.vector, reference);
        ep.orientation = reference ? Orientation::AlignedToReference : Orientation::DeterministicSign;
        return ep;
    }
    return opts.method == EigenMethod::Power ? power_method(A, opts, reference) : lanczos(A, opts, reference);
}

}  // namespace amp

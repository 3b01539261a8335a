#include "gcb/models.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "gcb/matexp.hpp"

namespace gcb {

namespace {

// b is linear iff b(x) = b'(1) * x at a few probe points; returns the rate
// alpha with b(x) = -alpha x, or nullopt.
std::optional<double> detect_linear_rate(const ScalarFn& b) {
    if (!b) {
        return std::nullopt;
    }
    const double slope = b(1.0);
    for (double x : {-2.0, -0.5, 0.5, 3.0}) {
        const double expect = slope * x;
        if (std::abs(b(x) - expect) >
            1e-9 * std::max(1.0, std::abs(expect))) {
            return std::nullopt;
        }
    }
    if (std::abs(b(0.0)) > 1e-12) {
        return std::nullopt;
    }
    return -slope;
}

NoiseFn constant_noise(std::vector<double> matrix) {
    return [m = std::move(matrix)](double, StateView, StateOut out) {
        std::copy(m.begin(), m.end(), out.begin());
    };
}

}  // namespace

ProcessSpec make_ou_1d(double kappa, double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("make_ou_1d: sigma must be positive");
    }
    ProcessSpec spec;
    spec.id = "ou1d";
    spec.dim = 1;
    spec.driver_dim = 1;
    spec.drift = [kappa](double, StateView x, StateOut out) {
        out[0] = -kappa * x[0];
    };
    spec.noise = constant_noise({sigma});
    spec.additive_noise = true;
    spec.constants.kappa = kappa;
    spec.constants.a_norm = sigma * sigma / 2.0;
    spec.constants.gamma_rate = [kappa](double t) {
        return std::exp(-kappa * t);
    };
    return spec;
}

ProcessSpec make_ou_matrix(const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& noise_matrix) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("make_ou_matrix: A must be square");
    }
    if (noise_matrix.rows() != a.rows() || noise_matrix.cols() < 1) {
        throw std::invalid_argument(
            "make_ou_matrix: noise matrix must be dim x m with m >= 1");
    }
    const int dim = static_cast<int>(a.rows());
    const int m = static_cast<int>(noise_matrix.cols());

    ProcessSpec spec;
    spec.id = "ou_matrix";
    spec.dim = dim;
    spec.driver_dim = m;

    auto a_shared = std::make_shared<Eigen::MatrixXd>(a);
    spec.drift = [a_shared, dim](double, StateView x, StateOut out) {
        for (int i = 0; i < dim; ++i) {
            double acc = 0.0;
            for (int j = 0; j < dim; ++j) {
                acc += (*a_shared)(i, j) * x[j];
            }
            out[i] = -acc;
        }
    };

    std::vector<double> sig(noise_matrix.size());
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < m; ++j) {
            sig[i * m + j] = noise_matrix(i, j);
        }
    }
    spec.noise = constant_noise(std::move(sig));
    spec.additive_noise = true;

    spec.constants.a_norm =
        operator_norm(Eigen::MatrixXd(noise_matrix * noise_matrix.transpose() /
                                      2.0));
    spec.constants.gamma_rate = [a_shared](double t) {
        return operator_norm(matrix_exponential(-t * (*a_shared)));
    };
    return spec;
}

ProcessSpec make_gl_chain(int n_sites, ScalarFn b1, ScalarFn bN, double sigma1,
                          double sigmaN) {
    if (n_sites < 3) {
        throw std::invalid_argument("make_gl_chain: need at least 3 sites");
    }
    if (sigma1 < 0.0 || sigmaN < 0.0) {
        throw std::invalid_argument(
            "make_gl_chain: reservoir noise must be nonnegative");
    }
    const int n = n_sites;

    ProcessSpec spec;
    spec.id = "gl_chain";
    spec.dim = n;
    spec.driver_dim = n + 1;

    spec.constants.gl_alpha1 = detect_linear_rate(b1);
    spec.constants.gl_alphaN = detect_linear_rate(bN);

    spec.drift = [n, b1 = std::move(b1), bN = std::move(bN)](
                     double, StateView x, StateOut out) {
        out[0] = x[1] - x[0];
        for (int i = 1; i + 1 < n; ++i) {
            out[i] = (x[i + 1] - x[i]) - (x[i] - x[i - 1]);
        }
        out[n - 1] = x[n - 2] - x[n - 1];
        if (b1) {
            out[0] += b1(x[0]);
        }
        if (bN) {
            out[n - 1] += bN(x[n - 1]);
        }
    };

    // Columns 0..n-2: bond j with +sqrt(2) at site j, -sqrt(2) at site j+1.
    // Column n-1: reservoir at site 1; column n: reservoir at site N.
    std::vector<double> sig(static_cast<std::size_t>(n) * (n + 1), 0.0);
    const double root2 = std::sqrt(2.0);
    for (int j = 0; j + 1 < n; ++j) {
        sig[static_cast<std::size_t>(j) * (n + 1) + j] = root2;
        sig[static_cast<std::size_t>(j + 1) * (n + 1) + j] = -root2;
    }
    sig[static_cast<std::size_t>(0) * (n + 1) + (n - 1)] = sigma1;
    sig[static_cast<std::size_t>(n - 1) * (n + 1) + n] = sigmaN;
    spec.noise = constant_noise(std::move(sig));
    spec.additive_noise = true;

    // ||a|| <= 4 for the bulk part; compute the exact value numerically.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        cov(i, i) = (i == 0 || i == n - 1) ? 1.0 : 2.0;
        if (i + 1 < n) {
            cov(i, i + 1) = -1.0;
            cov(i + 1, i) = -1.0;
        }
    }
    cov(0, 0) += sigma1 * sigma1 / 2.0;
    cov(n - 1, n - 1) += sigmaN * sigmaN / 2.0;
    spec.constants.a_norm = operator_norm(cov);

    // For linear reservoirs the drift is -K x with K symmetric positive
    // semidefinite; its smallest eigenvalue is a valid contraction rate.
    if (spec.constants.gl_alpha1 && spec.constants.gl_alphaN) {
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            k(i, i) = (i == 0 || i == n - 1) ? 1.0 : 2.0;
            if (i + 1 < n) {
                k(i, i + 1) = -1.0;
                k(i + 1, i) = -1.0;
            }
        }
        k(0, 0) += *spec.constants.gl_alpha1;
        k(n - 1, n - 1) += *spec.constants.gl_alphaN;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
        const double kappa = eig.eigenvalues().minCoeff();
        spec.constants.kappa = kappa;
        spec.constants.gamma_rate = [kappa](double t) {
            return std::exp(-kappa * t);
        };
    }
    return spec;
}

ProcessSpec make_noisy_lorenz(double sigma, double r, double b,
                              double noise_scale) {
    if (!(sigma > 0.0) || !(r > 0.0) || !(b > 0.0) || !(noise_scale > 0.0)) {
        throw std::invalid_argument(
            "make_noisy_lorenz: all parameters must be positive");
    }
    ProcessSpec spec;
    spec.id = "lorenz";
    spec.dim = 3;
    spec.driver_dim = 3;

    // Vector field of the translated system w = (x, y, z - 2r):
    // evaluating the original field at (x, y, z + 2r).
    spec.drift = [sigma, r, b](double, StateView w, StateOut out) {
        const double x = w[0], y = w[1], z = w[2];
        out[0] = sigma * (y - x);
        out[1] = -r * x - y - x * z;
        out[2] = x * y - b * z - 2.0 * b * r;
    };
    spec.noise = constant_noise({noise_scale, 0, 0,  //
                                 0, noise_scale, 0,  //
                                 0, 0, noise_scale});
    spec.additive_noise = true;

    spec.constants.beta_confine =
        std::min({1.0, 1.0 / sigma, b / sigma});  // see lorenz_beta
    // <w, drift(w)>_weighted <= -sigma (r x^2 + y^2 + b z^2) + 2 b r sigma |z|
    // and |z| <= ||w||_w / sqrt(sigma), so alpha = 2 b r sqrt(sigma) works.
    spec.constants.alpha_confine = 2.0 * b * r * std::sqrt(sigma);
    // In weighted coordinates the noise covariance is
    // noise_scale^2 diag(r, sigma, sigma) <= theta I.
    spec.constants.theta_noise =
        noise_scale * noise_scale * std::max({r, sigma, 1.0});
    return spec;
}

ProcessSpec make_descente(int dim) {
    if (dim < 1) {
        throw std::invalid_argument("make_descente: dim must be >= 1");
    }
    ProcessSpec spec;
    spec.id = "descente";
    spec.dim = dim;
    spec.driver_dim = dim;

    spec.drift = [dim](double, StateView x, StateOut out) {
        double norm_sq = 0.0;
        for (int i = 0; i < dim; ++i) {
            norm_sq += x[i] * x[i];
        }
        const double factor = -(1.0 + norm_sq);
        for (int i = 0; i < dim; ++i) {
            out[i] = factor * x[i];
        }
    };

    std::vector<double> sig(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) {
        sig[static_cast<std::size_t>(i) * dim + i] = 1.0;
    }
    spec.noise = constant_noise(std::move(sig));
    spec.additive_noise = true;

    spec.constants.h_fn = [](double u) { return std::max(1.0, u * u * u); };
    spec.constants.A_const = 1.0;
    spec.constants.c1 = 0.5;  // a = I/2
    spec.constants.c2 = 0.5;
    return spec;
}

ProcessSpec make_nonmarkov_pair(double theta, double kappa, ScalarFn sigma_fn,
                                double m_bound) {
    if (!(theta > 0.0)) {
        throw std::invalid_argument("make_nonmarkov_pair: theta must be positive");
    }
    if (!(m_bound > 0.0)) {
        throw std::invalid_argument("make_nonmarkov_pair: M must be positive");
    }
    if (!sigma_fn) {
        throw std::invalid_argument("make_nonmarkov_pair: sigma_fn required");
    }
    ProcessSpec spec;
    spec.id = "nonmarkov";
    spec.dim = 2;        // state = (Y, X)
    spec.driver_dim = 1; // shared Brownian component

    spec.drift = [theta, kappa](double, StateView s, StateOut out) {
        out[0] = -theta * s[0];
        out[1] = -kappa * s[1];
    };
    spec.noise = [sigma_fn = std::move(sigma_fn)](double, StateView s,
                                                  StateOut out) {
        out[0] = 1.0;
        out[1] = sigma_fn(s[0]);
    };
    spec.additive_noise = false;

    spec.constants.kappa = kappa;
    spec.constants.sigma_bound_M = m_bound;
    return spec;
}

}  // namespace gcb

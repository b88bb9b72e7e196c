// Full-discretization Floquet analysis of the two-direction milling model
//   y' = A0 y + B(t) (y(t) - y(t - T))
// with y = (x, y, x', y') built from the dominant mode of each direction.
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "sld/errors.hpp"
#include "sld/stability.hpp"
#include "sld/units.hpp"

namespace sld::stability {

namespace {

using Mat4 = Eigen::Matrix4d;

struct ExponentialIntegrals {
    Mat4 phi0;  // exp(A0 tau)
    Mat4 phi1;  // int_0^tau exp(A0 (tau - s)) ds
    Mat4 phi2;  // int_0^tau exp(A0 (tau - s)) (s / tau) ds
    Mat4 phi3;  // int_0^tau exp(A0 (tau - s)) (s / tau)^2 ds
};

// Van Loan block exponential: the first block row of exp(H) holds the
// weighted integrals of exp(A0 tau (1 - sigma)) against 1, sigma, sigma^2 / 2.
ExponentialIntegrals exponential_integrals(const Mat4& a0, double tau) {
    Eigen::Matrix<double, 16, 16> h = Eigen::Matrix<double, 16, 16>::Zero();
    h.block<4, 4>(0, 0) = a0 * tau;
    h.block<4, 4>(0, 4).setIdentity();
    h.block<4, 4>(4, 8).setIdentity();
    h.block<4, 4>(8, 12).setIdentity();
    const Eigen::Matrix<double, 16, 16> e = h.exp();
    return {e.block<4, 4>(0, 0), tau * e.block<4, 4>(0, 4), tau * e.block<4, 4>(0, 8),
            2.0 * tau * e.block<4, 4>(0, 12)};
}

// Instantaneous directional coefficients, integrands of the averaged factors.
Eigen::Matrix2d directional_coefficients(double phi, double kr) {
    const double s2 = std::sin(2.0 * phi);
    const double c2 = std::cos(2.0 * phi);
    Eigen::Matrix2d a;
    a << -s2 - kr * (1.0 - c2), -(1.0 + c2) - kr * s2,
         (1.0 - c2) - kr * s2, s2 - kr * (1.0 + c2);
    return a;
}

}  // namespace

double fdm_spectral_radius(const OperatingPoint& point, std::span<const tool::Mode> modes,
                           const cutting::CutSpec& cut, const cutting::CoefficientSet& coeffs,
                           int m_intervals) {
    if (!(std::isfinite(point.spindle_speed) && point.spindle_speed > 0.0))
        throw Error(ErrorCode::InvalidInput, "spindle speed must be > 0");
    if (!(std::isfinite(point.axial_depth) && point.axial_depth >= 0.0))
        throw Error(ErrorCode::InvalidInput, "axial depth must be >= 0");
    if (m_intervals < 20) throw Error(ErrorCode::InvalidInput, "m_intervals must be >= 20");
    coeffs.validate();
    const auto [phi_st, phi_ex] = cutting::engagement_angles(cut);

    const tool::Mode* mx = tool::dominant_mode(modes, tool::Direction::X);
    const tool::Mode* my = tool::dominant_mode(modes, tool::Direction::Y);
    if (!mx || !my) throw Error(ErrorCode::InvalidInput, "full discretization needs a mode in X and in Y");
    mx->validate();
    my->validate();

    const double wx = units::hz_to_rad_s(mx->natural_frequency);
    const double wy = units::hz_to_rad_s(my->natural_frequency);
    const double mass_x = mx->modal_stiffness / (wx * wx);
    const double mass_y = my->modal_stiffness / (wy * wy);

    Mat4 a0 = Mat4::Zero();
    a0(0, 2) = 1.0;
    a0(1, 3) = 1.0;
    a0(2, 0) = -wx * wx;
    a0(2, 2) = -2.0 * mx->damping_ratio * wx;
    a0(3, 1) = -wy * wy;
    a0(3, 3) = -2.0 * my->damping_ratio * wy;

    const int n_teeth = cut.n_teeth;
    const int m = m_intervals;
    const double period = units::tooth_period(point.spindle_speed, n_teeth);
    const double tau = period / m;
    const double spindle_rad_s = units::two_pi * point.spindle_speed / 60.0;
    const double force_gain = 0.5 * point.axial_depth * coeffs.kt;

    // B(t): position-difference -> acceleration, only the lower-left 2x2 block is non-zero.
    auto cutting_matrix = [&](double t) {
        Eigen::Matrix2d kc = Eigen::Matrix2d::Zero();
        for (int j = 0; j < n_teeth; ++j) {
            const double phi = std::fmod(spindle_rad_s * t + units::two_pi * j / n_teeth, units::two_pi);
            if (phi >= phi_st && phi < phi_ex) kc += directional_coefficients(phi, coeffs.kr);
        }
        kc *= force_gain;
        Mat4 b = Mat4::Zero();
        b(2, 0) = kc(0, 0) / mass_x;
        b(2, 1) = kc(0, 1) / mass_x;
        b(3, 0) = kc(1, 0) / mass_y;
        b(3, 1) = kc(1, 1) / mass_y;
        return b;
    };

    const ExponentialIntegrals ei = exponential_integrals(a0, tau);
    const int dim = 4 + 2 * m;
    // z_i = (y_i, x_{i-1}, ..., x_{i-m}) with x the 2-vector of positions.
    auto block_col = [](int k) { return 4 + 2 * (k - 1); };

    Eigen::MatrixXd monodromy = Eigen::MatrixXd::Identity(dim, dim);
    Eigen::MatrixXd step = Eigen::MatrixXd::Zero(dim, dim);
    for (int k = 1; k < m; ++k) step.block(block_col(k + 1), block_col(k), 2, 2).setIdentity();
    step.block(block_col(1), 0, 2, 2).setIdentity();

    Mat4 b_now = cutting_matrix(0.0);
    for (int i = 0; i < m; ++i) {
        const Mat4 b_next = cutting_matrix((i + 1) * tau);
        const Mat4 db = b_next - b_now;
        const Mat4 implicit = Mat4::Identity() - ei.phi2 * b_now - ei.phi3 * db;
        const Mat4 p = ei.phi1 * b_now + ei.phi2 * db - ei.phi2 * b_now - ei.phi3 * db;
        const Eigen::PartialPivLU<Mat4> lu(implicit);
        const Mat4 own = lu.solve(ei.phi0 + p);
        const Mat4 delayed_now = lu.solve(-p);
        const Mat4 delayed_next = lu.solve(implicit - Mat4::Identity());

        step.block(0, 0, 4, 4) = own;
        step.block(0, block_col(m), 4, 2) = delayed_now.leftCols<2>();
        step.block(0, block_col(m - 1), 4, 2) = delayed_next.leftCols<2>();
        monodromy = step * monodromy;
        b_now = b_next;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> solver(monodromy, false);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::Numeric, "Floquet eigenvalue iteration did not converge within " +
                                            std::to_string(solver.getMaxIterations() * dim) + " iterations");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace sld::stability

#include "flsim/localization.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace flsim::localization {

void RangingModel::validate() const {
    if (!(sigma >= 0.0)) throw InvalidModel("sigma must be >= 0");
    if (!(min_range >= 0.0 && max_range > min_range)) throw InvalidModel("need 0 <= min_range < max_range");
    if (!(calib_distance >= 0.0)) throw InvalidModel("calib_distance must be >= 0");
}

void AnchorSet::check_geometry() const {
    if (anchors.size() < 4) {
        throw DegenerateGeometry("3D multilateration needs at least 4 anchors, got " +
                                 std::to_string(anchors.size()));
    }
    const Vec3 c = centroid();
    Eigen::MatrixXd centered(anchors.size(), 3);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const Vec3 d = anchors[i].position - c;
        centered.row(static_cast<Eigen::Index>(i)) << d.x, d.y, d.z;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    const auto &s = svd.singularValues();
    if (!(s(0) > 0.0) || s(2) <= 1e-9 * s(0)) {
        throw DegenerateGeometry("anchors are coplanar or collinear");
    }
}

Vec3 AnchorSet::centroid() const {
    Vec3 c;
    for (const auto &a : anchors) c += a.position;
    return anchors.empty() ? c : c / static_cast<double>(anchors.size());
}

double simulate_range(const RangingModel &model, double true_distance, RandomStream &rng) {
    if (!(true_distance >= model.min_range && true_distance <= model.max_range)) {
        throw OutOfRange("true distance " + std::to_string(true_distance) + " outside ranging limits");
    }
    double measured = true_distance + model.bias_slope * std::abs(true_distance - model.calib_distance);
    if (model.sigma > 0.0) measured += rng.normal(0.0, model.sigma);
    return std::max(measured, 0.0);
}

namespace {

Eigen::Vector3d to_eigen(const Vec3 &v) { return {v.x, v.y, v.z}; }
Vec3 from_eigen(const Eigen::Vector3d &v) { return {v.x(), v.y(), v.z()}; }

struct Linearised {
    Eigen::Matrix3d jtj;
    Eigen::Vector3d jtr;
    double cost;
};

Linearised linearise(const AnchorSet &set, std::span<const double> ranges, const Eigen::Vector3d &p) {
    Linearised out{Eigen::Matrix3d::Zero(), Eigen::Vector3d::Zero(), 0.0};
    for (std::size_t i = 0; i < set.anchors.size(); ++i) {
        Eigen::Vector3d diff = p - to_eigen(set.anchors[i].position);
        double dist = diff.norm();
        if (dist < 1e-12) {
            // Jacobian undefined on the anchor; any unit direction is a valid subgradient.
            diff = Eigen::Vector3d::UnitZ() * 1e-12;
            dist = 1e-12;
        }
        const Eigen::Vector3d row = diff / dist;
        const double r = dist - ranges[i];
        out.jtj += row * row.transpose();
        out.jtr += row * r;
        out.cost += r * r;
    }
    return out;
}

std::optional<Eigen::Vector3d> closed_form(const AnchorSet &set, std::span<const double> ranges) {
    const auto n = static_cast<Eigen::Index>(set.anchors.size());
    const Eigen::Vector3d a0 = to_eigen(set.anchors[0].position);
    Eigen::MatrixXd a(n - 1, 3);
    Eigen::VectorXd b(n - 1);
    for (Eigen::Index i = 1; i < n; ++i) {
        const Eigen::Vector3d ai = to_eigen(set.anchors[static_cast<std::size_t>(i)].position);
        a.row(i - 1) = 2.0 * (ai - a0).transpose();
        const double di = ranges[static_cast<std::size_t>(i)];
        b(i - 1) = ai.squaredNorm() - a0.squaredNorm() - di * di + ranges[0] * ranges[0];
    }
    const auto qr = a.colPivHouseholderQr();
    if (qr.rank() < 3) return std::nullopt;
    Eigen::Vector3d p = qr.solve(b);
    if (!p.allFinite()) return std::nullopt;
    return p;
}

}  // namespace

PositionEstimate trilaterate(const AnchorSet &set, std::span<const double> ranges,
                             std::optional<Vec3> initial_guess) {
    if (ranges.size() != set.anchors.size()) {
        throw OutOfRange("need one range per anchor");
    }
    set.check_geometry();
    for (double r : ranges) {
        if (!std::isfinite(r)) throw NonFiniteInput("range is not finite");
    }

    Eigen::Vector3d p = to_eigen(set.centroid());
    if (initial_guess) {
        p = to_eigen(*initial_guess);
    } else if (set.anchors.size() >= 4) {
        if (auto cf = closed_form(set, ranges)) p = *cf;
    }

    Linearised lin = linearise(set, ranges, p);
    int iterations = 0;
    bool converged = false;
    while (iterations < kMaxIterations) {
        ++iterations;
        const Eigen::LDLT<Eigen::Matrix3d> ldlt(lin.jtj);
        const Eigen::Vector3d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(lin.jtj).eigenvalues();
        if (ldlt.info() != Eigen::Success || !(eig(0) > 1e-12 * std::max(eig(2), 1.0))) {
            throw DegenerateGeometry("normal equations are rank deficient");
        }
        Eigen::Vector3d step = ldlt.solve(-lin.jtr);

        // Backtrack if the full step does not reduce the cost.
        Linearised next = linearise(set, ranges, p + step);
        for (int halvings = 0; next.cost > lin.cost && halvings < 40; ++halvings) {
            step *= 0.5;
            next = linearise(set, ranges, p + step);
        }
        p += step;
        lin = next;
        if (step.norm() < kStepTolerance) {
            converged = true;
            break;
        }
    }

    PositionEstimate est;
    est.position = from_eigen(p);
    est.iterations = iterations;
    est.residual_rms = std::sqrt(lin.cost / static_cast<double>(ranges.size()));
    est.gradient_norm = lin.jtr.norm();
    if (!converged && !(est.gradient_norm < 1e-6)) {
        throw NoConvergence("Gauss-Newton did not converge in " + std::to_string(kMaxIterations) +
                            " iterations");
    }
    return est;
}

Vec3 relative_localize_step(const PolarObservation &observed, const PolarObservation &desired) {
    if (!(observed.distance >= 0.0 && desired.distance >= 0.0)) {
        throw OutOfRange("polar distances must be >= 0");
    }
    const Vec3 seen{observed.distance * std::cos(observed.bearing), observed.distance * std::sin(observed.bearing),
                    0.0};
    const Vec3 wanted{desired.distance * std::cos(desired.bearing), desired.distance * std::sin(desired.bearing),
                      0.0};
    return seen - wanted;
}

PolarObservation observe(const Vec3 &observer, const Vec3 &anchor) {
    const Vec3 d = anchor - observer;
    const double planar = std::hypot(d.x, d.y);
    return PolarObservation{planar, planar > 0.0 ? std::atan2(d.y, d.x) : 0.0};
}

}  // namespace flsim::localization

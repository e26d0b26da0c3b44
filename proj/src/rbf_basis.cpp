#include "chanflow/rbf_basis.hpp"

#include "chanflow/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace chanflow {

double multiquadric(double r, double c)
{
    return std::sqrt(r * r + c * c);
}

double chordal_offset(double dx, double Lx)
{
    const double k = std::numbers::pi / Lx;
    return std::sin(k * dx) / k;
}

RbfBasis::RbfBasis(const Grid& grid, double c)
    : grid_(grid), c_(c)
{
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw ConfigError("RBF shape parameter c must be > 0");
    }
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i + 1 < grid.nx; ++i) {
            centers_.push_back({grid.x(i), grid.y(j)});
        }
    }
    at_centers_ = rows_at(centers_);
    lu_.compute(at_centers_.phi);
    const double rc = lu_.rcond();
    condition_ = (rc > 0.0) ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

bool RbfBasis::is_wall_center(int k) const
{
    const int j = k / (grid_.nx - 1);
    return j == 0 || j == grid_.ny - 1;
}

BasisRows RbfBasis::rows_at(const std::vector<Point>& pts) const
{
    const Eigen::Index m = static_cast<Eigen::Index>(pts.size());
    const Eigen::Index n = static_cast<Eigen::Index>(centers_.size());
    BasisRows out{Eigen::MatrixXd(m, n), Eigen::MatrixXd(m, n), Eigen::MatrixXd(m, n), Eigen::MatrixXd(m, n)};
    const double k = std::numbers::pi / grid_.Lx;
    const double c2 = c_ * c_;
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            const double dX = pts[a].x - centers_[b].x;
            const double dY = pts[a].y - centers_[b].y;
            const double s = std::sin(k * dX) / k;
            const double s2p = std::sin(2.0 * k * dX) / k;
            const double s2pp = 2.0 * std::cos(2.0 * k * dX);
            const double r = std::sqrt(s * s + dY * dY + c2);
            const double r3 = r * r * r;
            out.phi(a, b) = r;
            out.dx(a, b) = 0.5 * s2p / r;
            out.dy(a, b) = dY / r;
            out.lap(a, b) = 0.5 * s2pp / r - 0.25 * s2p * s2p / r3 + 1.0 / r - dY * dY / r3;
        }
    }
    return out;
}

Eigen::VectorXd RbfBasis::interpolate(const ScalarField& f) const
{
    ensure(f.grid() == grid_, "field grid differs from basis grid");
    Eigen::VectorXd vals(size());
    for (int j = 0; j < grid_.ny; ++j) {
        for (int i = 0; i + 1 < grid_.nx; ++i) {
            vals(center_of_node(i, j)) = f(i, j);
        }
    }
    return interpolate_center_values(vals);
}

Eigen::VectorXd RbfBasis::interpolate_center_values(const Eigen::VectorXd& values) const
{
    return lu_.solve(values);
}

ScalarField RbfBasis::to_nodes(const Eigen::VectorXd& coeffs) const
{
    const Eigen::VectorXd at = at_centers_.phi * coeffs;
    std::vector<double> vals(grid_.size());
    for (int j = 0; j < grid_.ny; ++j) {
        for (int i = 0; i < grid_.nx; ++i) {
            vals[grid_.index(i, j)] = at(center_of_node(i, j));
        }
    }
    return ScalarField(grid_, std::move(vals));
}

std::shared_ptr<const RbfBasis> build_basis(const Grid& grid, double c)
{
    auto basis = std::make_shared<const RbfBasis>(grid, c);
    if (!(basis->condition_estimate() <= 1e14)) {
        std::ostringstream msg;
        msg << "RBF interpolation matrix is effectively singular (condition estimate "
            << basis->condition_estimate() << " > 1e14); try a smaller shape parameter c";
        throw IllConditionedError(msg.str());
    }
    return basis;
}

} // namespace chanflow

#pragma once

#include "chanflow/fields.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace chanflow {

double multiquadric(double r, double c);

// Streamwise offset measured along the chord of the periodic direction:
// (Lx/pi) sin(pi dx / Lx). Equal to dx for |dx| << Lx; its square is Lx-periodic in dx.
double chordal_offset(double dx, double Lx);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Basis values and analytic derivatives at a set of evaluation points,
// one row per point and one column per center.
struct BasisRows {
    Eigen::MatrixXd phi;
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dy;
    Eigen::MatrixXd lap;
};

// Multiquadric basis that is periodic in x. Centers are the grid nodes with
// x < Lx; the column x = Lx is the periodic image of x = 0.
class RbfBasis {
public:
    RbfBasis(const Grid& grid, double c);

    const Grid& grid() const { return grid_; }
    double shape_parameter() const { return c_; }
    int size() const { return static_cast<int>(centers_.size()); }
    const std::vector<Point>& centers() const { return centers_; }

    const Eigen::MatrixXd& eval_matrix() const { return at_centers_.phi; }
    const Eigen::MatrixXd& dx_matrix() const { return at_centers_.dx; }
    const Eigen::MatrixXd& dy_matrix() const { return at_centers_.dy; }
    const Eigen::MatrixXd& laplacian_matrix() const { return at_centers_.lap; }
    const BasisRows& at_centers() const { return at_centers_; }
    double condition_estimate() const { return condition_; }

    int center_of_node(int i, int j) const { return j * (grid_.nx - 1) + (i % (grid_.nx - 1)); }
    bool is_wall_center(int k) const;

    BasisRows rows_at(const std::vector<Point>& pts) const;

    Eigen::VectorXd interpolate(const ScalarField& f) const;
    Eigen::VectorXd interpolate_center_values(const Eigen::VectorXd& values) const;
    ScalarField to_nodes(const Eigen::VectorXd& coeffs) const;

private:
    Grid grid_;
    double c_;
    std::vector<Point> centers_;
    BasisRows at_centers_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    double condition_ = 0.0;
};

// Throws IllConditionedError when the interpolation matrix condition estimate exceeds 1e14.
std::shared_ptr<const RbfBasis> build_basis(const Grid& grid, double c);

} // namespace chanflow

#include "chanflow/svg.hpp"

#include "chanflow/csv.hpp"
#include "chanflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chanflow {

namespace {

std::string num(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace

std::string emit_quiver_svg(const ScalarField& U, const ScalarField& V, const QuiverStyle& style)
{
    ensure(U.grid() == V.grid(), "quiver components live on different grids");
    const Grid& g = U.grid();
    const double plot_w = style.width - 2.0 * style.margin;
    const double plot_h = style.height - 2.0 * style.margin;
    const double sx = plot_w / g.Lx;
    const double sy = plot_h / g.Ly;
    auto px = [&](double x) { return style.margin + x * sx; };
    auto py = [&](double y) { return style.height - style.margin - y * sy; };

    double vmax = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        vmax = std::max(vmax, std::hypot(U.values()[k], V.values()[k]));
    }
    // The longest arrow spans 0.9 of the smaller cell side.
    const double cell = std::min(g.hx() * sx, g.hy() * sy);
    const double scale = (vmax > 0.0) ? 0.9 * cell / vmax : 0.0;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(style.width) << "\" height=\""
       << num(style.height) << "\" viewBox=\"0 0 " << num(style.width) << ' ' << num(style.height) << "\">\n";
    os << "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" "
          "orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" fill=\"black\"/></marker></defs>\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << num(style.width) << "\" height=\"" << num(style.height)
       << "\" fill=\"white\"/>\n";
    os << "<rect x=\"" << num(style.margin) << "\" y=\"" << num(style.margin) << "\" width=\"" << num(plot_w)
       << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    if (!style.title.empty()) {
        os << "<text x=\"" << num(style.width / 2) << "\" y=\"" << num(style.margin / 2)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << style.title << "</text>\n";
    }
    for (int t = 0; t <= 4; ++t) {
        const double fx = g.Lx * t / 4.0;
        const double fy = g.Ly * t / 4.0;
        os << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(style.height - style.margin + 18)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(fx) << "</text>\n";
        os << "<text x=\"" << num(style.margin - 8) << "\" y=\"" << num(py(fy) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(fy) << "</text>\n";
    }
    os << "<text x=\"" << num(style.width / 2) << "\" y=\"" << num(style.height - 12)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">x</text>\n";
    os << "<text x=\"14\" y=\"" << num(style.height / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">y</text>\n";

    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double x0 = px(g.x(i));
            const double y0 = py(g.y(j));
            const double dx = U(i, j) * scale;
            const double dy = -V(i, j) * scale;
            if (std::hypot(dx, dy) < 1e-9) {
                os << "<circle cx=\"" << num(x0) << "\" cy=\"" << num(y0) << "\" r=\"1.5\" fill=\"black\"/>\n";
                continue;
            }
            os << "<line class=\"arrow\" x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0 + dx)
               << "\" y2=\"" << num(y0 + dy) << "\" stroke=\"black\" stroke-width=\"1.2\" marker-end=\"url(#head)\"/>\n";
        }
    }

    const double legend_len = 0.9 * cell;
    const double lx = style.width - style.margin - legend_len;
    const double ly = style.margin / 2 + 14;
    os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + legend_len) << "\" y2=\""
       << num(ly) << "\" stroke=\"black\" stroke-width=\"1.2\" marker-end=\"url(#head)\"/>\n";
    os << "<text x=\"" << num(lx - 6) << "\" y=\"" << num(ly + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">|W| = " << num(vmax)
       << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string emit_quiver_svg(const FlowState& state, const QuiverStyle& style)
{
    return emit_quiver_svg(state.U, state.V, style);
}

std::string emit_quiver_svg(const DeviationState& dev, const QuiverStyle& style)
{
    return emit_quiver_svg(dev.u, dev.v, style);
}

} // namespace chanflow

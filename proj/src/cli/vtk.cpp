#include "hpep/cli/vtk.hpp"

#include "hpep/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hpep::cli {

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<double> cell_breaks(int p)
{
    const auto& nodes = gauss_lagrange(p).one_d().nodes();
    std::vector<double> b{-1.0};
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        b.push_back(0.5 * (nodes[i] + nodes[i + 1]));
    b.push_back(1.0);
    return b;
}

void write_tensor(std::ostream& out, const DevTensor& t)
{
    const Eigen::Matrix3d m = reconstruct(t).storage();
    for (int i = 0; i < 3; ++i)
        out << format_double(m(i, 0)) << ' ' << format_double(m(i, 1)) << ' ' << format_double(m(i, 2)) << '\n';
}

} // namespace

void write_vtk(std::ostream& out, const DiscreteFields& fields, const std::string& title)
{
    const DofSystem& dofs = fields.dofs();
    const HpMesh& mesh = dofs.mesh();

    struct Cell {
        std::size_t element;
        int k; // local Gauss node
        std::array<std::size_t, 4> pts;
    };
    std::vector<Eigen::Vector2d> points, disp;
    std::vector<Cell> cells;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const int p = mesh.degree(e);
        const auto br = cell_breaks(p);
        const GeometryMap geo = mesh.geometry(e);
        const std::size_t base = points.size();
        for (int j = 0; j <= p; ++j)
            for (int i = 0; i <= p; ++i) {
                const Eigen::Vector2d xhat(br[static_cast<std::size_t>(i)], br[static_cast<std::size_t>(j)]);
                points.push_back(geo.map(xhat));
                disp.push_back(dofs.displacement().value(e, xhat, fields.a()));
            }
        auto id = [&](int i, int j) { return base + static_cast<std::size_t>(j * (p + 1) + i); };
        for (int j = 0; j < p; ++j)
            for (int i = 0; i < p; ++i)
                cells.push_back({e, i + p * j, {id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)}});
    }

    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << points.size() << " double\n";
    for (const auto& x : points)
        out << format_double(x.x()) << ' ' << format_double(x.y()) << " 0\n";
    out << "CELLS " << cells.size() << ' ' << 5 * cells.size() << '\n';
    for (const auto& c : cells)
        out << "4 " << c.pts[0] << ' ' << c.pts[1] << ' ' << c.pts[2] << ' ' << c.pts[3] << '\n';
    out << "CELL_TYPES " << cells.size() << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i)
        out << "9\n";
    out << "POINT_DATA " << points.size() << "\nVECTORS displacement double\n";
    for (const auto& u : disp)
        out << format_double(u.x()) << ' ' << format_double(u.y()) << " 0\n";
    out << "CELL_DATA " << cells.size() << "\nTENSORS plastic_strain double\n";
    constexpr int L = DofSystem::L;
    auto node_value = [&](const Eigen::VectorXd& coeffs, const Cell& c) {
        const std::size_t i = dofs.zeta(c.element, c.k);
        return DevTensor(2, coeffs.segment(static_cast<Eigen::Index>(L * i), L));
    };
    for (const auto& c : cells)
        write_tensor(out, node_value(fields.p(), c));
    out << "TENSORS multiplier double\n";
    for (const auto& c : cells)
        write_tensor(out, node_value(fields.lambda(), c));
    out << "SCALARS element int 1\nLOOKUP_TABLE default\n";
    for (const auto& c : cells)
        out << c.element << '\n';
    out << "SCALARS degree int 1\nLOOKUP_TABLE default\n";
    for (const auto& c : cells)
        out << mesh.degree(c.element) << '\n';
}

void write_file_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out)
            throw ConfigError("failed while writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ConfigError("cannot move output into place at '" + path + "'");
    }
}

} // namespace hpep::cli

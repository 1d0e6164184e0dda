#include "hpep/mesh.hpp"

#include "hpep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace hpep {

namespace {

constexpr std::array<std::array<int, 2>, 4> kEdgeCorners{{{0, 1}, {1, 2}, {2, 3}, {3, 0}}};

std::array<double, 4> shape(const Eigen::Vector2d& xi)
{
    const double a = 1.0 - xi.x(), b = 1.0 + xi.x();
    const double c = 1.0 - xi.y(), d = 1.0 + xi.y();
    return {0.25 * a * c, 0.25 * b * c, 0.25 * b * d, 0.25 * a * d};
}

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

std::pair<std::size_t, std::size_t> edge_key(std::size_t a, std::size_t b) { return {std::min(a, b), std::max(a, b)}; }

std::string where(std::size_t e) { return "element " + std::to_string(e); }

} // namespace

Eigen::Vector2d GeometryMap::map(const Eigen::Vector2d& xhat) const
{
    const auto n = shape(xhat);
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    for (int a = 0; a < 4; ++a)
        x += n[a] * c_[a];
    return x;
}

Eigen::Matrix2d GeometryMap::jacobian(const Eigen::Vector2d& xhat) const
{
    const double xi = xhat.x(), eta = xhat.y();
    const std::array<double, 4> dxi{-0.25 * (1 - eta), 0.25 * (1 - eta), 0.25 * (1 + eta), -0.25 * (1 + eta)};
    const std::array<double, 4> deta{-0.25 * (1 - xi), -0.25 * (1 + xi), 0.25 * (1 + xi), 0.25 * (1 - xi)};
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
    for (int a = 0; a < 4; ++a) {
        j.col(0) += dxi[a] * c_[a];
        j.col(1) += deta[a] * c_[a];
    }
    return j;
}

double GeometryMap::jacobian_det(const Eigen::Vector2d& xhat) const
{
    const double det = det_unchecked(xhat);
    if (!(det > 0.0))
        throw GeometryError("inverted element: non-positive Jacobian determinant");
    return det;
}

std::optional<Eigen::Vector2d> GeometryMap::inverse(const Eigen::Vector2d& x, double tol) const
{
    Eigen::Vector2d xi = Eigen::Vector2d::Zero();
    const double scale = std::max((c_[2] - c_[0]).norm(), (c_[3] - c_[1]).norm());
    for (int it = 0; it < 50; ++it) {
        const Eigen::Vector2d r = map(xi) - x;
        const Eigen::Matrix2d j = jacobian(xi);
        if (std::abs(j.determinant()) < 1e-300)
            return std::nullopt;
        const Eigen::Vector2d step = j.fullPivLu().solve(r);
        xi -= step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-15 && r.norm() < 1e-14 * scale)
            break;
        if (xi.lpNorm<Eigen::Infinity>() > 10.0)
            return std::nullopt;
    }
    if ((map(xi) - x).norm() > 1e-9 * scale)
        return std::nullopt;
    if (xi.lpNorm<Eigen::Infinity>() > 1.0 + tol)
        return std::nullopt;
    return xi;
}

bool check_mapping_assumption(const GeometryMap& g)
{
    // det is affine iff its mixed second difference and both pure second differences vanish.
    const double mixed = g.det_unchecked({1, 1}) - g.det_unchecked({1, -1}) - g.det_unchecked({-1, 1}) +
                         g.det_unchecked({-1, -1});
    const double xx = g.det_unchecked({1, 0.3}) - 2 * g.det_unchecked({0, 0.3}) + g.det_unchecked({-1, 0.3});
    const double yy = g.det_unchecked({-0.2, 1}) - 2 * g.det_unchecked({-0.2, 0}) + g.det_unchecked({-0.2, -1});
    const double ref = std::abs(g.det_unchecked({0, 0})) + 1e-300;
    return std::abs(mixed) <= 1e-12 * ref && std::abs(xx) <= 1e-12 * ref && std::abs(yy) <= 1e-12 * ref;
}

HpMesh::HpMesh(std::vector<Eigen::Vector2d> nodes, std::vector<QuadElement> elements,
               std::vector<BoundaryEdge> boundary)
    : nodes_(std::move(nodes)), elements_(std::move(elements)), boundary_(std::move(boundary))
{
    validate();
}

void HpMesh::validate()
{
    if (elements_.empty())
        throw MeshError("mesh has no elements");
    sizes_.resize(elements_.size());
    areas_.resize(elements_.size());
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        const auto& el = elements_[e];
        if (el.degree < 1)
            throw MeshError(where(e) + ": degree must be >= 1");
        for (auto n : el.nodes)
            if (n >= nodes_.size())
                throw MeshError(where(e) + ": node index out of range");
        std::array<Eigen::Vector2d, 4> c;
        for (int a = 0; a < 4; ++a)
            c[a] = nodes_[el.nodes[a]];
        for (int a = 0; a < 4; ++a) {
            const Eigen::Vector2d e1 = c[(a + 1) % 4] - c[a];
            const Eigen::Vector2d e2 = c[(a + 2) % 4] - c[(a + 1) % 4];
            if (!(cross(e1, e2) > 0.0))
                throw GeometryError(where(e) + " is not convex with counter-clockwise orientation");
        }
        const GeometryMap g(c);
        const double r = 1.0 / std::sqrt(3.0);
        double area = 0.0;
        for (double sx : {-r, r})
            for (double sy : {-r, r})
                area += g.jacobian_det({sx, sy});
        areas_[e] = area;
        double h = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                h = std::max(h, (c[a] - c[b]).norm());
        sizes_[e] = h;
    }

    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<std::size_t, int>>> edges;
    for (std::size_t e = 0; e < elements_.size(); ++e)
        for (int le = 0; le < 4; ++le) {
            const auto en = edge_nodes(e, le);
            edges[edge_key(en[0], en[1])].emplace_back(e, le);
        }
    neighbours_.assign(elements_.size(), {});
    std::vector<std::array<std::size_t, 2>> open_edges;
    for (const auto& [key, users] : edges) {
        if (users.size() > 2)
            throw MeshError("edge shared by more than two elements");
        if (users.size() == 2) {
            const auto [e0, l0] = users[0];
            const auto [e1, l1] = users[1];
            if (std::abs(elements_[e0].degree - elements_[e1].degree) > 1)
                throw MeshError("degrees of neighbouring elements " + std::to_string(e0) + " and " +
                                std::to_string(e1) + " differ by more than one");
            neighbours_[e0][l0] = users[1];
            neighbours_[e1][l1] = users[0];
        } else {
            open_edges.push_back({key.first, key.second});
        }
    }
    for (const auto& be : boundary_) {
        if (be.element >= elements_.size() || be.local_edge < 0 || be.local_edge > 3)
            throw MeshError("boundary entry references an invalid element edge");
        if (neighbours_[be.element][be.local_edge])
            throw MeshError("boundary entry on interior edge of " + where(be.element));
    }
    {
        std::vector<std::pair<std::size_t, int>> seen;
        for (const auto& be : boundary_)
            seen.emplace_back(be.element, be.local_edge);
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
            throw MeshError("duplicate boundary entry");
    }
    // Hanging nodes: a mesh node strictly inside an unshared edge.
    for (const auto& oe : open_edges) {
        const Eigen::Vector2d a = nodes_[oe[0]], b = nodes_[oe[1]];
        const Eigen::Vector2d lo = a.cwiseMin(b), hi = a.cwiseMax(b);
        const double len = (b - a).norm();
        for (std::size_t n = 0; n < nodes_.size(); ++n) {
            if (n == oe[0] || n == oe[1])
                continue;
            const Eigen::Vector2d& x = nodes_[n];
            if ((x.array() < lo.array() - 1e-12 * len).any() || (x.array() > hi.array() + 1e-12 * len).any())
                continue;
            const double t = (x - a).dot(b - a) / (len * len);
            if (t > 1e-12 && t < 1 - 1e-12 && std::abs(cross(b - a, x - a)) <= 1e-12 * len * len)
                throw MeshError("hanging node " + std::to_string(n) + ": mesh is not conforming");
        }
    }
}

int HpMesh::max_degree() const
{
    int p = 0;
    for (const auto& el : elements_)
        p = std::max(p, el.degree);
    return p;
}

int HpMesh::min_degree() const
{
    int p = elements_.front().degree;
    for (const auto& el : elements_)
        p = std::min(p, el.degree);
    return p;
}

double HpMesh::max_size() const { return *std::max_element(sizes_.begin(), sizes_.end()); }

double HpMesh::total_area() const
{
    double a = 0.0;
    for (double x : areas_)
        a += x;
    return a;
}

GeometryMap HpMesh::geometry(std::size_t e) const
{
    const auto& n = elements_[e].nodes;
    return GeometryMap({nodes_[n[0]], nodes_[n[1]], nodes_[n[2]], nodes_[n[3]]});
}

std::array<std::size_t, 2> HpMesh::edge_nodes(std::size_t e, int le) const
{
    const auto& n = elements_[e].nodes;
    return {n[kEdgeCorners[le][0]], n[kEdgeCorners[le][1]]};
}

double HpMesh::edge_length(std::size_t e, int le) const
{
    const auto en = edge_nodes(e, le);
    return (nodes_[en[1]] - nodes_[en[0]]).norm();
}

Eigen::Vector2d HpMesh::outward_normal(std::size_t e, int le) const
{
    const auto en = edge_nodes(e, le);
    const Eigen::Vector2d t = (nodes_[en[1]] - nodes_[en[0]]).normalized();
    return {t.y(), -t.x()};
}

double HpMesh::dirichlet_length() const
{
    double len = 0.0;
    for (const auto& be : boundary_)
        if (be.tag == BoundaryTag::Dirichlet)
            len += edge_length(be.element, be.local_edge);
    return len;
}

Eigen::Vector2d reference_edge_point(int le, double s)
{
    switch (le) {
    case 0: return {s, -1.0};
    case 1: return {1.0, s};
    case 2: return {-s, 1.0};
    default: return {-1.0, -s};
    }
}

HpMesh refine_uniform(const HpMesh& mesh)
{
    std::vector<Eigen::Vector2d> nodes = mesh.nodes();
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoints;
    auto midpoint = [&](std::size_t a, std::size_t b) {
        const auto key = edge_key(a, b);
        auto it = midpoints.find(key);
        if (it != midpoints.end())
            return it->second;
        nodes.push_back(0.5 * (nodes[a] + nodes[b]));
        midpoints.emplace(key, nodes.size() - 1);
        return nodes.size() - 1;
    };
    std::vector<QuadElement> elements;
    elements.reserve(4 * mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        const auto& v = el.nodes;
        const std::size_t m0 = midpoint(v[0], v[1]);
        const std::size_t m1 = midpoint(v[1], v[2]);
        const std::size_t m2 = midpoint(v[2], v[3]);
        const std::size_t m3 = midpoint(v[3], v[0]);
        nodes.push_back(0.25 * (nodes[v[0]] + nodes[v[1]] + nodes[v[2]] + nodes[v[3]]));
        const std::size_t c = nodes.size() - 1;
        elements.push_back({{v[0], m0, c, m3}, el.degree});
        elements.push_back({{m0, v[1], m1, c}, el.degree});
        elements.push_back({{c, m1, v[2], m2}, el.degree});
        elements.push_back({{m3, c, m2, v[3]}, el.degree});
    }
    // Child (quadrant) and its local edge covering each half of a parent edge.
    constexpr std::array<std::array<std::array<int, 2>, 2>, 4> halves{{
        {{{0, 0}, {1, 0}}},
        {{{1, 1}, {2, 1}}},
        {{{2, 2}, {3, 2}}},
        {{{3, 3}, {0, 3}}},
    }};
    std::vector<BoundaryEdge> boundary;
    for (const auto& be : mesh.boundary_edges())
        for (const auto& h : halves[be.local_edge])
            boundary.push_back({4 * be.element + h[0], h[1], be.tag});
    return HpMesh(std::move(nodes), std::move(elements), std::move(boundary));
}

HpMesh with_degrees(const HpMesh& mesh, const std::vector<int>& degrees)
{
    if (degrees.size() != mesh.num_elements())
        throw MeshError("with_degrees: one degree per element required");
    auto elements = mesh.elements();
    for (std::size_t e = 0; e < elements.size(); ++e)
        elements[e].degree = degrees[e];
    return HpMesh(mesh.nodes(), std::move(elements), mesh.boundary_edges());
}

HpMesh elevate_degree(const HpMesh& mesh, int offset)
{
    std::vector<int> degrees;
    for (const auto& el : mesh.elements())
        degrees.push_back(el.degree + offset);
    return with_degrees(mesh, degrees);
}

HpMesh make_rectangle(const RectangleSpec& spec)
{
    if (spec.nx < 1 || spec.ny < 1)
        throw MeshError("rectangle: nx and ny must be >= 1");
    std::vector<Eigen::Vector2d> nodes;
    for (int j = 0; j <= spec.ny; ++j)
        for (int i = 0; i <= spec.nx; ++i)
            nodes.emplace_back(spec.x0 + (spec.x1 - spec.x0) * i / spec.nx,
                               spec.y0 + (spec.y1 - spec.y0) * j / spec.ny);
    auto id = [&](int i, int j) { return static_cast<std::size_t>(j * (spec.nx + 1) + i); };
    std::vector<QuadElement> elements;
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i)
            elements.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)}, spec.degree});
    auto elem = [&](int i, int j) { return static_cast<std::size_t>(j * spec.nx + i); };
    std::vector<BoundaryEdge> boundary;
    auto tag_side = [&](Side s, BoundaryTag tag) {
        switch (s) {
        case Side::Bottom:
            for (int i = 0; i < spec.nx; ++i) boundary.push_back({elem(i, 0), 0, tag});
            break;
        case Side::Right:
            for (int j = 0; j < spec.ny; ++j) boundary.push_back({elem(spec.nx - 1, j), 1, tag});
            break;
        case Side::Top:
            for (int i = 0; i < spec.nx; ++i) boundary.push_back({elem(i, spec.ny - 1), 2, tag});
            break;
        case Side::Left:
            for (int j = 0; j < spec.ny; ++j) boundary.push_back({elem(0, j), 3, tag});
            break;
        }
    };
    for (Side s : spec.dirichlet)
        tag_side(s, BoundaryTag::Dirichlet);
    for (Side s : spec.neumann)
        tag_side(s, BoundaryTag::Neumann);
    return HpMesh(std::move(nodes), std::move(elements), std::move(boundary));
}

HpMesh unit_square(int n, int degree, std::vector<Side> dirichlet, std::vector<Side> neumann)
{
    RectangleSpec spec;
    spec.nx = spec.ny = n;
    spec.degree = degree;
    spec.dirichlet = std::move(dirichlet);
    spec.neumann = std::move(neumann);
    return make_rectangle(spec);
}

std::optional<std::pair<std::size_t, Eigen::Vector2d>> locate(const HpMesh& mesh, const Eigen::Vector2d& x)
{
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const GeometryMap g = mesh.geometry(e);
        Eigen::Vector2d lo = g.corners()[0], hi = g.corners()[0];
        for (const auto& c : g.corners()) {
            lo = lo.cwiseMin(c);
            hi = hi.cwiseMax(c);
        }
        const double pad = 1e-10 * mesh.size(e);
        if ((x.array() < lo.array() - pad).any() || (x.array() > hi.array() + pad).any())
            continue;
        if (auto xi = g.inverse(x))
            return std::make_pair(e, xi->cwiseMax(-1.0).cwiseMin(1.0).eval());
    }
    return std::nullopt;
}

std::vector<ElementEmbedding> embed_nested(const HpMesh& fine, const HpMesh& coarse)
{
    std::vector<ElementEmbedding> out;
    out.reserve(fine.num_elements());
    for (std::size_t e = 0; e < fine.num_elements(); ++e) {
        const GeometryMap g = fine.geometry(e);
        const auto hit = locate(coarse, g.map(Eigen::Vector2d::Zero()));
        if (!hit)
            throw MeshError("embed_nested: fine element outside coarse mesh");
        const GeometryMap cg = coarse.geometry(hit->first);
        std::array<Eigen::Vector2d, 4> ref;
        for (int a = 0; a < 4; ++a) {
            const auto xi = cg.inverse(g.corners()[a], 1e-9);
            if (!xi)
                throw MeshError("embed_nested: meshes are not nested");
            ref[a] = *xi;
        }
        const Eigen::Vector2d scale = 0.5 * (ref[2] - ref[0]);
        const Eigen::Vector2d shift = 0.5 * (ref[2] + ref[0]);
        const bool axis_aligned = std::abs(ref[1].x() - ref[2].x()) < 1e-9 && std::abs(ref[1].y() - ref[0].y()) < 1e-9 &&
                                  std::abs(ref[3].x() - ref[0].x()) < 1e-9 && std::abs(ref[3].y() - ref[2].y()) < 1e-9;
        if (!axis_aligned || (scale.array() <= 0.0).any())
            throw MeshError("embed_nested: fine element is not a reference sub-square of a coarse element");
        out.push_back({hit->first, scale, shift});
    }
    return out;
}

namespace {

struct LineReader {
    std::istream& in;
    int line_no = 0;

    bool next(std::string& line)
    {
        while (std::getline(in, line)) {
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw MeshError("mesh line " + std::to_string(line_no) + ": " + msg);
    }
};

std::size_t read_header(LineReader& r, const std::string& name)
{
    std::string line;
    if (!r.next(line))
        r.fail("expected section " + name);
    std::istringstream ss(line);
    std::string word;
    long long count = -1;
    if (!(ss >> word >> count) || word != name || count < 0)
        r.fail("expected '" + name + " <count>'");
    return static_cast<std::size_t>(count);
}

} // namespace

HpMesh read_mesh(std::istream& in)
{
    LineReader r{in};
    std::string line;
    const std::size_t nn = read_header(r, "NODES");
    std::vector<Eigen::Vector2d> nodes(nn);
    for (auto& x : nodes) {
        if (!r.next(line))
            r.fail("unexpected end of NODES");
        std::istringstream ss(line);
        if (!(ss >> x.x() >> x.y()))
            r.fail("expected '<x> <y>'");
    }
    const std::size_t ne = read_header(r, "ELEMENTS");
    std::vector<QuadElement> elements(ne);
    for (auto& el : elements) {
        if (!r.next(line))
            r.fail("unexpected end of ELEMENTS");
        std::istringstream ss(line);
        long long idx[4];
        if (!(ss >> idx[0] >> idx[1] >> idx[2] >> idx[3] >> el.degree))
            r.fail("expected '<i0> <i1> <i2> <i3> <p>'");
        for (int a = 0; a < 4; ++a) {
            if (idx[a] < 0 || static_cast<std::size_t>(idx[a]) >= nn)
                r.fail("node index out of range");
            el.nodes[a] = static_cast<std::size_t>(idx[a]);
        }
    }
    const std::size_t nb = read_header(r, "BOUNDARY");
    std::vector<BoundaryEdge> boundary(nb);
    for (auto& be : boundary) {
        if (!r.next(line))
            r.fail("unexpected end of BOUNDARY");
        std::istringstream ss(line);
        long long e;
        std::string tag;
        if (!(ss >> e >> be.local_edge >> tag) || e < 0)
            r.fail("expected '<elem> <edge> <D|N>'");
        be.element = static_cast<std::size_t>(e);
        if (tag == "D")
            be.tag = BoundaryTag::Dirichlet;
        else if (tag == "N")
            be.tag = BoundaryTag::Neumann;
        else
            r.fail("boundary tag must be D or N");
    }
    return HpMesh(std::move(nodes), std::move(elements), std::move(boundary));
}

HpMesh read_mesh_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw MeshError("cannot open mesh file " + path);
    return read_mesh(in);
}

void write_mesh(std::ostream& out, const HpMesh& mesh)
{
    const auto old = out.precision(17);
    out << "NODES " << mesh.num_nodes() << '\n';
    for (const auto& x : mesh.nodes())
        out << x.x() << ' ' << x.y() << '\n';
    out << "ELEMENTS " << mesh.num_elements() << '\n';
    for (const auto& el : mesh.elements())
        out << el.nodes[0] << ' ' << el.nodes[1] << ' ' << el.nodes[2] << ' ' << el.nodes[3] << ' ' << el.degree
            << '\n';
    out << "BOUNDARY " << mesh.boundary_edges().size() << '\n';
    for (const auto& be : mesh.boundary_edges())
        out << be.element << ' ' << be.local_edge << ' ' << (be.tag == BoundaryTag::Dirichlet ? 'D' : 'N') << '\n';
    out.precision(old);
}

} // namespace hpep

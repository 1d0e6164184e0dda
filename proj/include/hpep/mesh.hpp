#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hpep {

enum class BoundaryTag { Dirichlet, Neumann };

/// Bilinear map from the reference square [-1, 1]^2 onto a quadrilateral.
/// Corners are ordered counter-clockwise and correspond to (-1,-1), (1,-1), (1,1), (-1,1).
class GeometryMap {
public:
    explicit GeometryMap(const std::array<Eigen::Vector2d, 4>& corners) : c_(corners) {}

    const std::array<Eigen::Vector2d, 4>& corners() const noexcept { return c_; }

    Eigen::Vector2d map(const Eigen::Vector2d& xhat) const;
    /// Columns are d x / d xhat_1 and d x / d xhat_2.
    Eigen::Matrix2d jacobian(const Eigen::Vector2d& xhat) const;
    double det_unchecked(const Eigen::Vector2d& xhat) const { return jacobian(xhat).determinant(); }
    /// Throws GeometryError if the determinant is not positive.
    double jacobian_det(const Eigen::Vector2d& xhat) const;

    /// Newton inversion of the bilinear map; nullopt if x lies outside (with tolerance).
    std::optional<Eigen::Vector2d> inverse(const Eigen::Vector2d& x, double tol = 1e-10) const;

private:
    std::array<Eigen::Vector2d, 4> c_;
};

/// True iff det(grad M_T) is affine on the reference square.
bool check_mapping_assumption(const GeometryMap& g);

struct QuadElement {
    std::array<std::size_t, 4> nodes;
    int degree = 1;
};

struct BoundaryEdge {
    std::size_t element;
    int local_edge; // 0: v0-v1, 1: v1-v2, 2: v2-v3, 3: v3-v0
    BoundaryTag tag;
};

/// Reference-coordinate embedding of a fine element into a coarse one:
/// xhat_coarse = shift + scale .* xhat_fine.
struct ElementEmbedding {
    std::size_t coarse_element;
    Eigen::Vector2d scale;
    Eigen::Vector2d shift;

    Eigen::Vector2d apply(const Eigen::Vector2d& xhat) const { return shift + scale.cwiseProduct(xhat); }
};

/// Conforming quadrilateral hp-mesh. Immutable after construction; the constructor validates.
/// Boundary edges that are not listed carry the Neumann condition with zero traction.
class HpMesh {
public:
    HpMesh(std::vector<Eigen::Vector2d> nodes, std::vector<QuadElement> elements,
           std::vector<BoundaryEdge> boundary);

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_elements() const { return elements_.size(); }

    const std::vector<Eigen::Vector2d>& nodes() const { return nodes_; }
    const std::vector<QuadElement>& elements() const { return elements_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

    int degree(std::size_t e) const { return elements_[e].degree; }
    int max_degree() const;
    int min_degree() const;
    /// Diameter h_T.
    double size(std::size_t e) const { return sizes_[e]; }
    double max_size() const;
    double area(std::size_t e) const { return areas_[e]; }
    double total_area() const;
    GeometryMap geometry(std::size_t e) const;

    /// Global node ids of local edge `le` in local orientation.
    std::array<std::size_t, 2> edge_nodes(std::size_t e, int le) const;
    double edge_length(std::size_t e, int le) const;
    Eigen::Vector2d outward_normal(std::size_t e, int le) const;

    /// Neighbour across local edge, if any.
    std::optional<std::pair<std::size_t, int>> neighbour(std::size_t e, int le) const { return neighbours_[e][le]; }

    /// Total length of Dirichlet edges.
    double dirichlet_length() const;

private:
    void validate();

    std::vector<Eigen::Vector2d> nodes_;
    std::vector<QuadElement> elements_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<double> sizes_;
    std::vector<double> areas_;
    std::vector<std::array<std::optional<std::pair<std::size_t, int>>, 4>> neighbours_;
};

/// Point of local edge `le` at parameter s in [-1, 1], in reference coordinates.
Eigen::Vector2d reference_edge_point(int le, double s);

/// Uniform refinement: each quadrilateral is split into four; degrees and boundary tags are inherited.
HpMesh refine_uniform(const HpMesh& mesh);

/// Same geometry with every degree increased by `offset`.
HpMesh elevate_degree(const HpMesh& mesh, int offset);

enum class Side { Left, Right, Bottom, Top };

struct RectangleSpec {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    int nx = 1, ny = 1;
    int degree = 1;
    std::vector<Side> dirichlet{Side::Left};
    std::vector<Side> neumann{};
};

/// Structured nx x ny mesh of a rectangle with tagged sides.
HpMesh make_rectangle(const RectangleSpec& spec);

/// n x n unit square with the given Dirichlet and listed Neumann sides.
HpMesh unit_square(int n, int degree, std::vector<Side> dirichlet = {Side::Left},
                   std::vector<Side> neumann = {});

/// Copy of the mesh with per-element degrees replaced.
HpMesh with_degrees(const HpMesh& mesh, const std::vector<int>& degrees);

/// Point location. Returns element and reference coordinates.
std::optional<std::pair<std::size_t, Eigen::Vector2d>> locate(const HpMesh& mesh, const Eigen::Vector2d& x);

/// Embeds every element of `fine` into an element of `coarse` when `fine` is obtained from
/// `coarse` by uniform refinements and degree changes. Throws MeshError otherwise.
std::vector<ElementEmbedding> embed_nested(const HpMesh& fine, const HpMesh& coarse);

/// Text format with NODES / ELEMENTS / BOUNDARY sections.
HpMesh read_mesh(std::istream& in);
HpMesh read_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const HpMesh& mesh);

} // namespace hpep

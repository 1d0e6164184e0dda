#include "hpep/assembly.hpp"

#include "hpep/errors.hpp"
#include "hpep/quadrature.hpp"

#include <array>

namespace hpep {

namespace {

constexpr int L = DofSystem::L;

/// (C Phi_l) : Phi_k + (H Phi_l) : Phi_k, and C Phi_l itself.
struct MaterialCoefficients {
    Eigen::Matrix2d q_block;                 // row k, col l
    std::array<Eigen::Matrix2d, L> c_phi;    // C Phi_l as dense 2x2
};

MaterialCoefficients material_coefficients(const MaterialLaw& m)
{
    MaterialCoefficients mc;
    const auto& basis = basis_S(2);
    for (int l = 0; l < L; ++l) {
        const SymTensor cphi = apply_C(basis[l], m);
        mc.c_phi[l] = cphi.storage().topLeftCorner<2, 2>();
        DevTensor unit(2);
        unit.coeffs()[l] = 1.0;
        const DevTensor hphi = apply_H(unit, m);
        for (int k = 0; k < L; ++k)
            mc.q_block(k, l) = frobenius_dot(cphi, basis[k]) + hphi[k];
    }
    return mc;
}

struct ShapeData {
    Eigen::VectorXd n;
    Eigen::MatrixX2d grad; // physical
};

ShapeData displacement_shapes(int degree, const QuadraturePoint& qp)
{
    ShapeData s;
    Eigen::MatrixX2d ref;
    lobatto_lagrange(degree).eval(qp.xhat, s.n, &ref);
    s.grad = ref * qp.jinv_t.transpose();
    return s;
}

void scatter_uu(const DisplacementSpace& space, std::size_t e, const Eigen::MatrixXd& local, std::vector<Triplet>& out)
{
    const auto& links = space.links(e);
    for (const auto& r : links)
        for (const auto& c : links)
            for (int k = 0; k < 2; ++k)
                for (int m = 0; m < 2; ++m) {
                    const double v = r.coeff * c.coeff * local(2 * r.local + k, 2 * c.local + m);
                    if (v != 0.0)
                        out.emplace_back(static_cast<int>(2 * r.dof + k), static_cast<int>(2 * c.dof + m), v);
                }
}

Eigen::MatrixXd local_stiffness(const DofSystem& dofs, const MaterialLaw& mat, std::size_t e)
{
    const HpMesh& mesh = dofs.mesh();
    const int p = mesh.degree(e);
    const int nloc = dofs.displacement().local_size(e);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * nloc, 2 * nloc);
    const double mu = mat.lame_mu, lam = mat.lame_lambda;
    for (const auto& qp : element_quadrature(mesh, e, elevated_points(p))) {
        const ShapeData s = displacement_shapes(p, qp);
        for (int a = 0; a < nloc; ++a)
            for (int b = 0; b < nloc; ++b) {
                const Eigen::Vector2d ga = s.grad.row(a), gb = s.grad.row(b);
                const double dot = ga.dot(gb);
                for (int k = 0; k < 2; ++k)
                    for (int r = 0; r < 2; ++r) {
                        double v = mu * ga[r] * gb[k] + lam * ga[k] * gb[r];
                        if (k == r)
                            v += mu * dot;
                        K(2 * a + k, 2 * b + r) += qp.weight * v;
                    }
            }
    }
    return K;
}

void require_dirichlet(const HpMesh& mesh)
{
    if (!(mesh.dirichlet_length() > 0.0))
        throw BoundaryConditionError("no Dirichlet boundary: displacement block is singular");
}

} // namespace

LoadData LoadData::constant(const Eigen::Vector2d& f, const Eigen::Vector2d& g)
{
    LoadData d;
    if (f.squaredNorm() > 0.0)
        d.f = [f](const Eigen::Vector2d&) { return f; };
    if (g.squaredNorm() > 0.0)
        d.g = [g](const Eigen::Vector2d&, const Eigen::Vector2d&) { return g; };
    return d;
}

SymTensor strain(const Eigen::Matrix2d& grad)
{
    Eigen::MatrixXd e = 0.5 * (grad + grad.transpose());
    return SymTensor::from_matrix(e);
}

SparseMatrix assemble_stiffness(const DofSystem& dofs, const MaterialLaw& material)
{
    const auto& space = dofs.displacement();
    std::vector<Triplet> t;
    for (std::size_t e = 0; e < dofs.mesh().num_elements(); ++e)
        scatter_uu(space, e, local_stiffness(dofs, material, e), t);
    const auto n = static_cast<Eigen::Index>(dofs.u_size());
    return SparseMatrix::from_triplets(n, n, t, true);
}

Eigen::VectorXd assemble_load(const DofSystem& dofs, const LoadData& loads)
{
    const HpMesh& mesh = dofs.mesh();
    const auto& space = dofs.displacement();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.u_size()));
    auto add_local = [&](std::size_t e, const Eigen::VectorXd& n, const Eigen::Vector2d& force, double w) {
        for (const auto& lk : space.links(e))
            for (int k = 0; k < 2; ++k)
                rhs[static_cast<Eigen::Index>(2 * lk.dof + k)] += w * lk.coeff * n[lk.local] * force[k];
    };
    if (loads.f) {
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            const int p = mesh.degree(e);
            for (const auto& qp : element_quadrature(mesh, e, elevated_points(p))) {
                Eigen::VectorXd n;
                lobatto_lagrange(p).eval(qp.xhat, n);
                add_local(e, n, loads.f(qp.x), qp.weight);
            }
        }
    }
    if (loads.g) {
        std::vector<std::pair<std::size_t, int>> edges;
        std::vector<std::vector<char>> tagged(mesh.num_elements(), std::vector<char>(4, 0));
        for (const auto& be : mesh.boundary_edges()) {
            tagged[be.element][be.local_edge] = 1;
            if (be.tag == BoundaryTag::Neumann)
                edges.emplace_back(be.element, be.local_edge);
        }
        if (loads.traction_on_untagged)
            for (std::size_t e = 0; e < mesh.num_elements(); ++e)
                for (int le = 0; le < 4; ++le)
                    if (!mesh.neighbour(e, le) && !tagged[e][le])
                        edges.emplace_back(e, le);
        for (const auto& [e, le] : edges) {
            const int p = mesh.degree(e);
            const GeometryMap geo = mesh.geometry(e);
            const GaussRule1D rule = gauss_legendre(elevated_points(p));
            const double half = 0.5 * mesh.edge_length(e, le);
            const Eigen::Vector2d normal = mesh.outward_normal(e, le);
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const Eigen::Vector2d xhat = reference_edge_point(le, rule.points[q]);
                Eigen::VectorXd n;
                lobatto_lagrange(p).eval(xhat, n);
                add_local(e, n, loads.g(geo.map(xhat), normal), rule.weights[q] * half);
            }
        }
    }
    return rhs;
}

double linear_functional_l(const DofSystem& dofs, const LoadData& loads, const Eigen::VectorXd& v)
{
    return assemble_load(dofs, loads).dot(v);
}

SaddleSystem assemble_blocks(const DofSystem& dofs, const MaterialLaw& material, const LoadData& loads)
{
    material.validate();
    const HpMesh& mesh = dofs.mesh();
    require_dirichlet(mesh);
    const auto& space = dofs.displacement();
    const MaterialCoefficients mc = material_coefficients(material);

    std::vector<Triplet> ta, tb, tc;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        scatter_uu(space, e, local_stiffness(dofs, material, e), ta);

        const int p = mesh.degree(e);
        const int nloc = space.local_size(e);
        const int nq = dofs.nodes_in_element(e);
        // Local B: rows (disp node a, comp k), cols (Q node j, basis l).
        Eigen::MatrixXd bloc = Eigen::MatrixXd::Zero(2 * nloc, L * nq);
        Eigen::VectorXd phi;
        for (const auto& qp : element_quadrature(mesh, e, elevated_points(p))) {
            const ShapeData s = displacement_shapes(p, qp);
            gauss_lagrange(p).eval(qp.xhat, phi);
            for (int l = 0; l < L; ++l) {
                // (C Phi_l) : eps(e_k N_a) = (C Phi_l grad N_a)_k
                const Eigen::MatrixX2d cg = s.grad * mc.c_phi[l]; // row a = (C Phi_l grad N_a)^T
                for (int a = 0; a < nloc; ++a)
                    for (int k = 0; k < 2; ++k)
                        for (int j = 0; j < nq; ++j)
                            bloc(2 * a + k, L * j + l) -= qp.weight * phi[j] * cg(a, k);
            }
        }
        const std::size_t off = dofs.element_offset(e);
        for (const auto& lk : space.links(e))
            for (int k = 0; k < 2; ++k)
                for (int col = 0; col < L * nq; ++col) {
                    const double v = lk.coeff * bloc(2 * lk.local + k, col);
                    if (v != 0.0)
                        tb.emplace_back(static_cast<int>(2 * lk.dof + k), static_cast<int>(L * off + col), v);
                }
        const Eigen::MatrixXd& G = dofs.element_mass(e);
        for (int i = 0; i < nq; ++i)
            for (int j = 0; j < nq; ++j)
                for (int k = 0; k < L; ++k)
                    for (int l = 0; l < L; ++l) {
                        const double v = mc.q_block(k, l) * G(i, j);
                        if (v != 0.0)
                            tc.emplace_back(static_cast<int>(L * (off + i) + k), static_cast<int>(L * (off + j) + l), v);
                    }
    }
    const auto nu = static_cast<Eigen::Index>(dofs.u_size());
    const auto nqs = static_cast<Eigen::Index>(dofs.q_size());
    SaddleSystem sys;
    sys.A = SparseMatrix::from_triplets(nu, nu, ta, true);
    sys.B = SparseMatrix::from_triplets(nu, nqs, tb);
    sys.C = SparseMatrix::from_triplets(nqs, nqs, tc, true);
    sys.d.resize(nqs);
    for (std::size_t i = 0; i < dofs.N(); ++i)
        for (int k = 0; k < L; ++k)
            sys.d[static_cast<Eigen::Index>(L * i + k)] = dofs.d_weights()[static_cast<Eigen::Index>(i)];
    sys.l = -assemble_load(dofs, loads);
    return sys;
}

double bilinear_a(const DofSystem& dofs, const MaterialLaw& material, const Eigen::VectorXd& v, const Eigen::VectorXd& q,
                  const Eigen::VectorXd& w, const Eigen::VectorXd& mu)
{
    const HpMesh& mesh = dofs.mesh();
    const auto& space = dofs.displacement();
    double sum = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        for (const auto& qp : element_quadrature(mesh, e, elevated_points(mesh.degree(e)))) {
            const SymTensor ev = strain(space.gradient(e, qp.xhat, qp.jinv_t, v));
            const SymTensor ew = strain(space.gradient(e, qp.xhat, qp.jinv_t, w));
            const DevTensor qv = dofs.q_value(q, QBasis::Primal, e, qp.xhat);
            const DevTensor mv = dofs.q_value(mu, QBasis::Primal, e, qp.xhat);
            const SymTensor sigma = apply_C(ev - reconstruct(qv), material);
            sum += qp.weight * (frobenius_dot(sigma, ew - reconstruct(mv)) + apply_H(qv, material).dot(mv));
        }
    return sum;
}

Eigen::VectorXd project_P_hp(const DofSystem& dofs, const ElementTensorField& q)
{
    const HpMesh& mesh = dofs.mesh();
    Eigen::VectorXd out(static_cast<Eigen::Index>(dofs.q_size()));
    Eigen::VectorXd phi;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const int p = mesh.degree(e);
        const int nq = dofs.nodes_in_element(e);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nq, L);
        for (const auto& qp : element_quadrature(mesh, e, elevated_points(p))) {
            gauss_lagrange(p).eval(qp.xhat, phi);
            const DevTensor val = q(e, qp.xhat, qp.x);
            for (int l = 0; l < L; ++l)
                rhs.col(l) += qp.weight * val[l] * phi;
        }
        const Eigen::MatrixXd sol = dofs.element_mass(e).llt().solve(rhs);
        const std::size_t off = dofs.element_offset(e);
        for (int j = 0; j < nq; ++j)
            for (int l = 0; l < L; ++l)
                out[static_cast<Eigen::Index>(L * (off + j) + l)] = sol(j, l);
    }
    return out;
}

Eigen::VectorXd interpolate_J_hp(const DofSystem& dofs, const ElementTensorField& q)
{
    const HpMesh& mesh = dofs.mesh();
    Eigen::VectorXd out(static_cast<Eigen::Index>(dofs.q_size()));
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const GeometryMap geo = mesh.geometry(e);
        const auto& basis = gauss_lagrange(mesh.degree(e));
        for (int k = 0; k < dofs.nodes_in_element(e); ++k) {
            const Eigen::Vector2d xhat = basis.node(k);
            const DevTensor val = q(e, xhat, geo.map(xhat));
            for (int l = 0; l < L; ++l)
                out[static_cast<Eigen::Index>(L * dofs.zeta(e, k) + l)] = val[l];
        }
    }
    return out;
}

Eigen::VectorXd project_I_hp(const DofSystem& dofs, const MaterialLaw& material, const ElementGradientField& grad_v)
{
    const HpMesh& mesh = dofs.mesh();
    require_dirichlet(mesh);
    const auto& space = dofs.displacement();
    const SparseMatrix A = assemble_stiffness(dofs, material);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.u_size()));
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const int p = mesh.degree(e);
        for (const auto& qp : element_quadrature(mesh, e, elevated_points(p))) {
            const ShapeData s = displacement_shapes(p, qp);
            const SymTensor sigma = apply_C(strain(grad_v(e, qp.xhat, qp.x)), material);
            const Eigen::Matrix2d sm = sigma.storage().topLeftCorner<2, 2>();
            for (const auto& lk : space.links(e)) {
                // sigma : eps(e_k N) = (sigma grad N)_k
                const Eigen::Vector2d sg = sm * s.grad.row(lk.local).transpose();
                for (int k = 0; k < 2; ++k)
                    rhs[static_cast<Eigen::Index>(2 * lk.dof + k)] += qp.weight * lk.coeff * sg[k];
            }
        }
    }
    return factor_solve(A, rhs);
}

} // namespace hpep

#include "hpep/hp_spaces.hpp"

#include "hpep/errors.hpp"
#include "hpep/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace hpep {

Lagrange1D::Lagrange1D(std::vector<double> nodes) : nodes_(std::move(nodes)), denom_(nodes_.size(), 1.0)
{
    for (std::size_t j = 0; j < nodes_.size(); ++j)
        for (std::size_t m = 0; m < nodes_.size(); ++m)
            if (m != j)
                denom_[j] *= nodes_[j] - nodes_[m];
}

void Lagrange1D::eval(double x, double* values, double* derivs) const
{
    const std::size_t n = nodes_.size();
    for (std::size_t j = 0; j < n; ++j) {
        double v = 1.0;
        for (std::size_t m = 0; m < n; ++m)
            if (m != j)
                v *= x - nodes_[m];
        values[j] = v / denom_[j];
        if (derivs) {
            double d = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                if (r == j)
                    continue;
                double t = 1.0;
                for (std::size_t m = 0; m < n; ++m)
                    if (m != j && m != r)
                        t *= x - nodes_[m];
                d += t;
            }
            derivs[j] = d / denom_[j];
        }
    }
}

Eigen::Vector2d TensorLagrange::node(int k) const
{
    const int n = b_.size();
    return {b_.nodes()[k % n], b_.nodes()[k / n]};
}

void TensorLagrange::eval(const Eigen::Vector2d& xhat, Eigen::VectorXd& values, Eigen::MatrixX2d* grads) const
{
    const int n = b_.size();
    double vx[16], vy[16], dx[16], dy[16];
    b_.eval(xhat.x(), vx, grads ? dx : nullptr);
    b_.eval(xhat.y(), vy, grads ? dy : nullptr);
    values.resize(n * n);
    if (grads)
        grads->resize(n * n, 2);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const int k = ix + n * iy;
            values[k] = vx[ix] * vy[iy];
            if (grads) {
                (*grads)(k, 0) = dx[ix] * vy[iy];
                (*grads)(k, 1) = vx[ix] * dy[iy];
            }
        }
}

namespace {

constexpr int kMaxDegree = 14;

const TensorLagrange& cached(int p, bool lobatto)
{
    if (p < 1 || p > kMaxDegree)
        throw Error("polynomial degree out of supported range");
    static std::mutex mtx;
    static std::map<std::pair<int, bool>, std::unique_ptr<TensorLagrange>> cache;
    std::lock_guard lock(mtx);
    auto& slot = cache[{p, lobatto}];
    if (!slot)
        slot = std::make_unique<TensorLagrange>(lobatto ? gauss_lobatto_points(p) : gauss_legendre(p).points);
    return *slot;
}

double snap(double c)
{
    if (std::abs(c) < 1e-13)
        return 0.0;
    if (std::abs(c - 1.0) < 1e-13)
        return 1.0;
    return c;
}

} // namespace

const TensorLagrange& gauss_lagrange(int p) { return cached(p, false); }
const TensorLagrange& lobatto_lagrange(int p) { return cached(p, true); }

double lagrange_phi(int degree, int k, const Eigen::Vector2d& xhat)
{
    const auto& basis = gauss_lagrange(degree);
    if (k < 0 || k >= basis.size())
        throw Error("lagrange_phi: local index out of range");
    Eigen::VectorXd v;
    basis.eval(xhat, v);
    return v[k];
}

std::vector<QuadraturePoint> element_quadrature(const HpMesh& mesh, std::size_t e, int points)
{
    const GeometryMap g = mesh.geometry(e);
    const GaussRule rule = gauss_rule(points, 2);
    std::vector<QuadraturePoint> out;
    out.reserve(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Eigen::Matrix2d j = g.jacobian(rule.points[q]);
        const double det = j.determinant();
        if (!(det > 0.0))
            throw GeometryError("inverted element " + std::to_string(e));
        out.push_back({rule.points[q], g.map(rule.points[q]), rule.weights[q] * det, j.inverse().transpose()});
    }
    return out;
}

DisplacementSpace::DisplacementSpace(const HpMesh& mesh)
{
    const std::size_t ne = mesh.num_elements();
    local_size_.resize(ne);
    degree_.resize(ne);
    links_.resize(ne);

    // Global scalar ids: mesh vertices first, then edge interiors, then element interiors.
    std::size_t next = mesh.num_nodes();
    struct EdgeDofs {
        int degree;
        std::size_t first;
    };
    std::map<std::pair<std::size_t, std::size_t>, EdgeDofs> edge_dofs;
    for (std::size_t e = 0; e < ne; ++e)
        for (int le = 0; le < 4; ++le) {
            const auto en = mesh.edge_nodes(e, le);
            const auto key = std::make_pair(std::min(en[0], en[1]), std::max(en[0], en[1]));
            if (edge_dofs.count(key))
                continue;
            int q = mesh.degree(e);
            if (auto nb = mesh.neighbour(e, le))
                q = std::min(q, mesh.degree(nb->first));
            edge_dofs[key] = {q, next};
            next += static_cast<std::size_t>(q - 1);
        }

    std::vector<std::vector<Link>> raw(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        const int p = mesh.degree(e);
        degree_[e] = p;
        local_size_[e] = (p + 1) * (p + 1);
        const auto& xi = lobatto_lagrange(p).one_d().nodes();
        const auto& vn = mesh.elements()[e].nodes;
        auto corner_of = [&](int ix, int iy) -> int {
            if (ix == 0 && iy == 0) return 0;
            if (ix == p && iy == 0) return 1;
            if (ix == p && iy == p) return 2;
            if (ix == 0 && iy == p) return 3;
            return -1;
        };
        for (int iy = 0; iy <= p; ++iy)
            for (int ix = 0; ix <= p; ++ix) {
                const int local = ix + (p + 1) * iy;
                if (int c = corner_of(ix, iy); c >= 0) {
                    raw[e].push_back({local, vn[c], 1.0});
                    continue;
                }
                int le = -1;
                double s = 0.0;
                if (iy == 0) { le = 0; s = xi[ix]; }
                else if (ix == p) { le = 1; s = xi[iy]; }
                else if (iy == p) { le = 2; s = -xi[ix]; }
                else if (ix == 0) { le = 3; s = -xi[iy]; }
                if (le < 0) {
                    raw[e].push_back({local, next++, 1.0});
                    continue;
                }
                const auto en = mesh.edge_nodes(e, le);
                const std::size_t a = std::min(en[0], en[1]), b = std::max(en[0], en[1]);
                const double t = (en[0] == a) ? s : -s;
                const EdgeDofs& ed = edge_dofs.at({a, b});
                const Lagrange1D edge_basis(gauss_lobatto_points(ed.degree));
                std::vector<double> w(ed.degree + 1);
                edge_basis.eval(t, w.data());
                for (int j = 0; j <= ed.degree; ++j) {
                    const double c = snap(w[j]);
                    if (c == 0.0)
                        continue;
                    const std::size_t dof = j == 0 ? a : (j == ed.degree ? b : ed.first + j - 1);
                    raw[e].push_back({local, dof, c});
                }
            }
    }

    // Dirichlet elimination: vertices and edge interiors of Gamma_D edges.
    std::vector<char> fixed(next, 0);
    for (const auto& be : mesh.boundary_edges()) {
        if (be.tag != BoundaryTag::Dirichlet)
            continue;
        const auto en = mesh.edge_nodes(be.element, be.local_edge);
        fixed[en[0]] = fixed[en[1]] = 1;
        const auto& ed = edge_dofs.at({std::min(en[0], en[1]), std::max(en[0], en[1])});
        for (int j = 0; j < ed.degree - 1; ++j)
            fixed[ed.first + j] = 1;
    }
    std::vector<std::size_t> renumber(next, static_cast<std::size_t>(-1));
    for (std::size_t g = 0; g < next; ++g)
        if (!fixed[g])
            renumber[g] = num_free_++;
    for (std::size_t e = 0; e < ne; ++e)
        for (const auto& lk : raw[e])
            if (!fixed[lk.dof])
                links_[e].push_back({lk.local, renumber[lk.dof], lk.coeff});
}

Eigen::MatrixX2d DisplacementSpace::gather(std::size_t e, const Eigen::VectorXd& a) const
{
    Eigen::MatrixX2d u = Eigen::MatrixX2d::Zero(local_size_[e], 2);
    for (const auto& lk : links_[e]) {
        u(lk.local, 0) += lk.coeff * a[2 * lk.dof];
        u(lk.local, 1) += lk.coeff * a[2 * lk.dof + 1];
    }
    return u;
}

Eigen::Vector2d DisplacementSpace::value(std::size_t e, const Eigen::Vector2d& xhat, const Eigen::VectorXd& a) const
{
    Eigen::VectorXd n;
    lobatto_lagrange(degree_[e]).eval(xhat, n);
    return gather(e, a).transpose() * n;
}

Eigen::Matrix2d DisplacementSpace::gradient(std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Matrix2d& jinv_t,
                                            const Eigen::VectorXd& a) const
{
    Eigen::VectorXd n;
    Eigen::MatrixX2d dn;
    lobatto_lagrange(degree_[e]).eval(xhat, n, &dn);
    const Eigen::MatrixX2d phys = dn * jinv_t.transpose();
    return gather(e, a).transpose() * phys;
}

void element_mass_and_weights(const HpMesh& mesh, std::size_t e, Eigen::MatrixXd& mass, Eigen::VectorXd& weights)
{
    const int p = mesh.degree(e);
    const auto& basis = gauss_lagrange(p);
    const int n = basis.size();
    mass = Eigen::MatrixXd::Zero(n, n);
    weights = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v;
    for (const auto& qp : element_quadrature(mesh, e, elevated_points(p))) {
        basis.eval(qp.xhat, v);
        mass.noalias() += qp.weight * v * v.transpose();
        weights += qp.weight * v;
    }
}

Eigen::MatrixXd build_biorthogonal(const Eigen::MatrixXd& mass, const Eigen::VectorXd& weights)
{
    Eigen::LLT<Eigen::MatrixXd> llt(mass);
    if (llt.info() != Eigen::Success)
        throw AssemblyError("singular element mass matrix: degenerate element geometry");
    // c G = diag(D)  <=>  G c^T = diag(D) since G is symmetric.
    Eigen::MatrixXd ct = llt.solve(Eigen::MatrixXd(weights.asDiagonal()));
    return ct.transpose();
}

DofSystem::DofSystem(HpMesh mesh, double sigma_y) : mesh_(std::move(mesh)), sigma_y_(sigma_y), disp_(mesh_)
{
    if (!(sigma_y > 0.0))
        throw ConfigError("sigma_y must be positive");
    const std::size_t ne = mesh_.num_elements();
    offset_.resize(ne);
    n_local_.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        offset_[e] = n_total_;
        n_local_[e] = mesh_.degree(e) * mesh_.degree(e);
        n_total_ += static_cast<std::size_t>(n_local_[e]);
    }
    d_.resize(static_cast<Eigen::Index>(n_total_));
    sigma_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_total_), sigma_y);
    dual_.resize(ne);
    mass_.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        Eigen::VectorXd w;
        element_mass_and_weights(mesh_, e, mass_[e], w);
        for (int k = 0; k < n_local_[e]; ++k) {
            if (!(w[k] > 0.0))
                throw GeometryError("non-positive weight D_i on element " + std::to_string(e));
            d_[static_cast<Eigen::Index>(offset_[e] + k)] = w[k];
        }
        dual_[e] = build_biorthogonal(mass_[e], w);
    }
}

std::pair<std::size_t, int> DofSystem::zeta_inverse(std::size_t i) const
{
    if (i >= n_total_)
        throw LookupError("zeta_inverse: index out of range");
    const auto it = std::upper_bound(offset_.begin(), offset_.end(), i);
    const std::size_t e = static_cast<std::size_t>(it - offset_.begin()) - 1;
    return {e, static_cast<int>(i - offset_[e])};
}

DevTensor DofSystem::q_value(const Eigen::VectorXd& coeffs, QBasis basis, std::size_t e,
                             const Eigen::Vector2d& xhat) const
{
    Eigen::VectorXd v;
    gauss_lagrange(mesh_.degree(e)).eval(xhat, v);
    if (basis == QBasis::Dual)
        v = dual_[e].transpose() * v; // dual_j(x) = sum_k c_jk phi_k(x)
    DevTensor out(2);
    for (int k = 0; k < n_local_[e]; ++k) {
        const std::size_t i = offset_[e] + k;
        out.coeffs()[0] += v[k] * coeffs[static_cast<Eigen::Index>(L * i)];
        out.coeffs()[1] += v[k] * coeffs[static_cast<Eigen::Index>(L * i + 1)];
    }
    return out;
}

Eigen::VectorXd DofSystem::dual_to_primal(const Eigen::VectorXd& dual) const
{
    Eigen::VectorXd primal(dual.size());
    for (std::size_t e = 0; e < mesh_.num_elements(); ++e) {
        const int n = n_local_[e];
        const auto base = static_cast<Eigen::Index>(L * offset_[e]);
        // Row-major (node, component) block: primal = c^T dual per component.
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, L, Eigen::RowMajor>> in(dual.data() + base, n, L);
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, L, Eigen::RowMajor>> out(primal.data() + base, n, L);
        out = dual_[e].transpose() * in;
    }
    return primal;
}

DevTensor eval_Qhp_field(const DofSystem& dofs, const Eigen::VectorXd& coeffs, QBasis basis, const Eigen::Vector2d& x)
{
    const auto hit = locate(dofs.mesh(), x);
    if (!hit)
        throw LookupError("point outside mesh");
    return dofs.q_value(coeffs, basis, hit->first, hit->second);
}

} // namespace hpep

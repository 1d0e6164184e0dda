#include "hpep/problems.hpp"

#include "hpep/errors.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace hpep {

namespace {

using Vec = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

/// Scalar field with first and second derivatives.
struct Smooth {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
    std::function<Mat(const Vec&)> hess;
};

/// trig(a x) * trig(b y) with trig in {sin, cos}.
Smooth trig_product(bool sin_x, double a, bool sin_y, double b)
{
    // derivatives of sin: cos, -sin; of cos: -sin, -cos
    auto f = [](bool is_sin, double t, int order) {
        const double s = std::sin(t), c = std::cos(t);
        switch (order) {
        case 0: return is_sin ? s : c;
        case 1: return is_sin ? c : -s;
        default: return is_sin ? -s : -c;
        }
    };
    Smooth out;
    out.value = [=](const Vec& x) { return f(sin_x, a * x[0], 0) * f(sin_y, b * x[1], 0); };
    out.grad = [=](const Vec& x) {
        return Vec(a * f(sin_x, a * x[0], 1) * f(sin_y, b * x[1], 0), b * f(sin_x, a * x[0], 0) * f(sin_y, b * x[1], 1));
    };
    out.hess = [=](const Vec& x) {
        Mat h;
        h(0, 0) = a * a * f(sin_x, a * x[0], 2) * f(sin_y, b * x[1], 0);
        h(1, 1) = b * b * f(sin_x, a * x[0], 0) * f(sin_y, b * x[1], 2);
        h(0, 1) = h(1, 0) = a * b * f(sin_x, a * x[0], 1) * f(sin_y, b * x[1], 1);
        return h;
    };
    return out;
}

std::array<Smooth, 2> components(const std::string& name)
{
    constexpr double pi = std::numbers::pi;
    if (name == "trig")
        return {trig_product(true, pi, false, pi), trig_product(true, 0.5 * pi, true, pi)};
    if (name == "polynomial") {
        // u1 = x^2 y + x, u2 = x y^2 - x^3
        Smooth u1{[](const Vec& x) { return x[0] * x[0] * x[1] + x[0]; },
                  [](const Vec& x) { return Vec(2 * x[0] * x[1] + 1, x[0] * x[0]); },
                  [](const Vec& x) {
                      Mat h;
                      h << 2 * x[1], 2 * x[0], 2 * x[0], 0;
                      return h;
                  }};
        Smooth u2{[](const Vec& x) { return x[0] * x[1] * x[1] - x[0] * x[0] * x[0]; },
                  [](const Vec& x) { return Vec(x[1] * x[1] - 3 * x[0] * x[0], 2 * x[0] * x[1]); },
                  [](const Vec& x) {
                      Mat h;
                      h << -6 * x[0], 2 * x[1], 2 * x[1], 2 * x[0];
                      return h;
                  }};
        return {u1, u2};
    }
    if (name == "exponential") {
        // u1 = x e^y, u2 = (e^x - 1) y
        Smooth u1{[](const Vec& x) { return x[0] * std::exp(x[1]); },
                  [](const Vec& x) { return Vec(std::exp(x[1]), x[0] * std::exp(x[1])); },
                  [](const Vec& x) {
                      const double ey = std::exp(x[1]);
                      Mat h;
                      h << 0, ey, ey, x[0] * ey;
                      return h;
                  }};
        Smooth u2{[](const Vec& x) { return (std::exp(x[0]) - 1.0) * x[1]; },
                  [](const Vec& x) { return Vec(std::exp(x[0]) * x[1], std::exp(x[0]) - 1.0); },
                  [](const Vec& x) {
                      const double ex = std::exp(x[0]);
                      Mat h;
                      h << ex * x[1], ex, ex, 0;
                      return h;
                  }};
        return {u1, u2};
    }
    throw ConfigError("unknown manufactured solution '" + name + "'");
}

Mat gradient_of(const std::array<Smooth, 2>& u, const Vec& x)
{
    Mat g;
    g.row(0) = u[0].grad(x).transpose();
    g.row(1) = u[1].grad(x).transpose();
    return g;
}

Mat stress_of(const std::array<Smooth, 2>& u, const MaterialLaw& m, const Vec& x)
{
    return apply_C(strain(gradient_of(u, x)), m).storage().topLeftCorner<2, 2>();
}

} // namespace

std::vector<std::string> manufactured_names() { return {"trig", "polynomial", "exponential"}; }

ExactSolution manufactured_solution(const std::string& name, const MaterialLaw& material)
{
    const auto u = components(name);
    ExactSolution s;
    s.u = [u](const Vec& x) { return Vec(u[0].value(x), u[1].value(x)); };
    s.grad_u = [u](const Vec& x) { return gradient_of(u, x); };
    s.p = [](const Vec&) { return DevTensor(2); };
    s.lambda = [u, material](const Vec& x) { return deviator(apply_C(strain(gradient_of(u, x)), material)); };
    return s;
}

LoadData manufactured_loads(const std::string& name, const MaterialLaw& material)
{
    const auto u = components(name);
    LoadData d;
    d.f = [u, material](const Vec& x) {
        const Mat h0 = u[0].hess(x), h1 = u[1].hess(x);
        const Vec lap(h0.trace(), h1.trace());
        // grad div u: (d_i d_j u_j)
        const Vec grad_div(h0(0, 0) + h1(0, 1), h0(1, 0) + h1(1, 1));
        return Vec(-(material.lame_mu * lap + (material.lame_lambda + material.lame_mu) * grad_div));
    };
    d.g = [u, material](const Vec& x, const Vec& n) { return Vec(stress_of(u, material, x) * n); };
    d.traction_on_untagged = true;
    return d;
}

Problem manufactured_problem(const std::string& name, HpMesh mesh, const MaterialLaw& material)
{
    Problem p{name, std::move(mesh), material, manufactured_loads(name, material),
              manufactured_solution(name, material)};
    p.s = p.t = p.l = std::numeric_limits<double>::infinity();
    return p;
}

Problem plastic_benchmark(const BenchmarkSpec& spec)
{
    HpMesh mesh = unit_square(spec.n, spec.degree, {Side::Left}, {Side::Right});
    Problem p{"plastic", std::move(mesh), spec.material, LoadData::constant(Vec::Zero(), spec.traction), std::nullopt};
    return p;
}

} // namespace hpep

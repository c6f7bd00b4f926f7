#include "mvvm/cases.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mvvm {

namespace {

double bubble(const Point& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); }

Point bubble_gradient(const Point& x)
{
    return {(1 - 2 * x.x()) * x.y() * (1 - x.y()), x.x() * (1 - x.x()) * (1 - 2 * x.y())};
}

double bubble_laplacian(const Point& x) { return -2 * x.y() * (1 - x.y()) - 2 * x.x() * (1 - x.x()); }

} // namespace

ManufacturedCase sine_coefficient_case()
{
    ManufacturedCase c;
    c.name              = "sine-coefficient";
    c.pressure          = bubble;
    c.pressure_gradient = bubble_gradient;
    c.coefficient       = [](const Point& x) -> Eigen::Matrix2d {
        return (1.0 + 0.5 * std::sin(x.x())) * Eigen::Matrix2d::Identity();
    };
    // -div(K grad p) = -(K' p_x + K lap p)
    c.forcing = [](const Point& x) {
        return -(0.5 * std::cos(x.x()) * bubble_gradient(x).x() + (1.0 + 0.5 * std::sin(x.x())) * bubble_laplacian(x));
    };
    return c;
}

ManufacturedCase unit_coefficient_case()
{
    ManufacturedCase c;
    c.name              = "unit-coefficient";
    c.pressure          = bubble;
    c.pressure_gradient = bubble_gradient;
    c.coefficient       = [](const Point&) -> Eigen::Matrix2d { return Eigen::Matrix2d::Identity(); };
    c.forcing           = [](const Point& x) { return -bubble_laplacian(x); };
    return c;
}

ManufacturedCase zero_case()
{
    ManufacturedCase c;
    c.name              = "zero";
    c.pressure          = [](const Point&) { return 0.0; };
    c.pressure_gradient = [](const Point&) { return Point(0.0, 0.0); };
    c.coefficient       = [](const Point&) -> Eigen::Matrix2d { return Eigen::Matrix2d::Identity(); };
    c.forcing           = [](const Point&) { return 0.0; };
    return c;
}

ManufacturedCase polynomial_case(int degree, const Eigen::Matrix2d& coefficient)
{
    if (degree < 0) throw std::invalid_argument("polynomial degree must be non-negative");

    struct Term
    {
        int    a, b;
        double c;
    };
    std::vector<Term> terms;
    for (int d = 0; d <= degree; ++d)
        for (int j = 0; j <= d; ++j)
        {
            const int a = d - j;
            const int b = j;
            // fixed, sign-alternating coefficients so every monomial is present
            terms.push_back({a, b, ((a + 2 * b) % 2 == 0 ? 1.0 : -1.0) / (1.0 + a + 2 * b)});
        }

    auto power = [](double x, int n) { return n <= 0 ? 1.0 : std::pow(x, n); };

    ManufacturedCase c;
    c.name     = "poly" + std::to_string(degree);
    c.pressure = [terms, power](const Point& x) {
        double s = 0.0;
        for (const auto& t : terms) s += t.c * power(x.x(), t.a) * power(x.y(), t.b);
        return s;
    };
    c.pressure_gradient = [terms, power](const Point& x) {
        Point g = Point::Zero();
        for (const auto& t : terms)
        {
            if (t.a > 0) g.x() += t.c * t.a * power(x.x(), t.a - 1) * power(x.y(), t.b);
            if (t.b > 0) g.y() += t.c * t.b * power(x.x(), t.a) * power(x.y(), t.b - 1);
        }
        return g;
    };
    c.coefficient = [coefficient](const Point&) -> Eigen::Matrix2d { return coefficient; };
    c.forcing     = [terms, power, coefficient](const Point& x) {
        double pxx = 0.0, pxy = 0.0, pyy = 0.0;
        for (const auto& t : terms)
        {
            if (t.a > 1) pxx += t.c * t.a * (t.a - 1) * power(x.x(), t.a - 2) * power(x.y(), t.b);
            if (t.b > 1) pyy += t.c * t.b * (t.b - 1) * power(x.x(), t.a) * power(x.y(), t.b - 2);
            if (t.a > 0 && t.b > 0) pxy += t.c * t.a * t.b * power(x.x(), t.a - 1) * power(x.y(), t.b - 1);
        }
        return -(coefficient(0, 0) * pxx + (coefficient(0, 1) + coefficient(1, 0)) * pxy + coefficient(1, 1) * pyy);
    };
    return c;
}

ManufacturedCase make_case(const std::string& name)
{
    if (name == "sine-coefficient") return sine_coefficient_case();
    if (name == "unit-coefficient") return unit_coefficient_case();
    if (name == "zero") return zero_case();
    if (name == "linear")
    {
        auto c = polynomial_case(1, Eigen::Matrix2d::Identity());
        c.name = "linear";
        return c;
    }
    if (name.size() == 5 && name.rfind("poly", 0) == 0 && name[4] >= '1' && name[4] <= '5')
    {
        Eigen::Matrix2d k;
        k << 2.0, 0.5, 0.5, 1.0;
        return polynomial_case(name[4] - '0', k);
    }
    throw std::invalid_argument("unknown case '" + name + "'");
}

std::vector<std::string> case_names()
{
    return {"sine-coefficient", "unit-coefficient", "zero", "linear", "poly1", "poly2", "poly3", "poly4", "poly5"};
}

double forcing_consistency_error(const ManufacturedCase& c, int samples, std::uint64_t seed)
{
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> coord(0.05, 0.95);
    constexpr double                       step = 1e-4;

    double scale = 0.0;
    double worst = 0.0;
    for (int s = 0; s < samples; ++s)
    {
        const Point x(coord(rng), coord(rng));
        auto        flux = [&](const Point& y) -> Point { return c.coefficient(y) * c.pressure_gradient(y); };
        const double div = (flux(x + Point(step, 0)).x() - flux(x - Point(step, 0)).x()
                            + flux(x + Point(0, step)).y() - flux(x - Point(0, step)).y())
                         / (2 * step);
        worst = std::max(worst, std::abs(c.forcing(x) + div));
        scale = std::max(scale, std::abs(c.forcing(x)));
    }
    return worst / std::max(scale, 1.0);
}

} // namespace mvvm

#include "twoball/degree.hpp"

#include <json.hpp>

#include "twoball/errors.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>

namespace twoball::degree {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxBisection = 30;
constexpr int kPreimageRetries = 5;

void require_dimension(const SphereMap& map, int m, const char* op)
{
    if (map.m != m)
        throw InvalidArgument(std::string(op) + " needs a map of S^" + std::to_string(m));
    if (!map.eval)
        throw InvalidArgument(std::string(op) + ": map has no evaluator");
}

VecX circle_point(double theta)
{
    VecX p(2);
    p << std::cos(theta), std::sin(theta);
    return p;
}

VecX reflect(const VecX& p, const VecX& y)
{
    return y - 2.0 * y.dot(p) * p;
}

double signed_angle(const VecX& a, const VecX& b)
{
    return std::atan2(a[0] * b[1] - a[1] * b[0], a.dot(b));
}

// Solid angle of the geodesic triangle (a, b, c), signed by orientation.
double solid_angle(const Vec3& a, const Vec3& b, const Vec3& c)
{
    return 2.0 * std::atan2(a.dot(b.cross(c)), 1.0 + a.dot(b) + b.dot(c) + c.dot(a));
}

VecX to_x(const Vec3& v)
{
    return VecX(v);
}

Vec3 to_3(const VecX& v)
{
    return Vec3(v[0], v[1], v[2]);
}

// Positively oriented orthonormal tangent basis at x on S^2.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& x)
{
    const Vec3 helper = std::abs(x.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = (helper - helper.dot(x) * x).normalized();
    return {e1, x.cross(e1)};
}

std::vector<VecX> sample_points(int m, int samples)
{
    std::vector<VecX> pts;
    if (m == 1) {
        const int n = samples > 0 ? samples : 720;
        for (int k = 0; k < n; ++k)
            pts.push_back(circle_point(2.0 * kPi * (k + 0.5) / n));
    } else {
        const Icosphere ico = icosphere(samples > 0 ? samples : 4);
        for (const Vec3& v : ico.vertices)
            pts.push_back(to_x(v));
    }
    return pts;
}

DegreeResult rounded(double raw, Method method, int samples)
{
    DegreeResult r;
    r.raw = raw;
    r.degree = static_cast<int>(std::lround(raw));
    r.residual = std::abs(raw - r.degree);
    r.method = method;
    r.samples = samples;
    return r;
}

} // namespace

VecX SphereMap::operator()(const VecX& p) const
{
    VecX y = eval(p);
    if (y.size() != m + 1 || !y.allFinite() || std::abs(y.norm() - 1.0) > kUnitTol)
        throw InvalidArgument("sphere map '" + name + "' returned a point off S^" + std::to_string(m));
    return y;
}

const char* to_string(Method m) noexcept
{
    switch (m) {
    case Method::Winding: return "winding";
    case Method::JacobianAverage: return "jacobian_average";
    case Method::PreimageCount: return "preimage_count";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

DegreeResult winding_number(const SphereMap& map, int samples)
{
    require_dimension(map, 1, "winding_number");
    const int minimum = static_cast<int>(std::ceil(4.0 * map.lipschitz));
    if (samples > 0 && samples < minimum)
        throw InvalidArgument("winding_number needs at least 4 x Lipschitz samples");
    const int n = std::max({samples, minimum, 64});

    int used = 0;
    // Angle swept between parameters a and b, bisecting large steps.
    std::function<double(double, double, const VecX&, const VecX&, int)> sweep =
        [&](double a, double b, const VecX& ya, const VecX& yb, int depth) -> double {
        const double d = signed_angle(ya, yb);
        if (std::abs(d) <= 0.5 * kPi)
            return d;
        if (depth >= kMaxBisection)
            throw UnreliableSampling("winding step stays above pi/2 after bisection for map '" + map.name + "'");
        const double mid = 0.5 * (a + b);
        const VecX ym = map(circle_point(mid));
        ++used;
        return sweep(a, mid, ya, ym, depth + 1) + sweep(mid, b, ym, yb, depth + 1);
    };

    std::vector<VecX> ys(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        ys[static_cast<std::size_t>(k)] = map(circle_point(2.0 * kPi * k / n));
    used += n;
    double total = 0.0;
    for (int k = 0; k < n; ++k)
        total += sweep(2.0 * kPi * k / n, 2.0 * kPi * (k + 1) / n, ys[static_cast<std::size_t>(k)],
                       ys[static_cast<std::size_t>((k + 1) % n)], 0);
    DegreeResult r = rounded(total / (2.0 * kPi), Method::Winding, used);
    if (r.residual >= kIntegerTol)
        throw UnreliableSampling("winding number is not close to an integer");
    return r;
}

Icosphere icosphere(int level)
{
    if (level < 0 || level > 9)
        throw InvalidArgument("icosphere level must lie in [0, 9]");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    Icosphere s;
    for (const Vec3& v : {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t),
                          Vec3(0, 1, t), Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1),
                          Vec3(-t, 0, -1), Vec3(-t, 0, 1)})
        s.vertices.push_back(v.normalized());
    s.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                   {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                   {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = mid.find(key);
            if (it != mid.end())
                return it->second;
            s.vertices.push_back((s.vertices[static_cast<std::size_t>(a)] + s.vertices[static_cast<std::size_t>(b)]).normalized());
            const int id = static_cast<int>(s.vertices.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(s.triangles.size() * 4);
        for (const auto& tri : s.triangles) {
            const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        s.triangles.swap(next);
    }
    return s;
}

DegreeResult degree_jacobian(const SphereMap& map, int level, exec::Policy policy)
{
    require_dimension(map, 2, "degree_jacobian");
    if (level < kMinIcosphereLevel)
        throw InvalidArgument("degree_jacobian needs icosphere level >= " + std::to_string(kMinIcosphereLevel));
    DegreeResult r;
    for (int l = level; l <= std::max(level, kMaxIcosphereLevel); ++l) {
        const Icosphere ico = icosphere(l);
        std::vector<Vec3> img(ico.vertices.size());
        exec::for_each(policy, ico.vertices.size(),
                       [&](std::size_t i) { img[i] = to_3(map(to_x(ico.vertices[i]))); });
        const double total = exec::reduce(policy, ico.triangles.size(), 0.0, [&](std::size_t t) {
            const auto& tri = ico.triangles[t];
            return solid_angle(img[static_cast<std::size_t>(tri[0])], img[static_cast<std::size_t>(tri[1])],
                               img[static_cast<std::size_t>(tri[2])]);
        });
        r = rounded(total / (4.0 * kPi), Method::JacobianAverage, static_cast<int>(ico.triangles.size()));
        if (r.residual < kIntegerTol)
            return r;
    }
    throw UnreliableSampling("Jacobian degree of '" + map.name + "' is not near an integer (raw " +
                             std::to_string(r.raw) + ")");
}

// ---------------------------------------------------------------------------
// Preimages.

namespace {

struct NonRegular {};

int preimages_circle(const SphereMap& map, const VecX& q)
{
    const int n = std::max(256, static_cast<int>(std::ceil(8.0 * map.lipschitz)));
    auto delta = [&](double th) { return signed_angle(q, map(circle_point(th))); };
    std::vector<double> d(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k)
        d[static_cast<std::size_t>(k)] = delta(2.0 * kPi * k / n);
    int count = 0;
    for (int k = 0; k < n; ++k) {
        double a = 2.0 * kPi * k / n, b = 2.0 * kPi * (k + 1) / n;
        double da = d[static_cast<std::size_t>(k)], db = d[static_cast<std::size_t>(k) + 1];
        if (std::abs(da) > 0.5 * kPi || std::abs(db) > 0.5 * kPi)
            continue;  // branch cut of the angle, not a preimage
        if (da == 0.0 || (da < 0.0) == (db < 0.0))
            continue;
        const int sign = db > da ? 1 : -1;
        for (int it = 0; it < 60 && b - a > 1e-14; ++it) {
            const double mid = 0.5 * (a + b);
            const double dm = delta(mid);
            if ((dm < 0.0) == (da < 0.0)) {
                a = mid;
                da = dm;
            } else {
                b = mid;
            }
        }
        const double x = 0.5 * (a + b), hstep = 1e-6;
        const double slope = (delta(x + hstep) - delta(x - hstep)) / (2.0 * hstep);
        if (std::abs(slope) < 1e-6)
            throw NonRegular{};
        count += sign;
    }
    return count;
}

int preimages_sphere(const SphereMap& map, const VecX& qx)
{
    const Vec3 q = to_3(qx);
    const auto [f1, f2] = tangent_basis(q);
    auto value = [&](const Vec3& x) { return to_3(map(to_x(x))); };
    auto chart = [&](const Vec3& y) -> Eigen::Vector2d {
        return Eigen::Vector2d(f1.dot(y), f2.dot(y)) / q.dot(y);
    };
    const Icosphere seeds = icosphere(map.lipschitz > 4.0 ? 4 : 3);
    std::vector<std::pair<Vec3, int>> found;
    const double fd = 1e-7;
    for (const Vec3& seed : seeds.vertices) {
        Vec3 x = seed;
        if (q.dot(value(x)) < 0.5)
            continue;
        bool converged = false;
        for (int it = 0; it < 50; ++it) {
            const Vec3 y = value(x);
            if (q.dot(y) <= 0.0)
                break;
            if ((y - q).norm() < 1e-11) {
                converged = true;
                break;
            }
            const auto [e1, e2] = tangent_basis(x);
            const Eigen::Vector2d f = chart(y);
            Eigen::Matrix2d j;
            j.col(0) = (chart(value((x + fd * e1).normalized())) - chart(value((x - fd * e1).normalized()))) / (2 * fd);
            j.col(1) = (chart(value((x + fd * e2).normalized())) - chart(value((x - fd * e2).normalized()))) / (2 * fd);
            if (std::abs(j.determinant()) < 1e-14)
                break;
            Eigen::Vector2d du = -j.inverse() * f;
            if (du.norm() > 0.5)
                du *= 0.5 / du.norm();
            x = (x + du[0] * e1 + du[1] * e2).normalized();
        }
        if (!converged)
            continue;
        bool duplicate = false;
        for (const auto& pr : found)
            if ((pr.first - x).norm() < 1e-6)
                duplicate = true;
        if (duplicate)
            continue;
        const auto [e1, e2] = tangent_basis(x);
        const Vec3 d1 = (value((x + fd * e1).normalized()) - value((x - fd * e1).normalized())) / (2 * fd);
        const Vec3 d2 = (value((x + fd * e2).normalized()) - value((x - fd * e2).normalized())) / (2 * fd);
        const double det = q.dot(d1.cross(d2));
        if (std::abs(det) < 1e-6)
            throw NonRegular{};
        found.push_back({x, det > 0.0 ? 1 : -1});
    }
    int count = 0;
    for (const auto& pr : found)
        count += pr.second;
    return count;
}

} // namespace

DegreeResult degree_preimage(const SphereMap& map, const VecX& q)
{
    if (map.m != 1 && map.m != 2)
        throw InvalidArgument("degree_preimage supports S^1 and S^2");
    if (!map.eval)
        throw InvalidArgument("degree_preimage: map has no evaluator");
    if (q.size() != map.m + 1 || std::abs(q.norm() - 1.0) > kUnitTol)
        throw InvalidArgument("regular value must be a unit vector of the target sphere");
    VecX value = q;
    for (int attempt = 0; attempt < kPreimageRetries; ++attempt) {
        try {
            const int c = map.m == 1 ? preimages_circle(map, value) : preimages_sphere(map, value);
            return rounded(static_cast<double>(c), Method::PreimageCount, 0);
        } catch (const NonRegular&) {
            // Perturb the value deterministically and retry.
            VecX shift = VecX::Zero(value.size());
            shift[attempt % value.size()] = 0.173 * (attempt + 1);
            value = (value + shift).normalized();
        }
    }
    throw UnreliableSampling("no regular value found for '" + map.name + "' after retries");
}

// ---------------------------------------------------------------------------

double check_reflection_symmetry(const SphereMap& map, int samples)
{
    if (map.m != 1 && map.m != 2)
        throw InvalidArgument("reflection symmetry is checked on S^1 and S^2");
    double worst = 0.0;
    for (const VecX& p : sample_points(map.m, samples))
        worst = std::max(worst, (map(VecX(-p)) - reflect(p, map(p))).norm());
    return worst;
}

DegreeResult compute_degree(const SphereMap& map)
{
    if (map.m == 1)
        return winding_number(map);
    if (map.m == 2)
        return degree_jacobian(map);
    throw InvalidArgument("degree is computed for S^1 and S^2 only");
}

PetridesReport petrides_verify(const SphereMap& map)
{
    PetridesReport r{map.name, map.m, check_reflection_symmetry(map), {}, false};
    if (!(r.defect < kSymmetryTol))
        throw PreconditionViolation("map '" + map.name + "' is not reflection symmetric (defect " +
                                    std::to_string(r.defect) + ")");
    r.degree = compute_degree(map);
    r.passed = map.m == 1 ? r.degree.degree == 1 : (r.degree.degree % 2 != 0);
    if (!r.passed)
        throw PropertyViolation("symmetric map '" + map.name + "' has degree " + std::to_string(r.degree.degree));
    return r;
}

HomotopyResult homotopy_degree(const SphereMap& psi)
{
    HomotopyResult h{};
    h.min_normal = std::numeric_limits<double>::infinity();
    h.max_normal = -std::numeric_limits<double>::infinity();
    for (const VecX& p : sample_points(psi.m, 0)) {
        const double d = psi(p).dot(p);
        h.min_normal = std::min(h.min_normal, d);
        h.max_normal = std::max(h.max_normal, d);
    }
    constexpr double tol = 1e-12;
    if (h.min_normal >= -tol)
        h.expected = 1;
    else if (h.max_normal <= tol)
        h.expected = psi.m % 2 == 1 ? 1 : -1;
    else
        throw PreconditionViolation("psi(p).p changes sign on '" + psi.name + "'");
    h.degree = compute_degree(psi);
    if (h.degree.degree != h.expected)
        throw PropertyViolation("homotopy lemma violated for '" + psi.name + "': degree " +
                                std::to_string(h.degree.degree) + ", expected " + std::to_string(h.expected));
    return h;
}

SphereMap normalization_homotopy(const SphereMap& phi, double t)
{
    if (!(t >= 0.0 && t < 1.0))
        throw InvalidArgument("homotopy parameter must lie in [0, 1)");
    SphereMap s;
    s.m = phi.m;
    s.name = phi.name + "@t=" + std::to_string(t);
    s.lipschitz = (phi.lipschitz + t) / (1.0 - t);
    s.eval = [phi, t](const VecX& p) -> VecX {
        const VecX d = phi(p) - t * p;
        return d / d.norm();
    };
    return s;
}

// ---------------------------------------------------------------------------
// Test maps.

SphereMap identity_map(int m)
{
    return {m, [](const VecX& p) { return p; }, 1.0, "identity"};
}

SphereMap negation_map(int m)
{
    return {m, [](const VecX& p) -> VecX { return -p; }, 1.0, "negation"};
}

SphereMap constant_map(int m)
{
    return {m, [m](const VecX&) -> VecX { return VecX::Unit(m + 1, 0); }, 1.0, "constant"};
}

SphereMap reflected_axis_map(int m)
{
    return {m, [m](const VecX& p) { return reflect(p, VecX::Unit(m + 1, 0)); }, 2.0, "reflected-axis"};
}

namespace {

struct TrigField {
    std::vector<VecX> amplitude, frequency;
    std::vector<double> phase;

    VecX operator()(const VecX& p) const
    {
        VecX s = VecX::Zero(p.size());
        for (std::size_t k = 0; k < amplitude.size(); ++k)
            s += amplitude[k] * std::sin(frequency[k].dot(p) + phase[k]);
        return s;
    }
};

// Smooth field with sum |a_k| = total.
TrigField random_field(int dim, double total, double max_frequency, std::mt19937_64& gen, double& lipschitz)
{
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TrigField f;
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
        VecX a(dim), w(dim);
        for (int i = 0; i < dim; ++i) {
            a[i] = gauss(gen);
            w[i] = gauss(gen);
        }
        w *= max_frequency * (0.3 + 0.7 * unit(gen)) / w.norm();
        f.amplitude.push_back(a);
        f.frequency.push_back(w);
        f.phase.push_back(2.0 * kPi * unit(gen));
        sum += a.norm();
    }
    lipschitz = 0.0;
    for (std::size_t k = 0; k < f.amplitude.size(); ++k) {
        f.amplitude[k] *= total / sum;
        lipschitz += f.amplitude[k].norm() * f.frequency[k].norm();
    }
    return f;
}

} // namespace

SphereMap random_symmetric_map(int m, std::uint64_t seed)
{
    if (m != 1 && m != 2)
        throw InvalidArgument("random symmetric maps exist here for m = 1, 2");
    std::mt19937_64 gen(seed);
    const bool negate = std::uniform_int_distribution<int>(0, 1)(gen) == 1;
    const double amp = std::uniform_real_distribution<double>(0.3, 0.9)(gen);
    double lip = 0.0;
    const TrigField field = random_field(m + 1, amp, 3.0, gen, lip);
    // |w A| <= amp < 1 keeps the blend away from zero.
    auto upper = [field, negate, m](const VecX& p) -> VecX {
        const double w = p[m] * p[m];
        const VecX v = (negate ? VecX(-p) : p) + w * field(p);
        return v / v.norm();
    };
    SphereMap s;
    s.m = m;
    s.name = "symmetric-" + std::to_string(m) + "-" + std::to_string(seed);
    s.lipschitz = (1.0 + 2.0 * amp + lip) / (1.0 - amp);
    s.eval = [upper, m](const VecX& p) -> VecX {
        if (p[m] >= 0.0)
            return upper(p);
        return reflect(p, upper(VecX(-p)));
    };
    return s;
}

SphereMap random_smooth_map(int m, std::uint64_t seed)
{
    if (m != 1 && m != 2)
        throw InvalidArgument("random smooth maps exist here for m = 1, 2");
    std::mt19937_64 gen(seed);
    const int k = std::uniform_int_distribution<int>(-2, 3)(gen);
    const double amp = std::uniform_real_distribution<double>(0.1, 0.6)(gen);
    double lip = 0.0;
    const TrigField field = random_field(m + 1, amp, 2.0, gen, lip);
    SphereMap s;
    s.m = m;
    s.name = "smooth-" + std::to_string(m) + "-" + std::to_string(seed);
    s.lipschitz = (1.0 + std::abs(k) + lip) / (1.0 - amp);
    if (m == 1) {
        // Degree k circle map plus a bounded perturbation.
        s.eval = [k, field](const VecX& p) -> VecX {
            const double th = std::atan2(p[1], p[0]);
            const VecX v = circle_point(k * th) + field(p);
            return v / v.norm();
        };
    } else {
        // z -> z^|k| (conjugated for k < 0) through stereographic projection.
        s.eval = [k, field](const VecX& p) -> VecX {
            VecX base(3);
            if (k == 0) {
                base << 1.0, 0.0, 0.0;
            } else {
                // Chart at the north pole for p[2] >= 0, at the south pole otherwise.
                const bool north = p[2] >= 0.0;
                const std::complex<double> z = north ? std::complex<double>(p[0], p[1]) / (1.0 + p[2])
                                                     : std::complex<double>(p[0], -p[1]) / (1.0 - p[2]);
                std::complex<double> w = std::pow(z, std::abs(k));
                if (k < 0)
                    w = std::conj(w);
                const double n2 = std::norm(w);
                if (north)
                    base << 2.0 * w.real() / (1.0 + n2), 2.0 * w.imag() / (1.0 + n2), (1.0 - n2) / (1.0 + n2);
                else
                    base << 2.0 * w.real() / (1.0 + n2), -2.0 * w.imag() / (1.0 + n2), (n2 - 1.0) / (1.0 + n2);
            }
            const VecX v = base + field(p);
            return v / v.norm();
        };
    }
    return s;
}

SphereMap w_sphere_map(std::shared_ptr<const trial::MomentProblem> problem, double height)
{
    if (!problem || !problem->has_excited_state())
        throw InvalidArgument("W map needs a moment problem with its excited state");
    SphereMap s;
    s.m = 1;
    s.name = "W@t=" + std::to_string(height);
    s.lipschitz = 8.0;
    s.eval = [problem, height](const VecX& p) -> VecX {
        const geom::Vec2 w = trial::w_field(*problem, problem->halfspace(std::atan2(p[1], p[0]), height));
        if (!(w.norm() > 0.0) || !w.allFinite())
            throw NumericalFailure("W vanishes on the sampled circle");
        return VecX(w.normalized());
    };
    return s;
}

std::string result_json(const std::string& name, const DegreeResult& r, double defect)
{
    nlohmann::ordered_json j;
    j["map"] = name;
    j["defect"] = defect;
    j["degree"] = r.degree;
    j["method"] = to_string(r.method);
    j["residual"] = r.residual;
    j["samples"] = r.samples;
    return j.dump();
}

std::string report_json(const PetridesReport& r)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(result_json(r.name, r.degree, r.defect));
    j["m"] = r.m;
    j["passed"] = r.passed;
    return j.dump();
}

} // namespace twoball::degree

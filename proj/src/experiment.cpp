#include "twoball/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "twoball/plot.hpp"

#ifndef TWOBALL_VERSION
#define TWOBALL_VERSION "0.0.0"
#endif

namespace twoball::experiment {

namespace {

using json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;
constexpr int kPolygonVertices = 96;
constexpr int kPlacementTries = 64;

const std::vector<std::pair<Family, const char*>>& family_names()
{
    static const std::vector<std::pair<Family, const char*>> names = {
        {Family::Ellipse, "ellipse"},          {Family::Rectangle, "rectangle"},
        {Family::LShape, "l-shape"},           {Family::TwoDisks, "two-disks"},
        {Family::Star, "star"},                {Family::GeodesicPair, "geodesic-pair"},
        {Family::GeodesicDisk, "geodesic-disk"}, {Family::PlacedStar, "placed-star"},
        {Family::PlacedEllipse, "placed-ellipse"}, {Family::PlacedLShape, "placed-l-shape"},
    };
    return names;
}

bool euclidean_family(Family f)
{
    return f == Family::Ellipse || f == Family::Rectangle || f == Family::LShape || f == Family::TwoDisks ||
           f == Family::Star;
}

double shoelace(const std::vector<Vec2>& poly)
{
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        a += p.x() * q.y() - p.y() * q.x();
    }
    return 0.5 * a;
}

Vec2 centroid(const std::vector<Vec2>& poly)
{
    Vec2 c = Vec2::Zero();
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        const double w = p.x() * q.y() - p.y() * q.x();
        c += w * (p + q);
        a += w;
    }
    return c / (3.0 * a);
}

std::vector<Vec2> transformed(std::vector<Vec2> poly, double scale, double angle, const Vec2& shift = Vec2::Zero())
{
    const Eigen::Rotation2Dd rot(angle);
    for (Vec2& p : poly)
        p = rot * (scale * p) + shift;
    return poly;
}

/// Centered at the centroid, counter-clockwise, unit chart area.
std::vector<Vec2> unit_area(std::vector<Vec2> poly)
{
    if (shoelace(poly) < 0.0)
        std::reverse(poly.begin(), poly.end());
    const Vec2 c = centroid(poly);
    const double s = 1.0 / std::sqrt(shoelace(poly));
    for (Vec2& p : poly)
        p = s * (p - c);
    return poly;
}

std::vector<Vec2> ellipse_shape(double aspect)
{
    std::vector<Vec2> poly;
    for (int k = 0; k < kPolygonVertices; ++k) {
        const double th = 2 * kPi * k / kPolygonVertices;
        poly.emplace_back(std::sqrt(aspect) * std::cos(th), std::sin(th) / std::sqrt(aspect));
    }
    return unit_area(poly);
}

std::vector<Vec2> rectangle_shape(double aspect)
{
    return unit_area({Vec2(0, 0), Vec2(aspect, 0), Vec2(aspect, 1), Vec2(0, 1)});
}

std::vector<Vec2> l_shape(double cut)
{
    return unit_area({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1 - cut), Vec2(1 - cut, 1 - cut), Vec2(1 - cut, 1), Vec2(0, 1)});
}

std::vector<Vec2> star_shape(std::mt19937_64& gen)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::array<double, 4> amp{}, phase{};
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        amp[static_cast<std::size_t>(k)] = unit(gen);
        phase[static_cast<std::size_t>(k)] = 2 * kPi * unit(gen);
        total += amp[static_cast<std::size_t>(k)];
    }
    const double budget = 0.15 + 0.25 * unit(gen);
    std::vector<Vec2> poly;
    for (int i = 0; i < kPolygonVertices; ++i) {
        const double th = 2 * kPi * i / kPolygonVertices;
        double r = 1.0;
        for (int k = 0; k < 4; ++k)
            r += budget / total * amp[static_cast<std::size_t>(k)] * std::cos((k + 2) * th + phase[static_cast<std::size_t>(k)]);
        poly.emplace_back(r * std::cos(th), r * std::sin(th));
    }
    return unit_area(poly);
}

mesh::Primitive polygon(std::vector<Vec2> v, mesh::Transform t = {})
{
    return {mesh::Polygon{std::move(v)}, std::move(t)};
}

bool valid(const mesh::DomainSpec& spec)
{
    try {
        mesh::resolve_boundaries(spec);
        return true;
    } catch (const InvalidDomain&) {
        return false;
    }
}

std::string indexed(const char* prefix, int i, Family f)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%s%02d-", prefix, i);
    return buf + std::string(to_string(f));
}

/// Scale s with polygon_hyp_volume(s * unit) = volume, by bisection.
std::vector<Vec2> hyp_scaled(const std::vector<Vec2>& unit, double volume)
{
    double rmax = 0.0;
    for (const Vec2& p : unit)
        rmax = std::max(rmax, p.norm());
    double lo = 0.0, hi = 0.9 / rmax;
    if (polygon_hyp_volume(transformed(unit, hi, 0.0)) < volume)
        throw InvalidArgument("hyperbolic volume too large for the shape");
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (polygon_hyp_volume(transformed(unit, mid, 0.0)) < volume ? lo : hi) = mid;
    }
    return transformed(unit, 0.5 * (lo + hi), 0.0);
}

Vec2 random_point(std::mt19937_64& gen, double radius)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = radius * std::sqrt(unit(gen)), th = 2 * kPi * unit(gen);
    return {r * std::cos(th), r * std::sin(th)};
}

json tolerances_json(const Tolerances& t)
{
    return {{"equality_margin", t.equality_margin},
            {"ball", t.ball},
            {"dominance", t.dominance},
            {"degenerate", t.degenerate},
            {"transplant", t.transplant}};
}

template <class T>
T field(const json& j, const char* key, const T& fallback)
{
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config field '") + key + "': " + e.what());
    }
}

std::string format_double(double v)
{
    std::ostringstream out;
    out << std::setprecision(10) << v;
    return out.str();
}

} // namespace

const char* version() noexcept
{
    return TWOBALL_VERSION;
}

const char* to_string(Family f) noexcept
{
    for (const auto& [fam, name] : family_names())
        if (fam == f)
            return name;
    return "unknown";
}

Family family_from_string(const std::string& name)
{
    for (const auto& [fam, n] : family_names())
        if (name == n)
            return fam;
    throw InvalidArgument("unknown shape family '" + name + "'");
}

std::vector<Family> default_families(Geometry geometry)
{
    if (geometry == Geometry::Euclidean)
        return {Family::Ellipse, Family::Rectangle, Family::LShape, Family::TwoDisks, Family::Star};
    return {Family::GeodesicPair, Family::PlacedStar, Family::PlacedEllipse, Family::GeodesicDisk,
            Family::PlacedLShape};
}

double default_hyperbolic_volume()
{
    return 2.0 * balleig::hyp_ball_volume(0.35);
}

double polygon_hyp_volume(const std::vector<Vec2>& poly)
{
    // Gauss-Legendre on each edge; the integrand is smooth inside the disk.
    static const std::array<double, 5> x{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                         0.9061798459386640};
    static const std::array<double, 5> w{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                         0.4786286704993665, 0.2369268850561891};
    double v = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2 d = poly[(i + 1) % poly.size()] - a;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const Vec2 p = a + 0.5 * (x[k] + 1.0) * d;
            const double q = 1.0 - p.squaredNorm();
            if (!(q > 0.0))
                throw InvalidDomain("polygon leaves the unit disk");
            v += 0.5 * w[k] * 0.5 * (p.x() * d.y() - p.y() * d.x()) / q;
        }
    }
    return v;
}

double reference_length(const mesh::DomainSpec& spec)
{
    double area = 0.0;
    for (const mesh::BoundaryCurve& c : mesh::resolve_boundaries(spec))
        area += c.area();
    return std::sqrt(area / (2.0 * kPi));
}

std::vector<NamedDomain> euclidean_corpus(int size, std::uint64_t seed, const std::vector<Family>& families,
                                          double relative_h)
{
    const std::vector<Family> fams = families.empty() ? default_families(Geometry::Euclidean) : families;
    for (Family f : fams)
        if (!euclidean_family(f))
            throw InvalidArgument(std::string("family '") + to_string(f) + "' is not Euclidean");
    if (size < 0)
        throw InvalidArgument("corpus size must be non-negative");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double s = std::sqrt(2.0 * kPi);
    std::vector<NamedDomain> out;
    for (int i = 0; i < size; ++i) {
        const Family f = fams[static_cast<std::size_t>(i) % fams.size()];
        mesh::DomainSpec spec;
        spec.h = relative_h;
        const double angle = kPi * unit(gen);
        switch (f) {
        case Family::Ellipse:
            spec.primitives.push_back(polygon(transformed(ellipse_shape(1.0 + 3.0 * unit(gen)), s, angle)));
            break;
        case Family::Rectangle:
            spec.primitives.push_back(polygon(transformed(rectangle_shape(1.0 + 2.0 * unit(gen)), s, angle)));
            break;
        case Family::LShape:
            spec.primitives.push_back(polygon(transformed(l_shape(0.3 + 0.4 * unit(gen)), s, angle)));
            break;
        case Family::TwoDisks: {
            const double ratio = 0.5 + 0.5 * unit(gen), gap = 0.2 + 1.3 * unit(gen);
            const double r1 = std::sqrt(2.0 / (1.0 + ratio * ratio)), r2 = ratio * r1;
            const Vec2 axis(std::cos(angle), std::sin(angle));
            spec.primitives.push_back({mesh::Disk{Vec2(-(r1 + 0.5 * gap) * axis), r1}, {}});
            spec.primitives.push_back({mesh::Disk{Vec2((r2 + 0.5 * gap) * axis), r2}, {}});
            break;
        }
        default:
            spec.primitives.push_back(polygon(transformed(star_shape(gen), s, angle)));
            break;
        }
        out.push_back({indexed("e", i, f), spec});
    }
    return out;
}

std::vector<NamedDomain> hyperbolic_corpus(int size, std::uint64_t seed, double volume,
                                           const std::vector<Family>& families, double relative_h)
{
    const std::vector<Family> fams = families.empty() ? default_families(Geometry::Hyperbolic) : families;
    for (Family f : fams)
        if (euclidean_family(f))
            throw InvalidArgument(std::string("family '") + to_string(f) + "' is not hyperbolic");
    if (!(volume > 0.0))
        throw InvalidArgument("hyperbolic corpus volume must be positive");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<NamedDomain> out;
    for (int i = 0; i < size; ++i) {
        const Family f = fams[static_cast<std::size_t>(i) % fams.size()];
        mesh::DomainSpec spec;
        spec.geometry = Geometry::Hyperbolic;
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementTries && !placed; ++attempt) {
            spec.primitives.clear();
            const double angle = kPi * unit(gen);
            switch (f) {
            case Family::GeodesicPair: {
                const double share = 0.3 + 0.2 * unit(gen);
                const double a1 = balleig::hyp_ball_radius_for_volume(share * volume);
                const double a2 = balleig::hyp_ball_radius_for_volume((1.0 - share) * volume);
                const Vec2 axis(std::cos(angle), std::sin(angle));
                const double gap = 0.05 + 0.2 * unit(gen);
                // Hyperbolic distances along the axis, converted to chart radii.
                const double d1 = std::atanh(a1) + 0.5 * gap, d2 = std::atanh(a2) + 0.5 * gap;
                const Vec2 jitter = random_point(gen, 0.1);
                spec.primitives.push_back({mesh::GeodesicDisk{Vec2(-std::tanh(d1) * axis + jitter), a1}, {}});
                spec.primitives.push_back({mesh::GeodesicDisk{Vec2(std::tanh(d2) * axis + jitter), a2}, {}});
                break;
            }
            case Family::GeodesicDisk:
                spec.primitives.push_back(
                    {mesh::GeodesicDisk{random_point(gen, 0.3), balleig::hyp_ball_radius_for_volume(volume)}, {}});
                break;
            default: {
                std::vector<Vec2> shape;
                if (f == Family::PlacedStar)
                    shape = star_shape(gen);
                else if (f == Family::PlacedEllipse)
                    shape = ellipse_shape(1.0 + 2.0 * unit(gen));
                else
                    shape = l_shape(0.3 + 0.4 * unit(gen));
                shape = hyp_scaled(transformed(shape, 1.0, angle), volume);
                spec.primitives.push_back(polygon(shape, mesh::MobiusTransform{random_point(gen, 0.3)}));
                break;
            }
            }
            placed = valid(spec);
        }
        if (!placed)
            throw InvalidDomain(std::string("could not place a ") + to_string(f) + " in the disk");
        spec.h = relative_h * reference_length(spec);
        out.push_back({indexed("h", i, f), spec});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration.

std::string config_to_json(const ExperimentConfig& c)
{
    json j;
    j["schema"] = kConfigSchema;
    j["name"] = c.name;
    j["seed"] = c.seed;
    auto domains = json::array();
    for (const NamedDomain& d : c.domains)
        domains.push_back({{"name", d.name}, {"domain", json::parse(mesh::domain_to_json(d.spec))}});
    j["domains"] = domains;
    auto corpora = json::array();
    for (const CorpusSpec& s : c.corpora) {
        json cj;
        cj["geometry"] = geom::to_string(s.geometry);
        cj["size"] = s.size;
        cj["seed"] = s.seed;
        auto fams = json::array();
        for (Family f : s.families)
            fams.push_back(to_string(f));
        cj["families"] = fams;
        cj["volume"] = s.volume;
        corpora.push_back(cj);
    }
    j["corpora"] = corpora;
    j["mesh_ladder"] = c.mesh_ladder;
    j["tolerances"] = tolerances_json(c.tolerances);
    j["output_dir"] = c.output_dir;
    j["plots"] = c.plots;
    return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config is not JSON: ") + e.what());
    }
    if (!j.is_object() || field<std::string>(j, "schema", "") != kConfigSchema)
        throw InvalidArgument(std::string("config schema must be ") + kConfigSchema);
    ExperimentConfig c;
    c.name = field<std::string>(j, "name", c.name);
    c.seed = field<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("domains"))
        for (const json& d : j.at("domains")) {
            if (!d.contains("domain"))
                throw InvalidArgument("config domain entry needs a 'domain' object");
            c.domains.push_back({field<std::string>(d, "name", "domain"), mesh::domain_from_json(d.at("domain").dump())});
        }
    if (j.contains("corpora"))
        for (const json& s : j.at("corpora")) {
            CorpusSpec cs;
            cs.geometry = geom::geometry_from_string(field<std::string>(s, "geometry", "euclidean"));
            cs.size = field<int>(s, "size", cs.size);
            cs.seed = field<std::uint64_t>(s, "seed", c.seed);
            for (const std::string& f : field<std::vector<std::string>>(s, "families", {}))
                cs.families.push_back(family_from_string(f));
            cs.volume = field<double>(s, "volume", 0.0);
            if (cs.size < 0)
                throw InvalidArgument("corpus size must be non-negative");
            c.corpora.push_back(cs);
        }
    c.mesh_ladder = field<std::vector<double>>(j, "mesh_ladder", {});
    for (double h : c.mesh_ladder)
        if (!(h > 0.0))
            throw InvalidArgument("mesh ladder entries must be positive");
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        c.tolerances.equality_margin = field<double>(t, "equality_margin", c.tolerances.equality_margin);
        c.tolerances.ball = field<double>(t, "ball", c.tolerances.ball);
        c.tolerances.dominance = field<double>(t, "dominance", c.tolerances.dominance);
        c.tolerances.degenerate = field<double>(t, "degenerate", c.tolerances.degenerate);
        c.tolerances.transplant = field<double>(t, "transplant", c.tolerances.transplant);
    }
    c.output_dir = field<std::string>(j, "output_dir", "");
    c.plots = field<bool>(j, "plots", true);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::string config_hash(const ExperimentConfig& c)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : config_to_json(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig default_config()
{
    ExperimentConfig c;
    c.name = "two-ball-verification";
    mesh::DomainSpec disks;
    disks.h = kCorpusRelativeH;
    disks.primitives.push_back({mesh::Disk{Vec2(-1.5, 0.0), 1.0}, {}});
    disks.primitives.push_back({mesh::Disk{Vec2(1.5, 0.0), 1.0}, {}});
    c.domains.push_back({"two-equal-disks", disks});
    mesh::DomainSpec square;
    const double s = std::sqrt(2.0 * kPi);
    square.h = kCorpusRelativeH;
    square.primitives.push_back(polygon({Vec2(0, 0), Vec2(s, 0), Vec2(s, s), Vec2(0, s)}));
    c.domains.push_back({"square", square});
    mesh::DomainSpec hyp;
    hyp.geometry = Geometry::Hyperbolic;
    hyp.h = kCorpusRelativeH * 0.35;
    hyp.primitives.push_back({mesh::GeodesicDisk{Vec2(-0.45, 0.0), 0.35}, {}});
    hyp.primitives.push_back({mesh::GeodesicDisk{Vec2(0.45, 0.0), 0.35}, {}});
    c.domains.push_back({"two-equal-geodesic-disks", hyp});
    c.corpora.push_back({Geometry::Euclidean, 20, 7, {}, 0.0});
    c.corpora.push_back({Geometry::Hyperbolic, 10, 7, {}, 0.0});
    return c;
}

std::vector<NamedDomain> expand(const ExperimentConfig& c)
{
    std::vector<NamedDomain> base = c.domains;
    for (const CorpusSpec& s : c.corpora) {
        std::vector<NamedDomain> more =
            s.geometry == Geometry::Euclidean
                ? euclidean_corpus(s.size, s.seed, s.families)
                : hyperbolic_corpus(s.size, s.seed, s.volume > 0.0 ? s.volume : default_hyperbolic_volume(), s.families);
        base.insert(base.end(), more.begin(), more.end());
    }
    if (c.mesh_ladder.empty())
        return base;
    std::vector<NamedDomain> out;
    for (const NamedDomain& d : base)
        for (double rel : c.mesh_ladder) {
            NamedDomain e = d;
            e.spec.h = rel * reference_length(d.spec);
            if (c.mesh_ladder.size() > 1)
                e.name += "@h=" + format_double(rel);
            out.push_back(std::move(e));
        }
    return out;
}

certify::Options options_for(const ExperimentConfig& c)
{
    certify::Options o;
    o.equality_margin = c.tolerances.equality_margin;
    o.ball_tolerance = c.tolerances.ball;
    o.dominance_tolerance = c.tolerances.dominance;
    o.degenerate_tolerance = c.tolerances.degenerate;
    o.transplant_tolerance = c.tolerances.transplant;
    o.policy = exec::Policy::Parallel;
    return o;
}

// ---------------------------------------------------------------------------
// Running.

std::vector<std::pair<std::string, bool>> RunRecord::checks() const
{
    if (!certificate)
        return {};
    const certify::Certificate& c = *certificate;
    return {{"orthogonal", c.orthogonal},
            {"bound_dominates", c.bound_dominates},
            {"bound_below_ball", c.bound_below_ball},
            {"eigenvalue_below_ball", c.eigenvalue_below_ball},
            {"transplant_closes", c.transplant_closes}};
}

RunRecord run_one(const NamedDomain& domain, std::size_t index, const certify::Options& options,
                  const std::string& hash)
{
    RunRecord r;
    r.index = index;
    r.name = domain.name;
    r.config_hash = hash;
    r.version = version();
    const auto start = std::chrono::steady_clock::now();
    try {
        r.certificate = certify::certify_bound(domain.spec, options, domain.name);
        r.status = r.certificate->passed() ? "passed" : "failed";
    } catch (const Error& e) {
        r.status = "error";
        r.error_kind = twoball::to_string(e.kind());
        r.error_message = e.what();
    } catch (const std::exception& e) {
        r.status = "error";
        r.error_kind = "internal";
        r.error_message = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

RunSummary run(const ExperimentConfig& c, int jobs, const Progress& progress)
{
    if (jobs < 1)
        throw InvalidArgument("jobs must be at least 1");
    const std::vector<NamedDomain> domains = expand(c);
    const certify::Options options = options_for(c);
    const std::string hash = config_hash(c);

    RunSummary s;
    s.records.resize(domains.size());
    std::atomic<std::size_t> next{0};
    std::mutex report;
    auto worker = [&] {
        for (std::size_t i = next++; i < domains.size(); i = next++) {
            s.records[i] = run_one(domains[i], i, options, hash);
            if (progress) {
                std::lock_guard<std::mutex> lock(report);
                progress(s.records[i]);
            }
        }
    };
    const int n = std::min<int>(jobs, std::max<int>(1, static_cast<int>(domains.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n; ++k)
            pool.emplace_back(worker);
        for (std::thread& t : pool)
            t.join();
    }
    for (const RunRecord& r : s.records) {
        if (r.status == "passed") {
            ++s.passed;
            continue;
        }
        (r.status == "failed" ? s.failed : s.errors) += 1;
        s.failures.push_back(r.name + " (" + r.status + (r.error_kind.empty() ? "" : ": " + r.error_kind) + ")");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Output.

std::string record_json(const RunRecord& r)
{
    json j;
    j["index"] = r.index;
    j["name"] = r.name;
    j["status"] = r.status;
    j["config_hash"] = r.config_hash;
    j["version"] = r.version;
    if (!r.error_kind.empty())
        j["error"] = {{"kind", r.error_kind}, {"message", r.error_message}};
    json checks = json::object();
    for (const auto& [name, ok] : r.checks())
        checks[name] = ok;
    j["checks"] = checks;
    if (r.certificate)
        j["certificate"] = json::parse(certify::certificate_json(*r.certificate));
    return j.dump(2);
}

std::string results_csv(const RunSummary& s)
{
    const std::string header = certify::csv_header();
    const auto commas = std::count(header.begin(), header.end(), ',');
    std::ostringstream out;
    out << "index,status," << header << ",error,config_hash,version\n";
    for (const RunRecord& r : s.records) {
        out << r.index << ',' << r.status << ',';
        if (r.certificate) {
            out << certify::csv_row(*r.certificate);
        } else {
            out << r.name;
            for (long k = 0; k < commas; ++k)
                out << ',';
        }
        out << ',' << r.error_kind << ',' << r.config_hash << ',' << r.version << '\n';
    }
    return out.str();
}

std::string summary_json(const RunSummary& s, const ExperimentConfig& c)
{
    json j;
    j["name"] = c.name;
    j["config_hash"] = config_hash(c);
    j["version"] = version();
    j["domains"] = s.records.size();
    j["passed"] = s.passed;
    j["failed"] = s.failed;
    j["errors"] = s.errors;
    j["failures"] = s.failures;
    j["equality_cases"] = json::array();
    for (const RunRecord& r : s.records)
        if (r.certificate && r.certificate->equality)
            j["equality_cases"].push_back(r.name);
    return j.dump(2);
}

std::filesystem::path resolve_output_dir(const std::string& flag, const ExperimentConfig& c)
{
    if (!flag.empty())
        return flag;
    if (!c.output_dir.empty())
        return c.output_dir;
    if (const char* env = std::getenv(kOutputEnv); env && *env)
        return env;
    return kDefaultOutput;
}

std::string slug(const std::string& name)
{
    std::string s;
    for (char ch : name)
        s += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.') ? ch : '_';
    return s.empty() ? "domain" : s;
}

void write_outputs(const RunSummary& s, const ExperimentConfig& c, const std::filesystem::path& out)
{
    namespace fs = std::filesystem;
    fs::create_directories(out / "certificates");
    if (c.plots)
        fs::create_directories(out / "plots");
    auto write = [](const fs::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!f)
            throw InvalidArgument("cannot write " + p.string());
        f << text;
    };
    write(out / "config.json", config_to_json(c));
    write(out / "results.csv", results_csv(s));
    write(out / "summary.json", summary_json(s, c));
    std::ostringstream timing;
    for (const RunRecord& r : s.records)
        timing << r.index << ' ' << r.name << ' ' << std::fixed << std::setprecision(3) << r.seconds << "s\n";
    write(out / "timings.txt", timing.str());
    for (const RunRecord& r : s.records) {
        char prefix[16];
        std::snprintf(prefix, sizeof prefix, "%03zu-", r.index);
        const std::string stem = prefix + slug(r.name);
        write(out / "certificates" / (stem + ".json"), record_json(r));
        if (c.plots && r.certificate)
            write(out / "plots" / (stem + ".svg"), plot::certificate_svg(*r.certificate));
    }
    if (c.plots) {
        write(out / "plots" / "trial-functions-euclidean.svg", plot::trial_figure_svg(Geometry::Euclidean));
        write(out / "plots" / "trial-functions-hyperbolic.svg", plot::trial_figure_svg(Geometry::Hyperbolic));
    }
}

} // namespace twoball::experiment

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "twoball/balleig.hpp"
#include "twoball/degree.hpp"
#include "twoball/experiment.hpp"
#include "twoball/fem.hpp"
#include "twoball/transplant.hpp"

using namespace twoball;
using geom::Geometry;
using geom::Vec2;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidArgument("cannot write " + path);
    out << text;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ---------------------------------------------------------------------------

struct BallArgs {
    std::string geometry = "euclidean";
    int n = 2;
    double a = 0.0;
    std::vector<int> ell{1};
    std::string profile;
    std::string out;
};

int ball_eigen(const BallArgs& args)
{
    const Geometry g = geom::geometry_from_string(args.geometry);
    const double a = args.a > 0.0 ? args.a : (g == Geometry::Euclidean ? 1.0 : 0.5);
    if (args.n < 2)
        throw InvalidArgument("dimension n must be at least 2");
    if (!args.profile.empty() && g == Geometry::Euclidean && a != 1.0)
        throw InvalidArgument("Euclidean profiles are exported on the unit ball");
    std::ostringstream csv;
    csv << "geometry,n,a,ell,index,eigenvalue\n";
    auto row = [&](int ell, int index, double value) {
        csv << geom::to_string(g) << ',' << args.n << ',' << num(a) << ',' << ell << ',' << index << ',' << num(value)
            << '\n';
    };
    for (int ell : args.ell) {
        if (ell < 0)
            throw InvalidArgument("angular index must be non-negative");
        if (ell == 0)
            row(0, 0, 0.0);
        double value;
        if (g == Geometry::Euclidean) {
            if (ell > 1)
                throw InvalidArgument("Euclidean eigenvalues are available for ell = 0 and 1");
            const double k = ell == 0 ? balleig::euclid_radial_root(args.n) : balleig::euclid_bessel_root(args.n);
            value = k * k / (a * a);
        } else {
            value = balleig::hyp_eigen(args.n, a, ell).eigenvalue;
        }
        row(ell, ell == 0 ? 1 : 0, value);
    }
    emit(args.out, csv.str());

    if (!args.profile.empty()) {
        const balleig::RadialProfile p =
            g == Geometry::Euclidean ? balleig::euclid_profile(args.n) : balleig::hyp_eigen(args.n, a, 1).profile;
        emit(args.profile, balleig::profile_csv(balleig::h_profile(p)));
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct FemArgs {
    std::string domain;
    std::string shape = "disk";
    double mesh_h = 0.1;
    int k = 6;
    std::string out;
};

mesh::DomainSpec builtin_shape(const std::string& name, double h)
{
    mesh::DomainSpec s;
    s.h = h;
    if (name == "disk") {
        s.primitives.push_back({mesh::Disk{Vec2(0, 0), 1.0}, {}});
    } else if (name == "square") {
        const double side = std::sqrt(2.0 * M_PI);
        s.primitives.push_back({mesh::Polygon{{Vec2(0, 0), Vec2(side, 0), Vec2(side, side), Vec2(0, side)}}, {}});
    } else if (name == "two-disks") {
        s.primitives.push_back({mesh::Disk{Vec2(-1.5, 0), 1.0}, {}});
        s.primitives.push_back({mesh::Disk{Vec2(1.5, 0), 1.0}, {}});
    } else if (name == "geodesic-disk") {
        s.geometry = Geometry::Hyperbolic;
        s.primitives.push_back({mesh::GeodesicDisk{Vec2(0, 0), 0.5}, {}});
    } else {
        throw InvalidArgument("unknown shape '" + name + "' (disk, square, two-disks, geodesic-disk)");
    }
    return s;
}

int fem_eigen(const FemArgs& args)
{
    mesh::DomainSpec spec = args.domain.empty() ? builtin_shape(args.shape, args.mesh_h)
                                                : mesh::domain_from_json(read_file(args.domain));
    if (!args.domain.empty() && args.mesh_h > 0.0)
        spec.h = args.mesh_h;
    auto m = std::make_shared<const mesh::Mesh>(mesh::build_mesh(spec));
    const fem::Operators ops = fem::assemble(m);
    const fem::EigenResult r = fem::solve_neumann(ops, args.k);
    if (args.out.empty()) {
        std::cout << fem::eigen_result_json(r) << '\n';
        return 0;
    }
    std::filesystem::create_directories(args.out);
    emit((std::filesystem::path(args.out) / "eigen.json").string(), fem::eigen_result_json(r) + "\n");
    emit((std::filesystem::path(args.out) / "fields.csv").string(), fem::eigen_result_csv(r));
    return 0;
}

// ---------------------------------------------------------------------------

struct RunArgs {
    std::string config;
    std::string domain;
    std::optional<std::uint64_t> seed;
    std::vector<double> mesh_h;
    std::string out;
    int jobs = 1;
    bool no_plots = false;
    // sweep only
    std::string geometry = "euclidean";
    int count = 20;
    std::vector<std::string> families;
    double volume = 0.0;
};

int execute(experiment::ExperimentConfig c, const RunArgs& args)
{
    if (args.seed) {
        c.seed = *args.seed;
        for (auto& s : c.corpora)
            s.seed = *args.seed;
    }
    if (!args.mesh_h.empty())
        c.mesh_ladder = args.mesh_h;
    if (args.no_plots)
        c.plots = false;
    const auto out = experiment::resolve_output_dir(args.out, c);
    const std::size_t total = experiment::expand(c).size();
    const experiment::RunSummary s = experiment::run(c, args.jobs, [&](const experiment::RunRecord& r) {
        std::cerr << '[' << r.index + 1 << '/' << total << "] " << r.name << ' ' << r.status;
        if (r.certificate)
            std::cerr << "  mu3=" << num(r.certificate->mu3()) << " bound=" << num(r.certificate->worst_attempt().bound)
                      << " ball=" << num(r.certificate->ball_eigenvalue) << (r.certificate->equality ? " equality" : "");
        else
            std::cerr << "  " << r.error_message;
        std::cerr << '\n';
    });
    experiment::write_outputs(s, c, out);
    std::cout << experiment::summary_json(s, c) << '\n';
    std::cerr << "outputs in " << out.string() << '\n';
    return s.failed + s.errors == 0 ? 0 : 1;
}

int verify(const RunArgs& args)
{
    experiment::ExperimentConfig c =
        args.config.empty() ? experiment::default_config() : experiment::load_config(args.config);
    if (!args.domain.empty()) {
        c.domains = {{std::filesystem::path(args.domain).stem().string(), mesh::domain_from_json(read_file(args.domain))}};
        c.corpora.clear();
    }
    return execute(std::move(c), args);
}

int sweep(const RunArgs& args)
{
    experiment::ExperimentConfig c;
    c.name = "sweep";
    experiment::CorpusSpec s;
    s.geometry = geom::geometry_from_string(args.geometry);
    s.size = args.count;
    s.seed = args.seed.value_or(7);
    for (const std::string& f : args.families)
        s.families.push_back(experiment::family_from_string(f));
    s.volume = args.volume;
    c.corpora.push_back(s);
    c.seed = s.seed;
    return execute(std::move(c), args);
}

// ---------------------------------------------------------------------------

struct DegreeArgs {
    int m = 1;
    int random = 0;
    std::string map;
    std::uint64_t seed = 1;
    std::string out;
};

degree::SphereMap named_map(const std::string& name, int m)
{
    if (name == "identity")
        return degree::identity_map(m);
    if (name == "negation")
        return degree::negation_map(m);
    if (name == "constant")
        return degree::constant_map(m);
    if (name == "reflected-axis")
        return degree::reflected_axis_map(m);
    throw InvalidArgument("unknown map '" + name + "' (identity, negation, constant, reflected-axis)");
}

int degree_cmd(const DegreeArgs& args)
{
    if (args.m != 1 && args.m != 2)
        throw InvalidArgument("--m must be 1 or 2");
    if (args.random < 0)
        throw InvalidArgument("--random must be non-negative");
    if (args.random == 0 && args.map.empty())
        throw InvalidArgument("give --random N or --map NAME");
    json report;
    report["m"] = args.m;
    auto results = json::array();
    bool passed = true;
    if (!args.map.empty()) {
        const degree::SphereMap map = named_map(args.map, args.m);
        const degree::DegreeResult r = degree::compute_degree(map);
        json j = json::parse(degree::result_json(map.name, r, degree::check_reflection_symmetry(map)));
        results.push_back(j);
    }
    int violations = 0;
    for (int i = 0; i < args.random; ++i) {
        const degree::SphereMap map = degree::random_symmetric_map(args.m, args.seed + static_cast<std::uint64_t>(i));
        try {
            results.push_back(json::parse(degree::report_json(degree::petrides_verify(map))));
        } catch (const Error& e) {
            ++violations;
            results.push_back({{"map", map.name}, {"passed", false}, {"error", e.what()}});
        }
    }
    passed = violations == 0;
    report["instances"] = results.size();
    report["violations"] = violations;
    report["passed"] = passed;
    report["results"] = results;
    emit(args.out, report.dump(2) + "\n");
    return passed ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct TransplantArgs {
    std::string geometry = "euclidean";
    double a = 0.0;
    double shift = 0.0;
    std::string out;
};

int transplant_cmd(const TransplantArgs& args)
{
    const Geometry g = geom::geometry_from_string(args.geometry);
    double a = args.a;
    if (g == Geometry::Euclidean) {
        if (a != 0.0 && a != 1.0)
            throw InvalidArgument("Euclidean transplant checks use the unit ball (--a 1)");
        a = 1.0;
    } else if (a == 0.0) {
        a = 0.35;
    }
    if (!(a > 0.0 && (g == Geometry::Euclidean || a < 1.0)))
        throw InvalidArgument("ball radius out of range");
    const auto profile =
        g == Geometry::Euclidean ? balleig::euclid_profile(2) : balleig::hyp_eigen(2, a, 1).profile;
    const balleig::ComparisonProfile h = balleig::h_profile(profile);
    const auto weight = g == Geometry::Euclidean ? transplant::RegionWeight::Unit : transplant::RegionWeight::HypVolume;
    const transplant::WeightedRegion ball = transplant::annulus(0.0, a, weight);
    auto moved = [&](double s) {
        const Vec2 c(s, 0.0);
        transplant::Placement place;
        if (g == Geometry::Euclidean)
            place = [c](const Vec2& y) -> Vec2 { return y + c; };
        else
            place = [c](const Vec2& y) -> Vec2 { return geom::mobius_raw(c, y); };
        return transplant::WeightedRegion(weight, ball.triangles(), place);
    };
    const transplant::TransplantReport r = transplant::transplant_check(moved(args.shift), moved(-args.shift), h);
    emit(args.out, transplant::report_json(r) + "\n");
    return r.holds ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical verification of the two-ball bound for the third Neumann eigenvalue"};
    app.require_subcommand(1);
    app.set_version_flag("--version", experiment::version());

    BallArgs ball;
    auto* b = app.add_subcommand("ball-eigen", "Radial ball eigenvalues (CSV)");
    b->add_option("--geometry", ball.geometry, "euclid or hyp");
    b->add_option("--n", ball.n, "dimension");
    b->add_option("--a", ball.a, "ball radius (Euclidean default 1, hyperbolic 0.5)");
    b->add_option("--ell", ball.ell, "angular indices");
    b->add_option("--profile", ball.profile, "write the l = 1 profile (r,g,g_prime,h) here");
    b->add_option("--out", ball.out, "output file (default stdout)");

    FemArgs fem;
    auto* f = app.add_subcommand("fem-eigen", "Neumann eigenvalues of a meshed domain");
    f->add_option("--domain", fem.domain, "domain JSON");
    f->add_option("--shape", fem.shape, "built-in shape: disk, square, two-disks, geodesic-disk");
    f->add_option("--mesh-h", fem.mesh_h, "mesh size");
    f->add_option("--k", fem.k, "eigenpairs");
    f->add_option("--out", fem.out, "output directory (default: JSON on stdout)");

    RunArgs run;
    auto add_run_flags = [&](CLI::App* s) {
        s->add_option("--seed", run.seed, "corpus seed");
        s->add_option("--mesh-h", run.mesh_h, "relative mesh sizes");
        s->add_option("--out", run.out, std::string("output directory (default $") + experiment::kOutputEnv + ")");
        s->add_option("--jobs", run.jobs, "worker threads")->check(CLI::PositiveNumber);
        s->add_flag("--no-plots", run.no_plots, "skip SVG output");
    };
    auto* v = app.add_subcommand("verify", "Certify the configured domains");
    v->add_option("--config", run.config, "experiment config JSON (default: built-in corpus)");
    v->add_option("--domain", run.domain, "certify a single domain JSON instead");
    add_run_flags(v);
    auto* sw = app.add_subcommand("sweep", "Certify a generated corpus");
    sw->add_option("--geometry", run.geometry, "euclid or hyp");
    sw->add_option("--count", run.count, "corpus size");
    sw->add_option("--families", run.families, "shape families");
    sw->add_option("--volume", run.volume, "hyperbolic total volume");
    add_run_flags(sw);

    DegreeArgs deg;
    auto* d = app.add_subcommand("degree", "Degree checks for sphere maps");
    d->add_option("--m", deg.m, "sphere dimension (1 or 2)");
    d->add_option("--random", deg.random, "random reflection-symmetric maps");
    d->add_option("--map", deg.map, "identity, negation, constant or reflected-axis");
    d->add_option("--seed", deg.seed, "first seed");
    d->add_option("--out", deg.out, "output file (default stdout)");

    TransplantArgs tr;
    auto* t = app.add_subcommand("transplant-check", "Transplantation inequality for two shifted balls");
    t->add_option("--geometry", tr.geometry, "euclid or hyp");
    t->add_option("--a", tr.a, "ball radius");
    t->add_option("--shift", tr.shift, "offset of the two balls from the center");
    t->add_option("--out", tr.out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*b)
            return ball_eigen(ball);
        if (*f)
            return fem_eigen(fem);
        if (*v)
            return verify(run);
        if (*sw)
            return sweep(run);
        if (*d)
            return degree_cmd(deg);
        if (*t)
            return transplant_cmd(tr);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

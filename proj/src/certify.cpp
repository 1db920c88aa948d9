#include "twoball/certify.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace twoball::certify {

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
auto staged(const char* stage, F&& body) -> decltype(body())
{
    try {
        return body();
    } catch (const Error& e) {
        rethrow_with_stage(e, stage);
    }
}

struct Normalized {
    std::shared_ptr<const mesh::Mesh> mesh;
    std::shared_ptr<const balleig::RadialProfile> profile;
    double scale_factor;
    double volume;
};

Normalized normalize(const mesh::Mesh& m)
{
    if (m.geometry() == Geometry::Euclidean) {
        const double area = mesh::area(m);
        if (!(area > 0.0))
            throw InvalidDomain("domain has no area");
        const double factor = std::sqrt(2.0 * kPi / area);
        auto scaled = std::make_shared<const mesh::Mesh>(m.scaled(factor));
        static const auto profile = std::make_shared<const balleig::RadialProfile>(balleig::euclid_profile(2));
        return {scaled, profile, factor, mesh::area(*scaled)};
    }
    const double volume = mesh::hyp_volume(m);
    const double a = balleig::hyp_ball_radius_for_volume(0.5 * volume);
    auto profile = std::make_shared<const balleig::RadialProfile>(balleig::hyp_eigen(2, a, 1).profile);
    return {std::make_shared<const mesh::Mesh>(m), profile, 1.0, volume};
}

double m_inner(const fem::SparseMatrix& m, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return a.dot(m * b);
}

Attempt run_attempt(trial::MomentProblem& problem, const fem::Operators& ops, const fem::EigenResult& eig,
                    int index, const balleig::ComparisonProfile& hprof, const mesh::Mesh& mesh,
                    const Options& options)
{
    Attempt at{};
    at.excited_index = index;
    Eigen::VectorXd f = eig.vectors.col(index);
    std::vector<double> fq = eig.space->at_quadrature(f);
    trial::align_sign(problem, fq, f);
    problem.set_excited_state(std::move(fq));

    const trial::WSearchResult search = staged("w-search", [&] { return trial::find_w_zero(problem, options.search); });
    const trial::WZero& zero = search.zeros.front();
    at.angle = zero.angle;
    at.height = zero.height;
    at.center = zero.center;
    at.w_value = zero.value;
    at.w_norm = search.w_norm;
    at.zero_count = static_cast<int>(search.zeros.size());

    const trial::TrialField field(problem.profile_ptr(), problem.halfspace(zero.angle, zero.height), zero.center);
    staged("trial-bound", [&] {
        const Eigen::VectorXd one = eig.vectors.col(0);
        const std::array<const Eigen::VectorXd*, 2> basis = {&one, &f};
        std::vector<double> num, den;
        double defect = 0.0;
        for (int j = 0; j < 2; ++j) {
            Eigen::VectorXd u = trial_component(*ops.space, problem.chart(), field, j);
            const double un = std::sqrt(m_inner(ops.M, u, u));
            for (const Eigen::VectorXd* e : basis) {
                const double c = m_inner(ops.M, u, *e);
                defect = std::max(defect, std::abs(c) / (un * std::sqrt(m_inner(ops.M, *e, *e))));
            }
            // Both basis vectors are M-orthonormal eigenvectors, so one pass suffices.
            u -= m_inner(ops.M, u, one) * one;
            u -= m_inner(ops.M, u, f) * f;
            const double k = m_inner(ops.K, u, u);
            const double m = m_inner(ops.M, u, u);
            at.components[static_cast<std::size_t>(j)] = {k, m, k / m};
            num.push_back(k);
            den.push_back(m);
        }
        at.discrete_defect = defect;
        at.bound = trial::combine_quotients(num, den);
        at.orthogonality = trial::orthogonality(problem, field);
        at.continuous = trial::continuous_quotient(problem, field, hprof);
        return 0;
    });
    at.transplant = staged("transplant", [&] {
        const transplant::Decomposition d =
            transplant::decompose_domain(mesh, problem.chart(), field.halfspace(), field.center(), options.policy);
        return transplant::transplant_check(d.lower, d.upper, hprof, options.transplant_tolerance, options.policy);
    });
    return at;
}

} // namespace

trial::TrialField Certificate::field(const Attempt& a) const
{
    return trial::TrialField(profile, trial::Halfspace(geom::UnitVector<2>::from_angle(a.angle), a.height, geometry),
                             a.center);
}

Eigen::VectorXd trial_component(const fem::P2Space& space, const trial::Chart& chart, const trial::TrialField& field,
                                int j)
{
    if (j < 0 || j > 1)
        throw InvalidArgument("trial component index must be 0 or 1");
    const auto& nodes = space.nodes();
    Eigen::VectorXd u(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i)
        u[static_cast<Eigen::Index>(i)] = field(chart(nodes[i]))[j];
    return u;
}

Certificate certify_bound(const mesh::DomainSpec& spec, const Options& options, std::string name)
{
    const mesh::Mesh m = staged("mesh", [&] { return mesh::build_mesh(spec); });
    Certificate c = certify_mesh(m, options, std::move(name));
    c.domain_json = mesh::domain_to_json(spec);
    return c;
}

Certificate certify_mesh(const mesh::Mesh& input, const Options& options, std::string name)
{
    Certificate c;
    c.name = std::move(name);
    c.geometry = input.geometry();
    if (options.eigenpairs < 3)
        throw InvalidArgument("certification needs at least three eigenpairs");

    const Normalized n = staged("normalize", [&] { return normalize(input); });
    c.mesh = n.mesh;
    c.profile = n.profile;
    c.scale_factor = n.scale_factor;
    c.volume = n.volume;
    c.mesh_h = n.mesh->h();
    c.triangles = static_cast<int>(n.mesh->triangles().size());
    c.ball_radius = n.profile->ball_radius();
    c.ball_eigenvalue = n.profile->eigenvalue();

    const fem::Operators ops = staged("fem", [&] { return fem::assemble(n.mesh, options.policy); });
    const fem::EigenResult eig = staged("fem", [&] { return fem::solve_neumann(ops, options.eigenpairs, options.solver); });
    c.dofs = ops.space->dof_count();
    c.eigenvalues = eig.eigenvalues;
    c.zero_modes = eig.diagnostics.zero_modes;

    trial::MomentProblem problem =
        staged("centering", [&] { return trial::MomentProblem(*n.mesh, n.profile, options.policy); });
    c.weinberger_shift = problem.chart().shift;
    c.tau = problem.tau();

    const balleig::ComparisonProfile hprof = balleig::h_profile(*n.profile);
    const double mu2 = c.eigenvalues[1], mu3 = c.eigenvalues[2];
    c.degenerate = std::abs(mu3 - mu2) < options.degenerate_tolerance * mu3;
    std::vector<int> choices = {1};
    if (c.degenerate)
        choices.push_back(2);
    for (int index : choices)
        c.attempts.push_back(run_attempt(problem, ops, eig, index, hprof, *n.mesh, options));

    for (std::size_t i = 1; i < c.attempts.size(); ++i)
        if (c.attempts[i].bound > c.attempts[c.worst].bound)
            c.worst = i;

    c.orthogonal = true;
    c.bound_dominates = true;
    c.transplant_closes = true;
    double worst_slack = 0.0;
    const double slack_allowance = c.degenerate ? mu3 - mu2 : 0.0;
    for (const Attempt& a : c.attempts) {
        c.orthogonal = c.orthogonal && a.orthogonality.worst() < trial::kOrthogonalityTol;
        c.bound_dominates = c.bound_dominates && a.bound >= mu3 * (1.0 - options.dominance_tolerance) - slack_allowance;
        c.transplant_closes = c.transplant_closes && a.transplant.holds;
        worst_slack = std::max(worst_slack, std::abs(a.transplant.relative_slack));
    }
    c.bound_below_ball = c.worst_attempt().bound <= c.ball_eigenvalue * (1.0 + options.ball_tolerance);
    c.eigenvalue_below_ball = mu3 <= c.ball_eigenvalue * (1.0 + options.ball_tolerance);
    c.equality = std::abs(c.relative_margin()) < options.equality_margin && worst_slack < options.transplant_tolerance;
    return c;
}

std::shared_ptr<trial::MomentProblem> excited_problem(const mesh::Mesh& input, const Options& options)
{
    const Normalized n = staged("normalize", [&] { return normalize(input); });
    const fem::Operators ops = staged("fem", [&] { return fem::assemble(n.mesh, options.policy); });
    const fem::EigenResult eig = staged("fem", [&] { return fem::solve_neumann(ops, options.eigenpairs, options.solver); });
    auto problem = staged("centering", [&] {
        return std::make_shared<trial::MomentProblem>(*n.mesh, n.profile, options.policy);
    });
    Eigen::VectorXd f = eig.vectors.col(1);
    std::vector<double> fq = eig.space->at_quadrature(f);
    trial::align_sign(*problem, fq, f);
    problem->set_excited_state(std::move(fq));
    return problem;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

nlohmann::ordered_json vec_json(const Vec2& v)
{
    return nlohmann::ordered_json::array({v.x(), v.y()});
}

} // namespace

std::string certificate_json(const Certificate& c)
{
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["geometry"] = geom::to_string(c.geometry);
    if (!c.domain_json.empty())
        j["domain"] = nlohmann::ordered_json::parse(c.domain_json);
    j["mesh"] = {{"h", c.mesh_h}, {"triangles", c.triangles}, {"dofs", c.dofs}};
    j["normalization"] = {{"volume", c.volume}, {"scale_factor", c.scale_factor}, {"ball_radius", c.ball_radius}};
    j["ball_eigenvalue"] = c.ball_eigenvalue;
    j["eigenvalues"] = c.eigenvalues;
    j["zero_modes"] = c.zero_modes;
    j["weinberger_shift"] = vec_json(c.weinberger_shift);
    j["tau"] = c.tau;
    j["degenerate"] = c.degenerate;
    auto attempts = nlohmann::ordered_json::array();
    for (const Attempt& a : c.attempts) {
        nlohmann::ordered_json aj;
        aj["excited_index"] = a.excited_index;
        aj["angle"] = a.angle;
        aj["height"] = a.height;
        aj["center"] = vec_json(a.center);
        aj["w_at_zero"] = vec_json(a.w_value);
        aj["w_norm"] = a.w_norm;
        aj["zero_count"] = a.zero_count;
        auto comps = nlohmann::ordered_json::array();
        for (const ComponentQuotient& q : a.components)
            comps.push_back({{"numerator", q.numerator}, {"denominator", q.denominator}, {"quotient", q.quotient}});
        aj["components"] = comps;
        aj["bound"] = a.bound;
        aj["discrete_defect"] = a.discrete_defect;
        aj["orthogonality"] = {{"constant", a.orthogonality.constant}, {"excited", a.orthogonality.excited}};
        aj["continuous"] = {{"numerator", a.continuous.numerator},
                            {"denominator", a.continuous.denominator},
                            {"quotient", a.continuous.quotient},
                            {"h_integral", a.continuous.h_integral}};
        aj["transplant"] = nlohmann::ordered_json::parse(transplant::report_json(a.transplant));
        attempts.push_back(aj);
    }
    j["attempts"] = attempts;
    j["worst_attempt"] = c.worst;
    j["bound"] = c.worst_attempt().bound;
    j["margin"] = c.margin();
    j["relative_margin"] = c.relative_margin();
    j["checks"] = {{"orthogonal", c.orthogonal},
                   {"bound_dominates", c.bound_dominates},
                   {"bound_below_ball", c.bound_below_ball},
                   {"eigenvalue_below_ball", c.eigenvalue_below_ball},
                   {"transplant_closes", c.transplant_closes},
                   {"equality", c.equality},
                   {"passed", c.passed()}};
    return j.dump(2);
}

std::string csv_header()
{
    return "name,geometry,h,dofs,mu2,mu3,ball_eigenvalue,margin,relative_margin,bound,continuous_quotient,"
           "orthogonality,transplant_slack,angle,height,cx,cy,degenerate,equality,passed";
}

std::string csv_row(const Certificate& c)
{
    const Attempt& a = c.worst_attempt();
    double ortho = 0.0, slack = a.transplant.relative_slack;
    for (const Attempt& b : c.attempts) {
        ortho = std::max(ortho, b.orthogonality.worst());
        slack = std::min(slack, b.transplant.relative_slack);
    }
    std::ostringstream out;
    out << std::setprecision(10);
    out << c.name << ',' << geom::to_string(c.geometry) << ',' << c.mesh_h << ',' << c.dofs << ',' << c.eigenvalues[1]
        << ',' << c.mu3() << ',' << c.ball_eigenvalue << ',' << c.margin() << ',' << c.relative_margin() << ','
        << a.bound << ',' << a.continuous.quotient << ',' << ortho << ',' << slack << ',' << a.angle << ','
        << a.height << ',' << a.center.x() << ',' << a.center.y() << ',' << c.degenerate << ',' << c.equality << ','
        << c.passed();
    return out.str();
}

} // namespace twoball::certify

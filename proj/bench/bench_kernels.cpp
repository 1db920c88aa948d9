#include <benchmark/benchmark.h>

#include <memory>

#include "twoball/certify.hpp"
#include "twoball/degree.hpp"
#include "twoball/fem.hpp"
#include "twoball/transplant.hpp"

using namespace twoball;
using exec::Policy;
using geom::Vec2;

namespace {

std::shared_ptr<const mesh::Mesh> disk_mesh()
{
    static const auto m = [] {
        mesh::DomainSpec s;
        s.h = 0.04;
        s.primitives.push_back({mesh::Disk{Vec2(0.2, -0.1), 1.0}, {}});
        return std::make_shared<const mesh::Mesh>(mesh::build_mesh(s));
    }();
    return m;
}

std::shared_ptr<trial::MomentProblem> problem(Policy policy)
{
    mesh::DomainSpec s;
    s.h = 0.08;
    s.primitives.push_back({mesh::Polygon{{Vec2(0, 0), Vec2(3, 0), Vec2(3, 2), Vec2(0, 2)}}, {}});
    certify::Options o;
    o.policy = policy;
    return certify::excited_problem(mesh::build_mesh(s), o);
}

void assemble(benchmark::State& state, Policy policy)
{
    const auto m = disk_mesh();
    for (auto _ : state)
        benchmark::DoNotOptimize(fem::assemble(m, policy));
    state.counters["triangles"] = static_cast<double>(m->triangles().size());
}

void integrate(benchmark::State& state, Policy policy)
{
    const auto region = transplant::WeightedRegion::from_mesh(*disk_mesh());
    const balleig::ComparisonProfile h = balleig::h_profile(balleig::euclid_profile(2));
    for (auto _ : state)
        benchmark::DoNotOptimize(region.integrate([&](const Vec2& x) { return h(x.norm()); }, policy));
}

void w_field(benchmark::State& state, Policy policy)
{
    const auto p = problem(policy);
    double angle = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(trial::w_field(*p, p->halfspace(angle, 0.2)));
        angle += 0.1;
    }
}

void degree_jacobian(benchmark::State& state, Policy policy)
{
    const degree::SphereMap map = degree::random_symmetric_map(2, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(degree::degree_jacobian(map, 6, policy));
}

} // namespace

BENCHMARK_CAPTURE(assemble, serial, Policy::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(assemble, parallel, Policy::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(integrate, serial, Policy::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(integrate, parallel, Policy::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(w_field, serial, Policy::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(w_field, parallel, Policy::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(degree_jacobian, serial, Policy::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(degree_jacobian, parallel, Policy::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

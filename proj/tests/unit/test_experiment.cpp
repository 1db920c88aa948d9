#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "twoball/experiment.hpp"

using namespace twoball;
using namespace twoball::experiment;

namespace {

constexpr double kPi = std::numbers::pi;

mesh::DomainSpec coarse_disks(double gap)
{
    mesh::DomainSpec s;
    s.h = 0.3;
    s.primitives.push_back({mesh::Disk{Vec2(-1.0 - gap, 0.0), 1.0}, {}});
    s.primitives.push_back({mesh::Disk{Vec2(1.0 + gap, 0.0), 0.8}, {}});
    return s;
}

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.name = "small";
    c.domains.push_back({"overlapping", coarse_disks(-0.5)});
    c.domains.push_back({"apart", coarse_disks(0.4)});
    c.plots = false;
    return c;
}

} // namespace

TEST_CASE("config round trip")
{
    ExperimentConfig c = default_config();
    c.mesh_ladder = {0.1, 0.07, 1.0 / 3.0};
    c.tolerances.transplant = 0.1 + 0.2;
    c.corpora[0].families = {Family::Star, Family::LShape};
    c.corpora[1].volume = std::sqrt(2.0);
    const std::string text = config_to_json(c);
    const ExperimentConfig back = config_from_json(text);
    CHECK(config_to_json(back) == text);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(back.mesh_ladder[2] == c.mesh_ladder[2]);
    CHECK(back.tolerances.transplant == c.tolerances.transplant);
    CHECK(back.corpora[1].volume == c.corpora[1].volume);
    CHECK(back.domains.size() == 3);
    CHECK(config_hash(c).size() == 16);

    ExperimentConfig other = c;
    other.seed = 8;
    CHECK(config_hash(other) != config_hash(c));

    const auto j = nlohmann::json::parse(text);
    CHECK(j["schema"] == kConfigSchema);
    CHECK(j.contains("tolerances"));
    CHECK(j["seed"] == 7);
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(config_from_json("not json"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"schema": "other/1"})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"schema": "twoball.experiment/1", "mesh_ladder": [0.1, -1]})"),
                    InvalidArgument);
    CHECK_THROWS_AS(
        config_from_json(R"({"schema": "twoball.experiment/1", "corpora": [{"families": ["blob"]}]})"),
        InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"schema": "twoball.experiment/1", "seed": "x"})"), InvalidArgument);
    CHECK(config_from_json(R"({"schema": "twoball.experiment/1"})").domains.empty());
}

TEST_CASE("Euclidean corpus")
{
    const auto a = euclidean_corpus(20, 7);
    const auto b = euclidean_corpus(20, 7);
    const auto c = euclidean_corpus(20, 8);
    REQUIRE(a.size() == 20);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(mesh::domain_to_json(a[i].spec) == mesh::domain_to_json(b[i].spec));
        differs = differs || mesh::domain_to_json(a[i].spec) != mesh::domain_to_json(c[i].spec);
        double area = 0.0;
        for (const auto& curve : mesh::resolve_boundaries(a[i].spec))
            area += curve.area();
        CHECK(area == doctest::Approx(2 * kPi).epsilon(1e-9));
    }
    CHECK(differs);
    CHECK(a[3].spec.primitives.size() == 2);
    CHECK_THROWS_AS(euclidean_corpus(2, 1, {Family::GeodesicPair}), InvalidArgument);
}

TEST_CASE("hyperbolic corpus has fixed volume")
{
    const double v = default_hyperbolic_volume();
    const auto corpus = hyperbolic_corpus(10, 7, v);
    REQUIRE(corpus.size() == 10);
    for (const auto& d : corpus) {
        CHECK(d.spec.geometry == geom::Geometry::Hyperbolic);
        CHECK(mesh::hyp_volume(mesh::build_mesh(d.spec)) == doctest::Approx(v).epsilon(5e-3));
    }
    CHECK_THROWS_AS(hyperbolic_corpus(1, 1, v, {Family::Star}), InvalidArgument);
    CHECK_THROWS_AS(hyperbolic_corpus(1, 1, 0.0), InvalidArgument);
}

TEST_CASE("hyperbolic volume of polygons")
{
    for (double a : {0.1, 0.4, 0.7}) {
        std::vector<Vec2> poly;
        const int n = 4096;
        for (int k = 0; k < n; ++k)
            poly.emplace_back(a * std::cos(2 * kPi * k / n), a * std::sin(2 * kPi * k / n));
        CHECK(polygon_hyp_volume(poly) == doctest::Approx(balleig::hyp_ball_volume(a)).epsilon(1e-5));
    }
    // Small polygons see the Euclidean area.
    const std::vector<Vec2> sq{Vec2(0, 0), Vec2(1e-3, 0), Vec2(1e-3, 1e-3), Vec2(0, 1e-3)};
    CHECK(polygon_hyp_volume(sq) == doctest::Approx(1e-6).epsilon(1e-5));
    CHECK_THROWS_AS(polygon_hyp_volume({Vec2(0, 0), Vec2(2, 0), Vec2(0, 2)}), InvalidDomain);
}

TEST_CASE("mesh ladder expansion")
{
    ExperimentConfig c;
    c.domains.push_back({"disks", coarse_disks(0.4)});
    c.mesh_ladder = {0.2, 0.1};
    const auto d = expand(c);
    REQUIRE(d.size() == 2);
    CHECK(d[0].name == "disks@h=0.2");
    const double ref = reference_length(c.domains[0].spec);
    CHECK(ref == doctest::Approx(std::sqrt((1.0 + 0.64) / 2.0)).epsilon(1e-12));
    CHECK(d[1].spec.h == doctest::Approx(0.1 * ref));
}

TEST_CASE("failures are isolated and output is deterministic")
{
    const ExperimentConfig c = small_config();
    const RunSummary s1 = run(c, 1);
    REQUIRE(s1.records.size() == 2);
    CHECK(s1.records[0].status == "error");
    CHECK(s1.records[0].error_kind == "invalid-domain");
    CHECK(s1.records[1].certificate.has_value());
    CHECK(s1.records[1].status == "passed");
    CHECK(s1.errors == 1);
    CHECK(s1.failures.size() == 1);
    for (const RunRecord& r : s1.records) {
        CHECK(r.config_hash == config_hash(c));
        CHECK(r.version == std::string(version()));
    }

    const RunSummary s2 = run(c, 2);
    CHECK(results_csv(s1) == results_csv(s2));
    CHECK(record_json(s1.records[1]) == record_json(s2.records[1]));
    CHECK(summary_json(s1, c) == summary_json(s2, c));

    const std::string csv = results_csv(s1);
    const auto first_line = csv.substr(0, csv.find('\n'));
    const auto commas = std::count(first_line.begin(), first_line.end(), ',');
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
        const std::size_t end = csv.find('\n', pos);
        const std::string line = csv.substr(pos, end - pos);
        CHECK(std::count(line.begin(), line.end(), ',') == commas);
        pos = end + 1;
    }

    const auto dir = std::filesystem::temp_directory_path() / "twoball-test-out";
    std::filesystem::remove_all(dir);
    write_outputs(s1, c, dir);
    CHECK(std::filesystem::exists(dir / "results.csv"));
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "certificates" / "001-apart.json"));
    CHECK(std::filesystem::exists(dir / "certificates" / "000-overlapping.json"));
    const ExperimentConfig again = load_config(dir / "config.json");
    CHECK(config_hash(again) == config_hash(c));
    std::filesystem::remove_all(dir);
}

TEST_CASE("output directory precedence")
{
    ExperimentConfig c;
    ::setenv(kOutputEnv, "/tmp/from-env", 1);
    CHECK(resolve_output_dir("", c) == "/tmp/from-env");
    c.output_dir = "from-config";
    CHECK(resolve_output_dir("", c) == "from-config");
    CHECK(resolve_output_dir("from-flag", c) == "from-flag");
    ::unsetenv(kOutputEnv);
    c.output_dir.clear();
    CHECK(resolve_output_dir("", c) == kDefaultOutput);
    CHECK(slug("a b/c@h=0.1") == "a_b_c_h_0.1");
}

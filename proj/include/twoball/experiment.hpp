#pragma once

// Reproducible batch runs: a JSON experiment configuration, seeded domain
// corpora, a bounded worker pool over domains, and the output tree
// (results.csv, summary.json, certificates/*.json, plots/*.svg).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "twoball/certify.hpp"
#include "twoball/mesh.hpp"

namespace twoball::experiment {

using geom::Geometry;
using geom::Vec2;

inline constexpr const char* kConfigSchema = "twoball.experiment/1";
inline constexpr const char* kOutputEnv = "TWOBALL_OUT";
inline constexpr const char* kDefaultOutput = "twoball-out";

const char* version() noexcept;

enum class Family {
    Ellipse,
    Rectangle,
    LShape,
    TwoDisks,
    Star,
    GeodesicPair,
    GeodesicDisk,
    PlacedStar,
    PlacedEllipse,
    PlacedLShape,
};
const char* to_string(Family f) noexcept;
/// Throws InvalidArgument for unknown names.
Family family_from_string(const std::string& name);
std::vector<Family> default_families(Geometry geometry);

struct NamedDomain {
    std::string name;
    mesh::DomainSpec spec;
};

struct CorpusSpec {
    Geometry geometry = Geometry::Euclidean;
    int size = 20;
    std::uint64_t seed = 7;
    std::vector<Family> families;  ///< empty: every family of the geometry
    double volume = 0.0;           ///< hyperbolic total volume; 0 picks the default
};

struct Tolerances {
    double equality_margin = certify::kEqualityMargin;
    double ball = certify::kBallTolerance;
    double dominance = certify::kDominanceTol;
    double degenerate = certify::kDegenerateTol;
    double transplant = transplant::kEqualityTol;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 7;
    std::vector<NamedDomain> domains;
    std::vector<CorpusSpec> corpora;
    /// Mesh sizes relative to sqrt(chart area / 2 pi). Empty keeps each
    /// domain's own h; several entries certify every domain at each size.
    std::vector<double> mesh_ladder;
    Tolerances tolerances;
    std::string output_dir;  ///< empty: $TWOBALL_OUT, then ./twoball-out
    bool plots = true;
};

std::string config_to_json(const ExperimentConfig& c);
/// Throws InvalidArgument for a wrong schema or malformed fields.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// FNV-1a of the canonical JSON, 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Two equal disks, the square, a 20-domain Euclidean corpus (seed 7) and a
/// 10-domain hyperbolic corpus of fixed volume.
ExperimentConfig default_config();

/// Hyperbolic volume used when CorpusSpec::volume is 0: two balls of a = 0.35.
double default_hyperbolic_volume();
/// Default relative mesh size of generated domains.
inline constexpr double kCorpusRelativeH = 0.1;

/// Euclidean shapes of area 2 pi, families in rotation.
std::vector<NamedDomain> euclidean_corpus(int size, std::uint64_t seed, const std::vector<Family>& families = {},
                                          double relative_h = kCorpusRelativeH);
/// Hyperbolic shapes of the given total volume, placed by Mobius maps.
std::vector<NamedDomain> hyperbolic_corpus(int size, std::uint64_t seed, double volume,
                                           const std::vector<Family>& families = {},
                                           double relative_h = kCorpusRelativeH);

/// int (1 - |x|^2)^{-2} dx over a counter-clockwise simple polygon, by
/// Green's theorem with x dy - y dx over 2(1 - |x|^2).
double polygon_hyp_volume(const std::vector<Vec2>& polygon);
/// sqrt(chart area / 2 pi) of a spec, from its boundary curves.
double reference_length(const mesh::DomainSpec& spec);

/// Explicit domains, then corpora in order, each at every ladder size.
std::vector<NamedDomain> expand(const ExperimentConfig& c);

certify::Options options_for(const ExperimentConfig& c);

struct RunRecord {
    std::size_t index = 0;
    std::string name;
    std::string status;  ///< passed, failed or error
    std::string error_kind;
    std::string error_message;
    std::optional<certify::Certificate> certificate;
    double seconds = 0.0;
    std::string config_hash;
    std::string version;

    std::vector<std::pair<std::string, bool>> checks() const;
};

struct RunSummary {
    std::vector<RunRecord> records;  ///< ordered by domain index
    int passed = 0;
    int failed = 0;
    int errors = 0;
    std::vector<std::string> failures;
};

/// Certifies one domain; every error is caught into the record.
RunRecord run_one(const NamedDomain& domain, std::size_t index, const certify::Options& options,
                  const std::string& hash);

using Progress = std::function<void(const RunRecord&)>;
/// Runs all expanded domains on `jobs` workers. Kernels use the blocked
/// parallel policy, whose sums do not depend on the thread count.
RunSummary run(const ExperimentConfig& c, int jobs = 1, const Progress& progress = {});

/// Record as JSON without timing, so reruns compare byte for byte.
std::string record_json(const RunRecord& r);
std::string results_csv(const RunSummary& s);
std::string summary_json(const RunSummary& s, const ExperimentConfig& c);

/// Flag, then config, then $TWOBALL_OUT, then ./twoball-out.
std::filesystem::path resolve_output_dir(const std::string& flag, const ExperimentConfig& c);

/// Writes config.json, results.csv, summary.json, timings.txt,
/// certificates/NNN-name.json and plots/NNN-name.svg.
void write_outputs(const RunSummary& s, const ExperimentConfig& c, const std::filesystem::path& out);

/// File-name-safe version of a domain name.
std::string slug(const std::string& name);

} // namespace twoball::experiment

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iga/assembly.hpp"

namespace iga {

enum class Experiment { spectrum, annulus, project, stability };

std::string to_string(Experiment e);
/// Throws ConfigError for an unknown name.
Experiment parse_experiment(std::string_view name);

/// Flat `key = value` configuration. Blank lines and lines starting with '#'
/// are ignored; a '#' after the value starts a comment. Every entry remembers
/// where it came from ("path:line" or "--key") so that validation errors can
/// point at it.
class KeyValueConfig {
public:
    struct Entry {
        std::string value;
        std::string origin;
    };

    /// Throws ConfigError "<source>:<line>: ..." for malformed lines and
    /// duplicate keys.
    static KeyValueConfig parse(std::istream& in, const std::string& source);
    static KeyValueConfig load(const std::filesystem::path& path);

    /// Adds or replaces an entry (command-line overrides).
    void set(const std::string& key, std::string value, std::string origin);
    [[nodiscard]] const Entry* find(const std::string& key) const;
    [[nodiscard]] const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

private:
    std::map<std::string, Entry> entries_;
};

/// How annulus initial displacement becomes coefficients: the tensor
/// quasi-projection shared by all kinds, the Galerkin L2 projection shared by
/// all kinds, or M d0 = F with each kind's own mass matrix.
enum class InitialProjection { quasi, l2, own_mass };

std::string to_string(InitialProjection p);

/// Validated experiment parameters. Keys of the configuration file carry the
/// field names below.
struct RunConfig {
    Experiment experiment = Experiment::spectrum;
    int degree = 3;                        ///< p, 2..5
    std::size_t dofs = 250;                ///< N, dimension of the 1D space (spectrum, 1D stability)
    std::vector<std::size_t> meshes;       ///< annulus radial elements / project dimensions N
    std::vector<MassKind> mass_kinds;      ///< annulus and stability runs
    bool outlier_removal = false;          ///< annulus and spectrum
    std::string rk_scheme = "auto";        ///< auto: rk4 for p <= 4, rk6 for p = 5
    std::string lumped_scheme = "central_difference";
    double dt_fraction = 0.5;              ///< (0, 1]
    InitialProjection initial_projection = InitialProjection::quasi;
    int dimension = 1;                     ///< stability: 1 (string) or 2 (annulus)
    std::size_t elements = 16;             ///< stability 2D: radial elements (angular 2x)
    std::size_t periods = 1;               ///< annulus final time in periods of the exact solution
    unsigned threads = 1;
    double power_tolerance = 1e-8;
    std::filesystem::path output_dir = "results";
};

/// Defaults of an experiment: meshes {8, 16, 32} (annulus) or {10, 20, 40}
/// (project); mass kinds galerkin_consistent, customized, rowsum_lumped.
RunConfig default_run_config(Experiment e);

/// Applies and validates the entries. Unknown keys, unparsable values and
/// violated invariants throw ConfigError naming the entry's origin.
RunConfig make_run_config(Experiment e, const KeyValueConfig& config);

/// Scheme used for a dynamic run of the given mass kind.
std::string scheme_for(const RunConfig& config, MassKind kind);

/// In-memory CSV: `# key=value` metadata lines, a header row, data rows.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_metadata(std::string key, std::string value);
    /// Index of a header column; throws std::out_of_range if absent.
    [[nodiscard]] std::size_t column(std::string_view name) const;
    /// Column values of every row parsed as doubles (empty fields give NaN).
    [[nodiscard]] std::vector<double> numbers(std::string_view name) const;
};

/// RFC 4180 field quoting, CRLF-free ("\n") line ends.
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Shortest round-trip decimal representation ("nan", "inf" for non-finite).
std::string format_number(double x);

/// Metadata shared by all experiments: experiment name, every config value.
void add_config_metadata(CsvTable& table, const RunConfig& config);

/// String spectra of consistent, customized and lumped mass: one row per
/// retained mode with normalized errors |omega_h / omega - 1|.
CsvTable run_spectrum(const RunConfig& config);

struct AnnulusResult {
    std::vector<CsvTable> per_mesh;  ///< one table per radial element count
    CsvTable summary;                ///< all runs plus slopes against the next coarser mesh
};

/// Free vibration of the annulus over `periods` periods for every mass kind and mesh.
/// Runs whose displacement grows beyond 1e6 times the initial maximum (or
/// become non-finite) are flagged with status "unstable" instead of failing.
AnnulusResult run_annulus(const RunConfig& config);

/// Quasi-projection errors on [0, 1] for monomials, boundary-vanishing
/// polynomials and sin(pi x) over the dimensions in `meshes`.
CsvTable run_project(const RunConfig& config);

/// Largest frequencies and critical time steps per mass kind, without and
/// with outlier removal.
CsvTable run_stability(const RunConfig& config);

/// Runs the experiment of `config` and writes its CSV files into
/// config.output_dir; returns the written paths.
std::vector<std::filesystem::path> run_experiment(const RunConfig& config);

}  // namespace iga

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "sspde/solver.hpp"

namespace sspde {

// Flat `key = value` configuration with dotted section keys. Unknown keys are
// rejected; missing keys fall back to the defaults listed by `defaults()`.
class RunConfig {
public:
    RunConfig() = default;
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);
    static const std::map<std::string, std::string>& defaults();

    // Sorted `key = value` lines; parse(to_text()) reproduces the config.
    std::string to_text() const;
    nlohmann::json to_json() const;
    // Explicit entries plus every default, as a new config.
    RunConfig effective() const;

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const;
    // "1-8" or "3,5,9".
    std::vector<std::uint64_t> seeds() const;

    void validate() const;
    const std::map<std::string, std::string>& entries() const { return kv_; }
    bool operator==(const RunConfig& o) const { return kv_ == o.kv_; }

private:
    std::map<std::string, std::string> kv_;
};

// Values resolved from a config for one seed: lattice, regularization, noise,
// renormalization, problem and solver settings.
struct ResolvedRun {
    PdeProblem problem;
    SolverConfig solver;
    double epsilon = 0.0;
    double renorm_constant = 0.0;
    std::string family;
    nlohmann::json to_json() const;
};

// n_spatial overrides solver.n_spatial (and the automatic epsilon = 3/n).
ResolvedRun resolve_run(const RunConfig& cfg, std::uint64_t seed, int n_spatial = 0);
GridField initial_condition(const std::string& spec, const TorusLattice& lat);

struct StudyReport {
    std::string name;
    bool pass = false;
    nlohmann::json summary;
    std::map<std::string, std::string> tables;  // file name -> CSV text
    nlohmann::json manifest;
};

StudyReport study_epsilon_convergence(const RunConfig& cfg);
StudyReport study_renorm_sensitivity(const RunConfig& cfg);
StudyReport study_orderbounds(const RunConfig& cfg);
StudyReport study_reconstruction(const RunConfig& cfg);
StudyReport study_growth(const RunConfig& cfg);
StudyReport study_flow(const RunConfig& cfg);

std::vector<std::string> study_names();
StudyReport run_study(const std::string& name, const RunConfig& cfg);

// Writes every table plus summary.json and manifest.json into `dir`, each via
// a temporary file and rename.
void write_report(const std::string& dir, const StudyReport& report);
void write_atomic(const std::string& path, const std::string& content);

double median(std::vector<double> v);
double iqr(std::vector<double> v);

}  // namespace sspde

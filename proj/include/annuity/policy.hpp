#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "annuity/hjb.hpp"
#include "annuity/model.hpp"

namespace annuity::policy {

// Immutable per-age policy: controls on the solver grid plus the thresholds that split it.
struct PolicyTable {
    std::vector<double> y;
    std::vector<double> kappa;
    std::vector<double> labor;
    std::vector<double> portfolio;
    std::vector<hjb::Region> region;
    std::optional<double> y_tilde;
    std::optional<double> y_star;
    model::ModelParams params;  // effective_rate holds eta at `age`
    double age = 60.0;

    // Throws DomainError on size mismatch, unsorted nodes or a broken stopping branch.
    void validate() const;
};

PolicyTable from_solution(const hjb::SolveResult& result, const model::ModelParams& params, double age);

// Constant Merton weight, no labor, consumption max(alpha, k y), stopping at y_star.
PolicyTable benchmark_policy(const std::vector<double>& y, std::optional<double> y_star,
                             const model::ModelParams& params, double age);

struct Controls {
    double kappa;
    double labor;
    double portfolio;
    bool stopped;
    bool extrapolated;  // y outside the tabulated range; nearest node used
};

// Where a query falls: the stopping branch, or the blend node[lo] + w (node[hi] - node[lo]) with w in [0, 1).
// w is 0 at a node, outside the table, and on the near side of a threshold (no blending across ỹ or y*).
struct Location {
    bool stopped;
    std::size_t lo;
    std::size_t hi;
    double w;
    bool extrapolated;
};
// `cursor` remembers the last bracketing node so slowly moving queries skip the search.
Location locate(const PolicyTable& table, double y, std::size_t& cursor);

Controls evaluate(const PolicyTable& table, double y);
Controls evaluate(const PolicyTable& table, double y, std::size_t& cursor);

struct CrosscheckReport {
    // max |b_solver - b_closed| / max(|b_closed|, tiny) over interior-labor nodes
    std::optional<double> interior_labor_rel_dev;
    // max |kappa/y - k| over stopped nodes
    std::optional<double> withdrawal_dev;
    double working_payment = 0.0;  // annuity income before y*
};

double interior_labor_closed_form(double y, const model::ModelParams& params);
CrosscheckReport closed_form_crosschecks(const PolicyTable& table, const model::ModelParams& params);

enum class Format { Csv, Json };
Format parse_format(const std::string& s);

// Doubles are written with 17 significant digits so import reproduces the table bit for bit.
void write_csv(const PolicyTable& table, std::ostream& out);
std::string to_json(const PolicyTable& table);
PolicyTable read_csv(std::istream& in);
PolicyTable from_json(const std::string& text);

void export_table(const PolicyTable& table, const std::string& path, Format format);
PolicyTable import_table(const std::string& path);

}  // namespace annuity::policy

#include "annuity/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "annuity/error.hpp"
#include "annuity/text.hpp"

namespace annuity::policy {

namespace {

using text::format_double;

constexpr const char* kHeader = "y,region,kappa_star,b_star,p_star,pi_scaled";

// Metadata keys in file order; each maps to one double of the snapshot.
template <class Table>
auto snapshot_fields(Table& t) {
    using Ptr = decltype(&t.age);
    auto& m = t.params;
    return std::vector<std::pair<const char*, Ptr>>{{"market.r", &m.market.r},
            {"market.mu", &m.market.mu},
            {"market.sigma", &m.market.sigma},
            {"prefs.beta", &m.prefs.beta},
            {"prefs.gamma", &m.prefs.gamma},
            {"prefs.psi", &m.prefs.psi},
            {"prefs.leisure", &m.prefs.leisure},
            {"prefs.alpha", &m.prefs.alpha},
            {"prefs.habit_speed", &m.prefs.habit_speed},
            {"labor.wage", &m.labor.wage},
            {"labor.max_labor", &m.labor.max_labor},
            {"annuity.k", &m.annuity_rate},
            {"eta", &m.effective_rate},
            {"age", &t.age}};
}

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

std::optional<double> parse_optional(std::string_view s, std::string_view what) {
    if (text::trim(s) == "none") return std::nullopt;
    return text::parse_double(s, what);
}

void push_row(PolicyTable& t, double y, hjb::Region region, double kappa, double labor, double p) {
    t.y.push_back(y);
    t.region.push_back(region);
    t.kappa.push_back(kappa);
    t.labor.push_back(labor);
    t.portfolio.push_back(p);
}

Controls stopping_branch(const PolicyTable& t, double y) {
    return {t.params.annuity_rate * y, 0.0, model::merton_weight(t.params), true, false};
}

Controls node(const PolicyTable& t, std::size_t i, bool extrapolated) {
    return {t.kappa[i], t.labor[i], t.portfolio[i], t.region[i] == hjb::Region::Stopped, extrapolated};
}

}  // namespace

void PolicyTable::validate() const {
    const std::size_t n = y.size();
    if (n < 2 || kappa.size() != n || labor.size() != n || portfolio.size() != n || region.size() != n)
        throw DomainError("policy table needs at least two rows and equal-length columns");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(y[i] > 0.0) || (i > 0 && !(y[i] > y[i - 1]))) throw DomainError("policy nodes must be positive and increasing");
        if (!(kappa[i] > 0.0)) throw DomainError("policy kappa must be positive at y=" + format_double(y[i]));
        if (region[i] == hjb::Region::Stopped) {
            const Controls s = stopping_branch(*this, y[i]);
            if (kappa[i] != s.kappa || labor[i] != 0.0 || portfolio[i] != s.portfolio)
                throw DomainError("stopping branch is not exact at y=" + format_double(y[i]));
        }
    }
}

PolicyTable from_solution(const hjb::SolveResult& result, const model::ModelParams& params, double age) {
    PolicyTable t;
    t.y = result.y;
    t.kappa = result.kappa;
    t.labor = result.labor;
    t.portfolio = result.portfolio;
    t.region = result.region;
    t.y_tilde = result.y_tilde;
    t.y_star = result.y_star;
    t.params = params;
    t.age = age;
    t.validate();
    return t;
}

PolicyTable benchmark_policy(const std::vector<double>& y, std::optional<double> y_star,
                             const model::ModelParams& params, double age) {
    PolicyTable t;
    t.params = params;
    t.age = age;
    t.y_star = y_star;
    const double k = params.annuity_rate;
    const double w = model::merton_weight(params);
    for (double yi : y) {
        if (y_star && yi >= *y_star)
            push_row(t, yi, hjb::Region::Stopped, k * yi, 0.0, w);
        else
            push_row(t, yi, hjb::Region::Interior, std::max(params.prefs.alpha, k * yi), 0.0, w);
    }
    t.validate();
    return t;
}

Controls evaluate(const PolicyTable& t, double y) {
    std::size_t cursor = 0;
    return evaluate(t, y, cursor);
}

Location locate(const PolicyTable& t, double y, std::size_t& cursor) {
    if (!(y > 0.0)) throw DomainError("policy evaluation needs y > 0, got " + format_double(y));
    if (t.y_star && y >= *t.y_star) return {true, 0, 0, 0.0, false};
    const std::size_t n = t.y.size();
    if (y <= t.y.front()) return {false, 0, 0, 0.0, y < t.y.front()};
    if (y >= t.y.back()) return {false, n - 1, n - 1, 0.0, y > t.y.back()};
    // Find hi with t.y[hi-1] < y <= t.y[hi]; a short walk from the cursor, else bisection.
    std::size_t hi = std::clamp<std::size_t>(cursor, 1, n - 1);
    for (int step = 0; step < 4 && !(t.y[hi - 1] < y && y <= t.y[hi]); ++step) hi += y > t.y[hi] ? 1 : -1;
    if (!(t.y[hi - 1] < y && y <= t.y[hi]))
        hi = static_cast<std::size_t>(std::lower_bound(t.y.begin(), t.y.end(), y) - t.y.begin());
    cursor = hi;
    const std::size_t lo = hi - 1;
    if (y == t.y[hi]) return {false, hi, hi, 0.0, false};
    // Across a threshold the node on y's own side of it is held constant.
    if (t.region[lo] != t.region[hi]) return {false, lo, lo, 0.0, false};
    return {false, lo, hi, (y - t.y[lo]) / (t.y[hi] - t.y[lo]), false};
}

Controls evaluate(const PolicyTable& t, double y, std::size_t& cursor) {
    const Location l = locate(t, y, cursor);
    if (l.stopped) return stopping_branch(t, y);
    if (l.w == 0.0) return node(t, l.lo, l.extrapolated);
    auto lerp = [&l](const std::vector<double>& v) { return v[l.lo] + l.w * (v[l.hi] - v[l.lo]); };
    return {lerp(t.kappa), lerp(t.labor), lerp(t.portfolio), false, false};
}

double interior_labor_closed_form(double y, const model::ModelParams& params) {
    const auto& p = params.prefs;
    const double k = params.annuity_rate;
    const double eta = params.effective_rate;
    return (1.0 - p.alpha) / (params.labor.wage * p.alpha) * std::pow(std::pow(k, 1.0 - p.gamma) / eta, -1.0 / p.gamma) * y;
}

CrosscheckReport closed_form_crosschecks(const PolicyTable& t, const model::ModelParams& params) {
    if (!t.y_star) throw DomainError("closed-form cross-checks need a stopping threshold");
    CrosscheckReport rep;
    const double k = params.annuity_rate;
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        if (t.region[i] == hjb::Region::Interior) {
            const double cf = interior_labor_closed_form(t.y[i], params);
            const double dev = std::abs(t.labor[i] - cf) / std::max(std::abs(cf), 1e-300);
            rep.interior_labor_rel_dev = std::max(rep.interior_labor_rel_dev.value_or(0.0), dev);
        } else if (t.region[i] == hjb::Region::Stopped) {
            const double dev = std::abs(t.kappa[i] / t.y[i] - k);
            rep.withdrawal_dev = std::max(rep.withdrawal_dev.value_or(0.0), dev);
        }
    }
    return rep;
}

Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw ConfigError("unknown format '" + s + "' (expected csv or json)");
}

void write_csv(const PolicyTable& table, std::ostream& out) {
    const PolicyTable& t = table;
    for (const auto& [key, ptr] : snapshot_fields(t)) out << "# " << key << '=' << format_double(*ptr) << '\n';
    out << "# y_tilde=" << optional_text(t.y_tilde) << '\n';
    out << "# y_star=" << optional_text(t.y_star) << '\n';
    out << kHeader << '\n';
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        out << format_double(t.y[i]) << ',' << hjb::region_name(t.region[i]) << ',' << format_double(t.kappa[i])
            << ',' << format_double(t.labor[i]) << ',' << format_double(t.portfolio[i]) << ','
            << format_double(t.portfolio[i] * t.y[i]) << '\n';
    }
}

PolicyTable read_csv(std::istream& in) {
    PolicyTable t;
    auto fields = snapshot_fields(t);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string_view body = text::trim(std::string_view(line).substr(1));
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) throw IoError("malformed policy metadata line: " + line);
            const std::string_view key = text::trim(body.substr(0, eq));
            const std::string_view val = body.substr(eq + 1);
            if (key == "y_tilde") {
                t.y_tilde = parse_optional(val, key);
            } else if (key == "y_star") {
                t.y_star = parse_optional(val, key);
            } else {
                for (auto& [name, ptr] : fields)
                    if (key == name) *ptr = text::parse_double(val, key);
            }
            continue;
        }
        if (!header) {
            if (text::trim(line) != kHeader) throw IoError("unexpected policy header: " + line);
            header = true;
            continue;
        }
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
            cols.push_back(rest.substr(0, pos));
        cols.push_back(rest);
        if (cols.size() != 6) throw IoError("policy row needs 6 columns: " + line);
        push_row(t, text::parse_double(cols[0], "y"), hjb::parse_region(std::string(text::trim(cols[1]))),
                 text::parse_double(cols[2], "kappa_star"), text::parse_double(cols[3], "b_star"),
                 text::parse_double(cols[4], "p_star"));
    }
    if (!header) throw IoError("policy file has no header line");
    t.validate();
    return t;
}

std::string to_json(const PolicyTable& table) {
    const PolicyTable& t = table;
    nlohmann::ordered_json meta;
    for (const auto& [key, ptr] : snapshot_fields(t)) meta[key] = *ptr;
    meta["y_tilde"] = t.y_tilde ? nlohmann::ordered_json(*t.y_tilde) : nlohmann::ordered_json(nullptr);
    meta["y_star"] = t.y_star ? nlohmann::ordered_json(*t.y_star) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        rows.push_back({{"y", t.y[i]},
                        {"region", hjb::region_name(t.region[i])},
                        {"kappa_star", t.kappa[i]},
                        {"b_star", t.labor[i]},
                        {"p_star", t.portfolio[i]},
                        {"pi_scaled", t.portfolio[i] * t.y[i]}});
    }
    nlohmann::ordered_json doc;
    doc["metadata"] = std::move(meta);
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
}

PolicyTable from_json(const std::string& s) {
    PolicyTable t;
    try {
        const auto doc = nlohmann::json::parse(s);
        const auto& meta = doc.at("metadata");
        for (auto& [key, ptr] : snapshot_fields(t)) *ptr = meta.at(key).get<double>();
        if (!meta.at("y_tilde").is_null()) t.y_tilde = meta.at("y_tilde").get<double>();
        if (!meta.at("y_star").is_null()) t.y_star = meta.at("y_star").get<double>();
        for (const auto& row : doc.at("rows")) {
            push_row(t, row.at("y").get<double>(), hjb::parse_region(row.at("region").get<std::string>()),
                     row.at("kappa_star").get<double>(), row.at("b_star").get<double>(),
                     row.at("p_star").get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed policy JSON: ") + e.what());
    }
    t.validate();
    return t;
}

void export_table(const PolicyTable& table, const std::string& path, Format format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    if (format == Format::Csv)
        write_csv(table, out);
    else
        out << to_json(table);
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

PolicyTable import_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string s = buf.str();
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && s[first] == '{') return from_json(s);
    std::istringstream ss(s);
    return read_csv(ss);
}

}  // namespace annuity::policy

#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "bdre/errors.hpp"
#include "bdre/estimators.hpp"
#include "bdre/params.hpp"
#include "bdre/quadrature.hpp"
#include "bdre/sde.hpp"

namespace bdre {

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Shortest decimal that parses back to the same double ('.' separator,
/// locale independent).
inline std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw NumericalError("failed to format number");
    return std::string(buf, end);
}

inline double parse_double(std::string_view s, std::string_view key) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError("invalid number '" + std::string(s) + "' for " + std::string(key));
    }
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::string_view key) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("invalid integer '" + std::string(s) + "' for " + std::string(key));
    }
    return v;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string join_doubles(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += format_double(xs[i]);
    }
    return out;
}

inline std::string join_strings(const std::vector<std::string>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += xs[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class Experiment {
    Extinction,
    ConditionedSurvival,
    Rates,
    Martingale,
    Laplace,
    Equivalence,
    Dufresne,
    Bridge,
    Verify,
};

inline std::string_view to_string(Experiment e) {
    switch (e) {
        case Experiment::Extinction: return "extinction";
        case Experiment::ConditionedSurvival: return "conditioned_survival";
        case Experiment::Rates: return "rates";
        case Experiment::Martingale: return "martingale";
        case Experiment::Laplace: return "laplace";
        case Experiment::Equivalence: return "equivalence";
        case Experiment::Dufresne: return "dufresne";
        case Experiment::Bridge: return "bridge";
        case Experiment::Verify: return "verify";
    }
    return "?";
}

inline Experiment parse_experiment(std::string_view s) {
    for (auto e : {Experiment::Extinction, Experiment::ConditionedSurvival, Experiment::Rates,
                   Experiment::Martingale, Experiment::Laplace, Experiment::Equivalence,
                   Experiment::Dufresne, Experiment::Bridge, Experiment::Verify}) {
        if (s == to_string(e)) return e;
    }
    throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

inline std::string_view to_string(Scheme s) {
    return s == Scheme::EulerReflect ? "euler_reflect" : "euler_full_truncation";
}

inline Scheme parse_scheme(std::string_view s) {
    if (s == "euler_full_truncation") return Scheme::EulerFullTruncation;
    if (s == "euler_reflect") return Scheme::EulerReflect;
    throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

inline std::string_view to_string(InfiniteDomainMap m) {
    return m == InfiniteDomainMap::TanSubstitution ? "tan" : "exp";
}

inline InfiniteDomainMap parse_map(std::string_view s) {
    if (s == "exp") return InfiniteDomainMap::ExpSubstitution;
    if (s == "tan") return InfiniteDomainMap::TanSubstitution;
    throw ConfigError("unknown quadrature map '" + std::string(s) + "'");
}

/// Everything needed to rerun an experiment. Defaults reproduce the
/// standard parameter set (α, σ_e, σ_b, z) = (1, 1, 1, 1).
struct ExperimentConfig {
    ModelParams model;
    SchemeConfig scheme;
    QuadratureConfig quadrature;
    Experiment experiment = Experiment::Extinction;
    std::uint64_t n = 100000;
    std::uint64_t seed = 20240611;
    /// Horizon for extinction, t for conditioned survival and the Laplace test,
    /// T for the exponential functional.
    double t = 30.0;
    std::vector<double> t_grid{4.0, 6.0, 8.0, 10.0, 12.0};
    std::vector<double> lambda_grid{0.5, 1.0, 2.0, 10.0};
    /// Method or route names, e.g. "rao_blackwell" or "negated_alpha_sim".
    std::vector<std::string> routes{"closed_form", "rao_blackwell", "pathwise"};
    std::uint64_t bridge_scale = 1000;
    std::string preset = "standard";
    std::string output_dir = "results";  ///< not part of the hash
    unsigned threads = 0;                ///< not part of the hash

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

struct ConfigField {
    std::string_view key;
    bool semantic;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline const std::vector<ConfigField>& config_fields() {
    using C = ExperimentConfig;
    using S = const std::string&;
    static const std::vector<ConfigField> fields{
        {"model.alpha", true, [](const C& c) { return format_double(c.model.alpha); },
         [](C& c, S v) { c.model.alpha = parse_double(v, "model.alpha"); }},
        {"model.sigma_e", true, [](const C& c) { return format_double(c.model.sigma_e); },
         [](C& c, S v) { c.model.sigma_e = parse_double(v, "model.sigma_e"); }},
        {"model.sigma_b", true, [](const C& c) { return format_double(c.model.sigma_b); },
         [](C& c, S v) { c.model.sigma_b = parse_double(v, "model.sigma_b"); }},
        {"model.z0", true, [](const C& c) { return format_double(c.model.z0); },
         [](C& c, S v) { c.model.z0 = parse_double(v, "model.z0"); }},
        {"scheme.dt", true, [](const C& c) { return format_double(c.scheme.dt); },
         [](C& c, S v) { c.scheme.dt = parse_double(v, "scheme.dt"); }},
        {"scheme.horizon", true, [](const C& c) { return format_double(c.scheme.horizon); },
         [](C& c, S v) { c.scheme.horizon = parse_double(v, "scheme.horizon"); }},
        {"scheme.method", true, [](const C& c) { return std::string(to_string(c.scheme.scheme)); },
         [](C& c, S v) { c.scheme.scheme = parse_scheme(v); }},
        {"scheme.absorption_threshold", true,
         [](const C& c) { return format_double(c.scheme.absorption_threshold); },
         [](C& c, S v) { c.scheme.absorption_threshold = parse_double(v, "scheme.absorption_threshold"); }},
        {"scheme.stride", true, [](const C& c) { return std::to_string(c.scheme.stride); },
         [](C& c, S v) { c.scheme.stride = parse_uint(v, "scheme.stride"); }},
        {"quadrature.rel_tol", true, [](const C& c) { return format_double(c.quadrature.rel_tol); },
         [](C& c, S v) { c.quadrature.rel_tol = parse_double(v, "quadrature.rel_tol"); }},
        {"quadrature.abs_tol", true, [](const C& c) { return format_double(c.quadrature.abs_tol); },
         [](C& c, S v) { c.quadrature.abs_tol = parse_double(v, "quadrature.abs_tol"); }},
        {"quadrature.max_subdivisions", true,
         [](const C& c) { return std::to_string(c.quadrature.max_subdivisions); },
         [](C& c, S v) {
             c.quadrature.max_subdivisions = static_cast<int>(parse_uint(v, "quadrature.max_subdivisions"));
         }},
        {"quadrature.map", true,
         [](const C& c) { return std::string(to_string(c.quadrature.infinite_domain_map)); },
         [](C& c, S v) { c.quadrature.infinite_domain_map = parse_map(v); }},
        {"experiment.kind", true, [](const C& c) { return std::string(to_string(c.experiment)); },
         [](C& c, S v) { c.experiment = parse_experiment(v); }},
        {"experiment.n", true, [](const C& c) { return std::to_string(c.n); },
         [](C& c, S v) { c.n = parse_uint(v, "experiment.n"); }},
        {"experiment.seed", true, [](const C& c) { return std::to_string(c.seed); },
         [](C& c, S v) { c.seed = parse_uint(v, "experiment.seed"); }},
        {"experiment.t", true, [](const C& c) { return format_double(c.t); },
         [](C& c, S v) { c.t = parse_double(v, "experiment.t"); }},
        {"experiment.t_grid", true, [](const C& c) { return join_doubles(c.t_grid); },
         [](C& c, S v) {
             c.t_grid.clear();
             for (const auto& x : split_list(v)) c.t_grid.push_back(parse_double(x, "experiment.t_grid"));
         }},
        {"experiment.lambda_grid", true, [](const C& c) { return join_doubles(c.lambda_grid); },
         [](C& c, S v) {
             c.lambda_grid.clear();
             for (const auto& x : split_list(v)) {
                 c.lambda_grid.push_back(parse_double(x, "experiment.lambda_grid"));
             }
         }},
        {"experiment.routes", true, [](const C& c) { return join_strings(c.routes); },
         [](C& c, S v) { c.routes = split_list(v); }},
        {"experiment.bridge_scale", true, [](const C& c) { return std::to_string(c.bridge_scale); },
         [](C& c, S v) { c.bridge_scale = parse_uint(v, "experiment.bridge_scale"); }},
        {"experiment.preset", true, [](const C& c) { return c.preset; },
         [](C& c, S v) { c.preset = v; }},
        {"output.dir", false, [](const C& c) { return c.output_dir; },
         [](C& c, S v) { c.output_dir = v; }},
        {"run.threads", false, [](const C& c) { return std::to_string(c.threads); },
         [](C& c, S v) { c.threads = static_cast<unsigned>(parse_uint(v, "run.threads")); }},
    };
    return fields;
}

}  // namespace detail

/// `key = value` lines in a fixed key order.
inline std::string serialize_config(const ExperimentConfig& c, bool semantic_only = false) {
    std::string out;
    for (const auto& f : detail::config_fields()) {
        if (semantic_only && !f.semantic) continue;
        out += f.key;
        out += " = ";
        out += f.get(c);
        out += '\n';
    }
    return out;
}

/// Parses `key = value` lines; '#' starts a comment, blank lines are ignored
/// and unknown keys are errors. Missing keys keep their defaults.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        bool known = false;
        for (const auto& f : detail::config_fields()) {
            if (f.key == key) {
                f.set(base, value);
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    return base;
}

inline ExperimentConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline void write_config(const ExperimentConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file " + path.string());
    out << serialize_config(c);
}

/// FNV-1a over the semantic fields, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize_config(c, true)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    auto [end, ec] = std::to_chars(buf, buf + 16, h, 16);
    std::string hex(buf, end);
    return std::string(16 - hex.size(), '0') + hex;
}

// ---------------------------------------------------------------------------
// Result records
// ---------------------------------------------------------------------------

struct ResultRecord {
    std::string quantity;
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t n = 0;  ///< sample count; 0 for deterministic quantities
    std::optional<double> theoretical;
    std::string provenance;  ///< where `theoretical` comes from
    std::optional<bool> pass;
    std::uint64_t seed = 0;
    std::string config_hash;
};

inline ResultRecord record_from(const MCEstimate& e, std::string quantity,
                                std::optional<double> theoretical, std::string provenance,
                                std::optional<bool> pass, std::uint64_t seed, std::string hash) {
    return ResultRecord{std::move(quantity), e.mean,   e.std_error, e.n, theoretical,
                        std::move(provenance), pass, seed, std::move(hash)};
}

enum class OutputFormat { Csv, JsonLines };

inline OutputFormat parse_format(std::string_view s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "jsonl" || s == "jsonlines") return OutputFormat::JsonLines;
    throw ConfigError("unknown output format '" + std::string(s) + "'");
}

inline std::string_view extension(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "jsonl"; }

inline constexpr std::string_view kCsvHeader =
    "quantity,value,std_error,n,theoretical,provenance,pass,seed,config_hash";

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << detail::csv_field(r.quantity) << ',' << format_double(r.value) << ','
            << format_double(r.std_error) << ',' << r.n << ','
            << (r.theoretical ? format_double(*r.theoretical) : std::string()) << ','
            << detail::csv_field(r.provenance) << ','
            << (r.pass ? (*r.pass ? "true" : "false") : "") << ',' << r.seed << ','
            << r.config_hash << '\n';
    }
}

/// One JSON object per record. Non-finite numbers are written as strings
/// ("inf", "-inf", "nan") because JSON has no literal for them.
inline void write_jsonl(std::ostream& out, const std::vector<ResultRecord>& records) {
    auto number = [](double x) -> nlohmann::json {
        if (std::isfinite(x)) return x;
        return format_double(x);
    };
    for (const auto& r : records) {
        nlohmann::json j;
        j["quantity"] = r.quantity;
        j["value"] = number(r.value);
        j["std_error"] = number(r.std_error);
        j["n"] = r.n;
        j["theoretical"] = r.theoretical ? number(*r.theoretical) : nlohmann::json(nullptr);
        j["provenance"] = r.provenance;
        j["pass"] = r.pass ? nlohmann::json(*r.pass) : nlohmann::json(nullptr);
        j["seed"] = r.seed;
        j["config_hash"] = r.config_hash;
        out << j.dump() << '\n';
    }
}

inline void write_results(std::ostream& out, const std::vector<ResultRecord>& records,
                          OutputFormat format) {
    if (format == OutputFormat::Csv) {
        write_csv(out, records);
    } else {
        write_jsonl(out, records);
    }
}

/// Writes `<dir>/<stem>.<ext>` and returns the path.
inline std::filesystem::path write_results(const std::filesystem::path& dir, std::string_view stem,
                                           const std::vector<ResultRecord>& records,
                                           OutputFormat format) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string());
    const auto path = dir / (std::string(stem) + "." + std::string(extension(format)));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_results(out, records, format);
    if (!out) throw ConfigError("write failed for " + path.string());
    return path;
}

/// Appends a timestamped line to `<dir>/<stem>.log`. Timestamps live only
/// here so result files stay byte-identical across runs.
inline void append_run_log(const std::filesystem::path& dir, std::string_view stem,
                           std::string_view message) {
    std::ofstream out(dir / (std::string(stem) + ".log"), std::ios::app);
    if (!out) return;
    const auto now = std::chrono::system_clock::now();
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    out << "unix_time=" << secs << ' ' << message << '\n';
}

// ---------------------------------------------------------------------------
// Plot output for rate experiments
// ---------------------------------------------------------------------------

struct NamedCurve {
    std::string label;
    RateFit fit;
};

/// Writes `<stem>_curves.dat` (one block per curve: t, p, std_error, fitted p)
/// and `<stem>.gp`, a gnuplot script drawing the curves on a log scale.
inline void write_rate_plot(const std::filesystem::path& dir, std::string_view stem,
                            const std::vector<NamedCurve>& curves) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string data_name = std::string(stem) + "_curves.dat";
    {
        std::ofstream dat(dir / data_name);
        if (!dat) throw ConfigError("cannot write plot data in " + dir.string());
        for (const auto& c : curves) {
            dat << "# " << c.label << "\n# t p std_error fitted\n";
            for (const auto& pt : c.fit.points) {
                const double fitted = std::exp(c.fit.log_level - c.fit.exponential_rate * pt.t +
                                               c.fit.polynomial_power * std::log(pt.t));
                dat << format_double(pt.t) << ' ' << format_double(pt.estimate.mean) << ' '
                    << format_double(pt.estimate.std_error) << ' ' << format_double(fitted) << '\n';
            }
            dat << "\n\n";
        }
    }
    std::ofstream gp(dir / (std::string(stem) + ".gp"));
    if (!gp) throw ConfigError("cannot write plot script in " + dir.string());
    gp << "set terminal pngcairo size 900,600\n"
       << "set output '" << stem << ".png'\n"
       << "set logscale y\n"
       << "set format y '10^{%L}'\n"
       << "set xlabel 't'\n"
       << "set ylabel 'P(Z_t > 0 | Z_inf = 0)'\n"
       << "set key top right\n"
       << "plot \\\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
        gp << "  '" << data_name << "' index " << i << " using 1:2:3 with yerrorbars title '"
           << curves[i].label << "', \\\n"
           << "  '" << data_name << "' index " << i << " using 1:4 with lines notitle"
           << (i + 1 < curves.size() ? ", \\\n" : "\n");
    }
}

}  // namespace bdre

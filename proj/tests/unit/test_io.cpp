#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "bdre/io.hpp"
#include "json.hpp"

using namespace bdre;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "bdre_test_io" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(FormatDouble, RoundTrips) {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0}) {
        EXPECT_EQ(parse_double(format_double(x), "x"), x);
    }
    EXPECT_EQ(format_double(0.25), "0.25");
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_THROW(parse_double("1.5abc", "x"), ConfigError);
    EXPECT_THROW(parse_uint("-3", "n"), ConfigError);
}

TEST(Lists, SplitAndJoin) {
    EXPECT_EQ(split_list(" a, b ,c "), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(join_doubles({0.5, 2.0}), "0.5, 2");
    EXPECT_EQ(trim("  x y \t"), "x y");
}

TEST(Config, RoundTripDefaultsAndEdits) {
    const ExperimentConfig defaults;
    EXPECT_EQ(parse_config(serialize_config(defaults)), defaults);

    ExperimentConfig c;
    c.model = ModelParams{2.0, 0.7, 1.3, 0.25};
    c.scheme.dt = 0.005;
    c.scheme.scheme = Scheme::EulerReflect;
    c.quadrature.infinite_domain_map = InfiniteDomainMap::TanSubstitution;
    c.experiment = Experiment::Rates;
    c.t_grid = {1.0, 2.5};
    c.routes = {"pathwise"};
    c.output_dir = "elsewhere";
    c.threads = 3;
    EXPECT_EQ(parse_config(serialize_config(c)), c);

    const auto path = scratch("config") / "run.cfg";
    write_config(c, path);
    EXPECT_EQ(read_config(path), c);
}

TEST(Config, CommentsAndErrors) {
    const auto c = parse_config("# header\nmodel.alpha = 0.5  # weak\n\nexperiment.seed=7\n");
    EXPECT_EQ(c.model.alpha, 0.5);
    EXPECT_EQ(c.seed, 7u);
    EXPECT_THROW(parse_config("model.gamma = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("model.alpha 1\n"), ConfigError);
    EXPECT_THROW(parse_config("model.alpha = one\n"), ConfigError);
    EXPECT_THROW(parse_config("scheme.method = runge_kutta\n"), ConfigError);
    EXPECT_THROW(read_config("/nonexistent/dir/x.cfg"), ConfigError);
}

TEST(ConfigHash, TracksSemanticFieldsOnly) {
    const ExperimentConfig base;
    const std::string h = config_hash(base);
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h, config_hash(base));

    ExperimentConfig cosmetic = base;
    cosmetic.output_dir = "other";
    cosmetic.threads = 7;
    EXPECT_EQ(config_hash(cosmetic), h);

    ExperimentConfig seed = base;
    seed.seed += 1;
    EXPECT_NE(config_hash(seed), h);
    ExperimentConfig alpha = base;
    alpha.model.alpha = std::nextafter(1.0, 2.0);
    EXPECT_NE(config_hash(alpha), h);
    ExperimentConfig grid = base;
    grid.t_grid.push_back(14.0);
    EXPECT_NE(config_hash(grid), h);
}

TEST(Csv, EmptyRecordsGiveHeaderOnly) {
    std::ostringstream out;
    write_csv(out, {});
    EXPECT_EQ(out.str(), std::string(kCsvHeader) + "\n");
}

TEST(Csv, RecordLayoutAndQuoting) {
    std::ostringstream out;
    write_csv(out, {ResultRecord{"a,b", 0.5, 0.01, 100, 0.25, "say \"hi\"", true, 42, "00ff"},
                    ResultRecord{"c", 1.0, 0.0, 0, std::nullopt, "", std::nullopt, 42, "00ff"}});
    const std::string expected = std::string(kCsvHeader) +
                                 "\n\"a,b\",0.5,0.01,100,0.25,\"say \"\"hi\"\"\",true,42,00ff\n"
                                 "c,1,0,0,,,,42,00ff\n";
    EXPECT_EQ(out.str(), expected);
}

TEST(JsonLines, FieldsAndNonFiniteValues) {
    std::ostringstream out;
    write_jsonl(out, {ResultRecord{"q", std::numeric_limits<double>::infinity(), 0.0, 3, std::nullopt, "",
                                   false, 9, "abc"}});
    const auto j = nlohmann::json::parse(out.str());
    EXPECT_EQ(j["quantity"], "q");
    EXPECT_EQ(j["value"], "inf");
    EXPECT_TRUE(j["theoretical"].is_null());
    EXPECT_EQ(j["pass"], false);
    EXPECT_EQ(j["seed"], 9);
    EXPECT_EQ(parse_format("jsonl"), OutputFormat::JsonLines);
    EXPECT_THROW(parse_format("xml"), ConfigError);
}

TEST(Files, ResultsLogAndPlot) {
    const auto dir = scratch("files");
    const auto path = write_results(dir / "nested", "run", {ResultRecord{"x", 1.0}}, OutputFormat::Csv);
    EXPECT_EQ(path.filename(), "run.csv");
    EXPECT_NE(slurp(path).find("\nx,1,"), std::string::npos);

    append_run_log(dir, "run", "first");
    append_run_log(dir, "run", "second");
    const std::string log = slurp(dir / "run.log");
    EXPECT_NE(log.find("first"), std::string::npos);
    EXPECT_NE(log.find("second"), std::string::npos);

    RateFit fit;
    fit.exponential_rate = 0.5;
    fit.polynomial_power = -0.5;
    fit.points = {{4.0, MCEstimate{0.1, 0.001, 10, "t"}}, {6.0, MCEstimate{0.04, 0.001, 10, "t"}}};
    write_rate_plot(dir, "rates", {NamedCurve{"alpha=1", fit}});
    EXPECT_TRUE(fs::exists(dir / "rates_curves.dat"));
    EXPECT_NE(slurp(dir / "rates.gp").find("rates_curves.dat"), std::string::npos);
}

TEST(Experiment, Names) {
    for (auto e : {Experiment::Extinction, Experiment::ConditionedSurvival, Experiment::Rates, Experiment::Martingale,
                   Experiment::Laplace, Experiment::Equivalence, Experiment::Dufresne, Experiment::Bridge,
                   Experiment::Verify}) {
        EXPECT_EQ(parse_experiment(to_string(e)), e);
    }
    EXPECT_THROW(parse_experiment("nothing"), ConfigError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>

#include "ssanova/design.hpp"

using namespace ssanova;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& content) {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("ssanova_design_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::error_code ec; fs::remove(path, ec); }
};

} // namespace

TEST_CASE("csv loading with min-max scaling") {
    TempFile file("y,a,b\n1.0,1,10\n2.0,2,30\n3.0,3,20\n");
    const Dataset d = load_csv(file.path.string(), "y", {"a", "b"});
    REQUIRE(d.n() == 3);
    REQUIRE(d.dim() == 2);
    CHECK(d.covariates(0, 0) == doctest::Approx(0.0));
    CHECK(d.covariates(1, 0) == doctest::Approx(0.5));
    CHECK(d.covariates(2, 0) == doctest::Approx(1.0));
    CHECK(d.covariates(1, 1) == doctest::Approx(1.0));
    CHECK(d.response[2] == doctest::Approx(3.0));
    CHECK(d.scaling[0].min == 1.0);
    CHECK(d.scaling[0].max == 3.0);
}

TEST_CASE("csv schema and parse errors") {
    TempFile missing("y,a\n1,2\n3,4\n");
    CHECK_THROWS_WITH_AS(load_csv(missing.path.string(), "z", {"a"}),
                         doctest::Contains("'z'"), SchemaError);
    CHECK_THROWS_WITH_AS(load_csv(missing.path.string(), "y", {"b"}),
                         doctest::Contains("'b'"), SchemaError);

    TempFile garbage("y,a\n1,2\n3,abc\n");
    CHECK_THROWS_WITH_AS(load_csv(garbage.path.string(), "y", {"a"}),
                         doctest::Contains("row 2"), ParseError);

    TempFile single("y,a\n1,2\n");
    CHECK_THROWS_AS(load_csv(single.path.string(), "y", {"a"}), DataError);

    TempFile constant("y,a\n1,5\n2,5\n3,5\n");
    CHECK_THROWS_WITH_AS(load_csv(constant.path.string(), "y", {"a"}),
                         doctest::Contains("'a'"), DataError);

    TempFile nonfinite("y,a\n1,2\nnan,3\n");
    CHECK_THROWS_AS(load_csv(nonfinite.path.string(), "y", {"a"}), DataError);
}

TEST_CASE("rows with missing cells are dropped, not imputed") {
    TempFile file("y,a,b\n1,1,4\n,2,5\n3,3,\n4,4,6\n");
    const Dataset d = load_csv(file.path.string(), "y", {"a", "b"});
    CHECK(d.n() == 2);
    CHECK(d.dropped_rows == 2);
    REQUIRE(!d.warnings.empty());
    CHECK(d.warnings.front().find("dropped 2") != std::string::npos);
}

TEST_CASE("scaling round-trips") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> unif(-40.0, 90.0);
    std::ostringstream content;
    content.precision(17);
    content << "y,a\n";
    std::vector<double> raw;
    for (int i = 0; i < 20; ++i) {
        raw.push_back(unif(gen));
        content << "0," << raw.back() << "\n";
    }
    TempFile file(content.str());
    const Dataset d = load_csv(file.path.string(), "y", {"a"});
    for (int i = 0; i < d.n(); ++i) {
        CHECK(d.unscale(0, d.covariates(i, 0)) == doctest::Approx(raw[static_cast<size_t>(i)]).epsilon(1e-12));
        CHECK(d.scale_value(0, raw[static_cast<size_t>(i)]) == doctest::Approx(d.covariates(i, 0)).epsilon(1e-12));
    }
}

TEST_CASE("uniformity warning on clumped covariates") {
    std::string content = "y,a\n";
    // half the mass near 0, far from uniform after scaling
    for (int i = 0; i < 50; ++i)
        content += "0," + std::to_string(i < 45 ? 0.001 * i : 1.0 + i) + "\n";
    TempFile file(content);
    const Dataset d = load_csv(file.path.string(), "y", {"a"});
    bool warned = false;
    for (const auto& w : d.warnings)
        warned = warned || w.find("deviates from uniform") != std::string::npos;
    CHECK(warned);
}

TEST_CASE("spec validation accepts the full d=3 collection") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(5, 3, 0.5);
    X.col(0).setLinSpaced(5, 0.0, 1.0);
    const Dataset d = Dataset::from_matrix(X, Eigen::VectorXd::Zero(5));

    ModelSpec spec;
    spec.d = 3;
    spec.effects = effects_up_to_order(3, 2);
    const ModelSpec checked = validate_spec(spec, d);
    CHECK(checked.effects.size() == 7);
    CHECK(checked.effects.front().empty());
    CHECK(checked.effects.back() == std::vector<int>{2, 3});

    // idempotent
    const ModelSpec again = validate_spec(checked, d);
    CHECK(again.effects == checked.effects);
}

TEST_CASE("spec validation rejects bad collections") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(4, 3, 0.5);
    const Dataset d = Dataset::from_matrix(X, Eigen::VectorXd::Zero(4));

    ModelSpec no_intercept;
    no_intercept.effects = {{1}, {2}};
    CHECK_THROWS_AS(validate_spec(no_intercept, d), SpecError);

    ModelSpec out_of_range;
    out_of_range.effects = {{}, {4}};
    CHECK_THROWS_AS(validate_spec(out_of_range, d), SpecError);

    ModelSpec duplicate;
    duplicate.effects = {{}, {1, 2}, {2, 1}};
    CHECK_THROWS_AS(validate_spec(duplicate, d), SpecError);

    ModelSpec bad_gamma;
    bad_gamma.effects = {{}, {1}};
    bad_gamma.gcv_gamma = 1.0;
    CHECK_THROWS_AS(validate_spec(bad_gamma, d), SpecError);

    ModelSpec bad_m;
    bad_m.effects = {{}, {1}};
    bad_m.m = 7;
    CHECK_THROWS_AS(validate_spec(bad_m, d), SpecError);
}

TEST_CASE("default lambda grid brackets the rate anchor") {
    const auto grid = default_lambda_grid(1000, 3);
    REQUIRE(grid.size() == 40);
    const double anchor = std::pow(1000.0, -6.0 / 7.0);
    CHECK(grid.front() == doctest::Approx(1e-8 * anchor).epsilon(1e-12));
    CHECK(grid.back() == doctest::Approx(1e2 * anchor).epsilon(1e-12));
    CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("effect labels and CLI effect-list parsing") {
    CHECK(effect_label({}) == "intercept");
    CHECK(effect_label({2}) == "x2");
    CHECK(effect_label({1, 3}) == "x1x3");

    const auto effects = parse_effect_list("1;2;3;1,2;1,3;2,3");
    CHECK(effects.size() == 7); // implicit intercept
    CHECK(effects.front().empty());
    CHECK(effects.back() == std::vector<int>{2, 3});
    CHECK_THROWS_AS(parse_effect_list("1;x"), ArgumentError);
}

#include "support.hpp"

#include "parcelpop/calibrator.hpp"
#include "parcelpop/error.hpp"

#include <doctest.h>

using namespace parcelpop;
using namespace testsupport;

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k) X(i, k) = rows[i][k];
    return X;
}

Eigen::VectorXd to_vector(const std::vector<int>& y) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) v[i] = y[i];
    return v;
}

std::vector<double> full_beta(const LogisticModel& m) {
    std::vector<double> b = {m.intercept};
    b.insert(b.end(), m.coefficients.begin(), m.coefficients.end());
    return b;
}

const std::vector<std::string> kNames = {"ln_area", "center_distance", "poi_density_norm"};

} // namespace

TEST_CASE("sigmoid is centred, symmetric and saturates without overflow") {
    CHECK(sigmoid(0) == 0.5);
    CHECK(sigmoid(1e3) == 1.0);
    CHECK(sigmoid(-1e3) >= 0.0);
    CHECK(sigmoid(-1e3) < 1e-300);
    for (double z : {0.1, 1.7, 12.0, 40.0}) CHECK(sigmoid(z) + sigmoid(-z) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("reference coefficients on a worked parcel") {
    // ln_area 8, 10 km from the center, density 0.5.
    const auto m = reference_model();
    const double z = m.linear_predictor({8, 10, 0.5});
    CHECK(z == doctest::Approx(5.359 - 0.306 * 8 - 0.99 + 3.431 * 0.5));
    const double p_l = local_potential(m, {{"ln_area", 4}, {"center_distance", 1}, {"poi_density_norm", 0.6}});
    CHECK(std::log(p_l / (1 - p_l)) == doctest::Approx(5.359 - 1.224 - 0.099 + 2.0586));
    CHECK(local_potential(m, {{"ln_area", 1.0 / 0.306}, {"center_distance", 0}, {"poi_density_norm", (5.73 - 5.359 + 1.0) / 3.431}})
          == doctest::Approx(0.99676).epsilon(1e-4));
}

TEST_CASE("a missing model feature is an input error") {
    CHECK_THROWS_AS(local_potential(reference_model(), {{"ln_area", 4}, {"center_distance", 1}}), InputError);
}

TEST_CASE("IRLS agrees with a derivative-free likelihood maximizer") {
    const auto s = simulate_reference(1500, 99);
    std::vector<std::vector<double>> rows;
    for (const auto& r : s.rows) rows.push_back({r[0], r[1] / 10, r[2]});  // keep the lattice well conditioned
    const auto m = fit_logistic(to_matrix(rows), to_vector(s.y), kNames);
    REQUIRE(m.converged);
    const auto grid = oracle_grid_search(rows, s.y, {0, 0, 0, 0}, 1.0, 1e-5);
    const auto beta = full_beta(m);
    for (std::size_t k = 0; k < beta.size(); ++k) CHECK(beta[k] == doctest::Approx(grid[k]).epsilon(1e-3));
    CHECK(oracle_log_likelihood(beta, rows, s.y) >= oracle_log_likelihood(grid, rows, s.y) - 1e-7);
    CHECK(m.log_likelihood == doctest::Approx(oracle_log_likelihood(beta, rows, s.y)).epsilon(1e-12));
}

TEST_CASE("log-likelihood never decreases across iterations") {
    const auto s = simulate_reference(3000, 5);
    FitTrace trace;
    const auto m = fit_logistic(to_matrix(s.rows), to_vector(s.y), kNames, {}, &trace);
    REQUIRE(m.converged);
    REQUIRE(trace.log_likelihood.size() >= 2);
    for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i)
        CHECK(trace.log_likelihood[i] >= trace.log_likelihood[i - 1] - 1e-9);
}

TEST_CASE("analytic gradient matches central differences") {
    const auto s = simulate_reference(400, 8);
    const auto X = to_matrix(s.rows);
    const auto y = to_vector(s.y);
    Eigen::VectorXd beta(4);
    beta << 1.0, -0.1, -0.05, 2.0;
    const auto g = log_likelihood_gradient(beta, X, y);
    for (int k = 0; k < 4; ++k) {
        const double h = 1e-6;
        Eigen::VectorXd up = beta, dn = beta;
        up[k] += h;
        dn[k] -= h;
        const double fd = (log_likelihood(up, X, y) - log_likelihood(dn, X, y)) / (2 * h);
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
    }
    CHECK(log_likelihood(beta, X, y) ==
          doctest::Approx(oracle_log_likelihood({1.0, -0.1, -0.05, 2.0}, s.rows, s.y)).epsilon(1e-12));
}

TEST_CASE("an independent feature gets a coefficient near zero") {
    auto s = simulate_reference(20000, 17);
    CounterRng rng(stream_key({17, 0xabc}));
    std::vector<std::vector<double>> rows;
    for (const auto& r : s.rows) rows.push_back({r[0], r[1], r[2], rng.uniform()});
    const auto m = fit_logistic(to_matrix(rows), to_vector(s.y), {"ln_area", "center_distance", "poi_density_norm", "noise"});
    REQUIRE(m.converged);
    CHECK(std::abs(m.coefficients[3]) < 3 * m.se[4]);
}

TEST_CASE("affine rescaling of a feature leaves predictions unchanged") {
    const auto s = simulate_reference(2000, 23);
    const auto base = fit_logistic(to_matrix(s.rows), to_vector(s.y), kNames);
    std::vector<std::vector<double>> scaled;
    for (const auto& r : s.rows) scaled.push_back({r[0], 1000 * r[1] + 250, r[2]});
    const auto m = fit_logistic(to_matrix(scaled), to_vector(s.y), kNames);
    CHECK(m.coefficients[1] * 1000 == doctest::Approx(base.coefficients[1]).epsilon(1e-8));
    for (std::size_t i = 0; i < s.rows.size(); i += 97)
        CHECK(std::abs(sigmoid(m.linear_predictor(scaled[i])) - sigmoid(base.linear_predictor(s.rows[i]))) < 1e-8);
}

TEST_CASE("perfect separation names the separating feature") {
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({std::sin(i * 1.3), static_cast<double>(i), std::cos(i * 0.7)});
        y.push_back(i >= 20);
    }
    try {
        fit_logistic(to_matrix(rows), to_vector(y), kNames);
        FAIL("expected a fit error");
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find("center_distance") != std::string::npos);
    }
}

TEST_CASE("degenerate fits are rejected") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 3);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(10);
    CHECK_THROWS_AS(fit_logistic(X, ones, kNames), InputError);
    Eigen::VectorXd y(10);
    y << 0, 1, 0, 1, 0, 1, 0, 1, 0, 2;
    CHECK_THROWS_AS(fit_logistic(X, y, kNames), InputError);
    y[9] = 1;
    Eigen::MatrixXd c = X;
    c.col(2).setConstant(3);
    CHECK_THROWS_WITH_AS(fit_logistic(c, y, kNames), doctest::Contains("poi_density_norm"), InputError);
    CHECK_THROWS_AS(fit_logistic(X, y, {"a", "b"}), InputError);
}

TEST_CASE("classification accuracy") {
    LogisticModel m;
    m.features = {"x"};
    m.intercept = 0;
    m.coefficients = {1};
    Eigen::MatrixXd X(10, 1);
    X << -3, -2, -1, 0, 1, 2, 3, 4, -4, 0.5;
    Eigen::VectorXd y(10);
    y << 0, 0, 1, 0, 1, 1, 0, 1, 0, 1;
    // Mismatches at x = -1 and x = 3; x = 0 sits at p = 0.5 and predicts 0.
    CHECK(classification_accuracy(m, X, y) == doctest::Approx(0.8));
    Eigen::VectorXd perfect(10);
    for (int i = 0; i < 10; ++i) perfect[i] = X(i, 0) > 0;
    CHECK(classification_accuracy(m, X, perfect) == 1.0);
    LogisticModel flat = m;
    flat.coefficients = {0};
    CHECK(classification_accuracy(flat, X, Eigen::VectorXd::Zero(10)) == 1.0);
}

TEST_CASE("design matrix converts the distance unit") {
    ParcelFeatures f;
    f.ln_area = 7;
    f.center_distance = 2500;
    f.poi_density_norm = 0.25;
    const auto km = design_matrix({f}, kNames, "km");
    CHECK(km(0, 1) == 2.5);
    const auto m = design_matrix({f}, kNames, "m");
    CHECK(m(0, 1) == 2500);
    CHECK_THROWS_AS(design_matrix({f}, {"ln_area", "bogus"}, "km"), InputError);
    CHECK_THROWS_AS(design_matrix({f}, kNames, "mi"), InputError);
}

TEST_CASE("model JSON round-trips") {
    const auto s = simulate_reference(2000, 31);
    const auto m = fit_logistic(to_matrix(s.rows), to_vector(s.y), kNames);
    const auto dir = scratch_dir("model_rt");
    write_model(dir + "/m.json", m);
    const auto back = read_model(dir + "/m.json");
    CHECK(back.features == m.features);
    CHECK(back.intercept == m.intercept);
    CHECK(back.coefficients == m.coefficients);
    CHECK(back.se == m.se);
    CHECK(back.p_values == m.p_values);
    CHECK(back.converged == m.converged);
    CHECK(back.iterations == m.iterations);
    CHECK(back.distance_unit == m.distance_unit);
    spit(dir + "/bad.json", "{\"features\": [\"a\"], \"intercept\": 1, \"coefficients\": []}");
    CHECK_THROWS_AS(read_model(dir + "/bad.json"), InputError);
    CHECK_THROWS_AS(read_model(dir + "/missing.json"), InputError);
}

#include "parcelpop/calibrator.hpp"
#include "parcelpop/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace parcelpop {

using nlohmann::json;

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + e^z) without overflow.
double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd D(X.rows(), X.cols() + 1);
    D.col(0).setOnes();
    D.rightCols(X.cols()) = X;
    return D;
}

double ll_design(const Eigen::VectorXd& beta, const Eigen::MatrixXd& D, const Eigen::VectorXd& y) {
    const Eigen::VectorXd eta = D * beta;
    double ll = 0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
    return ll;
}

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<std::string>& names) {
    if (X.rows() != y.size()) throw InputError("design matrix and labels differ in length");
    if (static_cast<std::size_t>(X.cols()) != names.size())
        throw InputError("feature names do not match design matrix columns");
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) throw InputError("labels must be 0 or 1");
        pos += y[i] == 1.0;
    }
    if (pos == 0 || pos == y.size())
        throw InputError("logistic fit needs at least one positive and one negative label");
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        if (!X.col(k).allFinite()) throw InputError("feature '" + names[k] + "' has non-finite values");
        if (X.col(k).maxCoeff() == X.col(k).minCoeff())
            throw InputError("feature '" + names[k] + "' is constant");
    }
    // Single-feature (quasi-)separation: no finite maximum-likelihood estimate.
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        double max0 = -INFINITY, min0 = INFINITY, max1 = -INFINITY, min1 = INFINITY;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double v = X(i, k);
            if (y[i] == 1.0) {
                max1 = std::max(max1, v);
                min1 = std::min(min1, v);
            } else {
                max0 = std::max(max0, v);
                min0 = std::min(min0, v);
            }
        }
        if (max0 <= min1 || max1 <= min0)
            throw FitError("perfect separation: feature '" + names[k] + "' separates the labels");
    }
}

} // namespace

double log_likelihood(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    return ll_design(beta, with_intercept(X), y);
}

Eigen::VectorXd log_likelihood_gradient(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y) {
    const Eigen::MatrixXd D = with_intercept(X);
    const Eigen::VectorXd eta = D * beta;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = y[i] - sigmoid(eta[i]);
    return D.transpose() * resid;
}

double LogisticModel::linear_predictor(const std::vector<double>& x) const {
    if (x.size() != coefficients.size()) throw InputError("feature vector length mismatch");
    double z = intercept;
    for (std::size_t k = 0; k < x.size(); ++k) z += coefficients[k] * x[k];
    return z;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const std::vector<std::string>& names, const FitOptions& opts,
                           FitTrace* trace) {
    check_inputs(X, y, names);
    const Eigen::MatrixXd D = with_intercept(X);
    const Eigen::Index m = D.cols();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
    double ll = ll_design(beta, D, y);
    if (trace) trace->log_likelihood = {ll};

    LogisticModel model;
    model.features = names;
    Eigen::MatrixXd info(m, m);
    auto information = [&](const Eigen::VectorXd& b, Eigen::VectorXd* grad) {
        const Eigen::VectorXd eta = D * b;
        Eigen::VectorXd w(eta.size()), r(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double p = sigmoid(eta[i]);
            w[i] = p * (1 - p);
            r[i] = y[i] - p;
        }
        info.noalias() = D.transpose() * w.asDiagonal() * D;
        if (grad) *grad = D.transpose() * r;
    };

    for (int it = 1; it <= opts.max_iter; ++it) {
        Eigen::VectorXd grad;
        information(beta, &grad);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14)
            throw FitError("singular information matrix");
        const Eigen::VectorXd delta = ldlt.solve(grad);
        double step = 1.0;
        Eigen::VectorXd next = beta + delta;
        double ll_next = ll_design(next, D, y);
        int halvings = 0;
        while (!(ll_next >= ll) && halvings < opts.max_halvings) {
            step *= 0.5;
            next = beta + step * delta;
            ll_next = ll_design(next, D, y);
            ++halvings;
        }
        if (!(ll_next >= ll)) {
            // No ascent possible along the Newton direction: at the optimum
            // to machine precision.
            next = beta;
            ll_next = ll;
        }
        const double max_step = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        ll = ll_next;
        model.iterations = it;
        if (trace) trace->log_likelihood.push_back(ll);
        if (beta.norm() > opts.divergence_norm) {
            Eigen::Index worst = 1;
            double worst_v = -1;
            for (Eigen::Index k = 1; k < m; ++k) {
                const double range = X.col(k - 1).maxCoeff() - X.col(k - 1).minCoeff();
                if (std::abs(beta[k]) * range > worst_v) {
                    worst_v = std::abs(beta[k]) * range;
                    worst = k;
                }
            }
            throw FitError("perfect separation: coefficients diverge, led by feature '" +
                           names[static_cast<std::size_t>(worst - 1)] + "'");
        }
        if (max_step < opts.tol) {
            model.converged = true;
            break;
        }
    }

    information(beta, nullptr);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw FitError("singular information matrix at solution");
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
    model.intercept = beta[0];
    model.coefficients.assign(beta.data() + 1, beta.data() + m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double se = std::sqrt(cov(k, k));
        model.se.push_back(se);
        model.p_values.push_back(std::erfc(std::abs(beta[k] / se) / std::sqrt(2.0)));
    }
    model.log_likelihood = ll;
    return model;
}

double local_potential(const LogisticModel& model, const std::map<std::string, double>& values) {
    double z = model.intercept;
    for (std::size_t k = 0; k < model.features.size(); ++k) {
        auto it = values.find(model.features[k]);
        if (it == values.end()) throw InputError("missing model feature '" + model.features[k] + "'");
        z += model.coefficients[k] * it->second;
    }
    return sigmoid(z);
}

std::map<std::string, double> model_inputs(const ParcelFeatures& f, const std::string& distance_unit) {
    double scale = 1.0;
    if (distance_unit == "km")
        scale = 1e-3;
    else if (distance_unit != "m")
        throw InputError("distance unit must be 'm' or 'km', got '" + distance_unit + "'");
    return {{"ln_area", f.ln_area},
            {"compactness", f.compactness},
            {"center_distance", f.center_distance * scale},
            {"poi_density_norm", f.poi_density_norm},
            {"residential_density_std", f.residential_density_std}};
}

double local_potential(const LogisticModel& model, const ParcelFeatures& f) {
    return local_potential(model, model_inputs(f, model.distance_unit));
}

double classification_accuracy(const LogisticModel& model, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, double cutoff) {
    if (X.rows() != y.size()) throw InputError("design matrix and labels differ in length");
    if (y.size() == 0) return 0;
    Eigen::Index hits = 0;
    std::vector<double> row(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index k = 0; k < X.cols(); ++k) row[static_cast<std::size_t>(k)] = X(i, k);
        const double p = sigmoid(model.linear_predictor(row));
        const double pred = p > cutoff ? 1.0 : 0.0;
        hits += pred == y[i];
    }
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

Eigen::MatrixXd design_matrix(const std::vector<ParcelFeatures>& table,
                              const std::vector<std::string>& names, const std::string& distance_unit) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto in = model_inputs(table[i], distance_unit);
        for (std::size_t k = 0; k < names.size(); ++k) {
            auto it = in.find(names[k]);
            if (it == in.end()) throw InputError("unknown model feature '" + names[k] + "'");
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = it->second;
        }
    }
    return X;
}

json to_json(const LogisticModel& m) {
    return {{"features", m.features},
            {"intercept", m.intercept},
            {"coefficients", m.coefficients},
            {"se", m.se},
            {"p_values", m.p_values},
            {"converged", m.converged},
            {"iterations", m.iterations},
            {"log_likelihood", m.log_likelihood},
            {"distance_unit", m.distance_unit}};
}

LogisticModel model_from_json(const json& j) {
    LogisticModel m;
    try {
        m.features = j.at("features").get<std::vector<std::string>>();
        m.intercept = j.at("intercept").get<double>();
        m.coefficients = j.at("coefficients").get<std::vector<double>>();
        m.se = j.value("se", std::vector<double>{});
        m.p_values = j.value("p_values", std::vector<double>{});
        m.converged = j.value("converged", true);
        m.iterations = j.value("iterations", 0);
        m.log_likelihood = j.value("log_likelihood", 0.0);
        m.distance_unit = j.value("distance_unit", std::string("km"));
    } catch (const json::exception& e) {
        throw InputError(std::string("invalid model JSON: ") + e.what());
    }
    if (m.features.size() != m.coefficients.size())
        throw InputError("model features and coefficients differ in length");
    if (!std::isfinite(m.intercept)) throw InputError("model intercept is not finite");
    for (double c : m.coefficients)
        if (!std::isfinite(c)) throw InputError("model coefficient is not finite");
    return m;
}

void write_model(const std::string& path, const LogisticModel& model) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << to_json(model).dump(2) << '\n';
}

LogisticModel read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model '" + path + "'");
    try {
        return model_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw InputError(path + ": invalid JSON: " + e.what());
    }
}

LogisticModel reference_model() {
    LogisticModel m;
    m.features = {"ln_area", "center_distance", "poi_density_norm"};
    m.intercept = 5.359;
    m.coefficients = {-0.306, -0.099, 3.431};
    m.se = {0.058, 0.006, 0.001, 0.085};
    m.converged = true;
    m.distance_unit = "km";
    return m;
}

} // namespace parcelpop

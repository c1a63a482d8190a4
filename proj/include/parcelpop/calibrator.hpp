#pragma once

// Binary logistic regression fitted by iteratively reweighted least squares.

#include "parcelpop/features.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace parcelpop {

struct LogisticModel {
    std::vector<std::string> features;   // c_1..c_m, excluding the intercept
    double intercept = 0;
    std::vector<double> coefficients;    // aligned with features
    std::vector<double> se;              // intercept first, then coefficients
    std::vector<double> p_values;        // same layout as se
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0;
    std::string distance_unit = "km";    // unit of center_distance in the model

    double linear_predictor(const std::vector<double>& x) const;
};

struct FitOptions {
    int max_iter = 100;
    double tol = 1e-8;
    int max_halvings = 30;
    double divergence_norm = 1e3;        // |beta| beyond this signals separation
};

// Per-iteration log-likelihood trace left by the last step-halving pass.
struct FitTrace {
    std::vector<double> log_likelihood;
};

// X holds one row per sample without an intercept column; y holds 0/1.
LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const std::vector<std::string>& names,
                           const FitOptions& opts = {}, FitTrace* trace = nullptr);

// Log-likelihood and its gradient at beta = (a0, a1..am).
double log_likelihood(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y);
Eigen::VectorXd log_likelihood_gradient(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y);

// Numerically stable logistic function.
double sigmoid(double z);

// Sigmoid of the linear predictor. Throws InputError if a model feature is
// missing from `values`.
double local_potential(const LogisticModel& model, const std::map<std::string, double>& values);
double local_potential(const LogisticModel& model, const ParcelFeatures& f);

// Named model inputs for a parcel; center_distance follows model.distance_unit.
std::map<std::string, double> model_inputs(const ParcelFeatures& f,
                                           const std::string& distance_unit);

// Fraction of rows classified correctly; p > cutoff predicts 1.
double classification_accuracy(const LogisticModel& model, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, double cutoff = 0.5);

// Design matrix over `names` for a feature table.
Eigen::MatrixXd design_matrix(const std::vector<ParcelFeatures>& table,
                              const std::vector<std::string>& names,
                              const std::string& distance_unit);

nlohmann::json to_json(const LogisticModel& model);
LogisticModel model_from_json(const nlohmann::json& j);
void write_model(const std::string& path, const LogisticModel& model);
LogisticModel read_model(const std::string& path);

// Reference coefficients: ln_area, center_distance (km), poi density.
LogisticModel reference_model();

} // namespace parcelpop

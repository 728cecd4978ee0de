#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "crep/common.hpp"

#include <nlohmann/json.hpp>

namespace crep {

// Latent model parameters Theta = (u, v, w, eta). u and v are N x K
// nonnegative out-/in-membership matrices, w is the K x K nonnegative
// affinity matrix, eta >= 0 is the global reciprocity coefficient.
struct CrepParams {
  int k = 0;
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  Eigen::MatrixXd w;
  double eta = 0.0;

  int n_nodes() const { return static_cast<int>(u.rows()); }
};

// Throws data_error when shapes disagree or any entry is negative.
void validate_params(const CrepParams& p);

// Structured document for parameters; shared by fit results and
// ground-truth dumps (the latter carry ground_truth = true).
nlohmann::json params_to_json(const CrepParams& p,
                              const std::vector<std::string>& labels,
                              bool ground_truth = false);
CrepParams params_from_json(const nlohmann::json& doc);
std::vector<std::string> labels_from_json(const nlohmann::json& doc);

}  // namespace crep
